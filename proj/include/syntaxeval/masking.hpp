#pragma once

#include "syntaxeval/ast.hpp"
#include "syntaxeval/corpus.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace syntaxeval::masking {

inline constexpr std::string_view kDefaultSentinel = "<mask>";
inline constexpr std::size_t kDefaultVariants = 20;
inline constexpr double kDefaultMaxMaskFraction = 0.5;

enum class Arm { Treatment, Control };

[[nodiscard]] std::string_view arm_name(Arm arm);

struct MaskedSample {
    std::string snippet_id;
    Arm arm = Arm::Treatment;
    std::string node_type;  // for controls, the node type of the matched treatment
    std::string mask_sentinel;
    std::string masked_text;
    std::size_t mask_count = 0;
    std::vector<ast::ByteRange> masked_spans;  // in the original source
    std::optional<std::size_t> variant_index;  // controls only
    std::vector<std::string> ground_truth_tokens;

    friend bool operator==(const MaskedSample&, const MaskedSample&) = default;
};

enum class SkipReason { Absent, TooManyMasked };

struct Skip {
    SkipReason reason;
    std::size_t mask_count = 0;
    std::size_t token_count = 0;
};

[[nodiscard]] std::string_view skip_name(SkipReason r);

// Masks every leaf token inside any node of `node_type`, one sentinel per
// token. Skips when the type is absent or masks exceed max_mask_fraction of
// the snippet's leaf tokens. Throws MaskingError when the sentinel already
// occurs in the source.
[[nodiscard]] std::variant<MaskedSample, Skip> mask_treatment(const corpus::Snippet& snippet, const ast::Tree& tree,
                                                              std::string_view node_type,
                                                              std::string_view sentinel = kDefaultSentinel,
                                                              double max_mask_fraction = kDefaultMaxMaskFraction);

// `variants` samples, each masking k distinct leaf tokens drawn uniformly.
// The draw for variant v depends only on (seed, snippet id, v, k).
[[nodiscard]] std::vector<MaskedSample> mask_control(const corpus::Snippet& snippet, const ast::Tree& tree,
                                                     std::size_t k, std::uint64_t seed,
                                                     std::size_t variants = kDefaultVariants,
                                                     std::string_view sentinel = kDefaultSentinel,
                                                     std::string_view matched_node_type = {});

// Replace the masked spans of `source`; spans must be sorted and disjoint.
[[nodiscard]] MaskedSample apply_masks(const corpus::Snippet& snippet, std::vector<ast::ByteRange> spans,
                                       std::string_view sentinel);

// Byte offset of each sentinel in masked_text, derived from the spans.
[[nodiscard]] std::vector<std::size_t> sentinel_offsets(const MaskedSample& sample);

// Fill the sentinels with `tokens`, in order.
[[nodiscard]] std::string fill(const MaskedSample& sample, const std::vector<std::string>& tokens);

[[nodiscard]] std::size_t count_occurrences(std::string_view text, std::string_view needle);

[[nodiscard]] nlohmann::ordered_json to_json(const MaskedSample& s);
[[nodiscard]] MaskedSample masked_sample_from_json(const nlohmann::ordered_json& j);

}  // namespace syntaxeval::masking
