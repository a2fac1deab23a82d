#include "syntaxeval/masking.hpp"

#include "syntaxeval/error.hpp"
#include "syntaxeval/random.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace syntaxeval::masking {

using ast::ByteRange;

std::string_view arm_name(Arm arm) { return arm == Arm::Treatment ? "treatment" : "control"; }

std::string_view skip_name(SkipReason r) { return r == SkipReason::Absent ? "absent" : "too_many_masked"; }

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
    return n;
}

namespace {

void check_sentinel(const corpus::Snippet& snippet, std::string_view sentinel) {
    if (sentinel.empty()) throw MaskingError("empty mask sentinel");
    if (snippet.source.find(sentinel) != std::string::npos) {
        throw MaskingError(fmt::format("snippet {}: source already contains the sentinel \"{}\"", snippet.id, sentinel));
    }
}

}  // namespace

MaskedSample apply_masks(const corpus::Snippet& snippet, std::vector<ByteRange> spans, std::string_view sentinel) {
    check_sentinel(snippet, sentinel);
    MaskedSample s;
    s.snippet_id = snippet.id;
    s.mask_sentinel = std::string(sentinel);
    std::uint32_t at = 0;
    for (const auto& r : spans) {
        if (r.start < at || r.end <= r.start || r.end > snippet.source.size()) {
            throw MaskingError(fmt::format("snippet {}: bad mask span {}-{}", snippet.id, r.start, r.end));
        }
        s.masked_text.append(snippet.source, at, r.start - at);
        s.masked_text += sentinel;
        s.ground_truth_tokens.push_back(snippet.source.substr(r.start, r.size()));
        at = r.end;
    }
    s.masked_text.append(snippet.source, at);
    s.mask_count = spans.size();
    s.masked_spans = std::move(spans);
    // a sentinel that can overlap itself might also straddle a boundary
    if (count_occurrences(s.masked_text, sentinel) != s.mask_count) {
        throw MaskingError(fmt::format("snippet {}: sentinel \"{}\" is ambiguous in the masked text", snippet.id, sentinel));
    }
    return s;
}

std::variant<MaskedSample, Skip> mask_treatment(const corpus::Snippet& snippet, const ast::Tree& tree,
                                                std::string_view node_type, std::string_view sentinel,
                                                double max_mask_fraction) {
    if (!(max_mask_fraction > 0.0 && max_mask_fraction <= 1.0)) {
        throw MaskingError(fmt::format("max_mask_fraction must be in (0, 1], got {}", max_mask_fraction));
    }
    check_sentinel(snippet, sentinel);
    std::vector<ByteRange> spans;
    for (const auto& match : ast::find_node_spans(tree, node_type)) {
        spans.insert(spans.end(), match.leaf_token_spans.begin(), match.leaf_token_spans.end());
    }
    // nested matches of the same type repeat their leaves
    std::sort(spans.begin(), spans.end(), [](ByteRange a, ByteRange b) { return a.start < b.start; });
    spans.erase(std::unique(spans.begin(), spans.end()), spans.end());

    const std::size_t tokens = ast::leaf_tokens(tree).size();
    if (spans.empty()) return Skip{SkipReason::Absent, 0, tokens};
    if (static_cast<double>(spans.size()) > max_mask_fraction * static_cast<double>(tokens)) {
        return Skip{SkipReason::TooManyMasked, spans.size(), tokens};
    }
    MaskedSample s = apply_masks(snippet, std::move(spans), sentinel);
    s.arm = Arm::Treatment;
    s.node_type = std::string(node_type);
    return s;
}

std::vector<MaskedSample> mask_control(const corpus::Snippet& snippet, const ast::Tree& tree, std::size_t k,
                                       std::uint64_t seed, std::size_t variants, std::string_view sentinel,
                                       std::string_view matched_node_type) {
    check_sentinel(snippet, sentinel);
    const auto leaves = ast::leaf_tokens(tree);
    if (k == 0) throw MaskingError(fmt::format("snippet {}: control mask count must be at least 1", snippet.id));
    if (k > leaves.size()) {
        throw MaskingError(fmt::format("snippet {}: cannot mask {} of {} tokens", snippet.id, k, leaves.size()));
    }
    std::vector<MaskedSample> out;
    out.reserve(variants);
    std::vector<std::size_t> pool(leaves.size());
    for (std::size_t v = 0; v < variants; ++v) {
        Rng rng(derive_seed(seed, {hash_string(snippet.id), v, k}));
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
        std::vector<std::size_t> picked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(picked.begin(), picked.end());
        std::vector<ByteRange> spans;
        spans.reserve(k);
        for (auto i : picked) spans.push_back(leaves[i]);
        MaskedSample s = apply_masks(snippet, std::move(spans), sentinel);
        s.arm = Arm::Control;
        s.node_type = std::string(matched_node_type);
        s.variant_index = v;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::size_t> sentinel_offsets(const MaskedSample& sample) {
    std::vector<std::size_t> out;
    out.reserve(sample.mask_count);
    std::ptrdiff_t shift = 0;
    for (std::size_t i = 0; i < sample.masked_spans.size(); ++i) {
        const auto& r = sample.masked_spans[i];
        out.push_back(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r.start) + shift));
        shift += static_cast<std::ptrdiff_t>(sample.mask_sentinel.size()) - static_cast<std::ptrdiff_t>(r.size());
    }
    return out;
}

std::string fill(const MaskedSample& sample, const std::vector<std::string>& tokens) {
    if (tokens.size() != sample.mask_count || sample.masked_spans.size() != sample.mask_count) {
        throw MaskingError(fmt::format("snippet {}: {} tokens for {} masks", sample.snippet_id, tokens.size(),
                                       sample.mask_count));
    }
    const auto offsets = sentinel_offsets(sample);
    const std::string_view text = sample.masked_text;
    std::string out;
    std::size_t at = 0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (text.substr(offsets[i], sample.mask_sentinel.size()) != sample.mask_sentinel) {
            throw MaskingError(fmt::format("snippet {}: masked text does not match its spans", sample.snippet_id));
        }
        out.append(text.substr(at, offsets[i] - at));
        out += tokens[i];
        at = offsets[i] + sample.mask_sentinel.size();
    }
    out.append(text.substr(at));
    return out;
}

nlohmann::ordered_json to_json(const MaskedSample& s) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["snippet_id"] = s.snippet_id;
    j["arm"] = arm_name(s.arm);
    j["node_type"] = s.node_type;
    j["variant_index"] = s.variant_index ? nlohmann::ordered_json(*s.variant_index) : nlohmann::ordered_json(nullptr);
    j["mask_sentinel"] = s.mask_sentinel;
    j["mask_count"] = s.mask_count;
    auto spans = nlohmann::ordered_json::array();
    for (const auto& r : s.masked_spans) spans.push_back({r.start, r.end});
    j["masked_spans"] = std::move(spans);
    j["ground_truth_tokens"] = s.ground_truth_tokens;
    j["masked_text"] = s.masked_text;
    return j;
}

MaskedSample masked_sample_from_json(const nlohmann::ordered_json& j) {
    try {
        MaskedSample s;
        s.snippet_id = j.at("snippet_id").get<std::string>();
        const auto arm = j.at("arm").get<std::string>();
        if (arm == "treatment") {
            s.arm = Arm::Treatment;
        } else if (arm == "control") {
            s.arm = Arm::Control;
        } else {
            throw FormatError(fmt::format("unknown arm \"{}\"", arm));
        }
        s.node_type = j.at("node_type").get<std::string>();
        if (auto v = j.find("variant_index"); v != j.end() && !v->is_null()) s.variant_index = v->get<std::size_t>();
        s.mask_sentinel = j.at("mask_sentinel").get<std::string>();
        s.mask_count = j.at("mask_count").get<std::size_t>();
        for (const auto& r : j.at("masked_spans")) s.masked_spans.push_back({r.at(0).get<std::uint32_t>(), r.at(1).get<std::uint32_t>()});
        s.ground_truth_tokens = j.at("ground_truth_tokens").get<std::vector<std::string>>();
        s.masked_text = j.at("masked_text").get<std::string>();
        if (s.masked_spans.size() != s.mask_count || s.ground_truth_tokens.size() != s.mask_count) {
            throw FormatError("mask_count disagrees with spans or tokens");
        }
        return s;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw FormatError(fmt::format("masked sample: {}", e.what()));
    }
}

}  // namespace syntaxeval::masking
