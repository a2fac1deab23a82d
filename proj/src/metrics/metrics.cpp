#include "syntaxeval/metrics.hpp"

#include "syntaxeval/python_parser.hpp"

namespace syntaxeval::metrics {

std::vector<std::string_view> label_views(std::string_view source) {
    const auto tree = ast::parse_python(source);
    std::vector<std::string_view> out;
    ast::walk(tree, [&](std::uint32_t i, std::uint32_t) {
        const auto& n = tree.node(i);
        if (n.named) out.push_back(n.type);
        return true;
    });
    return out;
}

SimilarityScores score_sample(std::string_view ground_source, std::string_view predicted_source) {
    if (ground_source == predicted_source) return {1.0, 1.0, 1.0};
    return score_labels(label_views(ground_source), label_views(predicted_source));
}

}  // namespace syntaxeval::metrics
