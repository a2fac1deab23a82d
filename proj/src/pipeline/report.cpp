#include "syntaxeval/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>

namespace syntaxeval {

ArmSummary pool(const std::vector<ArmSummary>& groups) {
    ArmSummary out;
    double weighted = 0.0;
    for (const auto& g : groups) {
        out.n += g.n;
        weighted += static_cast<double>(g.n) * g.mean;
    }
    if (out.n == 0) return out;
    out.mean = weighted / static_cast<double>(out.n);
    if (out.n < 2) return out;
    double ss = 0.0;
    for (const auto& g : groups) {
        if (g.n == 0) continue;
        const double n = static_cast<double>(g.n);
        const double d = g.mean - out.mean;
        ss += (n - 1.0) * g.std * g.std + n * d * d;
    }
    out.std = std::sqrt(ss / static_cast<double>(out.n - 1));
    return out;
}

namespace {

std::size_t display_width(std::string_view s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;  // count code points
    return w;
}

std::string fixed(double x, int digits) {
    std::string s = fmt::format("{:.{}f}", x, digits);
    if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
    return s;
}

std::string avg_std(const ArmSummary& a) { return fixed(a.mean, 2) + " ± " + fixed(a.std, 2); }

// first column left-aligned, the rest right-aligned
std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = display_width(header[c]);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], display_width(r[c]));

    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string pad(width[c] - display_width(cells[c]), ' ');
            if (c > 0) out += "  ";
            out += c == 0 ? cells[c] + pad : pad + cells[c];
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + '\n';
    };
    std::string out = line(header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    for (const auto& r : rows) out += line(r);
    return out;
}

}  // namespace

std::string report_summary(const std::vector<causal::CausalResult>& results) {
    std::map<causal::Metric, std::vector<ArmSummary>> t1, t0;
    for (const auto& r : results) {
        t1[r.metric].push_back({r.n_treated, r.treated.mean, r.treated.std});
        t0[r.metric].push_back({r.n_control, r.control.mean, r.control.std});
    }

    std::vector<std::string> summary_header = {"arm", "n"};
    for (auto m : causal::kMetrics) summary_header.emplace_back(causal::metric_name(m));
    std::vector<std::vector<std::string>> summary_rows;
    if (!results.empty()) {
        for (auto [arm, groups] : {std::pair{"T1", &t1}, std::pair{"T0", &t0}}) {
            std::vector<std::string> row = {arm, ""};
            for (auto m : causal::kMetrics) {
                const auto p = pool((*groups)[m]);
                row.push_back(p.n ? avg_std(p) : "-");
                if (p.n && row[1].empty()) row[1] = std::to_string(p.n);
            }
            summary_rows.push_back(std::move(row));
        }
    }

    const std::vector<std::string> effect_header = {"node_type", "metric",  "tau",      "tau_naive",
                                                    "ci_95",     "placebo", "n_treated", "n_control",
                                                    "flags"};
    std::vector<std::vector<std::string>> effect_rows;
    for (const auto& r : results) {
        std::string flags;
        for (const auto& f : r.flags) flags += (flags.empty() ? "" : ",") + f;
        effect_rows.push_back({r.node_type, std::string(causal::metric_name(r.metric)), fixed(r.tau, 3),
                               fixed(r.tau_naive, 3), "[" + fixed(r.ci_low, 3) + ", " + fixed(r.ci_high, 3) + "]",
                               fixed(r.placebo_tau, 3), std::to_string(r.n_treated), std::to_string(r.n_control),
                               flags.empty() ? "-" : flags});
    }

    return "Performance by arm [avg ± std]\n\n" + render(summary_header, summary_rows) +
           "\nTreatment effect per node type\n\n" + render(effect_header, effect_rows);
}

}  // namespace syntaxeval
