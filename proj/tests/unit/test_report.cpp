#include "syntaxeval/random.hpp"
#include "syntaxeval/report.hpp"

#include "support/files.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace syntaxeval;
using causal::CausalResult;
using causal::Metric;

namespace {

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> rows_starting_with(const std::string& text, const std::string& prefix) {
    std::vector<std::string> out;
    for (const auto& l : lines(text))
        if (l.rfind(prefix, 0) == 0) out.push_back(l);
    return out;
}

std::size_t width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
}

// results as they would come out of an analysis that reproduced the M1 column
std::vector<CausalResult> table2_results() {
    const auto t = testsupport::read_json(testsupport::test_path("fixtures/table2_m1.json"));
    std::vector<CausalResult> out;
    for (const auto& [node_type, taus] : t.at("tau").items()) {
        for (auto m : causal::kMetrics) {
            const std::string name(causal::metric_name(m));
            CausalResult r;
            r.node_type = node_type;
            r.metric = m;
            r.tau = taus.at(name);
            r.tau_naive = r.tau;
            r.ci_low = r.tau - 0.02;
            r.ci_high = r.tau + 0.02;
            r.n_treated = r.n_control = 500;
            r.treated = {t["arms"]["T1"][name][0], t["arms"]["T1"][name][1]};
            r.control = {t["arms"]["T0"][name][0], t["arms"]["T0"][name][1]};
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("pooling matches statistics of the concatenated data") {
    Rng rng(3);
    std::vector<double> all;
    std::vector<ArmSummary> groups;
    for (int g = 0; g < 6; ++g) {
        std::vector<double> v(5 + uniform_index(rng, 40));
        for (auto& x : v) x = 0.2 * g + uniform01(rng);
        double m = 0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double ss = 0;
        for (double x : v) ss += (x - m) * (x - m);
        groups.push_back({v.size(), m, std::sqrt(ss / static_cast<double>(v.size() - 1))});
        all.insert(all.end(), v.begin(), v.end());
    }
    double m = 0;
    for (double x : all) m += x;
    m /= static_cast<double>(all.size());
    double ss = 0;
    for (double x : all) ss += (x - m) * (x - m);
    const auto p = pool(groups);
    CHECK(p.n == all.size());
    CHECK(p.mean == doctest::Approx(m).epsilon(1e-12));
    CHECK(p.std == doctest::Approx(std::sqrt(ss / static_cast<double>(all.size() - 1))).epsilon(1e-12));
    CHECK(pool({}).n == 0);
}

TEST_CASE("table values render like the published table") {
    const auto text = report_summary(table2_results());
    const auto t0 = rows_starting_with(text, "T0");
    REQUIRE(t0.size() == 1);
    CHECK(t0[0].find("0.88 ± 0.17") != std::string::npos);
    CHECK(t0[0].find("0.87 ± 0.16") != std::string::npos);
    const auto t1 = rows_starting_with(text, "T1");
    REQUIRE(t1.size() == 1);
    CHECK(t1[0].find("0.78 ± 0.21") != std::string::npos);

    const auto fs = rows_starting_with(text, "for_statement ");
    REQUIRE(fs.size() == 3);
    CHECK(fs[0].find(" jaccard ") != std::string::npos);
    CHECK(fs[0].find("-0.269") != std::string::npos);
    CHECK(rows_starting_with(text, "identifier ")[0].find("0.016") != std::string::npos);
}

TEST_CASE("rows follow result order and align") {
    const auto text = report_summary(table2_results());
    std::vector<std::string> effect;
    bool in_effect = false;
    std::string header;
    for (const auto& l : lines(text)) {
        if (l.rfind("node_type", 0) == 0) {
            in_effect = true;
            header = l;
            continue;
        }
        if (in_effect && !l.empty() && l[0] != '-') effect.push_back(l);
    }
    REQUIRE(effect.size() == 33);
    CHECK(effect.front().rfind("boolean_operator", 0) == 0);
    CHECK(effect.back().rfind("while_statement", 0) == 0);
    // right-aligned numeric columns end where their headers end
    const auto tau_end = header.find("tau") + 3;
    for (const auto& row : effect) CHECK(row.substr(0, tau_end).back() != ' ');
}

TEST_CASE("empty results give only headers") {
    const auto text = report_summary({});
    for (const auto& l : lines(text)) {
        CHECK(l.rfind("T0", 0) != 0);
        CHECK(l.rfind("T1", 0) != 0);
    }
    CHECK(text.find("node_type") != std::string::npos);
    CHECK(text.find("jaccard") != std::string::npos);
    CHECK(lines(text).back().find_first_not_of('-') == std::string::npos);
}

TEST_CASE("single result") {
    CausalResult r;
    r.node_type = "identifier";
    r.metric = Metric::Levenshtein;
    r.tau = -0.0004;
    r.n_treated = r.n_control = 12;
    r.treated = {0.5, 0.25};
    r.control = {0.75, 0.125};
    r.flags = {"underpowered", "refuted"};
    const auto text = report_summary({r});
    const auto rows = rows_starting_with(text, "identifier");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].find(" 0.000 ") != std::string::npos);  // no negative zero
    CHECK(rows[0].find("underpowered,refuted") != std::string::npos);
    const auto all = lines(text);
    std::size_t header_at = 0;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i].rfind("node_type", 0) == 0) header_at = i;
    CHECK(width(all[header_at + 1]) >= width(rows[0]));
    CHECK(width(all[header_at]) <= width(all[header_at + 1]));
    CHECK(rows_starting_with(text, "T1")[0].find("0.50 ± 0.25") != std::string::npos);
}

TEST_CASE("report is deterministic") { CHECK(report_summary(table2_results()) == report_summary(table2_results())); }
