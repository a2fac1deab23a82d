#include "syntaxeval/config.hpp"
#include "syntaxeval/error.hpp"
#include "syntaxeval/python_grammar.hpp"
#include "syntaxeval/toml.hpp"

#include "support/files.hpp"

#include <doctest.h>

#include <fstream>

using namespace syntaxeval;

TEST_CASE("toml scalars, tables and arrays") {
    const auto j = toml::parse(R"(# comment
title = "run"   # trailing
seed = 0x2A
big = 1_000
neg = -7
ratio = 0.5
exp = 1e-3
flag = true
lit = 'C:\path'
esc = "a\tb\u00e9"
list = ["a", 'b', ]
nested = [[1, 2], [3]]
inline = { x = 1, y = "two" }

[backend]
spec = "oracle"
a.b = 3

[analysis.deep]
n = +5
)");
    CHECK(j["title"] == "run");
    CHECK(j["seed"] == 42);
    CHECK(j["big"] == 1000);
    CHECK(j["neg"] == -7);
    CHECK(j["ratio"] == 0.5);
    CHECK(j["exp"] == 1e-3);
    CHECK(j["flag"] == true);
    CHECK(j["lit"] == "C:\\path");
    CHECK(j["esc"] == "a\tb\xc3\xa9");
    CHECK(j["list"] == nlohmann::ordered_json::array({"a", "b"}));
    CHECK(j["nested"][0][1] == 2);
    CHECK(j["inline"]["y"] == "two");
    CHECK(j["backend"]["spec"] == "oracle");
    CHECK(j["backend"]["a"]["b"] == 3);
    CHECK(j["analysis"]["deep"]["n"] == 5);
}

TEST_CASE("toml errors name the line") {
    auto error_of = [](const char* text) -> std::string {
        try {
            (void)toml::parse(text);
        } catch (const FormatError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(error_of("a = 1\nb = \n").rfind("line 2", 0) == 0);
    CHECK(error_of("a = 1\na = 2\n").rfind("line 2", 0) == 0);
    CHECK(error_of("x = \"open\n").rfind("line 1", 0) == 0);
    CHECK(error_of("[t\n").rfind("line 1", 0) == 0);
    CHECK(!error_of("k = [1,\n 2]\nz = @").empty());
}

TEST_CASE("config defaults") {
    const PipelineConfig c;
    CHECK(c.node_types == grammar::default_study_node_types());
    CHECK(c.node_types.size() == 11);
    CHECK(c.control_variants == 20);
    CHECK(c.bootstrap_resamples == 500);
    CHECK(c.max_mask_fraction == 0.5);
    CHECK(c.mask_sentinel == "<mask>");
    CHECK(c.retries == 3);
    CHECK(c.backoff_ms == 250);
    CHECK(c.timeout_s == 30);
    CHECK(c.max_in_flight == 4);
    CHECK(c.max_bytes == 8192);
    CHECK(c.min_group_size == 30);
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("config from TOML") {
    testsupport::TempDir dir("cfg");
    {
        std::ofstream f(dir / "run.toml");
        f << R"(seed = 7
jobs = 2
output_dir = "out"

[corpus]
path = "data/c.jsonl"
sample_size = 100

[masking]
node_types = ["identifier", "string"]
mask_token = "[MASK]"
control_variants = 5

[backend]
spec = "random:3"
url = "http://localhost:8000"
retries = 1

[analysis]
bootstrap_resamples = 50
refit = false
)";
    }
    PipelineConfig c;
    load_config_file(c, dir / "run.toml");
    CHECK(c.seed == 7);
    CHECK(c.jobs == 2);
    CHECK(c.output_dir == dir / "out");
    CHECK(c.corpus_path == dir / "data/c.jsonl");
    CHECK(c.sample_size == 100u);
    CHECK(c.node_types == std::vector<std::string>{"identifier", "string"});
    CHECK(c.mask_sentinel == "[MASK]");
    CHECK(c.control_variants == 5);
    CHECK(c.backend == "random:3");
    CHECK(c.backend_url == "http://localhost:8000");
    CHECK(c.retries == 1);
    CHECK(c.bootstrap_resamples == 50);
    CHECK(!c.refit);
    CHECK(c.timeout_s == 30);  // untouched keys keep defaults
}

TEST_CASE("config rejects unknown keys and bad values") {
    PipelineConfig c;
    CHECK_THROWS_AS(apply_toml(c, toml::parse("sed = 1")), FormatError);
    CHECK_THROWS_AS(apply_toml(c, toml::parse("[masking]\nnode_type = []")), FormatError);
    CHECK_THROWS_AS(apply_toml(c, toml::parse("seed = \"x\"")), FormatError);
    CHECK_THROWS_AS(apply_toml(c, toml::parse("jobs = -1")), FormatError);

    PipelineConfig bad;
    bad.node_types = {"identifer"};
    CHECK_THROWS_AS(validate(bad), FormatError);
    bad = {};
    bad.node_types.clear();
    CHECK_THROWS_AS(validate(bad), FormatError);
    bad = {};
    bad.control_variants = 0;
    CHECK_THROWS_AS(validate(bad), FormatError);
    bad = {};
    bad.max_mask_fraction = 0.0;
    CHECK_THROWS_AS(validate(bad), FormatError);
}

TEST_CASE("split_list") {
    CHECK(split_list("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_list("identifier") == std::vector<std::string>{"identifier"});
    CHECK(split_list(" , ").empty());
}

TEST_CASE("config JSON is stable") {
    PipelineConfig c;
    c.corpus_path = "x.jsonl";
    CHECK(to_json(c).dump() == to_json(c).dump());
    CHECK(to_json(c)["seed"] == 42);
    CHECK(to_json(c)["node_types"].size() == 11);
}
