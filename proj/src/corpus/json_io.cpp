#include "syntaxeval/json_io.hpp"

#include "syntaxeval/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <iterator>

namespace syntaxeval {

json to_json(const features::ConfounderVector& z) {
    json j = json::object();
    const auto v = z.values();
    for (std::size_t i = 0; i < v.size(); ++i) j[std::string(features::ConfounderVector::names[i])] = v[i];
    return j;
}

features::ConfounderVector confounders_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("features: expected an object");
    auto get = [&](const char* key) -> std::int64_t {
        auto it = j.find(key);
        if (it == j.end() || !it->is_number_integer()) throw FormatError(fmt::format("features: missing integer \"{}\"", key));
        const auto v = it->get<std::int64_t>();
        if (v < 0) throw FormatError(fmt::format("features: negative \"{}\"", key));
        return v;
    };
    features::ConfounderVector z;
    z.parse_errors = get("parse_errors");
    z.ast_height = get("ast_height");
    z.ast_nodes = get("ast_nodes");
    z.whitespaces = get("whitespaces");
    z.loc = get("loc");
    z.cyclo = get("cyclo");
    z.token_count = get("token_count");
    return z;
}

json to_json(const corpus::Snippet& s) {
    json j = json::object();
    j["id"] = s.id;
    j["source"] = s.source;
    if (!s.origin.empty()) j["origin"] = s.origin;
    if (s.features) j["features"] = to_json(*s.features);
    return j;
}

std::string format_double(double x) {
    if (x == 0.0) return "0";  // folds -0
    return fmt::format("{}", x);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

}  // namespace syntaxeval
