#pragma once

// JSON conversions shared by the file formats.

#include "syntaxeval/corpus.hpp"
#include "syntaxeval/features.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace syntaxeval {

using json = nlohmann::ordered_json;

[[nodiscard]] json to_json(const features::ConfounderVector& z);
[[nodiscard]] features::ConfounderVector confounders_from_json(const json& j);

[[nodiscard]] json to_json(const corpus::Snippet& s);

// compact, stable formatting for doubles: shortest round-trip text
[[nodiscard]] std::string format_double(double x);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace syntaxeval
