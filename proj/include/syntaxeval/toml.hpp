#pragma once

// Reader for the TOML subset used by config files: tables, dotted keys,
// strings, integers, floats, booleans, arrays and inline tables. Dates are not
// supported.

#include <json.hpp>

#include <string_view>

namespace syntaxeval::toml {

// throws FormatError("line N: ...")
[[nodiscard]] nlohmann::ordered_json parse(std::string_view text);

}  // namespace syntaxeval::toml
