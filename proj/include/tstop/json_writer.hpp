#pragma once

#include <string>

#include <json.hpp>

namespace tstop {

using Json = nlohmann::ordered_json;

/// Serialise with every floating-point number printed to 17 significant
/// digits. Infinite values are written as the strings "inf"/"-inf" and NaN
/// as null.
std::string write_json(const Json& j, int indent = 2);

/// A number, or its string encoding when infinite.
Json json_number(double v);

}  // namespace tstop
