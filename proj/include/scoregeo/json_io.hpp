#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scoregeo/vecspace.hpp"

namespace scoregeo {

using json = nlohmann::json;

/// Serializes with every floating-point value printed to 17 significant digits,
/// so the byte output is a pure function of the values.
std::string dump_json(const json& j, int indent = 2);

json vec_to_json(const Vec& v);
Vec vec_from_json(const json& j, const char* what);
json points_to_json(const std::vector<Vec>& pts);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace scoregeo
