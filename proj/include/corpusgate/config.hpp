#pragma once

#include <filesystem>

#include "json.hpp"

namespace corpusgate {

// Reads a .toml or .json configuration file into a JSON tree. TOML values map
// onto their JSON counterparts; dates and times become strings.
nlohmann::json load_config_file(const std::filesystem::path& path);

// Parses TOML text; `source` names the input in error messages.
nlohmann::json parse_toml(std::string_view text, std::string_view source = "<toml>");

}  // namespace corpusgate
