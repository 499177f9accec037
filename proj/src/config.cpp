#include "corpusgate/config.hpp"

#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "corpusgate/error.hpp"

namespace corpusgate {

namespace {

nlohmann::json to_json(const toml::node& node) {
  if (const auto* table = node.as_table()) {
    auto obj = nlohmann::json::object();
    for (const auto& [key, value] : *table) obj[std::string(key.str())] = to_json(value);
    return obj;
  }
  if (const auto* array = node.as_array()) {
    auto arr = nlohmann::json::array();
    for (const auto& value : *array) arr.push_back(to_json(value));
    return arr;
  }
  if (const auto* v = node.as_string()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  std::ostringstream os;
  node.visit([&os](const auto& n) { os << n; });
  return os.str();
}

}  // namespace

nlohmann::json parse_toml(std::string_view text, std::string_view source) {
  try {
    return to_json(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
       << e.description();
    throw DataError(os.str());
  }
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  const auto ext = path.extension().string();
  if (ext == ".toml") return parse_toml(text, path.string());
  if (ext == ".json") {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  throw DataError("unsupported config format '" + ext + "' (expected .toml or .json): " + path.string());
}

}  // namespace corpusgate
