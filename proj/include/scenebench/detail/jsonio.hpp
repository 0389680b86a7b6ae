#pragma once

#include <string>

#include <json.hpp>

#include "scenebench/scene_model.hpp"

namespace scenebench::detail {

inline nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw scene_model::ParseError(std::string("malformed JSON at byte ") +
                                  std::to_string(e.byte) + ": " + e.what());
  }
}

inline const nlohmann::json& expect_object(const nlohmann::json& j,
                                           const std::string& path) {
  if (!j.is_object()) {
    throw scene_model::SchemaError(path + " must be an object");
  }
  return j;
}

inline const nlohmann::json& expect_array(const nlohmann::json& j,
                                          const std::string& path) {
  if (!j.is_array()) {
    throw scene_model::SchemaError(path + " must be an array");
  }
  return j;
}

inline std::string expect_string(const nlohmann::json& j,
                                 const std::string& path) {
  if (!j.is_string()) {
    throw scene_model::SchemaError(path + " must be a string");
  }
  return j.get<std::string>();
}

inline double expect_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) {
    throw scene_model::SchemaError(path + " must be a number");
  }
  return j.get<double>();
}

inline const nlohmann::json& expect_key(const nlohmann::json& obj,
                                        const std::string& key,
                                        const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw scene_model::SchemaError(path + " is missing key \"" + key + "\"");
  }
  return *it;
}

template <typename Keys>
inline void forbid_unknown_keys(const nlohmann::json& obj, const Keys& known,
                                const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool found = false;
    for (const auto& k : known) {
      if (it.key() == k) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw scene_model::SchemaError(path + " has unknown key \"" + it.key() +
                                     "\"");
    }
  }
}

}  // namespace scenebench::detail
