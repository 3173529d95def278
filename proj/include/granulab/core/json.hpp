#pragma once

#include <filesystem>

#include <json.hpp>

#include "granulab/core/error.hpp"
#include "granulab/core/file_io.hpp"

namespace granulab {

using Json = nlohmann::json;

inline Json load_json(const std::filesystem::path& path) {
  std::string text = read_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("invalid JSON in " + path.string());
  return j;
}

inline void save_json(const std::filesystem::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

// Field accessors that turn missing/mistyped keys into DataError with a
// message naming the key, instead of nlohmann's generic exceptions.
inline const Json& require_key(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

inline double require_number(const Json& j, const char* key) {
  const Json& v = require_key(j, key);
  if (!v.is_number()) throw DataError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline long long require_integer(const Json& j, const char* key) {
  const Json& v = require_key(j, key);
  if (!v.is_number_integer()) throw DataError(std::string("field '") + key + "' must be an integer");
  return v.get<long long>();
}

inline std::string require_string(const Json& j, const char* key) {
  const Json& v = require_key(j, key);
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace granulab
