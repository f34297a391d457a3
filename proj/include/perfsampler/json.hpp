#pragma once

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "perfsampler/error.hpp"

namespace perfsampler {

using Json = nlohmann::ordered_json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(Errc::io_error, "write failed for '" + path + "'");
}

inline Json parse_json(const std::string& text, const std::string& what = "input") {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::malformed_json, what + ": " + e.what());
  }
}

inline Json read_json_file(const std::string& path) { return parse_json(read_text_file(path), path); }

inline void write_json_file(const std::string& path, const Json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

}  // namespace perfsampler
