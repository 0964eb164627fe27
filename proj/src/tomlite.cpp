// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/tomlite.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "ioutil.hpp"

namespace distalign {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Strips a trailing comment that is not inside a quoted string.
std::string stripComment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail(const std::string& origin, size_t line_no,
                       const std::string& what) {
  raise(Errc::SchemaError,
        origin + ":" + std::to_string(line_no) + ": " + what);
}

TomlValue parseScalar(const std::string& raw, const std::string& origin,
                      size_t line_no) {
  TomlValue v;
  std::string text = trim(raw);
  if (text.empty()) fail(origin, line_no, "empty value");

  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') {
      fail(origin, line_no, "unterminated string");
    }
    v.type = TomlValue::Type::String;
    std::string out;
    for (size_t i = 1; i + 1 < text.size(); ++i) {
      char c = text[i];
      if (c == '\\' && i + 2 < text.size() + 1) {
        char n = text[++i];
        switch (n) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: out += n; break;
        }
      } else {
        out += c;
      }
    }
    v.str = out;
    return v;
  }
  if (text == "true" || text == "false") {
    v.type = TomlValue::Type::Boolean;
    v.boolean = text == "true";
    return v;
  }
  // Number: integer unless it contains ., e, or E.
  bool is_float = text.find_first_of(".eE") != std::string::npos;
  const char* begin = text.c_str();
  char* end = nullptr;
  if (is_float) {
    v.type = TomlValue::Type::Float;
    v.number = std::strtod(begin, &end);
  } else {
    v.type = TomlValue::Type::Integer;
    v.integer = std::strtoll(begin, &end, 10);
    v.number = static_cast<double>(v.integer);
  }
  if (end == begin || *end != '\0') {
    fail(origin, line_no, "cannot parse value '" + text + "'");
  }
  return v;
}

TomlValue parseValue(const std::string& raw, const std::string& origin,
                     size_t line_no) {
  std::string text = trim(raw);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') fail(origin, line_no, "unterminated array");
    TomlValue v;
    v.type = TomlValue::Type::Array;
    std::string body = text.substr(1, text.size() - 2);
    // Split on commas outside quotes.
    std::string item;
    bool in_string = false;
    for (size_t i = 0; i <= body.size(); ++i) {
      char c = i < body.size() ? body[i] : ',';
      if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) {
          v.array.push_back(parseScalar(item, origin, line_no));
        }
        item.clear();
      } else {
        item += c;
      }
    }
    return v;
  }
  return parseScalar(text, origin, line_no);
}

}  // namespace

double TomlValue::asFloat() const {
  if (type == Type::Float) return number;
  if (type == Type::Integer) return static_cast<double>(integer);
  raise(Errc::SchemaError, "value is not a number");
}

TomlTable TomlTable::parseString(const std::string& text,
                                 const std::string& origin) {
  TomlTable table;
  table.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(stripComment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        fail(origin, line_no, "malformed table header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, line_no, "expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(origin, line_no, "empty key");
    std::string full = section.empty() ? key : section + "." + key;
    table.values_[full] = parseValue(line.substr(eq + 1), origin, line_no);
  }
  return table;
}

TomlTable TomlTable::parseFile(const std::string& path) {
  return parseString(readFile(path), path);
}

const TomlValue* TomlTable::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

const TomlValue& TomlTable::require(const std::string& key,
                                    TomlValue::Type t) const {
  const TomlValue* v = find(key);
  if (!v) raise(Errc::SchemaError, origin_ + ": missing key '" + key + "'");
  bool numeric_ok = t == TomlValue::Type::Float &&
                    (v->type == TomlValue::Type::Float ||
                     v->type == TomlValue::Type::Integer);
  if (v->type != t && !numeric_ok) {
    raise(Errc::SchemaError, origin_ + ": key '" + key + "' has wrong type");
  }
  return *v;
}

bool TomlTable::has(const std::string& key) const { return find(key) != nullptr; }

std::string TomlTable::getString(const std::string& key) const {
  return require(key, TomlValue::Type::String).str;
}
std::string TomlTable::getStringOr(const std::string& key,
                                   const std::string& fallback) const {
  return has(key) ? getString(key) : fallback;
}
int64_t TomlTable::getInt(const std::string& key) const {
  return require(key, TomlValue::Type::Integer).integer;
}
int64_t TomlTable::getIntOr(const std::string& key, int64_t fallback) const {
  return has(key) ? getInt(key) : fallback;
}
double TomlTable::getFloat(const std::string& key) const {
  return require(key, TomlValue::Type::Float).asFloat();
}
double TomlTable::getFloatOr(const std::string& key, double fallback) const {
  return has(key) ? getFloat(key) : fallback;
}
bool TomlTable::getBool(const std::string& key) const {
  return require(key, TomlValue::Type::Boolean).boolean;
}
bool TomlTable::getBoolOr(const std::string& key, bool fallback) const {
  return has(key) ? getBool(key) : fallback;
}

std::vector<std::string> TomlTable::getStringArrayOr(
    const std::string& key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  const TomlValue& v = require(key, TomlValue::Type::Array);
  for (const auto& item : v.array) {
    if (item.type != TomlValue::Type::String) {
      raise(Errc::SchemaError,
            origin_ + ": array '" + key + "' holds non-strings");
    }
    out.push_back(item.str);
  }
  return out;
}

std::vector<int64_t> TomlTable::getIntArrayOr(const std::string& key) const {
  std::vector<int64_t> out;
  if (!has(key)) return out;
  const TomlValue& v = require(key, TomlValue::Type::Array);
  for (const auto& item : v.array) {
    if (item.type != TomlValue::Type::Integer) {
      raise(Errc::SchemaError,
            origin_ + ": array '" + key + "' holds non-integers");
    }
    out.push_back(item.integer);
  }
  return out;
}

}  // namespace distalign
