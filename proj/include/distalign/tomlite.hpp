// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reader for the TOML subset the config files use: [tables], scalar
// key = value entries (strings, integers, floats, booleans) and flat
// arrays of scalars. Nested tables/arrays-of-tables are out of scope.

#ifndef DISTALIGN_TOMLITE_HPP
#define DISTALIGN_TOMLITE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "distalign/errors.hpp"

namespace distalign {

struct TomlValue {
  enum class Type { String, Integer, Float, Boolean, Array };
  Type type = Type::String;
  std::string str;
  int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;

  double asFloat() const;  // accepts Integer too
};

class TomlTable {
 public:
  static TomlTable parseString(const std::string& text,
                               const std::string& origin = "<string>");
  static TomlTable parseFile(const std::string& path);

  bool has(const std::string& dotted_key) const;

  /// Getters throw SchemaError on missing keys or type mismatches; the
  /// *Or variants return the fallback when the key is absent.
  std::string getString(const std::string& key) const;
  std::string getStringOr(const std::string& key,
                          const std::string& fallback) const;
  int64_t getInt(const std::string& key) const;
  int64_t getIntOr(const std::string& key, int64_t fallback) const;
  double getFloat(const std::string& key) const;
  double getFloatOr(const std::string& key, double fallback) const;
  bool getBool(const std::string& key) const;
  bool getBoolOr(const std::string& key, bool fallback) const;
  std::vector<std::string> getStringArrayOr(const std::string& key) const;
  std::vector<int64_t> getIntArrayOr(const std::string& key) const;

  const std::map<std::string, TomlValue>& values() const { return values_; }

 private:
  const TomlValue* find(const std::string& key) const;
  const TomlValue& require(const std::string& key, TomlValue::Type t) const;

  std::map<std::string, TomlValue> values_;  // "table.key" -> value
  std::string origin_;
};

}  // namespace distalign

#endif  // DISTALIGN_TOMLITE_HPP
