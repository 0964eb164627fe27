// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Internal file and logging helpers shared by the .cpp files. Not part of
// the public headers.

#ifndef DISTALIGN_SRC_IOUTIL_HPP
#define DISTALIGN_SRC_IOUTIL_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "distalign/errors.hpp"

namespace distalign {

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::Io, "cannot open '" + path + "' for reading");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void writeFile(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::Io, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) raise(Errc::Io, "short write to '" + path + "'");
}

/// Write-temp-then-rename, so concurrent readers never observe a partial
/// file.
inline void writeFileAtomic(const std::string& path,
                            const std::string& content) {
  std::string tmp = path + ".tmp";
  writeFile(tmp, content);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(Errc::Io, "cannot rename '" + tmp + "' to '" + path + "'");
}

inline void logWarn(const std::string& message) {
  std::fprintf(stderr, "[dist-align] warning: %s\n", message.c_str());
}

inline void logInfo(const std::string& message) {
  std::fprintf(stderr, "[dist-align] %s\n", message.c_str());
}

}  // namespace distalign

#endif  // DISTALIGN_SRC_IOUTIL_HPP
