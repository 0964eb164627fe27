// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DISTALIGN_ERRORS_HPP
#define DISTALIGN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace distalign {

/// Error taxonomy shared by every module. The C API maps these 1:1 onto
/// da_status codes, so additions must be mirrored in dist_align.h.
enum class Errc {
  InvalidArgument,
  LengthMismatch,
  AllZeroCounts,
  DegenerateSum,
  NegativeEntry,
  EmptyList,
  OutOfRangeIndex,
  TooFewPairs,
  TooFewQuestions,
  TooFewDatasets,
  SchemaError,
  EmptyDataset,
  Io,
  ProviderError,
  AuthError,
  LogprobsUnsupported,
  AllSamplesDiscarded,
  MissingGold,
  EmptySelection,
  DegenerateDesign,
  UnknownCase,
  Internal,
};

const char* errcName(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errcName(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace distalign

#endif  // DISTALIGN_ERRORS_HPP
