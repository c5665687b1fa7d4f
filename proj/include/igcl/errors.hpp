#pragma once

#include <stdexcept>
#include <string>

namespace igcl {

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define IGCL_DEFINE_ERROR(NAME)                          \
  struct NAME : Error {                                  \
    explicit NAME(const std::string& msg)                \
        : Error(std::string(#NAME) + ": " + msg) {}      \
  }

IGCL_DEFINE_ERROR(MalformedCsv);
IGCL_DEFINE_ERROR(EmptySeries);
IGCL_DEFINE_ERROR(OutOfRange);
IGCL_DEFINE_ERROR(MissingLabels);
IGCL_DEFINE_ERROR(OverlapError);
IGCL_DEFINE_ERROR(IoError);
IGCL_DEFINE_ERROR(BadRange);
IGCL_DEFINE_ERROR(ShapeMismatch);
IGCL_DEFINE_ERROR(NonPositiveSigma);
IGCL_DEFINE_ERROR(InsufficientHistory);
IGCL_DEFINE_ERROR(NonFiniteLoss);
IGCL_DEFINE_ERROR(UnsupportedVersion);
IGCL_DEFINE_ERROR(CorruptCheckpoint);
IGCL_DEFINE_ERROR(LengthMismatch);
IGCL_DEFINE_ERROR(SingleClass);
IGCL_DEFINE_ERROR(EmptyScores);
IGCL_DEFINE_ERROR(ConfigError);

#undef IGCL_DEFINE_ERROR

}  // namespace igcl
