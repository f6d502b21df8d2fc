#pragma once

#include <stdexcept>
#include <string>

namespace oul {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file header, bad magic, unsupported version, truncated payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Value outside the domain a container or format accepts (NaN in a PFM,
/// intermediate gray level in a mask, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Rasters or tensors whose dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class FusionError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Weighted mean requested with an all-zero weight map.
class UndefinedWeightError : public Error {
 public:
  using Error::Error;
};

}  // namespace oul
