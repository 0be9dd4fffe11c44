#pragma once

#include <stdexcept>
#include <string>

namespace leafnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, degenerate inputs, divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failures while reading a model file. The subclasses let callers tell
/// corruption apart from version skew.
class ModelLoadError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public ModelLoadError {
 public:
  using ModelLoadError::ModelLoadError;
};

class UnsupportedVersionError : public ModelLoadError {
 public:
  using ModelLoadError::ModelLoadError;
};

class ChecksumError : public ModelLoadError {
 public:
  using ModelLoadError::ModelLoadError;
};

class TruncatedFileError : public ModelLoadError {
 public:
  using ModelLoadError::ModelLoadError;
};

/// Structurally invalid content (unknown layer tag, trailing bytes, ...).
class MalformedModelError : public ModelLoadError {
 public:
  using ModelLoadError::ModelLoadError;
};

}  // namespace leafnet
