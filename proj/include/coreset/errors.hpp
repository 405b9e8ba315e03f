#pragma once

#include <stdexcept>
#include <string>

namespace coreset {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 1).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed input data (CLI exit code 2).
class DataError : public Error {
public:
  using Error::Error;
};

/// Failure during a run (CLI exit code 3).
class RuntimeFailure : public Error {
public:
  using Error::Error;
};

class EmptyCoresetError : public RuntimeFailure {
public:
  EmptyCoresetError() : RuntimeFailure("empty coreset: mask selects no examples") {}
};

/// A mask bit contradicts a degenerate probability (s_i = 0 with m_i = 1, or s_i = 1 with m_i = 0).
class ImpossibleOutcomeError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace coreset
