#pragma once

#include <stdexcept>
#include <string>

namespace fjres {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments, malformed graphs, or inconsistent model dimensions.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Singular or ill-conditioned systems, unstable iterations, failed factorizations.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Experiment configuration that does not validate.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace fjres
