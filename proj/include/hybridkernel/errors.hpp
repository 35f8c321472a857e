#pragma once

#include <stdexcept>
#include <string>

namespace hybridkernel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error { using Error::Error; };
class NotSymmetric : public Error { using Error::Error; };
class NotPositiveDefinite : public Error { using Error::Error; };
class NonFinite : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class NoBracket : public Error { using Error::Error; };
class NotPsd : public Error { using Error::Error; };
class GridMismatch : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

}  // namespace hybridkernel
