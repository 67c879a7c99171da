#pragma once

#include <stdexcept>
#include <string>

namespace zvrare {

enum class ErrorKind {
  kDomain,
  kNumerical,
  kBracket,
  kUnsupported,
  kEnvelope,
  kDegenerate,
  kNoFeasibleK,
  kQuadrature,
};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  /// Stable machine-readable name, e.g. "DomainError".
  const char* name() const noexcept;

 private:
  ErrorKind kind_;
};

#define ZVRARE_ERROR_CLASS(Cls, Kind) \
  class Cls : public Error {          \
   public:                            \
    explicit Cls(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

ZVRARE_ERROR_CLASS(DomainError, kDomain)
ZVRARE_ERROR_CLASS(NumericalError, kNumerical)
ZVRARE_ERROR_CLASS(BracketError, kBracket)
ZVRARE_ERROR_CLASS(UnsupportedError, kUnsupported)
ZVRARE_ERROR_CLASS(EnvelopeError, kEnvelope)
ZVRARE_ERROR_CLASS(DegenerateError, kDegenerate)
ZVRARE_ERROR_CLASS(NoFeasibleK, kNoFeasibleK)
ZVRARE_ERROR_CLASS(QuadratureError, kQuadrature)

#undef ZVRARE_ERROR_CLASS

inline const char* Error::name() const noexcept {
  switch (kind_) {
    case ErrorKind::kDomain: return "DomainError";
    case ErrorKind::kNumerical: return "NumericalError";
    case ErrorKind::kBracket: return "BracketError";
    case ErrorKind::kUnsupported: return "UnsupportedError";
    case ErrorKind::kEnvelope: return "EnvelopeError";
    case ErrorKind::kDegenerate: return "DegenerateError";
    case ErrorKind::kNoFeasibleK: return "NoFeasibleK";
    case ErrorKind::kQuadrature: return "QuadratureError";
  }
  return "Error";
}

}  // namespace zvrare
