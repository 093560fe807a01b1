#pragma once

#include <stdexcept>
#include <string>

namespace cvrr {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  domain,        ///< invalid argument or model parameter
  evaluation,    ///< a series or iteration failed to reach tolerance
  singular,      ///< the run-rule chain never absorbs (ARL is infinite)
  unattainable,  ///< no chart constant in the bracket reaches the target ARL
  solver,        ///< root finding did not converge
  parse          ///< malformed input file
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

/// Raised for a CV at or beyond the range where the sampling law is usable.
class ValidityRangeError : public DomainError {
 public:
  explicit ValidityRangeError(const std::string& what) : DomainError(what) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what) : Error(ErrorKind::evaluation, what) {}
};

class SingularChainError : public Error {
 public:
  explicit SingularChainError(const std::string& what) : Error(ErrorKind::singular, what) {}
};

class UnattainableDesignError : public Error {
 public:
  UnattainableDesignError(const std::string& what, double max_arl)
      : Error(ErrorKind::unattainable, what), max_arl_(max_arl) {}
  /// Largest in-control ARL reachable inside the search bracket.
  double max_achievable_arl() const noexcept { return max_arl_; }

 private:
  double max_arl_;
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::parse, what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::singular: return "singular";
    case ErrorKind::unattainable: return "unattainable";
    case ErrorKind::solver: return "solver";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

}  // namespace cvrr
