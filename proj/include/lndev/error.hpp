#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lndev {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field produced a non-finite value or could not be evaluated.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Frame or metric matrix is (numerically) singular at the evaluation point.
class SingularFrameError : public Error {
 public:
  using Error::Error;
};

/// A derivative was requested beyond what the available data supports,
/// or a finite-difference step underflowed.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data violates an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// ODE integration failed (step underflow, max steps, blow-up).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// The finite-epsilon dragging estimate did not converge.
class OracleError : public Error {
 public:
  using Error::Error;
};

struct Diagnostic {
  int line = 0;
  std::string field;
  std::string reason;
};

/// Scenario or expression text could not be parsed or validated.
class ParseError : public Error {
 public:
  explicit ParseError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

}  // namespace lndev
