#pragma once

#include <stdexcept>
#include <string>

namespace ruinwalk {

// Model and parameter problems. The CLI maps these to exit code 2.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Drift E(X - c*theta) >= 0: the survival probability is identically zero.
class NetProfitError : public DomainError {
 public:
  explicit NetProfitError(double drift);
  double drift() const { return drift_; }

 private:
  double drift_;
};

// Requested rebalance would leave P(X_m = l) negative.
class InfeasibleRebalanceError : public DomainError {
 public:
  InfeasibleRebalanceError(const std::string& what, int minimal_feasible_l)
      : DomainError(what), minimal_feasible_l_(minimal_feasible_l) {}
  // -1 when no support point of the claim can absorb the shift.
  int minimal_feasible_l() const { return minimal_feasible_l_; }

 private:
  int minimal_feasible_l_;
};

// Numerical failures (root count, root quality, singular system, blowup).
// The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RootCountError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RootQualityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BlowupError : public NumericalError {
 public:
  BlowupError(const std::string& what, int failing_u)
      : NumericalError(what), failing_u_(failing_u) {}
  int failing_u() const { return failing_u_; }

 private:
  int failing_u_;
};

// Oracle lattice would exceed its cell budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ruinwalk
