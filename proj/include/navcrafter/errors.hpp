#pragma once

#include <stdexcept>
#include <string>

namespace navcrafter {

/// Precondition violated by the caller (bad shape, out-of-range argument).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is well-formed but mathematically degenerate (rank deficiency,
/// zero-scale trajectories, ...).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ill-conditioned numerics, e.g. a near-singular Gaussian covariance.
class NumericalDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Every next-best-view candidate was rejected.
class NoViableCandidate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace navcrafter
