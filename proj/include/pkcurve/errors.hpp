#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pkc {

// Parameter or index outside the operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Mismatched sizes: degrees, control point counts, vector lengths.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ||P'(t)|| fell below the speed epsilon, so curvature is undefined at t.
class DegenerateSpeedError : public std::runtime_error {
 public:
  explicit DegenerateSpeedError(double t)
      : std::runtime_error("degenerate speed at t=" + std::to_string(t)), t_(t) {}
  double t() const { return t_; }

 private:
  double t_;
};

// Input points that cannot define a curve (coincident points, zero chords, ...).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double worst_residual)
      : std::runtime_error(what), worst_residual_(worst_residual) {}
  double worst_residual() const { return worst_residual_; }

 private:
  double worst_residual_;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}
  std::size_t unknown_index() const { return index_; }

 private:
  std::size_t index_;
};

// Broken internal invariant, e.g. a subdivision parameter outside (0,1)
// produced by the initializer.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pkc
