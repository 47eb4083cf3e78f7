#ifndef SDDE_TYPES_HPP
#define SDDE_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace sdde {

using Index = Eigen::Index;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Invalid argument or constraint violation detected at a module boundary.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// A weighted norm failed to stabilise under quadrature refinement.
struct IntegrabilityError : std::runtime_error {
  explicit IntegrabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Generator set collapsed to a lower dimension than requested.
struct DegenerateError : std::runtime_error {
  explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

// A simulated state left the configured guard interval.
struct NumericalBlowup : std::runtime_error {
  explicit NumericalBlowup(const std::string& msg) : std::runtime_error(msg) {}
};

// Two objects built against different weight specs or time grids were combined.
struct SpecMismatch : std::runtime_error {
  explicit SpecMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

// Normal equations of a least-squares fit were singular beyond the ridge.
struct RegressionError : std::runtime_error {
  explicit RegressionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Config file failed to parse or validate.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  int line_number;
};

}  // namespace sdde

#endif
