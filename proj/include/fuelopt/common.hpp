#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fuelopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A function on the state grid, one value per state.
using StateFunction = Vec;

/// Invalid user input: bad config values, mismatched dimensions,
/// violated preconditions.
struct InvalidSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An iterative scheme failed to reach its tolerance.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Config file could not be parsed or validated.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidSpec(msg);
}

/// pow with fast paths for the common exponents (p in {2,3}, beta in {1, 1/2}).
inline double pow_fast(double base, double expo) {
    if (expo == 1.0) return base;
    if (expo == 2.0) return base * base;
    if (expo == 3.0) return base * base * base;
    if (expo == 0.5) return std::sqrt(base);
    return std::pow(base, expo);
}

} // namespace fuelopt
