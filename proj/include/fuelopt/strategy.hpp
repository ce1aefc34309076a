#pragma once

#include "fuelopt/loglaplace.hpp"

#include <vector>

namespace fuelopt {

/// A liquidation trajectory along one sampled chain path: piecewise-linear
/// position x(t_j) with per-interval rates.
struct Trajectory {
    std::vector<int> path; // n_steps+1 state indices
    Vec x;                 // n_steps+1 positions, x(0) = x0
    Vec xdot;              // n_steps rates, (x_{j+1}-x_j)/dt
};

struct CostBreakdown {
    double impact = 0.0;   // sum |xdot|^p eta(Z) dt
    double risk = 0.0;     // sum |x|^p A-increments
    double terminal = 0.0; // penalty weight * |x(T)|^p for relaxed strategies
    double total() const { return impact + risk + terminal; }
};

/// Multiplicative feedback x_{j+1} = x_j exp(-dt (v_j/eta)^beta). For singular
/// fields the final guard_steps intervals use the exact homogeneous-layer
/// exponent, which forces x(T) = 0 exactly. Requires gamma = 1/beta.
Trajectory feedback_strategy(const ValueField& field, const ProblemSpec& spec,
                             const std::vector<int>& path);

/// Feedback with the decay exponent scaled by rate_mult (> 0). Used as a family
/// of admissible competitor strategies for paired cost comparisons.
Trajectory feedback_strategy_perturbed(const ValueField& field, const ProblemSpec& spec,
                                       const std::vector<int>& path, double rate_mult);

/// x(t) = x0 (T-t)/T.
Trajectory twap_trajectory(const ProblemSpec& spec, const std::vector<int>& path);

/// x(t) = x0 ((T-t)/T)^alpha, alpha > 1 - 1/p for finite cost.
Trajectory power_trajectory(const ProblemSpec& spec, const std::vector<int>& path,
                            double alpha);

/// Left-endpoint quadrature of the cost integrals, atoms at their exact nodes,
/// terminal penalty included for relaxed terminal conditions.
CostBreakdown cost(const Trajectory& traj, const ProblemSpec& spec);

/// xi^p - p zeta^(p-1) xi + (p-1) zeta^p; nonnegative, zero iff xi == zeta.
double phi_p(double xi, double zeta, double p);

/// Pathwise suboptimality integral sum_j eta(Z_j) phi_p(|xdot_j|, |x_j| (v_j/eta)^beta) dt.
/// For a deterministic model this equals cost(traj) - x0^p v(0,z0) up to O(dt).
double verification_gap(const Trajectory& traj, const ValueField& field,
                        const ProblemSpec& spec);

/// |x(t_j)| <= |x0| (T-t_j)/T at every node, within 1e-9.
bool linear_bound_check(const Trajectory& traj, double x0, double T);

} // namespace fuelopt
