#include "fuelopt/strategy.hpp"

#include <cmath>

namespace fuelopt {

namespace {

void check_traj_inputs(const ValueField& field, const ProblemSpec& spec,
                       const std::vector<int>& path) {
    require(field.values.rows() == spec.n_steps() + 1 &&
                field.values.cols() == spec.n_states(),
            "value field does not match the spec's grids");
    require(field.gamma == spec.gamma && field.beta == spec.beta,
            "value field does not match the spec's branching parameters");
    require(static_cast<int>(path.size()) == spec.n_steps() + 1,
            "path length must be n_steps+1");
    for (int z : path) require(z >= 0 && z < spec.n_states(), "path state out of range");
    require(spec.control_normalized(),
            "strategies require the control normalization gamma = 1/beta");
}

Trajectory from_positions(const ProblemSpec& spec, const std::vector<int>& path, Vec x) {
    const int n = spec.n_steps();
    Trajectory traj;
    traj.path = path;
    traj.x = std::move(x);
    traj.xdot = Vec(n);
    const double dt = spec.dt();
    for (int j = 0; j < n; ++j) traj.xdot(j) = (traj.x(j + 1) - traj.x(j)) / dt;
    return traj;
}

Trajectory feedback_impl(const ValueField& field, const ProblemSpec& spec,
                         const std::vector<int>& path, double rate_mult) {
    check_traj_inputs(field, spec, path);
    require(rate_mult > 0.0, "feedback rate multiplier must be positive");
    const int n = spec.n_steps();
    const bool singular = field.terminal.kind == TerminalKind::Singular;
    const int layer_from = n - 4; // intervals inside the guard band (T - 5dt, T]
    const TimeGrid& tg = spec.model.time_grid();
    const double dt = tg.dt();

    Vec x(n + 1);
    x(0) = spec.x0;
    for (int j = 0; j < n; ++j) {
        double factor;
        const int z = path[j];
        if (singular && j >= layer_from) {
            // exact exponential of int 1/(T-s) ds across the step; the last
            // step reaches zero exactly
            factor = std::pow(tg.remaining(j + 1) / tg.remaining(j), rate_mult);
        } else if (singular) {
            // integrate the step assuming the layer shape v ~ c/(T-s)^(1/beta),
            // anchored at the left node; exact on the homogeneous singular field
            const double decay = pow_fast(field.values(j, z) / spec.eta(z), spec.beta);
            const double w =
                decay * tg.remaining(j) * std::log(tg.remaining(j) / tg.remaining(j + 1));
            factor = std::exp(-rate_mult * w);
        } else {
            const double decay = pow_fast(field.values(j, z) / spec.eta(z), spec.beta);
            factor = std::exp(-rate_mult * dt * decay);
        }
        x(j + 1) = x(j) * factor;
    }
    return from_positions(spec, path, std::move(x));
}

} // namespace

Trajectory feedback_strategy(const ValueField& field, const ProblemSpec& spec,
                             const std::vector<int>& path) {
    return feedback_impl(field, spec, path, 1.0);
}

Trajectory feedback_strategy_perturbed(const ValueField& field, const ProblemSpec& spec,
                                       const std::vector<int>& path, double rate_mult) {
    return feedback_impl(field, spec, path, rate_mult);
}

Trajectory twap_trajectory(const ProblemSpec& spec, const std::vector<int>& path) {
    const int n = spec.n_steps();
    require(static_cast<int>(path.size()) == n + 1, "path length must be n_steps+1");
    const TimeGrid& tg = spec.model.time_grid();
    Vec x(n + 1);
    for (int j = 0; j <= n; ++j) x(j) = spec.x0 * tg.remaining(j) / (tg.horizon - tg.t0);
    return from_positions(spec, path, std::move(x));
}

Trajectory power_trajectory(const ProblemSpec& spec, const std::vector<int>& path,
                            double alpha) {
    require(alpha > 1.0 - 1.0 / spec.p, "power profile needs alpha > 1 - 1/p for finite cost");
    const int n = spec.n_steps();
    require(static_cast<int>(path.size()) == n + 1, "path length must be n_steps+1");
    const TimeGrid& tg = spec.model.time_grid();
    const double span = tg.horizon - tg.t0;
    Vec x(n + 1);
    for (int j = 0; j <= n; ++j) x(j) = spec.x0 * std::pow(tg.remaining(j) / span, alpha);
    return from_positions(spec, path, std::move(x));
}

CostBreakdown cost(const Trajectory& traj, const ProblemSpec& spec) {
    const int n = spec.n_steps();
    require(traj.x.size() == n + 1 && traj.xdot.size() == n &&
                static_cast<int>(traj.path.size()) == n + 1,
            "trajectory does not match the spec's grids");
    const double dt = spec.dt();
    const double p = spec.p;

    CostBreakdown out;
    for (int j = 0; j < n; ++j) {
        const int z = traj.path[j];
        out.impact += pow_fast(std::abs(traj.xdot(j)), p) * spec.eta(z) * dt;
        out.risk += pow_fast(std::abs(traj.x(j)), p) * spec.functional.density(j, z) * dt;
    }
    for (const Atom& a : spec.functional.atoms)
        out.risk += pow_fast(std::abs(traj.x(a.step)), p) * a.values(traj.path[a.step]);

    const double xT = std::abs(traj.x(n));
    if (spec.terminal.kind == TerminalKind::PenaltyK)
        out.terminal = spec.terminal.k * pow_fast(xT, p);
    else if (spec.terminal.kind == TerminalKind::PenaltyRho)
        out.terminal = spec.terminal.rho(traj.path[n]) * pow_fast(xT, p);
    return out;
}

double phi_p(double xi, double zeta, double p) {
    require(xi >= 0.0 && zeta >= 0.0, "phi_p needs nonnegative arguments");
    require(p >= 2.0, "phi_p needs p >= 2");
    const double value =
        pow_fast(xi, p) - p * pow_fast(zeta, p - 1.0) * xi + (p - 1.0) * pow_fast(zeta, p);
    return std::max(value, 0.0); // nonnegative by Young's inequality; clamp roundoff
}

double verification_gap(const Trajectory& traj, const ValueField& field,
                        const ProblemSpec& spec) {
    check_traj_inputs(field, spec, traj.path);
    const int n = spec.n_steps();
    const double dt = spec.dt();
    double gap = 0.0;
    for (int j = 0; j < n; ++j) {
        const int z = traj.path[j];
        const double zeta =
            std::abs(traj.x(j)) * pow_fast(field.values(j, z) / spec.eta(z), spec.beta);
        gap += spec.eta(z) * phi_p(std::abs(traj.xdot(j)), zeta, spec.p) * dt;
    }
    return gap;
}

bool linear_bound_check(const Trajectory& traj, double x0, double T) {
    const int n = static_cast<int>(traj.x.size()) - 1;
    for (int j = 0; j <= n; ++j) {
        const double linear = std::abs(x0) * (T - T * j / n) / T;
        if (std::abs(traj.x(j)) > linear + 1e-9) return false;
    }
    return true;
}

} // namespace fuelopt
