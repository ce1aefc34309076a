#include "fuelopt/loglaplace.hpp"

#include <cmath>
#include <limits>

namespace fuelopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_field_matches(const ValueField& field, const ProblemSpec& spec) {
    require(field.values.rows() == spec.n_steps() + 1 &&
                field.values.cols() == spec.n_states(),
            "value field does not match the spec's grids");
    require(field.gamma == spec.gamma && field.beta == spec.beta,
            "value field does not match the spec's branching parameters");
}

/// Backward recursion from row j_start (already stored in `row`) down to row 0.
void backward_sweep(const ProblemSpec& spec, int j_start, Vec row, Mat& out) {
    const double dt = spec.dt();
    out.row(j_start) = row.transpose();
    for (int j = j_start - 1; j >= 0; --j) {
        Vec rhs = spec.model.kernel(j) * row;
        rhs += dt * spec.functional.density.row(j).transpose();
        for (int z = 0; z < rhs.size(); ++z)
            row(z) = sink_flow(rhs(z), dt, spec.gamma, spec.beta, spec.eta(z));
        if (const Vec* f = spec.functional.atom_at(j)) row += *f;
        out.row(j) = row.transpose();
    }
}

double layer_value(const ProblemSpec& spec, double eta_z, double remaining) {
    return eta_z * std::pow(spec.gamma * spec.beta * remaining, -1.0 / spec.beta);
}

} // namespace

double sink_flow(double y, double dt, double gamma, double beta, double eta) {
    if (y <= 0.0) return 0.0;
    if (std::isinf(y)) return eta * std::pow(gamma * beta * dt, -1.0 / beta);
    const double w = gamma * beta * dt * pow_fast(y / eta, beta);
    return y * std::exp(-std::log1p(w) / beta);
}

ValueField solve_backward(const ProblemSpec& spec) {
    require(spec.terminal.kind != TerminalKind::Singular,
            "solve_backward needs a finite terminal condition; use solve_singular");
    const int n = spec.n_steps();
    const int m = spec.n_states();

    Vec terminal_row;
    if (spec.terminal.kind == TerminalKind::PenaltyK)
        terminal_row = Vec::Constant(m, spec.terminal.k);
    else
        terminal_row = spec.terminal.rho;
    if (const Vec* f = spec.functional.atom_at(n)) terminal_row += *f;

    ValueField field{Mat(n + 1, m), spec.terminal, spec.gamma, spec.beta};
    backward_sweep(spec, n, std::move(terminal_row), field.values);
    return field;
}

std::vector<double> default_k_schedule() {
    std::vector<double> ks;
    double k = 1.0;
    for (int i = 0; i <= 12; ++i, k *= 4.0) ks.push_back(k);
    return ks;
}

ValueField solve_singular(const ProblemSpec& spec, const SingularOptions& opts,
                          SingularDiagnostics* diag) {
    require(spec.terminal.kind == TerminalKind::Singular,
            "solve_singular needs a singular terminal condition");
    const int n = spec.n_steps();
    const int m = spec.n_states();
    const double dt = spec.dt();
    require(n > opts.guard_steps, "grid too coarse for the singular guard band");
    const int j_guard = n - opts.guard_steps;

    std::vector<double> ks = opts.k_schedule.empty() ? default_k_schedule() : opts.k_schedule;
    require(ks.size() >= 2, "k_schedule needs at least two entries");
    for (size_t i = 1; i < ks.size(); ++i)
        require(ks[i] > ks[i - 1], "k_schedule must be strictly increasing");

    SingularDiagnostics local;
    SingularDiagnostics& d = diag ? *diag : local;

    ProblemSpec spec_k = spec; // terminal swapped per schedule entry
    Mat prev, cur(n + 1, m), last_diff;
    bool converged = false;

    for (double k : ks) {
        spec_k.terminal = TerminalCondition::penalty_k(k);
        backward_sweep(spec_k, n, Vec::Constant(m, k), cur);
        d.k_used.push_back(k);

        if (prev.size() > 0) {
            for (int j = 0; j < n; ++j)
                for (int z = 0; z < m; ++z) {
                    const double lo = prev(j, z);
                    if (cur(j, z) < lo - 1e-12 * std::max(1.0, lo))
                        ++d.monotonicity_violations;
                }
            if (d.monotonicity_violations > 0)
                throw ConvergenceError(
                    "singular k-schedule lost node-wise monotonicity (scheme bug signal)");
            last_diff = cur.topRows(j_guard + 1) - prev.topRows(j_guard + 1);
            const double max_diff = last_diff.maxCoeff();
            d.guarded_diffs.push_back(max_diff);
            if (max_diff <= opts.tol_k) {
                converged = true;
                d.converged_by_tol = true;
                prev = cur;
                break;
            }
        }
        prev = cur;
    }

    if (!converged) {
        // Geometric tail estimate from the last two schedule increments. The
        // increments shrink by roughly 4^-beta per 4x step in k, so the
        // remaining gap to the limit is diff * r / (1 - r).
        if (d.guarded_diffs.size() < 2)
            throw ConvergenceError("k_schedule too short to assess convergence");
        const double d_last = d.guarded_diffs.back();
        const double d_prev = d.guarded_diffs[d.guarded_diffs.size() - 2];
        double ratio = d_prev > 0.0 ? d_last / d_prev : 0.0;
        ratio = std::min(std::max(ratio, 0.0), 0.999);
        const double tail_scale = ratio / (1.0 - ratio);
        double sat = 0.0;
        for (int j = 0; j <= j_guard; ++j)
            for (int z = 0; z < m; ++z) {
                const double tail = last_diff(j, z) * tail_scale;
                sat = std::max(sat, tail / std::max(prev(j, z), 1e-300));
            }
        d.saturation_rel = sat;
        if (sat > opts.tol_singular / 3.0)
            throw ConvergenceError("singular k-schedule did not converge: estimated "
                                   "remaining tail " +
                                   std::to_string(sat) + " relative");
    }

    // Band-edge consistency: the last interior row must sit inside the
    // analytic-layer sandwich built from locally computed h extrema.
    {
        Vec h_last = spec.model.kernel(n - 1) * spec.eta; // h(t_{n-1}, .)
        double c_up = 1.0, c_low = 1.0;
        for (int z = 0; z < m; ++z) {
            c_up = std::max(c_up, spec.eta(z) / h_last(z));
            c_low = std::max(c_low, h_last(z) / spec.eta(z));
        }
        const double phi_dt = std::pow(spec.gamma * spec.beta * dt, -1.0 / spec.beta);
        // the k-limit row still sits below the layer by its saturation gap
        const double k_last = d.k_used.back();
        const double sat_band = (1.0 / spec.beta) * std::pow(spec.eta.maxCoeff(), spec.beta) /
                                (spec.gamma * spec.beta * dt * std::pow(k_last, spec.beta));
        const double slack = 1e-9 + 2.0 * sat_band;
        for (int z = 0; z < m; ++z) {
            const double v = prev(n - 1, z);
            const double lower = h_last(z) / c_low * phi_dt;
            const double upper = expected_A_tail(spec, n - 1, z) + c_up * h_last(z) * phi_dt;
            if (v < lower * (1.0 - slack) - slack || v > upper * (1.0 + slack) + slack)
                throw ConvergenceError("singular field violates the terminal-layer sandwich");
        }
    }

    // Cross-check: an independent sweep seeded from the analytic layer at
    // t_{n-1} must agree on the guarded region within tol_singular relative.
    {
        Vec seed(m);
        for (int z = 0; z < m; ++z) seed(z) = layer_value(spec, spec.eta(z), dt);
        if (const Vec* f = spec.functional.atom_at(n - 1)) seed += *f;
        Mat direct(n + 1, m);
        backward_sweep(spec, n - 1, std::move(seed), direct);
        double worst = 0.0;
        for (int j = 0; j <= j_guard; ++j)
            for (int z = 0; z < m; ++z)
                worst = std::max(worst, std::abs(direct(j, z) - prev(j, z)) /
                                            std::max(prev(j, z), 1e-300));
        d.cross_check_rel = worst;
        if (worst > opts.tol_singular)
            throw ConvergenceError("layer-seeded cross-check disagrees with the k-limit: " +
                                   std::to_string(worst) + " relative");
    }

    ValueField field{std::move(prev), TerminalCondition::singular(), spec.gamma, spec.beta};
    field.values.row(n).setConstant(kInf);
    return field;
}

double closed_form_total_mass(double lambda, double gamma, double beta, double elapsed) {
    require(lambda >= 0.0 && gamma >= 0.0 && elapsed >= 0.0,
            "closed_form_total_mass needs nonnegative arguments");
    require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
    return sink_flow(lambda, elapsed, gamma, beta, 1.0);
}

ResidualReport check_integral_residual(const ValueField& field, const ProblemSpec& spec) {
    check_field_matches(field, spec);
    const int n = spec.n_steps();
    const int m = spec.n_states();
    const double dt = spec.dt();
    const int anchor = field.terminal.kind == TerminalKind::Singular
                           ? std::max(1, n - 5)
                           : n;

    ResidualReport report;
    Vec u = field.values.row(anchor).transpose();
    for (int j = anchor - 1; j >= 0; --j) {
        Vec rhs = spec.model.kernel(j) * field.values.row(j + 1).transpose();
        rhs += dt * spec.functional.density.row(j).transpose();
        Vec sink(m);
        for (int z = 0; z < m; ++z)
            sink(z) = rhs(z) - sink_flow(rhs(z), dt, spec.gamma, spec.beta, spec.eta(z));
        u = spec.model.kernel(j) * u;
        u += dt * spec.functional.density.row(j).transpose() - sink;
        if (const Vec* f = spec.functional.atom_at(j)) u += *f;
        for (int z = 0; z < m; ++z) {
            const double r = std::abs(field.values(j, z) - u(z));
            if (r > report.max_abs) {
                report.max_abs = r;
                report.step = j;
                report.state = z;
            }
        }
    }
    return report;
}

} // namespace fuelopt
