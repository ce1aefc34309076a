#include "fuelopt/strategy.hpp"

#include "fuelopt/bounds.hpp"
#include "oracles.hpp"

#include <cmath>
#include <doctest.h>

using namespace fuelopt;

namespace {

ProblemSpec one_state(double T, int n, double p, AdditiveFunctional A, TerminalCondition tc,
                      double x0) {
    MarkovModel model = build_one_state(TimeGrid(0.0, T, n));
    return ProblemSpec(std::move(model), p, Vec::Ones(1), std::move(A), std::move(tc), x0, 0);
}

std::vector<int> flat_path(int n) { return std::vector<int>(n + 1, 0); }

/// Random monotone admissible profile with x(T) = 0: normalized nonnegative
/// increments.
Vec random_monotone(oracles::Sampler& rnd, int n, double x0, bool end_at_zero) {
    Vec g(n);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        g(j) = rnd.uniform(0.0, 1.0);
        total += g(j);
    }
    const double sold = end_at_zero ? 1.0 : rnd.uniform(0.3, 0.9);
    Vec x(n + 1);
    x(0) = x0;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += g(j) / total * sold;
        x(j + 1) = x0 * (1.0 - acc);
    }
    if (end_at_zero) x(n) = 0.0;
    return x;
}

Trajectory make_traj(const ProblemSpec& spec, Vec x) {
    Trajectory t;
    t.path = flat_path(spec.n_steps());
    t.x = std::move(x);
    t.xdot = Vec(spec.n_steps());
    for (int j = 0; j < spec.n_steps(); ++j)
        t.xdot(j) = (t.x(j + 1) - t.x(j)) / spec.dt();
    return t;
}

} // namespace

TEST_CASE("phi_p") {
    CHECK(phi_p(3.0, 1.0, 2.0) == doctest::Approx(4.0));
    CHECK(phi_p(2.0, 1.0, 3.0) == doctest::Approx(4.0)); // 8 - 6 + 2
    oracles::Sampler rnd(5);
    for (int i = 0; i < 40; ++i) {
        const double z = rnd.uniform(0.0, 5.0), p = rnd.uniform(2.0, 4.0);
        CHECK(phi_p(z, z, p) <= 1e-12);
        CHECK(phi_p(rnd.uniform(0, 5), rnd.uniform(0, 5), p) >= 0.0);
    }
    CHECK_THROWS_AS(phi_p(-1.0, 1.0, 2.0), InvalidSpec);
}

TEST_CASE("TWAP recovery for the fuel-constrained homogeneous problem") {
    const double T = 5.0, x0 = 10.0;
    const int n = 5000;
    auto spec = one_state(T, n, 2.0, AdditiveFunctional::zero(n, 1),
                          TerminalCondition::singular(), x0);
    SingularOptions opts;
    double kk = 1.0;
    for (int i = 0; i <= 16; ++i, kk *= 4.0) opts.k_schedule.push_back(kk);
    ValueField field = solve_singular(spec, opts);
    Trajectory traj = feedback_strategy(field, spec, flat_path(n));

    CHECK(traj.x(n) == 0.0); // exact fuel constraint
    double worst = 0.0;
    for (int j = 0; j <= n; ++j) {
        const double exact = x0 * (T - spec.model.time_grid().node(j)) / T;
        worst = std::max(worst, std::abs(traj.x(j) - exact));
    }
    CHECK(worst <= 1e-3 * x0);

    CostBreakdown cb = cost(traj, spec);
    CHECK(cb.total() == doctest::Approx(x0 * x0 / T).epsilon(1e-3));
    CHECK(linear_bound_check(traj, x0, T));

    // exact TWAP costs exactly x0^2/T on the grid
    Trajectory twap = twap_trajectory(spec, flat_path(n));
    CHECK(cost(twap, spec).total() == doctest::Approx(x0 * x0 / T).epsilon(1e-12));
}

TEST_CASE("zero field means no trading") {
    const int n = 100;
    auto spec = one_state(1.0, n, 2.0, AdditiveFunctional::zero(n, 1),
                          TerminalCondition::penalty_k(0.0), 3.0);
    ValueField field = solve_backward(spec);
    Trajectory traj = feedback_strategy(field, spec, flat_path(n));
    for (int j = 0; j <= n; ++j) CHECK(traj.x(j) == 3.0);
    CHECK(cost(traj, spec).total() == 0.0);
}

TEST_CASE("relaxed penalty closed form x_rho(T) = x0/(1+Tc)") {
    const double c = 1.0, T = 1.0, x0 = 2.0;
    const int n = 1000;
    auto spec = one_state(T, n, 2.0, AdditiveFunctional::zero(n, 1),
                          TerminalCondition::penalty_rho(Vec::Constant(1, c)), x0);
    ValueField field = solve_backward(spec);
    // v_rho(s) = c/(1+(T-s)c) exactly on the grid
    for (int j = 0; j <= n; j += 100) {
        const double rem = spec.model.time_grid().remaining(j);
        CHECK(field.values(j, 0) == doctest::Approx(c / (1.0 + rem * c)).epsilon(1e-13));
    }
    Trajectory traj = feedback_strategy(field, spec, flat_path(n));
    CHECK(traj.x(n) == doctest::Approx(x0 / (1.0 + T * c)).epsilon(1e-3));
    // the whole path follows x0 (1 + (T-t)c)/(1+Tc)
    for (int j = 0; j <= n; j += 100) {
        const double rem = spec.model.time_grid().remaining(j);
        CHECK(traj.x(j) ==
              doctest::Approx(x0 * (1.0 + rem * c) / (1.0 + T * c)).epsilon(1e-3));
    }
}

TEST_CASE("deterministic verification identity on one state") {
    const double T = 1.0, x0 = 1.0;
    const int n = 20000;
    auto spec = one_state(T, n, 2.0, AdditiveFunctional::constant_density(0.2, n, 1),
                          TerminalCondition::penalty_k(0.5), x0);
    ValueField field = solve_backward(spec);
    const double v0 = field.values(0, 0);
    oracles::Sampler rnd(17);

    for (int trial = 0; trial < 10; ++trial) {
        Trajectory traj = make_traj(spec, random_monotone(rnd, n, x0, trial % 2 == 0));
        const double total = cost(traj, spec).total();
        const double gap = verification_gap(traj, field, spec);
        CHECK(gap >= 0.0);
        CHECK(std::abs(total - x0 * x0 * v0 - gap) <= 1e-4);
    }

    Trajectory fb = feedback_strategy(field, spec, flat_path(n));
    CHECK(verification_gap(fb, field, spec) <= 1e-6);
    const double fb_total = cost(fb, spec).total();
    CHECK(std::abs(fb_total - x0 * x0 * v0) <= 1e-4);

    // TWAP pays a strictly positive gap when A != 0
    Trajectory twap = twap_trajectory(spec, flat_path(n));
    CHECK(verification_gap(twap, field, spec) > 1e-3);
    CHECK(cost(twap, spec).total() >= fb_total);
}

TEST_CASE("feedback trajectories are monotone with ratios in (0,1]") {
    const int n = 200;
    MarkovModel model = build_two_state(1.0, 2.0, TimeGrid(0.0, 1.0, n));
    AdditiveFunctional A = AdditiveFunctional::constant_density(0.5, n, 2);
    ProblemSpec spec(model, 2.0, (Vec(2) << 1.0, 2.0).finished(), A,
                     TerminalCondition::singular(), 1.0, 0);
    ValueField field = solve_singular(spec);
    std::vector<int> path(n + 1);
    for (int j = 0; j <= n; ++j) path[j] = j % 2;
    Trajectory traj = feedback_strategy(field, spec, path);
    for (int j = 0; j < n; ++j) {
        CHECK(std::abs(traj.x(j + 1)) <= std::abs(traj.x(j)) + 1e-15);
        if (traj.x(j) > 0.0) CHECK(traj.x(j + 1) / traj.x(j) <= 1.0);
    }
    CHECK(traj.x(n) == 0.0);

    // (4.5)-style decay: x(t) <= x0 ((T-t)/T)^{C_{0,T}^beta} on the guarded region
    HField hf = compute_h(model, spec.eta);
    const double expo = std::pow(hf.C_rT(0), spec.beta);
    for (int j = 0; j <= n - 5; ++j) {
        const double bound = std::pow(spec.model.time_grid().remaining(j) / 1.0, expo);
        CHECK(traj.x(j) <= bound * (1.0 + 1e-6) + 1e-12);
    }
}

TEST_CASE("scaling and sign symmetry") {
    const int n = 500;
    auto make = [&](double x0) {
        auto spec = one_state(2.0, n, 3.0, AdditiveFunctional::constant_density(0.3, n, 1),
                              TerminalCondition::singular(), x0);
        SingularOptions opts;
        double k = 1.0;
        for (int i = 0; i <= 20; ++i, k *= 4.0) opts.k_schedule.push_back(k);
        ValueField field = solve_singular(spec, opts);
        Trajectory traj = feedback_strategy(field, spec, flat_path(n));
        return std::make_pair(traj, cost(traj, spec).total());
    };
    auto [t1, c1] = make(1.0);
    auto [t2, c2] = make(2.0);
    auto [tm, cm] = make(-1.0);
    for (int j = 0; j <= n; j += 50) {
        CHECK(t2.x(j) == doctest::Approx(2.0 * t1.x(j)).epsilon(1e-12));
        CHECK(tm.x(j) == doctest::Approx(-t1.x(j)).epsilon(1e-12));
    }
    CHECK(c2 == doctest::Approx(std::pow(2.0, 3.0) * c1).epsilon(1e-12));
    CHECK(cm == doctest::Approx(c1).epsilon(1e-12));
}

TEST_CASE("linear bound for feedback under heavy A is strict") {
    const int n = 1000;
    auto spec = one_state(1.0, n, 2.0, AdditiveFunctional::constant_density(4.0, n, 1),
                          TerminalCondition::singular(), 1.0);
    ValueField field = solve_singular(spec);
    Trajectory traj = feedback_strategy(field, spec, flat_path(n));
    CHECK(linear_bound_check(traj, 1.0, 1.0));
    // strictly below the line in the interior
    CHECK(traj.x(n / 2) < 0.5 - 1e-3);
}

TEST_CASE("strategy layer rejects non-control normalizations") {
    const int n = 50;
    MarkovModel model = build_one_state(TimeGrid(0.0, 1.0, n));
    ProblemSpec spec(model, 3.0, Vec::Ones(1), AdditiveFunctional::zero(n, 1),
                     TerminalCondition::penalty_k(1.0), 1.0, 0, 1.0); // gamma != 1/beta
    ValueField field = solve_backward(spec);
    CHECK_THROWS_AS(feedback_strategy(field, spec, flat_path(n)), InvalidSpec);
}
