#include "fuelopt/bounds.hpp"

#include "oracles.hpp"

#include <cmath>
#include <doctest.h>
#include <limits>

using namespace fuelopt;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("compute_h basics") {
    SUBCASE("constant eta is harmonic") {
        MarkovModel model = build_two_state(1.0, 2.0, TimeGrid(0.0, 1.0, 10));
        HField hf = compute_h(model, Vec::Ones(2));
        CHECK((hf.h.array() - 1.0).abs().maxCoeff() < 1e-14);
        CHECK(hf.c_T == doctest::Approx(1.0));
        CHECK(hf.c_rT(0) == doctest::Approx(1.0));
        CHECK(hf.C_rT(0) == doctest::Approx(1.0));
    }
    SUBCASE("identity kernel keeps eta") {
        TimeGrid tg(0.0, 1.0, 8);
        MarkovModel model(tg, StateGrid::indexed(2), Mat::Identity(2, 2));
        Vec eta = (Vec(2) << 0.5, 3.0).finished();
        HField hf = compute_h(model, eta);
        for (int j = 0; j <= 8; ++j) {
            CHECK(hf.h(j, 0) == 0.5);
            CHECK(hf.h(j, 1) == 3.0);
        }
        CHECK(hf.c_T == doctest::Approx(1.0));
    }
    SUBCASE("two-state one-step value by hand") {
        MarkovModel model = build_two_state(1.0, 2.0, TimeGrid(0.0, 1.0, 10)); // dt = 0.1
        Vec eta = (Vec(2) << 1.0, 2.0).finished();
        HField hf = compute_h(model, eta);
        CHECK(hf.h(9, 0) == doctest::Approx(0.9 * 1.0 + 0.1 * 2.0)); // 1.1
        CHECK(hf.h(9, 1) == doctest::Approx(0.2 * 1.0 + 0.8 * 2.0)); // 1.8
    }
    SUBCASE("h is a martingale on the grid and constants are consistent") {
        MarkovModel model = build_two_state(1.6, 0.8, TimeGrid(0.0, 2.0, 40));
        Vec eta = (Vec(2) << 1.0, 2.5).finished();
        HField hf = compute_h(model, eta);
        for (int j = 0; j < 40; ++j) {
            Vec prop = model.kernel(j) * hf.h.row(j + 1).transpose();
            CHECK((prop - hf.h.row(j).transpose()).cwiseAbs().maxCoeff() < 1e-14);
        }
        for (int j = 0; j <= 40; ++j) {
            CHECK(hf.c_rT(j) >= 1.0 - 1e-14);
            CHECK(hf.cbar_rT(j) <= 1.0 + 1e-14);
            CHECK(hf.C_rT(j) <= 1.0 + 1e-14);
            if (j < 40) CHECK(hf.c_rT(j) >= hf.c_rT(j + 1) - 1e-14); // nonincreasing in r
        }
        CHECK(hf.C_rT(40) == doctest::Approx(1.0));
        CHECK(hf.c_T >= hf.c_rT(0) - 1e-14);
    }
}

TEST_CASE("nonlinear semigroup") {
    CHECK(nonlinear_semigroup(2.7, 0.0, 1.8, 0.6) == 2.7);
    CHECK(nonlinear_semigroup(1.0, 1.0, 1.0, 1.0) == doctest::Approx(0.5));
    SUBCASE("flow law V_s V_t = V_{s+t}") {
        const double y = 2.0, s = 0.3, t = 0.7, gamma = 1.0, beta = 0.5;
        const double lhs = nonlinear_semigroup(nonlinear_semigroup(y, t, gamma, beta), s,
                                               gamma, beta);
        CHECK(lhs == doctest::Approx(nonlinear_semigroup(y, s + t, gamma, beta)).epsilon(1e-13));
        oracles::Sampler rnd(3);
        for (int i = 0; i < 50; ++i) {
            const double yy = rnd.uniform(0.0, 8.0), ss = rnd.uniform(0.0, 2.0),
                         tt = rnd.uniform(0.0, 2.0), g = rnd.uniform(0.1, 3.0),
                         b = rnd.uniform(0.1, 1.0);
            const double a = nonlinear_semigroup(nonlinear_semigroup(yy, tt, g, b), ss, g, b);
            const double c = nonlinear_semigroup(yy, ss + tt, g, b);
            CHECK(std::abs(a - c) <= 1e-12 * std::max(1.0, c));
        }
    }
}

TEST_CASE("closed-form upper bounds") {
    CHECK(upper_bound_k(0.7, 0.0, 1.0, 1.0, 0.5) == doctest::Approx(0.7));
    CHECK(upper_bound_k(0.3, kInf, 1.0, 1.0, 0.5) == doctest::Approx(2.3));
    CHECK(upper_bound_singular(0.0, 1.0, 0.5, 2.0) == doctest::Approx(1.0));
    CHECK(upper_bound_singular(0.1, 1.0, 1.0, 0.5) == doctest::Approx(2.1));
    CHECK_THROWS_AS(upper_bound_singular(0.0, 1.0, 1.0, 0.0), InvalidSpec);

    SUBCASE("eta version reduces to the homogeneous one") {
        for (double k : {0.0, 0.7, 4.0}) {
            CHECK(upper_bound_eta(0.2, 1.0, k, 1.0, 1.0, 0.8) ==
                  doctest::Approx(upper_bound_k(0.2, k, 1.0, 1.0, 0.8)));
            CHECK(upper_bound_eta(0.2, 1.0, k, 1.0, 0.5, 0.8) ==
                  doctest::Approx(upper_bound_k(0.2, k, 2.0, 0.5, 0.8)));
        }
    }
    SUBCASE("k to infinity algebra") {
        CHECK(upper_bound_eta(0.0, 1.1, kInf, 1.2, 1.0, 0.5) ==
              doctest::Approx(1.1 * 1.2 / 0.5)); // 2.64
        CHECK(upper_bound_eta(0.0, 1.1, 1e14, 1.2, 1.0, 0.5) ==
              doctest::Approx(2.64).epsilon(1e-9));
    }
}

TEST_CASE("extinction lower bound") {
    CHECK(lower_bound_extinction(1.0, 1.0, 1.0, 2.0) == doctest::Approx(0.5));
    // homogeneous case equals the k -> inf closed form in the control normalization
    for (double beta : {1.0, 0.5}) {
        const double remaining = 0.7;
        CHECK(lower_bound_extinction(1.0, 1.0, beta, remaining) ==
              doctest::Approx(upper_bound_singular(0.0, 1.0 / beta, beta, remaining)));
    }
    CHECK(lower_bound_extinction(1.0, 2.0, 1.0, 2.0) <
          lower_bound_extinction(1.0, 1.0, 1.0, 2.0));
    CHECK_THROWS_AS(lower_bound_extinction(1.0, 1.0, 1.0, 0.0), InvalidSpec);
}

TEST_CASE("gronwall bound against one-state solves") {
    TimeGrid tg(0.0, 1.0, 400);
    SUBCASE("a = 0 reduces to the closed form and is attained") {
        Vec bound = gronwall_bound([](double) { return 0.0; }, 2.0, 1.0, 1.0, tg);
        MarkovModel model = build_one_state(tg);
        ProblemSpec spec(model, 2.0, Vec::Ones(1), AdditiveFunctional::zero(400, 1),
                         TerminalCondition::penalty_k(2.0), 1.0, 0, 1.0);
        ValueField field = solve_backward(spec);
        for (int j = 0; j <= 400; ++j)
            CHECK(field.values(j, 0) == doctest::Approx(bound(j)).epsilon(1e-12));
    }
    SUBCASE("k = 0 returns a itself") {
        Vec bound = gronwall_bound([](double t) { return 0.3 + t; }, 0.0, 1.0, 1.0, tg);
        for (int j = 0; j <= 400; j += 40)
            CHECK(bound(j) == doctest::Approx(0.3 + tg.node(j)));
    }
    SUBCASE("solver output stays below the bound for a(t) = lambda (T - t)") {
        const double lambda = 1.3;
        MarkovModel model = build_one_state(tg);
        ProblemSpec spec(model, 2.0, Vec::Ones(1),
                         AdditiveFunctional::constant_density(lambda, 400, 1),
                         TerminalCondition::penalty_k(1.5), 1.0, 0, 1.0);
        ValueField field = solve_backward(spec);
        Vec bound = gronwall_bound([&](double t) { return lambda * (1.0 - t); }, 1.5, 1.0, 1.0,
                                   tg);
        for (int j = 0; j <= 400; ++j) CHECK(field.values(j, 0) <= bound(j) + 1e-12);
    }
}

TEST_CASE("alpha measure") {
    SUBCASE("deterministic A maps to itself") {
        const int n = 20;
        MarkovModel model = build_one_state(TimeGrid(0.0, 1.0, n));
        AdditiveFunctional A = AdditiveFunctional::constant_density(0.6, n, 1);
        A.add_atom(7, Vec::Constant(1, 1.4));
        ProblemSpec spec(model, 2.0, Vec::Ones(1), A, TerminalCondition::penalty_k(0.0), 1.0,
                         0);
        DiscreteMeasure alpha = alpha_measure(spec, 0, 0);
        for (int l = 0; l < n; ++l) CHECK(alpha.density(l) == doctest::Approx(0.6));
        REQUIRE(alpha.atoms.size() == 1);
        CHECK(alpha.atoms[0].first == 7);
        CHECK(alpha.atoms[0].second == doctest::Approx(1.4));
    }
    SUBCASE("atom mass is the propagated expectation; total mass matches the tail") {
        const int n = 10;
        MarkovModel model = build_two_state(1.0, 2.0, TimeGrid(0.0, 1.0, n));
        AdditiveFunctional A = AdditiveFunctional::zero(n, 2);
        Vec f = (Vec(2) << 1.0, 3.0).finished();
        A.add_atom(4, f);
        ProblemSpec spec(model, 2.0, Vec::Ones(2), A, TerminalCondition::penalty_k(0.0), 1.0,
                         0);
        DiscreteMeasure alpha = alpha_measure(spec, 0, 0);
        Vec expect = semigroup_expect(model, 0, 4, f);
        REQUIRE(alpha.atoms.size() == 1);
        CHECK(alpha.atoms[0].second == doctest::Approx(expect(0)).epsilon(1e-13));
        CHECK(alpha.tail_mass(0, spec.dt()) ==
              doctest::Approx(expected_A_tail(spec, 0, 0)).epsilon(1e-13));
    }
    SUBCASE("nonconstant eta rejected") {
        const int n = 10;
        MarkovModel model = build_two_state(1.0, 2.0, TimeGrid(0.0, 1.0, n));
        ProblemSpec spec(model, 2.0, (Vec(2) << 1.0, 2.0).finished(),
                         AdditiveFunctional::zero(n, 2), TerminalCondition::penalty_k(0.0),
                         1.0, 0);
        CHECK_THROWS_AS(alpha_measure(spec, 0, 0), InvalidSpec);
    }
}

TEST_CASE("Jensen bound: v_A <= v_alpha at the anchor") {
    oracles::Sampler rnd(31);
    const int n = 60;
    MarkovModel model = build_two_state(1.2, 0.9, TimeGrid(0.0, 1.0, n));
    for (int trial = 0; trial < 20; ++trial) {
        AdditiveFunctional A = AdditiveFunctional::zero(n, 2);
        for (int j = 0; j <= n; ++j)
            for (int z = 0; z < 2; ++z) A.density(j, z) = rnd.uniform(0.0, 1.5);
        if (trial % 2 == 0)
            A.add_atom(rnd.uniform_int(0, n - 1),
                       (Vec(2) << rnd.uniform(0, 2), rnd.uniform(0, 2)).finished());
        const double p = trial % 3 == 0 ? 3.0 : 2.0;
        ProblemSpec spec(model, p, Vec::Ones(2), A, TerminalCondition::penalty_k(0.0), 1.0, 0);
        ValueField va = solve_backward(spec);

        DiscreteMeasure alpha = alpha_measure(spec, 0, 0);
        MarkovModel one = build_one_state(TimeGrid(0.0, 1.0, n));
        AdditiveFunctional Aa = AdditiveFunctional::zero(n, 1);
        for (int j = 0; j <= n; ++j) Aa.density(j, 0) = alpha.density(j);
        for (const auto& [step, mass] : alpha.atoms) Aa.add_atom(step, Vec::Constant(1, mass));
        ProblemSpec spec_a(one, p, Vec::Ones(1), Aa, TerminalCondition::penalty_k(0.0), 1.0,
                           0);
        ValueField valpha = solve_backward(spec_a);
        CHECK(va.values(0, 0) <= valpha.values(0, 0) + 1e-12);
    }
}

TEST_CASE("sandwich for a terminal-adjacent atom is exact on the grid") {
    const int n = 50;
    MarkovModel model = build_two_state(1.5, 0.7, TimeGrid(0.0, 1.0, n));
    Vec f = (Vec(2) << 0.5, 2.0).finished();
    for (double gamma : {1.0, 2.0}) {
        for (double p : {2.0, 3.0}) {
            AdditiveFunctional A = AdditiveFunctional::zero(n, 2);
            A.add_atom(n, f);
            ProblemSpec spec(model, p, Vec::Ones(2), A, TerminalCondition::penalty_k(0.0), 1.0,
                             0, gamma);
            ValueField field = solve_backward(spec);
            for (int j = 0; j <= n; j += 7) {
                const double rem = spec.model.time_grid().remaining(j);
                Vec vf(2);
                for (int z = 0; z < 2; ++z)
                    vf(z) = nonlinear_semigroup(f(z), rem, gamma, spec.beta);
                Vec lower = semigroup_expect(model, j, n, vf);
                Vec ef = semigroup_expect(model, j, n, f);
                for (int z = 0; z < 2; ++z) {
                    const double upper = nonlinear_semigroup(ef(z), rem, gamma, spec.beta);
                    CHECK(field.values(j, z) >= lower(z) - 1e-12);
                    CHECK(field.values(j, z) <= upper + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("blow-up bounds hold node-wise for solved fields") {
    const int n = 120;
    MarkovModel model = build_two_state(1.0, 2.0, TimeGrid(0.0, 1.0, n));
    Vec eta = (Vec(2) << 1.0, 2.0).finished();
    AdditiveFunctional A = AdditiveFunctional::zero(n, 2);
    A.density = (Vec(2) << 0.3, 0.6).finished().transpose().replicate(n + 1, 1);
    A.add_atom(n / 2, (Vec(2) << 0.2, 0.1).finished());

    SUBCASE("homogeneous k-penalty, eq (3.14) form") {
        for (double gamma : {1.0, 2.0}) {
            ProblemSpec spec(model, 2.0, Vec::Ones(2), A, TerminalCondition::penalty_k(1.7),
                             1.0, 0, gamma);
            ValueField field = solve_backward(spec);
            Mat tail = expected_A_tail_field(spec);
            for (int j = 0; j <= n; ++j)
                for (int z = 0; z < 2; ++z)
                    CHECK(field.values(j, z) <=
                          upper_bound_k(tail(j, z), 1.7, gamma, 1.0,
                                        spec.model.time_grid().remaining(j)) +
                              1e-12);
        }
    }
    SUBCASE("singular field: upper (3.15)/(3.23) and extinction lower bound") {
        ProblemSpec spec(model, 2.0, eta, A, TerminalCondition::singular(), 1.0, 0);
        ValueField field = solve_singular(spec);
        Mat tail = expected_A_tail_field(spec);
        HField hf = compute_h(model, eta);
        ProblemSpec hom(model, 2.0, Vec::Ones(2), A, TerminalCondition::singular(), 1.0, 0);
        ValueField vhom = solve_singular(hom);
        for (int j = 0; j <= n - 5; ++j) {
            const double rem = spec.model.time_grid().remaining(j);
            for (int z = 0; z < 2; ++z) {
                CHECK(field.values(j, z) <=
                      upper_bound_eta(tail(j, z), hf.h(j, z), kInf, hf.c_T, 1.0, rem) + 1e-9);
                CHECK(field.values(j, z) >=
                      lower_bound_extinction(hf.h(j, z), hf.c_rT(j), 1.0, rem) - 1e-9);
                // homogeneous field obeys the homogeneous version
                CHECK(vhom.values(j, z) <=
                      upper_bound_singular(tail(j, z), 1.0, 1.0, rem) + 1e-9);
            }
        }
    }
}
