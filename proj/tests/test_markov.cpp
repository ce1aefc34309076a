#include "fuelopt/markov.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace fuelopt;

TEST_CASE("semigroup_expect identity and constants") {
    TimeGrid tg(0.0, 1.0, 10);
    MarkovModel model = build_two_state(1.0, 2.0, tg);

    Vec f(2);
    f << 0.3, -1.7;
    CHECK(semigroup_expect(model, 4, 4, f) == f);

    Vec ones = Vec::Ones(2);
    Vec r = semigroup_expect(model, 0, 10, ones);
    CHECK(r(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("semigroup_expect one step matches the hand product") {
    TimeGrid tg(0.0, 1.0, 10);
    Mat P(2, 2);
    P << 0.9, 0.1, 0.2, 0.8;
    MarkovModel model(tg, StateGrid::indexed(2), P);
    Vec f(2);
    f << 1.0, 0.0;
    Vec r = semigroup_expect(model, 0, 1, f);
    CHECK(r(0) == doctest::Approx(0.9));
    CHECK(r(1) == doctest::Approx(0.2));
}

TEST_CASE("two-state builder") {
    TimeGrid tg(0.0, 1.0, 10); // dt = 0.1
    SUBCASE("zero rates give the identity kernel") {
        MarkovModel model = build_two_state(0.0, 0.0, tg);
        CHECK(model.kernel(0).isIdentity(0.0));
    }
    SUBCASE("row from direct substitution") {
        MarkovModel model = build_two_state(1.0, 2.0, tg);
        CHECK(model.kernel(0)(0, 0) == doctest::Approx(0.9));
        CHECK(model.kernel(0)(0, 1) == doctest::Approx(0.1));
    }
    SUBCASE("stationary distribution (2/3, 1/3)") {
        MarkovModel model = build_two_state(1.0, 2.0, tg);
        Eigen::RowVectorXd pi(2);
        pi << 2.0 / 3.0, 1.0 / 3.0;
        Eigen::RowVectorXd pi_next = pi * model.kernel(0);
        CHECK(pi_next(0) == doctest::Approx(pi(0)).epsilon(1e-14));
        CHECK(pi_next(1) == doctest::Approx(pi(1)).epsilon(1e-14));
    }
    SUBCASE("rate*dt > 1 rejected") {
        CHECK_THROWS_AS(build_two_state(11.0, 0.0, tg), InvalidSpec);
    }
}

TEST_CASE("random walk builder") {
    TimeGrid tg(0.0, 1.0, 100); // dt = 0.01
    StateGrid sg = StateGrid::uniform(-2.0, 2.0, 21); // dz = 0.2
    SUBCASE("sigma = 0 gives the identity kernel") {
        MarkovModel model = build_random_walk(0.0, sg, tg, Boundary::Reflect);
        CHECK(model.kernel(0).isIdentity(0.0));
    }
    SUBCASE("jump probabilities p = sigma^2 dt / (2 dz^2)") {
        MarkovModel model = build_random_walk(1.0, sg, tg, Boundary::Reflect);
        const Mat& P = model.kernel(0);
        CHECK(P(10, 11) == doctest::Approx(0.125));
        CHECK(P(10, 9) == doctest::Approx(0.125));
        CHECK(P(10, 10) == doctest::Approx(0.75));
    }
    SUBCASE("f(z) = z is a martingale away from the boundary") {
        MarkovModel model = build_random_walk(1.0, sg, tg, Boundary::Reflect);
        Vec f(21);
        for (int i = 0; i < 21; ++i) f(i) = sg.labels[i];
        Vec r = semigroup_expect(model, 0, 5, f);
        // interior node: 5 steps cannot reach the fold-back at the ends
        CHECK(r(10) == doctest::Approx(f(10)).epsilon(1e-12));
    }
    SUBCASE("absorbing ends are absorbing") {
        MarkovModel model = build_random_walk(1.0, sg, tg, Boundary::Absorb);
        CHECK(model.kernel(0)(0, 0) == 1.0);
        CHECK(model.kernel(0)(20, 20) == 1.0);
    }
    SUBCASE("CFL violation rejected") {
        TimeGrid coarse(0.0, 1.0, 10); // dt = 0.1, sigma^2 dt/dz^2 = 2.5 > 1
        CHECK_THROWS_AS(build_random_walk(1.0, sg, coarse, Boundary::Reflect), InvalidSpec);
    }
}

TEST_CASE("kernel validation") {
    TimeGrid tg(0.0, 1.0, 2);
    Mat bad(2, 2);
    bad << 0.9, 0.2, 0.2, 0.8; // row 0 sums to 1.1
    CHECK_THROWS_AS(MarkovModel(tg, StateGrid::indexed(2), bad), InvalidSpec);
    Mat neg(2, 2);
    neg << 1.1, -0.1, 0.0, 1.0;
    CHECK_THROWS_AS(MarkovModel(tg, StateGrid::indexed(2), neg), InvalidSpec);
    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 1), InvalidSpec);
    CHECK_THROWS_AS(StateGrid({1.0, 1.0}), InvalidSpec);
}

TEST_CASE("semigroup_expect is linear, monotone, and composes") {
    oracles::Sampler rnd(7);
    TimeGrid tg(0.0, 2.0, 20);
    MarkovModel model = build_two_state(1.3, 0.4, tg);
    for (int trial = 0; trial < 25; ++trial) {
        Vec f(2), g(2);
        f << rnd.uniform(-2, 2), rnd.uniform(-2, 2);
        g << f(0) + rnd.uniform(0, 1), f(1) + rnd.uniform(0, 1);
        const double a = rnd.uniform(-3, 3), b = rnd.uniform(-3, 3);
        const int j_mid = rnd.uniform_int(1, 19);

        Vec lin = semigroup_expect(model, 0, 20, Vec(a * f + b * g));
        Vec ref = a * semigroup_expect(model, 0, 20, f) + b * semigroup_expect(model, 0, 20, g);
        CHECK((lin - ref).cwiseAbs().maxCoeff() < 1e-12);

        Vec rf = semigroup_expect(model, 0, 20, f);
        Vec rg = semigroup_expect(model, 0, 20, g);
        CHECK((rg - rf).minCoeff() >= -1e-14); // f <= g propagates

        Vec once = semigroup_expect(model, 0, 20, f);
        Vec composed = semigroup_expect(model, 0, j_mid, semigroup_expect(model, j_mid, 20, f));
        CHECK((once - composed).cwiseAbs().maxCoeff() < 1e-12);
    }
}
