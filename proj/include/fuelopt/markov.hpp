#pragma once

#include "fuelopt/common.hpp"

#include <vector>

namespace fuelopt {

/// Uniform grid t_0 < t_1 < ... < t_n = T.
struct TimeGrid {
    double t0 = 0.0;
    double horizon = 1.0; // T
    int n_steps = 2;

    TimeGrid() = default;
    TimeGrid(double t0_, double horizon_, int n_steps_);

    double dt() const { return (horizon - t0) / n_steps; }
    double node(int j) const { return j == n_steps ? horizon : t0 + j * dt(); }
    double remaining(int j) const { return horizon - node(j); }
    int n_nodes() const { return n_steps + 1; }
};

/// Finite ordered list of state coordinates.
struct StateGrid {
    std::vector<double> labels;

    StateGrid() : labels{0.0} {}
    explicit StateGrid(std::vector<double> labels_);

    int size() const { return static_cast<int>(labels.size()); }

    static StateGrid single();
    static StateGrid indexed(int m);
    static StateGrid uniform(double lo, double hi, int m);
};

enum class Boundary { Reflect, Absorb };

/// Discrete-time Markov chain on a finite state grid: one row-stochastic
/// transition matrix per time step. Immutable after construction.
class MarkovModel {
public:
    MarkovModel(TimeGrid tg, StateGrid sg, Mat kernel);
    MarkovModel(TimeGrid tg, StateGrid sg, std::vector<Mat> kernels);

    const TimeGrid& time_grid() const { return tg_; }
    const StateGrid& state_grid() const { return sg_; }
    int n_states() const { return sg_.size(); }
    int n_steps() const { return tg_.n_steps; }
    bool time_homogeneous() const { return homogeneous_; }

    /// Transition matrix for the step t_j -> t_{j+1}.
    const Mat& kernel(int step) const;

private:
    void validate() const;

    TimeGrid tg_;
    StateGrid sg_;
    std::vector<Mat> kernels_; // size 1 when homogeneous
    bool homogeneous_;
};

/// E_{t_jfrom, z}[ f(Z_{t_jto}) ] for every z: applies P_{j_from} ... P_{j_to-1} to f.
Vec semigroup_expect(const MarkovModel& model, int j_from, int j_to, const Vec& f);

MarkovModel build_one_state(const TimeGrid& tg);

/// Two-state chain with per-step transition probabilities rate*dt.
MarkovModel build_two_state(double rate_up, double rate_down, const TimeGrid& tg);

/// Trinomial chain matching the first two moments of dZ = sigma dW on a
/// uniform state grid. Reflecting or absorbing ends.
MarkovModel build_random_walk(double volatility, const StateGrid& sg, const TimeGrid& tg,
                              Boundary boundary);

} // namespace fuelopt
