#include "fuelopt/markov.hpp"

#include <cmath>
#include <set>

namespace fuelopt {

TimeGrid::TimeGrid(double t0_, double horizon_, int n_steps_)
    : t0(t0_), horizon(horizon_), n_steps(n_steps_) {
    require(n_steps >= 2, "time grid needs at least 2 steps");
    require(horizon > t0, "time grid needs horizon > t0");
    require(std::isfinite(t0) && std::isfinite(horizon), "time grid bounds must be finite");
}

StateGrid::StateGrid(std::vector<double> labels_) : labels(std::move(labels_)) {
    require(!labels.empty(), "state grid must be nonempty");
    std::set<double> seen(labels.begin(), labels.end());
    require(seen.size() == labels.size(), "state labels must be unique");
    for (double v : labels) require(std::isfinite(v), "state labels must be finite");
}

StateGrid StateGrid::single() { return StateGrid({0.0}); }

StateGrid StateGrid::indexed(int m) {
    require(m >= 1, "state grid needs m >= 1");
    std::vector<double> labels(m);
    for (int i = 0; i < m; ++i) labels[i] = i;
    return StateGrid(std::move(labels));
}

StateGrid StateGrid::uniform(double lo, double hi, int m) {
    require(m >= 2 && hi > lo, "uniform state grid needs m >= 2 and hi > lo");
    std::vector<double> labels(m);
    const double dz = (hi - lo) / (m - 1);
    for (int i = 0; i < m; ++i) labels[i] = lo + i * dz;
    labels[m - 1] = hi;
    return StateGrid(std::move(labels));
}

MarkovModel::MarkovModel(TimeGrid tg, StateGrid sg, Mat kernel)
    : tg_(tg), sg_(std::move(sg)), homogeneous_(true) {
    kernels_.push_back(std::move(kernel));
    validate();
}

MarkovModel::MarkovModel(TimeGrid tg, StateGrid sg, std::vector<Mat> kernels)
    : tg_(tg), sg_(std::move(sg)), kernels_(std::move(kernels)), homogeneous_(false) {
    require(static_cast<int>(kernels_.size()) == tg_.n_steps,
            "per-step kernel family must have n_steps matrices");
    validate();
}

const Mat& MarkovModel::kernel(int step) const {
    require(step >= 0 && step < tg_.n_steps, "kernel step index out of range");
    return homogeneous_ ? kernels_[0] : kernels_[step];
}

void MarkovModel::validate() const {
    const int m = sg_.size();
    for (const Mat& P : kernels_) {
        require(P.rows() == m && P.cols() == m, "kernel dimensions must match state grid");
        for (int i = 0; i < m; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < m; ++j) {
                require(P(i, j) >= 0.0, "kernel entries must be nonnegative");
                row_sum += P(i, j);
            }
            require(std::abs(row_sum - 1.0) <= 1e-12, "kernel rows must sum to 1 within 1e-12");
        }
    }
}

Vec semigroup_expect(const MarkovModel& model, int j_from, int j_to, const Vec& f) {
    require(0 <= j_from && j_from <= j_to && j_to <= model.n_steps(),
            "semigroup_expect indices out of range");
    require(f.size() == model.n_states(), "function size must match state grid");
    require(f.allFinite(), "semigroup_expect needs finite f");
    Vec g = f;
    for (int j = j_to - 1; j >= j_from; --j) g = model.kernel(j) * g;
    return g;
}

MarkovModel build_one_state(const TimeGrid& tg) {
    return MarkovModel(tg, StateGrid::single(), Mat::Identity(1, 1));
}

MarkovModel build_two_state(double rate_up, double rate_down, const TimeGrid& tg) {
    require(rate_up >= 0.0 && rate_down >= 0.0, "two-state rates must be nonnegative");
    const double dt = tg.dt();
    require(rate_up * dt <= 1.0 && rate_down * dt <= 1.0,
            "two-state rates violate rate*dt <= 1");
    Mat P(2, 2);
    P << 1.0 - rate_up * dt, rate_up * dt, rate_down * dt, 1.0 - rate_down * dt;
    return MarkovModel(tg, StateGrid::indexed(2), std::move(P));
}

MarkovModel build_random_walk(double volatility, const StateGrid& sg, const TimeGrid& tg,
                              Boundary boundary) {
    require(volatility >= 0.0, "volatility must be nonnegative");
    const int m = sg.size();
    require(m >= 2, "random walk needs at least 2 states");
    const double dz = sg.labels[1] - sg.labels[0];
    require(dz > 0.0, "state grid must be increasing");
    for (int i = 1; i + 1 < m; ++i)
        require(std::abs(sg.labels[i + 1] - sg.labels[i] - dz) <= 1e-9 * dz,
                "random walk needs a uniform state grid");
    const double dt = tg.dt();
    const double q = volatility * volatility * dt / (dz * dz);
    require(q <= 1.0, "random walk violates sigma^2 dt / dz^2 <= 1");
    const double jump = q / 2.0;

    Mat P = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        if (boundary == Boundary::Absorb && (i == 0 || i == m - 1)) {
            P(i, i) = 1.0;
            continue;
        }
        double up = jump, down = jump;
        if (i == 0) {
            // reflecting end: the down move folds into the up move
            up += down;
            down = 0.0;
        } else if (i == m - 1) {
            down += up;
            up = 0.0;
        }
        if (i > 0) P(i, i - 1) = down;
        if (i < m - 1) P(i, i + 1) = up;
        P(i, i) = 1.0 - up - down;
    }
    return MarkovModel(tg, sg, std::move(P));
}

} // namespace fuelopt
