#pragma once

#include "fuelopt/strategy.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace fuelopt {

/// Seed and size of a Monte Carlo run. Per-path streams are derived from
/// (master_seed, path_index), so results are bit-identical for any thread count.
struct SeededRun {
    std::uint64_t master_seed = 1;
    int n_paths = 1000;
    int threads = 1;
};

struct McEstimate {
    double mean = 0.0;
    double se = 0.0; // sample standard error, sample-std/sqrt(n)
    int n = 0;
};

/// Deterministic per-path random stream: mt19937_64 seeded by a splitmix64
/// hash of (master_seed, path_index), with explicit uniform and Box-Muller
/// normal draws so sequences do not depend on library internals.
class PathRng {
public:
    PathRng(std::uint64_t master_seed, std::uint64_t path_index);
    double uniform();  // [0, 1)
    double normal();   // standard normal
private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Fixed-order pairwise summation; independent of how the values were produced.
double pairwise_sum(const std::vector<double>& values);

McEstimate summarize(const std::vector<double>& values);

/// Chain paths from the kernel, one row of state indices per path.
std::vector<std::vector<int>> simulate_paths(const MarkovModel& model, const SeededRun& run,
                                             int z0);

/// Mean pathwise cost of the feedback strategy built from `field`.
McEstimate estimate_strategy_cost(const ProblemSpec& spec, const ValueField& field,
                                  const SeededRun& run);

using PathStrategy = std::function<Trajectory(const std::vector<int>&)>;

struct ComparisonRow {
    std::string name;
    McEstimate cost;
    McEstimate diff_vs_first; // paired difference against the first strategy
};

/// Paired comparison on common random paths. The first entry is the baseline.
std::vector<ComparisonRow> compare_strategies(
    const ProblemSpec& spec, const std::vector<std::pair<std::string, PathStrategy>>& rules,
    const SeededRun& run);

/// Terminal masses of dM = sqrt(2 gamma M) dW by full-truncation Euler on the
/// given grid; negative proposals are clamped to zero and zero is absorbing.
std::vector<double> simulate_feller_mass(double gamma, double m0, const TimeGrid& grid,
                                         const SeededRun& run);

/// Fraction of paths absorbed at zero by T; oracle exp(-m0/(gamma T)).
McEstimate estimate_extinction(double gamma, double m0, const TimeGrid& grid,
                               const SeededRun& run);

/// E[ exp(-int <1,X_t> nu(dt)) ] for a deterministic measure nu on the grid,
/// beta = 1 total-mass simulation.
McEstimate estimate_j_functional_laplace(double gamma, double m0, const DiscreteMeasure& nu,
                                         const TimeGrid& grid, const SeededRun& run);

} // namespace fuelopt
