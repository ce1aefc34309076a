#include "fuelopt/mc.hpp"

#include <cmath>
#include <iostream>
#include <thread>

namespace fuelopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Runs fn(i) for i in [0, count), partitioned into contiguous blocks per
/// thread. Work items must be independent; results keyed by i stay
/// deterministic for any thread count.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count < 2 * threads) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

double pairwise_sum_range(const double* data, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += data[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum_range(data, half) + pairwise_sum_range(data + half, count - half);
}

void sample_path(const MarkovModel& model, PathRng& rng, int z0, std::vector<int>& out) {
    const int n = model.n_steps();
    out.resize(n + 1);
    int z = z0;
    out[0] = z;
    const int m = model.n_states();
    for (int j = 0; j < n; ++j) {
        const double u = rng.uniform();
        const Mat& P = model.kernel(j);
        double acc = 0.0;
        int next = m - 1;
        for (int c = 0; c < m; ++c) {
            acc += P(z, c);
            if (u < acc) {
                next = c;
                break;
            }
        }
        z = next;
        out[j + 1] = z;
    }
}

} // namespace

PathRng::PathRng(std::uint64_t master_seed, std::uint64_t path_index)
    : eng_(splitmix64(master_seed ^ splitmix64(path_index ^ 0xa5a5a5a5a5a5a5a5ULL))) {}

double PathRng::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double PathRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double pairwise_sum(const std::vector<double>& values) {
    return values.empty() ? 0.0 : pairwise_sum_range(values.data(), values.size());
}

McEstimate summarize(const std::vector<double>& values) {
    const int n = static_cast<int>(values.size());
    require(n >= 2, "an estimate needs at least two samples");
    McEstimate est;
    est.n = n;
    est.mean = pairwise_sum(values) / n;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - est.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / (n - 1);
    est.se = std::sqrt(var / n);
    return est;
}

std::vector<std::vector<int>> simulate_paths(const MarkovModel& model, const SeededRun& run,
                                             int z0) {
    require(z0 >= 0 && z0 < model.n_states(), "z0 out of range");
    require(run.n_paths >= 1, "n_paths must be positive");
    std::vector<std::vector<int>> paths(run.n_paths);
    parallel_for(run.n_paths, run.threads, [&](int i) {
        PathRng rng(run.master_seed, static_cast<std::uint64_t>(i));
        sample_path(model, rng, z0, paths[i]);
    });
    return paths;
}

McEstimate estimate_strategy_cost(const ProblemSpec& spec, const ValueField& field,
                                  const SeededRun& run) {
    require(run.n_paths >= 2, "estimate needs n_paths >= 2");
    std::vector<double> costs(run.n_paths);
    parallel_for(run.n_paths, run.threads, [&](int i) {
        PathRng rng(run.master_seed, static_cast<std::uint64_t>(i));
        std::vector<int> path;
        sample_path(spec.model, rng, spec.z0, path);
        costs[i] = cost(feedback_strategy(field, spec, path), spec).total();
    });
    return summarize(costs);
}

std::vector<ComparisonRow> compare_strategies(
    const ProblemSpec& spec, const std::vector<std::pair<std::string, PathStrategy>>& rules,
    const SeededRun& run) {
    require(!rules.empty(), "compare_strategies needs at least one strategy");
    require(run.n_paths >= 2, "estimate needs n_paths >= 2");
    const int R = static_cast<int>(rules.size());
    std::vector<std::vector<double>> costs(R, std::vector<double>(run.n_paths));
    parallel_for(run.n_paths, run.threads, [&](int i) {
        PathRng rng(run.master_seed, static_cast<std::uint64_t>(i));
        std::vector<int> path;
        sample_path(spec.model, rng, spec.z0, path);
        for (int r = 0; r < R; ++r) costs[r][i] = cost(rules[r].second(path), spec).total();
    });
    std::vector<ComparisonRow> rows(R);
    for (int r = 0; r < R; ++r) {
        rows[r].name = rules[r].first;
        rows[r].cost = summarize(costs[r]);
        std::vector<double> diff(run.n_paths);
        for (int i = 0; i < run.n_paths; ++i) diff[i] = costs[r][i] - costs[0][i];
        rows[r].diff_vs_first = summarize(diff);
    }
    return rows;
}

std::vector<double> simulate_feller_mass(double gamma, double m0, const TimeGrid& grid,
                                         const SeededRun& run) {
    require(gamma >= 0.0 && m0 >= 0.0, "feller simulation needs gamma, m0 >= 0");
    require(run.n_paths >= 1, "n_paths must be positive");
    const double dt = grid.dt();
    if (m0 > 0.0 && gamma * dt > 0.01 * m0)
        std::cerr << "warning: feller step too coarse (gamma*dt > 0.01*m0)\n";
    std::vector<double> terminal(run.n_paths);
    parallel_for(run.n_paths, run.threads, [&](int i) {
        PathRng rng(run.master_seed, static_cast<std::uint64_t>(i));
        double mass = m0;
        for (int j = 0; j < grid.n_steps; ++j) {
            if (mass <= 0.0) {
                mass = 0.0;
                break; // absorbed
            }
            mass += std::sqrt(2.0 * gamma * mass * dt) * rng.normal();
            if (mass < 0.0) mass = 0.0;
        }
        terminal[i] = mass;
    });
    return terminal;
}

McEstimate estimate_extinction(double gamma, double m0, const TimeGrid& grid,
                               const SeededRun& run) {
    const std::vector<double> terminal = simulate_feller_mass(gamma, m0, grid, run);
    std::vector<double> dead(terminal.size());
    for (std::size_t i = 0; i < terminal.size(); ++i) dead[i] = terminal[i] == 0.0 ? 1.0 : 0.0;
    return summarize(dead);
}

McEstimate estimate_j_functional_laplace(double gamma, double m0, const DiscreteMeasure& nu,
                                         const TimeGrid& grid, const SeededRun& run) {
    require(gamma >= 0.0 && m0 >= 0.0, "feller simulation needs gamma, m0 >= 0");
    require(run.n_paths >= 2, "estimate needs n_paths >= 2");
    require(nu.density.size() >= grid.n_nodes(), "nu density must cover the grid");
    for (const auto& [step, mass] : nu.atoms) {
        require(step >= 0 && step <= grid.n_steps, "nu atom off the grid");
        require(mass >= 0.0, "nu atom mass must be nonnegative");
    }
    const double dt = grid.dt();
    std::vector<double> values(run.n_paths);
    parallel_for(run.n_paths, run.threads, [&](int i) {
        PathRng rng(run.master_seed, static_cast<std::uint64_t>(i));
        double mass = m0;
        double j_acc = 0.0;
        for (int j = 0; j <= grid.n_steps; ++j) {
            for (const auto& [step, w] : nu.atoms)
                if (step == j) j_acc += w * mass;
            if (j == grid.n_steps) break;
            j_acc += mass * nu.density(j) * dt;
            if (mass > 0.0) {
                mass += std::sqrt(2.0 * gamma * mass * dt) * rng.normal();
                if (mass < 0.0) mass = 0.0;
            }
        }
        values[i] = std::exp(-j_acc);
    });
    return summarize(values);
}

} // namespace fuelopt
