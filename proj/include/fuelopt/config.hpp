#pragma once

#include "fuelopt/functional.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fuelopt {

/// Either a single level applied to every state or an explicit per-state list.
struct ValueSpec {
    bool is_constant = true;
    double constant = 0.0;
    std::vector<double> values;

    static ValueSpec of(double c) { return ValueSpec{true, c, {}}; }
    static ValueSpec list(std::vector<double> v) { return ValueSpec{false, 0.0, std::move(v)}; }
    Vec materialize(int m) const;
    bool operator==(const ValueSpec&) const = default;
};

struct AtomSpec {
    double time = 0.0;
    ValueSpec values;
    bool operator==(const AtomSpec&) const = default;
};

/// Parsed form of the line-oriented config file. Sections: model, problem,
/// functional, terminal, run. Unknown keys are rejected at parse time.
struct Config {
    // [model]
    std::string model_kind = "one_state"; // one_state | two_state | random_walk
    double rate_up = 0.0, rate_down = 0.0;
    double volatility = 0.0, z_min = 0.0, z_max = 1.0;
    int m = 1;
    std::string boundary = "reflect";

    // [problem]
    double p = 2.0;
    std::optional<double> gamma; // default 1/beta when absent
    double T = 1.0;
    int n_steps = 100;
    double x0 = 1.0;
    int z0 = 0;
    ValueSpec eta = ValueSpec::of(1.0);

    // [functional]
    ValueSpec density = ValueSpec::of(0.0);
    std::vector<AtomSpec> atoms;

    // [terminal]
    std::string terminal_kind = "penalty_k"; // penalty_k | penalty_rho | singular
    double k = 0.0;
    bool rho_is_c_eta = true;
    double rho_c = 0.0;
    ValueSpec rho_values = ValueSpec::of(0.0);
    std::vector<double> k_schedule; // empty -> default

    // [run]
    std::uint64_t seed = 1;
    int n_paths = 1000;
    double dt_mc = 1e-3;
    std::string out_dir = "out";
    int threads = 1;

    bool operator==(const Config&) const = default;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path);
std::string serialize_config(const Config& cfg);

MarkovModel build_model(const Config& cfg);
ProblemSpec build_problem(const Config& cfg);

} // namespace fuelopt
