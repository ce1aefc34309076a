#pragma once

#include "fuelopt/markov.hpp"

#include <utility>
#include <vector>

namespace fuelopt {

/// Point mass f_i(z) placed at grid node t_i.
struct Atom {
    int step = 0;
    Vec values;
};

/// Nonnegative additive functional A(dt) = a(t, Z_t) dt + sum_i f_i(Z_{t_i}) delta_{t_i}.
/// The density is sampled at grid nodes; row j weights the interval [t_j, t_{j+1}).
struct AdditiveFunctional {
    Mat density;             // (n_steps+1) x m, row n_steps unused by quadrature
    std::vector<Atom> atoms; // strictly increasing steps, merged per node

    static AdditiveFunctional zero(int n_steps, int m);
    static AdditiveFunctional constant_density(double level, int n_steps, int m);

    bool empty() const;
    bool has_atom_at(int step) const;
    const Vec* atom_at(int step) const;
    void add_atom(int step, Vec values);
    void validate(int n_steps, int m) const;
};

enum class TerminalKind { PenaltyK, PenaltyRho, Singular };

struct TerminalCondition {
    TerminalKind kind = TerminalKind::PenaltyK;
    double k = 0.0; // PenaltyK weight
    Vec rho;        // PenaltyRho weight per state

    static TerminalCondition penalty_k(double k);
    static TerminalCondition penalty_rho(Vec rho);
    static TerminalCondition singular();

    /// Smallest c with rho <= c * eta on the grid (PenaltyRho only).
    double rho_eta_ratio(const Vec& eta) const;
};

/// Deterministic nonnegative measure on the time grid: density per step plus atoms.
/// Used for the alpha measure of the conditional-expectation identity and as the
/// nu input of the total-mass Monte Carlo.
struct DiscreteMeasure {
    Vec density;                             // n_steps+1 entries, row n unused
    std::vector<std::pair<int, double>> atoms; // (step, mass)

    double tail_mass(int j, double dt) const; // measure of [t_j, T]
};

/// Full problem description: chain, cost exponent, impact weight, functional,
/// terminal condition and initial data.
struct ProblemSpec {
    MarkovModel model;
    double p = 2.0;       // cost exponent, >= 2
    double beta = 1.0;    // 1/(p-1), derived from p
    double gamma = 1.0;   // branching constant; 1/beta reproduces the control normalization
    Vec eta;              // impact weight per state, > eta_min
    AdditiveFunctional functional;
    TerminalCondition terminal;
    double x0 = 1.0;
    int z0 = 0;

    ProblemSpec(MarkovModel model_, double p_, Vec eta_, AdditiveFunctional functional_,
                TerminalCondition terminal_, double x0_, int z0_,
                double gamma_ = -1.0); // gamma < 0 means default 1/beta

    int n_steps() const { return model.n_steps(); }
    int n_states() const { return model.n_states(); }
    double dt() const { return model.time_grid().dt(); }
    double horizon() const { return model.time_grid().horizon; }

    /// True when the strategy-layer normalization gamma = 1/beta holds.
    bool control_normalized() const;
};

constexpr double kEtaMin = 1e-8;

/// Grid version of E_{t_j, z}[ A[t_j, T] ].
double expected_A_tail(const ProblemSpec& spec, int j, int z);

/// All nodes at once: row j, column z holds E_{t_j, z}[ A[t_j, T] ].
Mat expected_A_tail_field(const ProblemSpec& spec);

} // namespace fuelopt
