#pragma once

#include "fuelopt/loglaplace.hpp"

#include <functional>

namespace fuelopt {

/// The space-time harmonic field h(r,z) = E_{r,z}[ eta(Z_T) ] together with the
/// grid extrema that control the inhomogeneous-branching estimates.
struct HField {
    Mat h;       // (n_steps+1) x m, row n equals eta
    double c_T;  // smallest c with (1/c) eta <= E_{r,z}[eta(Z_t)] <= c eta over all r <= t
    Vec c_rT;    // per node j: sup over t in [t_j, T], z of h(t,z)/eta(z)
    Vec cbar_rT; // per node j: inf over the same range
    Vec C_rT;    // cbar_rT / c_rT
};

HField compute_h(const MarkovModel& model, const Vec& eta);

/// V_t y = y / (1 + gamma beta t y^beta)^(1/beta).
double nonlinear_semigroup(double y, double t, double gamma, double beta);

/// Upper bound for the k-penalized field, homogeneous branching:
/// EA_tail + k/(1 + gamma beta remaining k^beta)^(1/beta).
double upper_bound_k(double ea_tail, double k, double gamma, double beta, double remaining);

/// k -> infinity limit: EA_tail + (gamma beta remaining)^(-1/beta).
double upper_bound_singular(double ea_tail, double gamma, double beta, double remaining);

/// Inhomogeneous (h-transform) version, in the control normalization gamma = 1/beta.
/// Finite k bounds the field with terminal weight k*eta; k = infinity gives
/// EA_tail + c_T h / remaining^(1/beta).
double upper_bound_eta(double ea_tail, double h_rz, double k, double c_T, double beta,
                       double remaining);

/// -log P_{r,delta_z}[X_T = 0] >= h(r,z) / (c_rT remaining^(1/beta)),
/// control normalization.
double lower_bound_extinction(double h_rz, double c_rT, double beta, double remaining);

/// Node-wise bound a(t_j) + k/(1 + gamma beta (T-t_j) k^beta)^(1/beta) for
/// solutions of v(r) = k + a(r) - gamma int_r^T v^{1+beta}.
Vec gronwall_bound(const std::function<double(double)>& a_fn, double k, double gamma,
                   double beta, const TimeGrid& tg);

/// The deterministic measure alpha_{r,z} with
/// int f(s) alpha_{r,z}(ds) = E_{r,z}[ int f(s) A(ds) ], anchored at (t_j, z).
/// Requires homogeneous branching weight (constant eta).
DiscreteMeasure alpha_measure(const ProblemSpec& spec, int j_anchor, int z_anchor);

} // namespace fuelopt
