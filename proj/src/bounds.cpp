#include "fuelopt/bounds.hpp"

#include <cmath>

namespace fuelopt {

HField compute_h(const MarkovModel& model, const Vec& eta) {
    const int n = model.n_steps();
    const int m = model.n_states();
    require(eta.size() == m && eta.allFinite() && eta.minCoeff() > 0.0,
            "compute_h needs a strictly positive eta");

    HField out;
    out.h = Mat(n + 1, m);
    out.h.row(n) = eta.transpose();
    Vec g = eta;
    for (int j = n - 1; j >= 0; --j) {
        g = model.kernel(j) * g;
        out.h.row(j) = g.transpose();
    }

    // Per-node extrema of h/eta, accumulated over the window [t_j, T].
    out.c_rT = Vec(n + 1);
    out.cbar_rT = Vec(n + 1);
    out.C_rT = Vec(n + 1);
    double running_max = 0.0, running_min = std::numeric_limits<double>::infinity();
    for (int j = n; j >= 0; --j) {
        for (int z = 0; z < m; ++z) {
            const double ratio = out.h(j, z) / eta(z);
            running_max = std::max(running_max, ratio);
            running_min = std::min(running_min, ratio);
        }
        out.c_rT(j) = running_max;
        out.cbar_rT(j) = running_min;
        out.C_rT(j) = running_min / running_max;
    }

    // c_T covers E_{r,z}[eta(Z_t)] for every pair r <= t, both directions of
    // the ratio. Time-homogeneous kernels need only the powers P^d eta.
    double c = 1.0;
    auto absorb = [&](const Vec& v) {
        for (int z = 0; z < m; ++z) {
            const double ratio = v(z) / eta(z);
            c = std::max(c, std::max(ratio, 1.0 / ratio));
        }
    };
    if (model.time_homogeneous()) {
        Vec v = eta;
        absorb(v);
        for (int d = 1; d <= n; ++d) {
            v = model.kernel(0) * v;
            absorb(v);
        }
    } else {
        for (int l = 1; l <= n; ++l) {
            Vec v = eta;
            for (int j = l - 1; j >= 0; --j) {
                v = model.kernel(j) * v;
                absorb(v);
            }
        }
    }
    out.c_T = c;
    return out;
}

double nonlinear_semigroup(double y, double t, double gamma, double beta) {
    require(y >= 0.0 && t >= 0.0, "nonlinear_semigroup needs y, t >= 0");
    return sink_flow(y, t, gamma, beta, 1.0);
}

double upper_bound_k(double ea_tail, double k, double gamma, double beta, double remaining) {
    require(ea_tail >= 0.0 && k >= 0.0 && remaining >= 0.0,
            "upper_bound_k needs nonnegative arguments");
    return ea_tail + sink_flow(k, remaining, gamma, beta, 1.0);
}

double upper_bound_singular(double ea_tail, double gamma, double beta, double remaining) {
    require(remaining > 0.0, "upper_bound_singular needs remaining > 0");
    require(ea_tail >= 0.0, "upper_bound_singular needs a nonnegative tail");
    return ea_tail + std::pow(gamma * beta * remaining, -1.0 / beta);
}

double upper_bound_eta(double ea_tail, double h_rz, double k, double c_T, double beta,
                       double remaining) {
    require(ea_tail >= 0.0 && h_rz > 0.0 && k >= 0.0 && c_T >= 1.0,
            "upper_bound_eta needs nonnegative arguments and c_T >= 1");
    if (std::isinf(k)) require(remaining > 0.0, "upper_bound_eta needs remaining > 0 at k = inf");
    // k/(1 + c_T^-beta remaining k^beta)^(1/beta) via the sink flow with
    // gamma' beta = c_T^-beta; the k = inf branch collapses to c_T/remaining^(1/beta).
    const double gamma_eff = std::pow(c_T, -beta) / beta;
    return ea_tail + h_rz * sink_flow(k, remaining, gamma_eff, beta, 1.0);
}

double lower_bound_extinction(double h_rz, double c_rT, double beta, double remaining) {
    require(remaining > 0.0, "lower_bound_extinction needs remaining > 0");
    require(h_rz > 0.0 && c_rT >= 1.0, "lower_bound_extinction needs h > 0 and c_rT >= 1");
    return h_rz / (c_rT * std::pow(remaining, 1.0 / beta));
}

Vec gronwall_bound(const std::function<double(double)>& a_fn, double k, double gamma,
                   double beta, const TimeGrid& tg) {
    require(k >= 0.0, "gronwall_bound needs k >= 0");
    Vec bound(tg.n_nodes());
    for (int j = 0; j < tg.n_nodes(); ++j) {
        const double a = a_fn(tg.node(j));
        require(a >= 0.0, "gronwall_bound needs a(t) >= 0");
        bound(j) = a + sink_flow(k, tg.remaining(j), gamma, beta, 1.0);
    }
    return bound;
}

DiscreteMeasure alpha_measure(const ProblemSpec& spec, int j_anchor, int z_anchor) {
    const int n = spec.n_steps();
    const int m = spec.n_states();
    require(j_anchor >= 0 && j_anchor <= n, "alpha_measure anchor step out of range");
    require(z_anchor >= 0 && z_anchor < m, "alpha_measure anchor state out of range");
    require(spec.eta.maxCoeff() - spec.eta.minCoeff() <= 1e-12 * spec.eta.maxCoeff(),
            "alpha_measure is defined for homogeneous branching (constant eta)");

    DiscreteMeasure alpha;
    alpha.density = Vec::Zero(n + 1);
    Eigen::RowVectorXd occupancy = Eigen::RowVectorXd::Zero(m);
    occupancy(z_anchor) = 1.0;
    for (int l = j_anchor; l <= n; ++l) {
        if (l < n) alpha.density(l) = occupancy * spec.functional.density.row(l).transpose();
        if (const Vec* f = spec.functional.atom_at(l)) {
            const double mass = occupancy * (*f);
            if (mass > 0.0) alpha.atoms.emplace_back(l, mass);
        }
        if (l < n) occupancy = occupancy * spec.model.kernel(l);
    }
    return alpha;
}

} // namespace fuelopt
