#include "fuelopt/functional.hpp"

#include <algorithm>
#include <cmath>

namespace fuelopt {

AdditiveFunctional AdditiveFunctional::zero(int n_steps, int m) {
    AdditiveFunctional a;
    a.density = Mat::Zero(n_steps + 1, m);
    return a;
}

AdditiveFunctional AdditiveFunctional::constant_density(double level, int n_steps, int m) {
    require(level >= 0.0, "density must be nonnegative");
    AdditiveFunctional a;
    a.density = Mat::Constant(n_steps + 1, m, level);
    return a;
}

bool AdditiveFunctional::empty() const {
    return atoms.empty() && (density.size() == 0 || density.maxCoeff() == 0.0);
}

bool AdditiveFunctional::has_atom_at(int step) const { return atom_at(step) != nullptr; }

const Vec* AdditiveFunctional::atom_at(int step) const {
    for (const Atom& a : atoms)
        if (a.step == step) return &a.values;
    return nullptr;
}

void AdditiveFunctional::add_atom(int step, Vec values) {
    for (Atom& a : atoms) {
        if (a.step == step) {
            a.values += values;
            return;
        }
    }
    atoms.push_back(Atom{step, std::move(values)});
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.step < b.step; });
}

void AdditiveFunctional::validate(int n_steps, int m) const {
    require(density.rows() == n_steps + 1 && density.cols() == m,
            "density grid must be (n_steps+1) x m");
    require(density.allFinite() && density.minCoeff() >= 0.0,
            "density must be finite and nonnegative");
    int prev = -1;
    for (const Atom& a : atoms) {
        require(a.step >= 0 && a.step <= n_steps, "atom time must lie on a grid node");
        require(a.step > prev, "atoms must be merged and sorted by node");
        prev = a.step;
        require(a.values.size() == m, "atom values must match state grid");
        require(a.values.allFinite() && a.values.minCoeff() >= 0.0,
                "atom values must be finite and nonnegative");
    }
}

TerminalCondition TerminalCondition::penalty_k(double k) {
    require(k >= 0.0 && std::isfinite(k), "terminal penalty k must be finite and >= 0");
    TerminalCondition t;
    t.kind = TerminalKind::PenaltyK;
    t.k = k;
    return t;
}

TerminalCondition TerminalCondition::penalty_rho(Vec rho) {
    require(rho.size() > 0 && rho.allFinite() && rho.minCoeff() >= 0.0,
            "terminal penalty rho must be finite and >= 0");
    TerminalCondition t;
    t.kind = TerminalKind::PenaltyRho;
    t.rho = std::move(rho);
    return t;
}

TerminalCondition TerminalCondition::singular() {
    TerminalCondition t;
    t.kind = TerminalKind::Singular;
    return t;
}

double TerminalCondition::rho_eta_ratio(const Vec& eta) const {
    require(kind == TerminalKind::PenaltyRho, "rho_eta_ratio needs a penalty_rho condition");
    require(eta.size() == rho.size(), "eta size mismatch");
    return (rho.array() / eta.array()).maxCoeff();
}

double DiscreteMeasure::tail_mass(int j, double dt) const {
    double total = 0.0;
    for (int l = j; l + 1 < density.size(); ++l) total += density(l) * dt;
    for (const auto& [step, mass] : atoms)
        if (step >= j) total += mass;
    return total;
}

ProblemSpec::ProblemSpec(MarkovModel model_, double p_, Vec eta_,
                         AdditiveFunctional functional_, TerminalCondition terminal_,
                         double x0_, int z0_, double gamma_)
    : model(std::move(model_)),
      p(p_),
      eta(std::move(eta_)),
      functional(std::move(functional_)),
      terminal(std::move(terminal_)),
      x0(x0_),
      z0(z0_) {
    require(p >= 2.0 && std::isfinite(p), "exponent p must lie in [2, inf)");
    beta = 1.0 / (p - 1.0);
    gamma = gamma_ < 0.0 ? 1.0 / beta : gamma_;
    require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
    const int m = model.n_states();
    require(eta.size() == m, "eta must have one value per state");
    require(eta.allFinite() && eta.minCoeff() >= kEtaMin,
            "eta must be >= 1e-8 everywhere (condition (2.13) surrogate)");
    functional.validate(model.n_steps(), m);
    require(std::isfinite(x0), "x0 must be finite");
    require(z0 >= 0 && z0 < m, "z0 out of range");
    if (terminal.kind == TerminalKind::PenaltyRho) {
        require(terminal.rho.size() == m, "rho must have one value per state");
        require(!functional.has_atom_at(model.n_steps()),
                "relaxed penalty requires no atom at T (A{T} = 0)");
        terminal.rho_eta_ratio(eta); // finiteness check of c_rho
    }
    if (terminal.kind == TerminalKind::Singular)
        require(!functional.has_atom_at(model.n_steps()),
                "an atom at T is annihilated by extinction; remove it from the singular spec");
}

bool ProblemSpec::control_normalized() const {
    return std::abs(gamma * beta - 1.0) <= 1e-12;
}

double expected_A_tail(const ProblemSpec& spec, int j, int z) {
    require(j >= 0 && j <= spec.n_steps(), "step index out of range");
    require(z >= 0 && z < spec.n_states(), "state index out of range");
    const int n = spec.n_steps();
    const double dt = spec.dt();
    Vec tail = Vec::Zero(spec.n_states());
    if (const Vec* f = spec.functional.atom_at(n)) tail = *f;
    for (int l = n - 1; l >= j; --l) {
        tail = spec.model.kernel(l) * tail;
        tail += dt * spec.functional.density.row(l).transpose();
        if (const Vec* f = spec.functional.atom_at(l)) tail += *f;
    }
    return tail(z);
}

Mat expected_A_tail_field(const ProblemSpec& spec) {
    const int n = spec.n_steps();
    const int m = spec.n_states();
    const double dt = spec.dt();
    Mat field(n + 1, m);
    Vec tail = Vec::Zero(m);
    if (const Vec* f = spec.functional.atom_at(n)) tail = *f;
    field.row(n) = tail.transpose();
    for (int l = n - 1; l >= 0; --l) {
        tail = spec.model.kernel(l) * tail;
        tail += dt * spec.functional.density.row(l).transpose();
        if (const Vec* f = spec.functional.atom_at(l)) tail += *f;
        field.row(l) = tail.transpose();
    }
    return field;
}

} // namespace fuelopt
