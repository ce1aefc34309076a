#include "fuelopt/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fuelopt {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& text, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": bad number '" + text + "'");
    }
}

long long parse_int(const std::string& text, int line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": bad integer '" + text + "'");
    }
}

std::vector<double> parse_list(const std::string& text, int line) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), line));
    if (out.empty()) throw ConfigError("line " + std::to_string(line) + ": empty list");
    return out;
}

ValueSpec parse_value_spec(const std::string& text, int line) {
    if (text.rfind("list:", 0) == 0) return ValueSpec::list(parse_list(text.substr(5), line));
    return ValueSpec::of(parse_number(text, line));
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_value_spec(const ValueSpec& v) {
    if (v.is_constant) return format_number(v.constant);
    std::string out = "list: ";
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        if (i) out += ",";
        out += format_number(v.values[i]);
    }
    return out;
}

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"model", {"kind", "rate_up", "rate_down", "volatility", "z_min", "z_max", "m", "boundary"}},
    {"problem", {"p", "gamma", "T", "n_steps", "x0", "z0", "eta"}},
    {"functional", {"density", "atom"}},
    {"terminal", {"kind", "k", "rho", "k_schedule"}},
    {"run", {"seed", "n_paths", "dt_mc", "out_dir", "threads"}},
};

} // namespace

Vec ValueSpec::materialize(int m) const {
    if (is_constant) return Vec::Constant(m, constant);
    if (static_cast<int>(values.size()) != m)
        throw ConfigError("list length " + std::to_string(values.size()) +
                          " does not match the state count " + std::to_string(m));
    return Eigen::Map<const Vec>(values.data(), m);
}

Config parse_config(const std::string& text) {
    Config cfg;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("line " + std::to_string(line) + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!kKnownKeys.count(section))
                throw ConfigError("line " + std::to_string(line) + ": unknown section '" +
                                  section + "'");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (section.empty())
            throw ConfigError("line " + std::to_string(line) + ": key outside any section");
        if (!kKnownKeys.at(section).count(key))
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key +
                              "' in [" + section + "]");

        if (section == "model") {
            if (key == "kind") cfg.model_kind = value;
            else if (key == "rate_up") cfg.rate_up = parse_number(value, line);
            else if (key == "rate_down") cfg.rate_down = parse_number(value, line);
            else if (key == "volatility") cfg.volatility = parse_number(value, line);
            else if (key == "z_min") cfg.z_min = parse_number(value, line);
            else if (key == "z_max") cfg.z_max = parse_number(value, line);
            else if (key == "m") cfg.m = static_cast<int>(parse_int(value, line));
            else if (key == "boundary") cfg.boundary = value;
        } else if (section == "problem") {
            if (key == "p") cfg.p = parse_number(value, line);
            else if (key == "gamma") cfg.gamma = parse_number(value, line);
            else if (key == "T") cfg.T = parse_number(value, line);
            else if (key == "n_steps") cfg.n_steps = static_cast<int>(parse_int(value, line));
            else if (key == "x0") cfg.x0 = parse_number(value, line);
            else if (key == "z0") cfg.z0 = static_cast<int>(parse_int(value, line));
            else if (key == "eta") cfg.eta = parse_value_spec(value, line);
        } else if (section == "functional") {
            if (key == "density") cfg.density = parse_value_spec(value, line);
            else if (key == "atom") {
                const auto colon = value.find(':');
                if (colon == std::string::npos)
                    throw ConfigError("line " + std::to_string(line) +
                                      ": atom needs 'time : values'");
                AtomSpec atom;
                atom.time = parse_number(trim(value.substr(0, colon)), line);
                atom.values = parse_value_spec(trim(value.substr(colon + 1)), line);
                cfg.atoms.push_back(std::move(atom));
            }
        } else if (section == "terminal") {
            if (key == "kind") cfg.terminal_kind = value;
            else if (key == "k") cfg.k = parse_number(value, line);
            else if (key == "rho") {
                if (value.rfind("c_eta:", 0) == 0) {
                    cfg.rho_is_c_eta = true;
                    cfg.rho_c = parse_number(trim(value.substr(6)), line);
                } else {
                    cfg.rho_is_c_eta = false;
                    cfg.rho_values = parse_value_spec(value, line);
                }
            } else if (key == "k_schedule")
                cfg.k_schedule = parse_list(value, line);
        } else if (section == "run") {
            if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, line));
            else if (key == "n_paths") cfg.n_paths = static_cast<int>(parse_int(value, line));
            else if (key == "dt_mc") cfg.dt_mc = parse_number(value, line);
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "threads") cfg.threads = static_cast<int>(parse_int(value, line));
        }
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const Config& cfg) {
    std::ostringstream out;
    out << "[model]\n";
    out << "kind = " << cfg.model_kind << "\n";
    out << "rate_up = " << format_number(cfg.rate_up) << "\n";
    out << "rate_down = " << format_number(cfg.rate_down) << "\n";
    out << "volatility = " << format_number(cfg.volatility) << "\n";
    out << "z_min = " << format_number(cfg.z_min) << "\n";
    out << "z_max = " << format_number(cfg.z_max) << "\n";
    out << "m = " << cfg.m << "\n";
    out << "boundary = " << cfg.boundary << "\n";
    out << "\n[problem]\n";
    out << "p = " << format_number(cfg.p) << "\n";
    if (cfg.gamma) out << "gamma = " << format_number(*cfg.gamma) << "\n";
    out << "T = " << format_number(cfg.T) << "\n";
    out << "n_steps = " << cfg.n_steps << "\n";
    out << "x0 = " << format_number(cfg.x0) << "\n";
    out << "z0 = " << cfg.z0 << "\n";
    out << "eta = " << format_value_spec(cfg.eta) << "\n";
    out << "\n[functional]\n";
    out << "density = " << format_value_spec(cfg.density) << "\n";
    for (const AtomSpec& a : cfg.atoms)
        out << "atom = " << format_number(a.time) << " : " << format_value_spec(a.values)
            << "\n";
    out << "\n[terminal]\n";
    out << "kind = " << cfg.terminal_kind << "\n";
    out << "k = " << format_number(cfg.k) << "\n";
    if (cfg.rho_is_c_eta)
        out << "rho = c_eta: " << format_number(cfg.rho_c) << "\n";
    else
        out << "rho = " << format_value_spec(cfg.rho_values) << "\n";
    if (!cfg.k_schedule.empty()) {
        out << "k_schedule = ";
        for (std::size_t i = 0; i < cfg.k_schedule.size(); ++i) {
            if (i) out << ",";
            out << format_number(cfg.k_schedule[i]);
        }
        out << "\n";
    }
    out << "\n[run]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "n_paths = " << cfg.n_paths << "\n";
    out << "dt_mc = " << format_number(cfg.dt_mc) << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "threads = " << cfg.threads << "\n";
    return out.str();
}

MarkovModel build_model(const Config& cfg) {
    TimeGrid tg(0.0, cfg.T, cfg.n_steps);
    try {
        if (cfg.model_kind == "one_state") return build_one_state(tg);
        if (cfg.model_kind == "two_state")
            return build_two_state(cfg.rate_up, cfg.rate_down, tg);
        if (cfg.model_kind == "random_walk") {
            Boundary b;
            if (cfg.boundary == "reflect") b = Boundary::Reflect;
            else if (cfg.boundary == "absorb") b = Boundary::Absorb;
            else throw ConfigError("unknown boundary '" + cfg.boundary + "'");
            return build_random_walk(cfg.volatility, StateGrid::uniform(cfg.z_min, cfg.z_max, cfg.m),
                                     tg, b);
        }
    } catch (const InvalidSpec& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
    throw ConfigError("unknown model kind '" + cfg.model_kind + "'");
}

ProblemSpec build_problem(const Config& cfg) {
    MarkovModel model = build_model(cfg);
    const int m = model.n_states();
    const int n = model.n_steps();
    try {
        Vec eta = cfg.eta.materialize(m);
        AdditiveFunctional A;
        Vec a_states = cfg.density.materialize(m);
        require(a_states.minCoeff() >= 0.0, "density must be nonnegative");
        A.density = a_states.transpose().replicate(n + 1, 1);
        const double dt = model.time_grid().dt();
        for (const AtomSpec& atom : cfg.atoms) {
            const double pos = atom.time / dt;
            const int step = static_cast<int>(std::lround(pos));
            require(step >= 0 && step <= n && std::abs(pos - step) <= 1e-9 * std::max(1.0, pos),
                    "atom time must lie on a grid node");
            A.add_atom(step, atom.values.materialize(m));
        }

        TerminalCondition terminal = TerminalCondition::singular();
        if (cfg.terminal_kind == "penalty_k") terminal = TerminalCondition::penalty_k(cfg.k);
        else if (cfg.terminal_kind == "penalty_rho")
            terminal = TerminalCondition::penalty_rho(
                cfg.rho_is_c_eta ? Vec(cfg.rho_c * eta) : cfg.rho_values.materialize(m));
        else if (cfg.terminal_kind != "singular")
            throw ConfigError("unknown terminal kind '" + cfg.terminal_kind + "'");

        return ProblemSpec(std::move(model), cfg.p, std::move(eta), std::move(A),
                           std::move(terminal), cfg.x0, cfg.z0,
                           cfg.gamma ? *cfg.gamma : -1.0);
    } catch (const InvalidSpec& e) {
        throw ConfigError(std::string("invalid problem: ") + e.what());
    }
}

} // namespace fuelopt
