#include "contmeas/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace contmeas {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' expects a number, got '" + v + "'");
    }
}

long parse_long(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' expects an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' expects an unsigned integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& key, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects true/false, got '" + v + "'");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string to_string(RunMode mode) {
    switch (mode) {
    case RunMode::sse: return "sse";
    case RunMode::sse_position_only: return "sse-position-only";
    case RunMode::sse_momentum_only: return "sse-momentum-only";
    case RunMode::lindblad: return "lindblad";
    case RunMode::classical: return "classical";
    case RunMode::poincare: return "poincare";
    case RunMode::povm_sample: return "povm-sample";
    }
    return "sse";
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "sse") return RunMode::sse;
    if (s == "sse-position-only") return RunMode::sse_position_only;
    if (s == "sse-momentum-only") return RunMode::sse_momentum_only;
    if (s == "lindblad") return RunMode::lindblad;
    if (s == "classical") return RunMode::classical;
    if (s == "poincare") return RunMode::poincare;
    if (s == "povm-sample") return RunMode::povm_sample;
    throw ConfigError("unknown mode '" + s + "'");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::map<std::string, bool> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;

    const auto handle = [&](const std::string& key, const std::string& val) {
        if (seen.count(key))
            throw ConfigError(origin + " line " + std::to_string(line) + ": duplicate key '" +
                              key + "'");
        seen[key] = true;
        if (key == "scenario") cfg.scenario = val;
        else if (key == "mode") cfg.mode = run_mode_from_string(val);
        else if (key == "hbar") cfg.hbar = parse_double(val, key, line);
        else if (key == "s") cfg.s = parse_double(val, key, line);
        else if (key == "gamma") { cfg.gamma = parse_double(val, key, line); cfg.has_gamma = true; }
        else if (key == "Gamma1") { cfg.Gamma1 = parse_double(val, key, line); cfg.has_Gamma = true; }
        else if (key == "Gamma2") { cfg.Gamma2 = parse_double(val, key, line); cfg.has_Gamma = true; }
        else if (key == "a") cfg.hp.a = parse_double(val, key, line);
        else if (key == "b") cfg.hp.b = parse_double(val, key, line);
        else if (key == "c") cfg.hp.c = parse_double(val, key, line);
        else if (key == "d") cfg.hp.d = parse_double(val, key, line);
        else if (key == "omega") cfg.hp.omega = parse_double(val, key, line);
        else if (key == "x0") cfg.x0 = parse_double(val, key, line);
        else if (key == "p0") cfg.p0 = parse_double(val, key, line);
        else if (key == "init_Vx") { cfg.init_Vx = parse_double(val, key, line); cfg.has_init_moments = true; }
        else if (key == "init_Vp") { cfg.init_Vp = parse_double(val, key, line); cfg.has_init_moments = true; }
        else if (key == "init_Cxp") { cfg.init_Cxp = parse_double(val, key, line); cfg.has_init_moments = true; }
        else if (key == "N") cfg.N = static_cast<int>(parse_long(val, key, line));
        else if (key == "dt") cfg.dt = parse_double(val, key, line);
        else if (key == "t_final") cfg.t_final = parse_double(val, key, line);
        else if (key == "snapshot_interval") cfg.snapshot_interval = parse_double(val, key, line);
        else if (key == "ensemble") cfg.ensemble = static_cast<int>(parse_long(val, key, line));
        else if (key == "recenter_threshold") cfg.recenter_threshold = parse_double(val, key, line);
        else if (key == "seed") { cfg.seed = parse_u64(val, key, line); cfg.has_seed = true; }
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "husimi") cfg.husimi = parse_bool(val, key, line);
        else if (key == "husimi_xmin") cfg.husimi_xmin = parse_double(val, key, line);
        else if (key == "husimi_xmax") cfg.husimi_xmax = parse_double(val, key, line);
        else if (key == "husimi_pmin") cfg.husimi_pmin = parse_double(val, key, line);
        else if (key == "husimi_pmax") cfg.husimi_pmax = parse_double(val, key, line);
        else if (key == "husimi_nx") cfg.husimi_nx = static_cast<int>(parse_long(val, key, line));
        else if (key == "husimi_np") cfg.husimi_np = static_cast<int>(parse_long(val, key, line));
        else if (key == "classical_compare") cfg.classical_compare = parse_bool(val, key, line);
        else if (key == "sigma") cfg.sigma = parse_double(val, key, line);
        else if (key == "n_samples") cfg.n_samples = parse_long(val, key, line);
        else if (key == "poincare_n_seeds") cfg.poincare_n_seeds = static_cast<int>(parse_long(val, key, line));
        else if (key == "poincare_n_strobes") cfg.poincare_n_strobes = static_cast<int>(parse_long(val, key, line));
        else if (key == "poincare_xmin") cfg.poincare_xmin = parse_double(val, key, line);
        else if (key == "poincare_xmax") cfg.poincare_xmax = parse_double(val, key, line);
        else if (key == "poincare_pmin") cfg.poincare_pmin = parse_double(val, key, line);
        else if (key == "poincare_pmax") cfg.poincare_pmax = parse_double(val, key, line);
        else if (key == "poincare_dt") cfg.poincare_dt = parse_double(val, key, line);
        else
            throw ConfigError(origin + " line " + std::to_string(line) + ": unknown key '" +
                              key + "'");
    };

    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + " line " + std::to_string(line) +
                              ": expected 'key = value'");
        handle(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    }

    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void validate_config(const ExperimentConfig& cfg) {
    const auto fail = [](const std::string& msg) { throw ConfigError(msg); };

    if (!cfg.has_seed) fail("missing 'seed' (seeds are mandatory for reproducibility)");
    if (!(cfg.hbar > 0.0)) fail("'hbar' must be positive");
    if (!(cfg.s > 0.0)) fail("'s' must be positive");
    if (cfg.has_gamma && cfg.has_Gamma)
        fail("give either 'gamma' (joint) or 'Gamma1'/'Gamma2', not both");
    if (cfg.has_gamma && cfg.gamma < 0.0) fail("'gamma' must be >= 0");
    if (cfg.Gamma1 < 0.0 || cfg.Gamma2 < 0.0) fail("'Gamma1'/'Gamma2' must be >= 0");
    if (cfg.N < 1) fail("'N' must be >= 1");
    if (!(cfg.dt > 0.0)) fail("'dt' must be positive");
    if (!(cfg.t_final > 0.0) && cfg.mode != RunMode::povm_sample) fail("'t_final' must be positive");
    if (cfg.ensemble < 0) fail("'ensemble' must be >= 0");

    switch (cfg.mode) {
    case RunMode::sse:
        if (cfg.has_Gamma) fail("mode 'sse' measures jointly; use 'gamma' (and 's')");
        if (cfg.ensemble < 1) fail("mode 'sse' needs 'ensemble' >= 1");
        break;
    case RunMode::sse_position_only:
        if (cfg.has_gamma || cfg.Gamma2 != 0.0)
            fail("mode 'sse-position-only' uses 'Gamma1' only");
        if (!(cfg.Gamma1 > 0.0)) fail("mode 'sse-position-only' needs 'Gamma1' > 0");
        break;
    case RunMode::sse_momentum_only:
        if (cfg.has_gamma || cfg.Gamma1 != 0.0)
            fail("mode 'sse-momentum-only' uses 'Gamma2' only");
        if (!(cfg.Gamma2 > 0.0)) fail("mode 'sse-momentum-only' needs 'Gamma2' > 0");
        break;
    case RunMode::lindblad:
        break;
    case RunMode::classical:
        break;
    case RunMode::poincare:
        if (cfg.poincare_n_seeds < 1) fail("'poincare_n_seeds' must be >= 1");
        if (cfg.poincare_n_strobes < 1) fail("'poincare_n_strobes' must be >= 1");
        break;
    case RunMode::povm_sample:
        if (!(cfg.sigma >= 1.0)) fail("'sigma' must be >= 1");
        if (cfg.n_samples < 1) fail("mode 'povm-sample' needs 'n_samples' >= 1");
        break;
    }

    if (cfg.has_init_moments) {
        const double det = cfg.init_Vx * cfg.init_Vp - cfg.init_Cxp * cfg.init_Cxp;
        if (std::abs(det - cfg.hbar * cfg.hbar / 4.0) > 1e-9 * cfg.hbar * cfg.hbar)
            fail("'init_Vx'/'init_Vp'/'init_Cxp' must satisfy Vx*Vp - C^2 = hbar^2/4 "
                 "(pure Gaussian initial state)");
    }
    if (cfg.snapshot_interval > 0.0) {
        const double ratio = cfg.snapshot_interval / cfg.dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-6)
            fail("'snapshot_interval' must be an integer multiple of 'dt'");
    } else if (cfg.mode != RunMode::povm_sample) {
        fail("'snapshot_interval' must be positive");
    }
}

std::string config_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "scenario = " << cfg.scenario << "\n";
    out << "mode = " << to_string(cfg.mode) << "\n";
    out << "hbar = " << fmt(cfg.hbar) << "\n";
    out << "s = " << fmt(cfg.s) << "\n";
    if (cfg.has_gamma) out << "gamma = " << fmt(cfg.gamma) << "\n";
    if (cfg.has_Gamma) {
        out << "Gamma1 = " << fmt(cfg.Gamma1) << "\n";
        out << "Gamma2 = " << fmt(cfg.Gamma2) << "\n";
    }
    out << "a = " << fmt(cfg.hp.a) << "\n";
    out << "b = " << fmt(cfg.hp.b) << "\n";
    out << "c = " << fmt(cfg.hp.c) << "\n";
    out << "d = " << fmt(cfg.hp.d) << "\n";
    out << "omega = " << fmt(cfg.hp.omega) << "\n";
    out << "x0 = " << fmt(cfg.x0) << "\n";
    out << "p0 = " << fmt(cfg.p0) << "\n";
    if (cfg.has_init_moments) {
        out << "init_Vx = " << fmt(cfg.init_Vx) << "\n";
        out << "init_Vp = " << fmt(cfg.init_Vp) << "\n";
        out << "init_Cxp = " << fmt(cfg.init_Cxp) << "\n";
    }
    out << "N = " << cfg.N << "\n";
    out << "dt = " << fmt(cfg.dt) << "\n";
    out << "t_final = " << fmt(cfg.t_final) << "\n";
    out << "snapshot_interval = " << fmt(cfg.snapshot_interval) << "\n";
    out << "ensemble = " << cfg.ensemble << "\n";
    out << "recenter_threshold = " << fmt(cfg.recenter_threshold) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "husimi = " << (cfg.husimi ? "true" : "false") << "\n";
    if (cfg.husimi) {
        out << "husimi_xmin = " << fmt(cfg.husimi_xmin) << "\n";
        out << "husimi_xmax = " << fmt(cfg.husimi_xmax) << "\n";
        out << "husimi_pmin = " << fmt(cfg.husimi_pmin) << "\n";
        out << "husimi_pmax = " << fmt(cfg.husimi_pmax) << "\n";
        out << "husimi_nx = " << cfg.husimi_nx << "\n";
        out << "husimi_np = " << cfg.husimi_np << "\n";
    }
    if (cfg.classical_compare) out << "classical_compare = true\n";
    if (cfg.mode == RunMode::povm_sample) {
        out << "sigma = " << fmt(cfg.sigma) << "\n";
        out << "n_samples = " << cfg.n_samples << "\n";
    }
    if (cfg.mode == RunMode::poincare) {
        out << "poincare_n_seeds = " << cfg.poincare_n_seeds << "\n";
        out << "poincare_n_strobes = " << cfg.poincare_n_strobes << "\n";
        out << "poincare_xmin = " << fmt(cfg.poincare_xmin) << "\n";
        out << "poincare_xmax = " << fmt(cfg.poincare_xmax) << "\n";
        out << "poincare_pmin = " << fmt(cfg.poincare_pmin) << "\n";
        out << "poincare_pmax = " << fmt(cfg.poincare_pmax) << "\n";
        out << "poincare_dt = " << fmt(cfg.poincare_dt) << "\n";
    }
    return out.str();
}

namespace {

const double kSqrtHalf = 0.70710678118654752;

ExperimentConfig base_integrable() {
    ExperimentConfig c;
    c.hbar = 0.05;
    c.s = 1.0;
    c.hp = DrivenHamiltonianParams{5.0, 5.0, 1.0, 0.0, 0.0};
    c.x0 = -2.0;
    c.p0 = 1.0;
    c.dt = 1e-4;
    c.t_final = 4.0;
    c.snapshot_interval = 0.01;
    c.ensemble = 1;
    c.seed = 42;
    c.has_seed = true;
    c.husimi = true;
    c.husimi_xmin = -3.2;
    c.husimi_xmax = 3.2;
    c.husimi_pmin = -3.2;
    c.husimi_pmax = 3.2;
    return c;
}

ExperimentConfig base_chaotic() {
    ExperimentConfig c = base_integrable();
    c.hp = DrivenHamiltonianParams{5.0, -8.0, 1.0, 15.0, 2.0 * M_PI};
    c.t_final = 5.0;
    c.husimi_xmin = -4.0;
    c.husimi_xmax = 4.0;
    c.husimi_pmin = -4.0;
    c.husimi_pmax = 4.0;
    return c;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "fig2c", "fig2d", "fig3"};
}

ExperimentConfig preset(const std::string& name) {
    if (name == "fig1b") {
        ExperimentConfig c = base_integrable();
        c.scenario = "fig1b";
        c.mode = RunMode::sse;
        c.gamma = 0.0;
        c.has_gamma = true;
        c.N = 256;
        return c;
    }
    if (name == "fig1c") {
        ExperimentConfig c = base_integrable();
        c.scenario = "fig1c";
        c.mode = RunMode::sse;
        c.gamma = kSqrtHalf;
        c.has_gamma = true;
        c.N = 128;
        return c;
    }
    if (name == "fig1d") {
        ExperimentConfig c = base_integrable();
        c.scenario = "fig1d";
        c.mode = RunMode::sse_position_only;
        c.Gamma1 = 1.0;
        c.has_Gamma = true;
        c.N = 256;
        return c;
    }
    if (name == "fig2a") {
        ExperimentConfig c = base_chaotic();
        c.scenario = "fig2a";
        c.mode = RunMode::poincare;
        c.husimi = false;
        c.poincare_n_seeds = 20;
        c.poincare_n_strobes = 500;
        c.poincare_xmin = -3.5;
        c.poincare_xmax = 3.5;
        c.poincare_pmin = -3.5;
        c.poincare_pmax = 3.5;
        c.poincare_dt = 1e-3;
        return c;
    }
    if (name == "fig2b") {
        ExperimentConfig c = base_chaotic();
        c.scenario = "fig2b";
        c.mode = RunMode::sse;
        c.gamma = 0.0;
        c.has_gamma = true;
        c.N = 384;
        return c;
    }
    if (name == "fig2c") {
        ExperimentConfig c = base_chaotic();
        c.scenario = "fig2c";
        c.mode = RunMode::sse;
        c.gamma = kSqrtHalf;
        c.has_gamma = true;
        c.N = 256;
        return c;
    }
    if (name == "fig2d") {
        ExperimentConfig c = base_chaotic();
        c.scenario = "fig2d";
        c.mode = RunMode::sse_momentum_only;
        c.Gamma2 = 1.0;
        c.has_Gamma = true;
        c.N = 256;
        return c;
    }
    if (name == "fig3") {
        ExperimentConfig c = base_chaotic();
        c.scenario = "fig3";
        c.mode = RunMode::sse;
        c.gamma = kSqrtHalf;
        c.has_gamma = true;
        c.hbar = 1e-6;
        c.N = 256;
        c.dt = 1e-5;
        c.t_final = 6.0;
        c.snapshot_interval = 0.01;
        c.classical_compare = true;
        c.husimi = false;
        return c;
    }
    throw ConfigError("unknown preset '" + name + "'; see list-presets");
}

} // namespace contmeas
