#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contmeas/classical.hpp"
#include "contmeas/errors.hpp"

namespace contmeas {

enum class RunMode {
    sse,
    sse_position_only,
    sse_momentum_only,
    lindblad,
    classical,
    poincare,
    povm_sample,
};

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& s);

struct ExperimentConfig {
    std::string scenario = "custom";
    RunMode mode = RunMode::sse;

    double hbar = 1.0;
    double s = 1.0;
    // joint rate (gamma) or single-quadrature rates; giving both is an error
    double gamma = 0.0;
    double Gamma1 = 0.0;
    double Gamma2 = 0.0;
    bool has_gamma = false;
    bool has_Gamma = false;

    DrivenHamiltonianParams hp;

    double x0 = 0.0;
    double p0 = 0.0;
    bool has_init_moments = false;
    double init_Vx = 0.0, init_Vp = 0.0, init_Cxp = 0.0;

    int N = 64;
    double dt = 1e-4;
    double t_final = 1.0;
    double snapshot_interval = 0.01;
    int ensemble = 1;
    double recenter_threshold = 1.0;

    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string out_dir = "out";

    bool husimi = false;
    double husimi_xmin = -4.0, husimi_xmax = 4.0;
    double husimi_pmin = -4.0, husimi_pmax = 4.0;
    int husimi_nx = 201, husimi_np = 201;

    bool classical_compare = false;

    double sigma = 1.0; // povm-sample
    long n_samples = 0;

    int poincare_n_seeds = 20;
    int poincare_n_strobes = 500;
    double poincare_xmin = -4.0, poincare_xmax = 4.0;
    double poincare_pmin = -4.0, poincare_pmax = 4.0;
    double poincare_dt = 1e-3;
};

// Parses the flat `key = value` format ('#' comments). Unknown keys and
// duplicate keys are errors; the result is validated.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

void validate_config(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

// Canonical key = value rendering (also the preset materialization format).
std::string config_text(const ExperimentConfig& cfg);

} // namespace contmeas
