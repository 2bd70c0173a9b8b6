#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contmeas/config.hpp"

namespace contmeas {

struct RunOutcome {
    int exit_code = 0; // 0 ok, 3 numeric failure (4: I/O raised as IoError)
    std::string message;
    std::vector<std::string> files;
};

// Runs the experiment and persists all series under cfg.out_dir, ending with
// an atomically renamed manifest. Numeric failures keep partial outputs and
// are marked in the manifest.
RunOutcome run_experiment(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& data);

} // namespace contmeas
