#pragma once

#include <cstdint>
#include <vector>

#include "contmeas/sse.hpp"

namespace contmeas {

// Trajectory fan-out. Each trajectory owns its state and a Philox stream
// keyed by (master_seed, trajectory index), so results are identical for any
// thread count and for the serial reference path.
struct EnsembleOptions {
    TrajectoryOptions traj;
    int n_trajectories = 1;
    std::uint64_t master_seed = 0;
    bool parallel = true;
    bool state_snapshots_all = false; // else state_snapshot_times apply to trajectory 0 only
};

struct EnsembleMomentSeries {
    std::vector<double> t;
    std::vector<double> mean_x, mean_p, Vx, Vp, Cxp, Vtot;
    std::vector<int> n_traj;
};

struct EnsembleResult {
    std::vector<TrajectoryResult> trajectories;
    EnsembleMomentSeries means;
    int n_failed = 0;
};

EnsembleResult run_ensemble(const StateVector& initial, const DrivenHamiltonianParams& hp,
                            const MeasurementRates& rates, const EnsembleOptions& opt);

// Mean over trajectories of the per-snapshot moments, fixed accumulation order.
EnsembleMomentSeries ensemble_moments(const std::vector<TrajectoryResult>& trajectories);

// (1/M) sum |psi_k><psi_k| over non-failed final states, all recentered to the
// common frame and zero-padded to basis size N_out.
DensityMatrix average_projector(const std::vector<TrajectoryResult>& trajectories,
                                FrameCenter common_frame, int N_out);

// Same average from the state snapshot with the given index.
DensityMatrix average_projector_at(const std::vector<TrajectoryResult>& trajectories,
                                   std::size_t snapshot_index, FrameCenter common_frame,
                                   int N_out);

} // namespace contmeas
