#include "contmeas/ensemble.hpp"

#include "contmeas/rng.hpp"

namespace contmeas {

EnsembleResult run_ensemble(const StateVector& initial, const DrivenHamiltonianParams& hp,
                            const MeasurementRates& rates, const EnsembleOptions& opt) {
    EnsembleResult res;
    res.trajectories.resize(opt.n_trajectories);
    const long n = opt.n_trajectories;

#pragma omp parallel for schedule(dynamic) if (opt.parallel)
    for (long k = 0; k < n; ++k) {
        TrajectoryOptions o = opt.traj;
        if (k > 0 && !opt.state_snapshots_all) o.state_snapshot_times.clear();
        res.trajectories[k] = run_trajectory(initial, hp, rates, o,
                                             trajectory_rng(opt.master_seed, k));
    }

    for (const auto& tr : res.trajectories)
        if (tr.failure) ++res.n_failed;
    res.means = ensemble_moments(res.trajectories);
    return res;
}

EnsembleMomentSeries ensemble_moments(const std::vector<TrajectoryResult>& trajectories) {
    EnsembleMomentSeries out;
    std::size_t n_snap = 0;
    for (const auto& tr : trajectories) n_snap = std::max(n_snap, tr.snapshots.size());
    if (n_snap == 0) return out;

    out.t.assign(n_snap, 0.0);
    out.mean_x.assign(n_snap, 0.0);
    out.mean_p.assign(n_snap, 0.0);
    out.Vx.assign(n_snap, 0.0);
    out.Vp.assign(n_snap, 0.0);
    out.Cxp.assign(n_snap, 0.0);
    out.Vtot.assign(n_snap, 0.0);
    out.n_traj.assign(n_snap, 0);

    for (const auto& tr : trajectories) {
        for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
            const Snapshot& s = tr.snapshots[i];
            out.t[i] = s.t;
            out.mean_x[i] += s.moments.mean_x;
            out.mean_p[i] += s.moments.mean_p;
            out.Vx[i] += s.moments.Vx;
            out.Vp[i] += s.moments.Vp;
            out.Cxp[i] += s.moments.Cxp;
            out.n_traj[i] += 1;
        }
    }
    for (std::size_t i = 0; i < n_snap; ++i) {
        const double m = out.n_traj[i] > 0 ? static_cast<double>(out.n_traj[i]) : 1.0;
        out.mean_x[i] /= m;
        out.mean_p[i] /= m;
        out.Vx[i] /= m;
        out.Vp[i] /= m;
        out.Cxp[i] /= m;
        out.Vtot[i] = out.Vx[i] + out.Vp[i];
    }
    return out;
}

namespace {

DensityMatrix average_states(const std::vector<const StateVector*>& states, FrameCenter frame,
                             int N_out, const HbarS& hs) {
    DensityMatrix rho{Eigen::MatrixXcd::Zero(N_out + 1, N_out + 1), frame, hs};
    long count = 0;
    for (const StateVector* ps : states) {
        // pad before displacing so the common frame has headroom
        StateVector padded{Vector::Zero(N_out + 1), ps->frame, ps->hs};
        padded.amps.head(ps->amps.size()) = ps->amps;
        const StateVector moved = recenter(padded, frame);
        rho.mat.noalias() += moved.amps * moved.amps.adjoint();
        ++count;
    }
    if (count == 0) throw Error("average_projector: no states to average");
    rho.mat /= static_cast<double>(count);
    return rho;
}

} // namespace

DensityMatrix average_projector(const std::vector<TrajectoryResult>& trajectories,
                                FrameCenter common_frame, int N_out) {
    std::vector<const StateVector*> states;
    states.reserve(trajectories.size());
    HbarS hs;
    for (const auto& tr : trajectories) {
        if (tr.failure) continue;
        states.push_back(&tr.final_state);
        hs = tr.final_state.hs;
    }
    return average_states(states, common_frame, N_out, hs);
}

DensityMatrix average_projector_at(const std::vector<TrajectoryResult>& trajectories,
                                   std::size_t snapshot_index, FrameCenter common_frame,
                                   int N_out) {
    std::vector<const StateVector*> states;
    states.reserve(trajectories.size());
    HbarS hs;
    for (const auto& tr : trajectories) {
        if (snapshot_index >= tr.state_snapshots.size()) continue;
        states.push_back(&tr.state_snapshots[snapshot_index]);
        hs = tr.state_snapshots[snapshot_index].hs;
    }
    return average_states(states, common_frame, N_out, hs);
}

} // namespace contmeas
