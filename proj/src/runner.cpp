#include "contmeas/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "contmeas/ensemble.hpp"
#include "contmeas/lindblad.hpp"
#include "contmeas/povm.hpp"
#include "contmeas/rng.hpp"

namespace contmeas {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "contmeas 0.1.0";

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

class OutputSet {
public:
    explicit OutputSet(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path path = fs::path(dir_) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << content;
        if (!out) throw IoError("write failed for '" + path.string() + "'");
        files_.emplace_back(name, fnv1a64(content), content.size());
    }

    void finish_manifest(const ExperimentConfig& cfg, const std::string& status) {
        std::ostringstream m;
        m << "format = contmeas-manifest-1\n";
        m << "version = " << kVersion << "\n";
        m << "scenario = " << cfg.scenario << "\n";
        m << "mode = " << to_string(cfg.mode) << "\n";
        m << "seed = " << cfg.seed << "\n";
        char hash[24];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(config_text(cfg))));
        m << "config_hash = " << hash << "\n";
        m << "status = " << status << "\n";
        for (const auto& [name, digest, bytes] : files_) {
            char dg[24];
            std::snprintf(dg, sizeof(dg), "%016llx", static_cast<unsigned long long>(digest));
            m << "file\t" << name << "\t" << dg << "\t" << bytes << "\n";
        }
        const fs::path tmp = fs::path(dir_) / "manifest.txt.tmp";
        const fs::path fin = fs::path(dir_) / "manifest.txt";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw IoError("cannot open '" + tmp.string() + "'");
            out << m.str();
        }
        std::error_code ec;
        fs::rename(tmp, fin, ec);
        if (ec) throw IoError("manifest rename failed: " + ec.message());
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [name, digest, bytes] : files_) out.push_back(name);
        return out;
    }

private:
    std::string dir_;
    std::vector<std::tuple<std::string, std::uint64_t, std::size_t>> files_;
};

StateVector make_initial_state(const ExperimentConfig& cfg) {
    const HbarS hs(cfg.hbar, cfg.s);
    const FrameCenter frame{cfg.x0, cfg.p0};
    if (cfg.has_init_moments)
        return gaussian_state(cfg.init_Vx, cfg.init_Vp, cfg.init_Cxp, hs, cfg.N, frame);
    const Complex alpha = frame.alpha(hs);
    return coherent_state(alpha, cfg.N, hs, frame);
}

MeasurementRates rates_from_config(const ExperimentConfig& cfg) {
    if (cfg.has_gamma) return MeasurementRates::joint(cfg.gamma, cfg.s);
    if (cfg.Gamma1 > 0.0 && cfg.Gamma2 > 0.0)
        return MeasurementRates::joint(std::sqrt(cfg.Gamma1 * cfg.Gamma2),
                                       std::sqrt(cfg.Gamma1 / cfg.Gamma2));
    if (cfg.Gamma1 > 0.0) return MeasurementRates::position_only(cfg.Gamma1);
    if (cfg.Gamma2 > 0.0) return MeasurementRates::momentum_only(cfg.Gamma2);
    return MeasurementRates::none();
}

std::string render_trajectory(const TrajectoryResult& tr) {
    std::ostringstream out;
    out << "t\tmean_x\tmean_p\tVx\tVp\tCxp\tVtot\tmax_norm_drift\n";
    for (const Snapshot& s : tr.snapshots)
        out << num(s.t) << '\t' << num(s.moments.mean_x) << '\t' << num(s.moments.mean_p) << '\t'
            << num(s.moments.Vx) << '\t' << num(s.moments.Vp) << '\t' << num(s.moments.Cxp)
            << '\t' << num(s.moments.total_variance()) << '\t' << num(s.max_norm_drift) << '\n';
    return out.str();
}

std::string render_record(const MeasurementRecord& rec) {
    std::ostringstream out;
    out << "t";
    if (rec.has_position) out << "\tdX1\tX1\tdW1";
    if (rec.has_momentum) out << "\tdX2\tX2\tdW2";
    out << "\tmean_x\tmean_p\tnorm_drift\n";
    for (std::size_t i = 0; i < rec.size(); ++i) {
        out << num(rec.times[i]);
        if (rec.has_position)
            out << '\t' << num(rec.dX1[i]) << '\t' << num(rec.X1[i]) << '\t' << num(rec.dW1[i]);
        if (rec.has_momentum)
            out << '\t' << num(rec.dX2[i]) << '\t' << num(rec.X2[i]) << '\t' << num(rec.dW2[i]);
        out << '\t' << num(rec.mean_x[i]) << '\t' << num(rec.mean_p[i]) << '\t'
            << num(rec.norm_drift[i]) << '\n';
    }
    return out.str();
}

std::string render_ensemble(const EnsembleMomentSeries& m) {
    std::ostringstream out;
    out << "t\tE_mean_x\tE_mean_p\tE_Vx\tE_Vp\tE_Cxp\tE_Vtot\tn_traj\n";
    for (std::size_t i = 0; i < m.t.size(); ++i)
        out << num(m.t[i]) << '\t' << num(m.mean_x[i]) << '\t' << num(m.mean_p[i]) << '\t'
            << num(m.Vx[i]) << '\t' << num(m.Vp[i]) << '\t' << num(m.Cxp[i]) << '\t'
            << num(m.Vtot[i]) << '\t' << m.n_traj[i] << '\n';
    return out.str();
}

std::string render_husimi(const HusimiField& h) {
    std::ostringstream out;
    out << "# t=" << num(h.t) << " x_min=" << num(h.grid.x_min) << " x_max=" << num(h.grid.x_max)
        << " nx=" << h.grid.nx << " p_min=" << num(h.grid.p_min)
        << " p_max=" << num(h.grid.p_max) << " np=" << h.grid.np
        << " layout=row-major(x rows, p cols)\n";
    for (int i = 0; i < h.grid.nx; ++i) {
        for (int j = 0; j < h.grid.np; ++j) {
            if (j) out << '\t';
            out << num(h.q(i, j));
        }
        out << '\n';
    }
    return out.str();
}

std::string render_classical(const ClassicalTrajectory& tr, const DrivenHamiltonianParams& hp) {
    std::ostringstream out;
    out << "t\tx\tp\tenergy\n";
    for (std::size_t i = 0; i < tr.t.size(); ++i)
        out << num(tr.t[i]) << '\t' << num(tr.pts[i].x) << '\t' << num(tr.pts[i].p) << '\t'
            << num(hamiltonian_value(tr.pts[i], hp, tr.t[i])) << '\n';
    return out.str();
}

ClassicalTrajectory comparison_trajectory(const ExperimentConfig& cfg) {
    // classical RK4 on (at most) the 1e-4 grid, storing at snapshot times
    const int per_snap = std::max(1, static_cast<int>(std::ceil(cfg.snapshot_interval / 1e-4)));
    const double dt = cfg.snapshot_interval / per_snap;
    return integrate_classical(PhasePoint{cfg.x0, cfg.p0}, cfg.hp, dt, cfg.t_final, per_snap);
}

void run_sse_family(const ExperimentConfig& cfg, OutputSet& files, std::string& status) {
    const StateVector initial = make_initial_state(cfg);
    EnsembleOptions opt;
    opt.traj.dt = cfg.dt;
    opt.traj.t_final = cfg.t_final;
    opt.traj.snapshot_interval = cfg.snapshot_interval;
    opt.traj.record_stride = static_cast<int>(std::lround(cfg.snapshot_interval / cfg.dt));
    opt.traj.recenter_threshold = cfg.recenter_threshold;
    if (cfg.husimi) opt.traj.state_snapshot_times = {0.0, cfg.t_final};
    opt.n_trajectories = cfg.ensemble;
    opt.master_seed = cfg.seed;

    const MeasurementRates rates = rates_from_config(cfg);
    const EnsembleResult res = run_ensemble(initial, cfg.hp, rates, opt);

    for (int k = 0; k < cfg.ensemble; ++k) {
        const TrajectoryResult& tr = res.trajectories[k];
        files.write("trajectory_" + std::to_string(k) + ".tsv", render_trajectory(tr));
        if (tr.record.size() > 0)
            files.write("record_" + std::to_string(k) + ".tsv", render_record(tr.record));
    }
    files.write("ensemble_moments.tsv", render_ensemble(res.means));

    if (cfg.husimi && !res.trajectories.empty()) {
        const PhaseSpaceGrid grid{cfg.husimi_xmin, cfg.husimi_xmax, cfg.husimi_nx,
                                  cfg.husimi_pmin, cfg.husimi_pmax, cfg.husimi_np};
        const auto& snaps = res.trajectories[0].state_snapshots;
        const std::vector<double> times = {0.0, cfg.t_final};
        for (std::size_t i = 0; i < snaps.size(); ++i) {
            HusimiField h = husimi_q(snaps[i], grid);
            h.t = i < times.size() ? times[i] : 0.0;
            files.write("husimi_t" + short_num(h.t) + ".tsv", render_husimi(h));
        }
    }
    if (cfg.classical_compare)
        files.write("classical.tsv", render_classical(comparison_trajectory(cfg), cfg.hp));

    if (res.n_failed > 0) {
        std::ostringstream msg;
        msg << "failed:" << res.n_failed << " trajectories (";
        bool first = true;
        for (std::size_t k = 0; k < res.trajectories.size(); ++k) {
            if (!res.trajectories[k].failure) continue;
            if (!first) msg << "; ";
            msg << "trajectory " << k << " at t=" << short_num(res.trajectories[k].failure->time);
            first = false;
        }
        msg << ")";
        status = msg.str();
    }
}

void run_lindblad(const ExperimentConfig& cfg, OutputSet& files, std::string& status) {
    const StateVector initial = make_initial_state(cfg);
    DensityMatrix rho0{initial.amps * initial.amps.adjoint(), initial.frame, initial.hs};
    LindbladGenerator gen{cfg.hp, rates_from_config(cfg), initial.hs};

    LindbladOptions opt;
    opt.dt = cfg.dt;
    opt.t_final = cfg.t_final;
    opt.snapshot_interval = cfg.snapshot_interval;
    opt.recenter_threshold = cfg.recenter_threshold;

    // comparison times for an accompanying trajectory ensemble
    std::vector<double> cmp_times;
    if (cfg.ensemble >= 1) {
        for (int i = 1; i <= 10; ++i) {
            const double t = std::round(cfg.t_final * i / 10.0 / cfg.snapshot_interval) *
                             cfg.snapshot_interval;
            if (t > 0.0 && (cmp_times.empty() || t > cmp_times.back())) cmp_times.push_back(t);
        }
        opt.state_snapshot_times = cmp_times;
    }

    const LindbladResult res = propagate(rho0, gen, opt);

    std::ostringstream out;
    out << "t\tmean_x\tmean_p\tVx\tVp\tCxp\tVtot\ttrace_err\tmin_eig\n";
    for (const LindbladSnapshot& s : res.snapshots)
        out << num(s.t) << '\t' << num(s.moments.mean_x) << '\t' << num(s.moments.mean_p) << '\t'
            << num(s.moments.Vx) << '\t' << num(s.moments.Vp) << '\t' << num(s.moments.Cxp)
            << '\t' << num(s.moments.total_variance()) << '\t' << num(s.trace_error) << '\t'
            << num(s.min_eigenvalue) << '\n';
    files.write("ensemble_moments.tsv", out.str());

    if (cfg.husimi) {
        const PhaseSpaceGrid grid{cfg.husimi_xmin, cfg.husimi_xmax, cfg.husimi_nx,
                                  cfg.husimi_pmin, cfg.husimi_pmax, cfg.husimi_np};
        HusimiField h = husimi_q(res.final_state, grid);
        h.t = cfg.t_final;
        files.write("husimi_t" + short_num(h.t) + ".tsv", render_husimi(h));
    }

    if (cfg.ensemble >= 1) {
        EnsembleOptions eopt;
        eopt.traj.dt = cfg.dt;
        eopt.traj.t_final = cfg.t_final;
        eopt.traj.snapshot_interval = cfg.snapshot_interval;
        eopt.traj.record_stride = 0;
        eopt.traj.recenter_threshold = cfg.recenter_threshold;
        eopt.traj.state_snapshot_times = cmp_times;
        eopt.state_snapshots_all = true;
        eopt.n_trajectories = cfg.ensemble;
        eopt.master_seed = cfg.seed;
        const EnsembleResult ens = run_ensemble(initial, cfg.hp, gen.rates, eopt);
        if (ens.n_failed > 0) status = "failed:" + std::to_string(ens.n_failed) + " trajectories";

        std::ostringstream td;
        td << "t\ttrace_distance\n";
        for (std::size_t i = 0; i < cmp_times.size() && i < res.state_snapshots.size(); ++i) {
            const DensityMatrix& target = res.state_snapshots[i];
            const DensityMatrix avg =
                average_projector_at(ens.trajectories, i, target.frame, target.max_index());
            td << num(cmp_times[i]) << '\t' << num(trace_distance(avg, target)) << '\n';
        }
        files.write("trace_distance.tsv", td.str());
    }
}

void run_classical_mode(const ExperimentConfig& cfg, OutputSet& files) {
    const ClassicalTrajectory tr =
        integrate_classical(PhasePoint{cfg.x0, cfg.p0}, cfg.hp, cfg.dt, cfg.t_final,
                            std::max(1, static_cast<int>(std::lround(cfg.snapshot_interval / cfg.dt))));
    files.write("classical.tsv", render_classical(tr, cfg.hp));
}

void run_poincare(const ExperimentConfig& cfg, OutputSet& files) {
    Philox rng(cfg.seed, 0);
    std::vector<PhasePoint> seeds;
    seeds.reserve(cfg.poincare_n_seeds);
    for (int i = 0; i < cfg.poincare_n_seeds; ++i) {
        const double x = cfg.poincare_xmin + (cfg.poincare_xmax - cfg.poincare_xmin) * rng.next_double();
        const double p = cfg.poincare_pmin + (cfg.poincare_pmax - cfg.poincare_pmin) * rng.next_double();
        seeds.push_back(PhasePoint{x, p});
    }
    const double period = cfg.hp.omega != 0.0 ? 2.0 * M_PI / cfg.hp.omega : 1.0;
    const auto strobes =
        poincare_map(seeds, cfg.hp, period, cfg.poincare_n_strobes, cfg.poincare_dt);

    std::ostringstream out;
    out << "seed_id\tstrobe\tx\tp\n";
    for (std::size_t s = 0; s < strobes.size(); ++s)
        for (std::size_t k = 0; k < strobes[s].size(); ++k)
            out << s << '\t' << k << '\t' << num(strobes[s][k].x) << '\t' << num(strobes[s][k].p)
                << '\n';
    files.write("poincare.tsv", out.str());
}

void run_povm_sample(const ExperimentConfig& cfg, OutputSet& files) {
    const StateVector initial = make_initial_state(cfg);
    const MeasurementStrength sigma(cfg.sigma);
    OutcomeSampler sampler(initial, sigma);
    Philox rng(cfg.seed, 0);

    std::ostringstream out;
    out << "k\tchi1\tchi2\tx1\tx2\n";
    for (long k = 0; k < cfg.n_samples; ++k) {
        const Outcome o = sampler.sample(rng);
        out << k << '\t' << num(o.chi.real()) << '\t' << num(o.chi.imag()) << '\t'
            << num(o.x1(initial.hs)) << '\t' << num(o.x2(initial.hs)) << '\n';
    }
    files.write("povm_samples.tsv", out.str());
}

} // namespace

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    OutputSet files(cfg.out_dir);
    std::string status = "ok";
    RunOutcome outcome;

    try {
        switch (cfg.mode) {
        case RunMode::sse:
        case RunMode::sse_position_only:
        case RunMode::sse_momentum_only:
            run_sse_family(cfg, files, status);
            break;
        case RunMode::lindblad:
            run_lindblad(cfg, files, status);
            break;
        case RunMode::classical:
            run_classical_mode(cfg, files);
            break;
        case RunMode::poincare:
            run_poincare(cfg, files);
            break;
        case RunMode::povm_sample:
            run_povm_sample(cfg, files);
            break;
        }
    } catch (const TruncationError& e) {
        status = std::string("failed: ") + e.what();
    } catch (const DivergenceError& e) {
        status = std::string("failed: ") + e.what();
    } catch (const StepTooLargeError& e) {
        status = std::string("failed: ") + e.what();
    } catch (const DegenerateOutcomeError& e) {
        status = std::string("failed: ") + e.what();
    }

    files.finish_manifest(cfg, status);
    outcome.files = files.names();
    outcome.message = status;
    outcome.exit_code = status == "ok" ? 0 : 3;
    return outcome;
}

} // namespace contmeas
