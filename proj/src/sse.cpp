#include "contmeas/sse.hpp"

#include <cmath>
#include <cstdio>

namespace contmeas {

MeasurementRates MeasurementRates::joint(double gamma, double s) {
    if (gamma < 0.0) throw Error("MeasurementRates: gamma must be >= 0");
    if (!(s > 0.0)) throw Error("MeasurementRates: s must be positive");
    MeasurementRates r;
    r.gamma = gamma;
    r.s = s;
    r.Gamma1 = gamma * s;
    r.Gamma2 = gamma / s;
    r.mode = gamma > 0.0 ? Mode::joint : Mode::none;
    return r;
}

MeasurementRates MeasurementRates::position_only(double Gamma1) {
    if (Gamma1 < 0.0) throw Error("MeasurementRates: Gamma1 must be >= 0");
    MeasurementRates r;
    r.Gamma1 = Gamma1;
    r.mode = Gamma1 > 0.0 ? Mode::position_only : Mode::none;
    return r;
}

MeasurementRates MeasurementRates::momentum_only(double Gamma2) {
    if (Gamma2 < 0.0) throw Error("MeasurementRates: Gamma2 must be >= 0");
    MeasurementRates r;
    r.Gamma2 = Gamma2;
    r.mode = Gamma2 > 0.0 ? Mode::momentum_only : Mode::none;
    return r;
}

Operator build_hamiltonian(const DrivenHamiltonianParams& hp, double t, int N, const HbarS& hs,
                           FrameCenter frame) {
    const LadderOps ops = build_ladder(N, hs);
    const Operator I = Operator::Identity(N + 1, N + 1);
    const Operator x = ops.x + frame.x0 * I;
    const Operator p = ops.p + frame.p0 * I;
    const Operator x2 = x * x;
    return hp.a * p * p + hp.b * x2 + hp.c * x2 * x2 +
           (hp.d * std::cos(hp.omega * t)) * x;
}

namespace {

// Per-trajectory stepping engine. Split-operator phases are cached and
// refreshed when the frame moves (and each step for the drive term).
class StepEngine {
public:
    StepEngine(int N, const HbarS& hs, const DrivenHamiltonianParams& hp,
               const MeasurementRates& rates, double dt)
        : N_(N), hs_(hs), hp_(hp), rates_(rates), dt_(dt), ws_(fock_workspace(N)) {
        has_potential_ = hp.b != 0.0 || hp.c != 0.0 || hp.d != 0.0;
        has_kinetic_ = hp.a != 0.0;
        pot_phase_.resize(N + 1);
        kin_phase_.resize(N + 1);
        tmp_.resize(N + 1);
        v1_.resize(N + 1);
        v2_.resize(N + 1);
        v3_.resize(N + 1);
        sq_.resize(N + 1);
        for (int n = 0; n <= N; ++n) sq_(n) = std::sqrt(static_cast<double>(n));
    }

    void set_frame(const FrameCenter& f) {
        frame_ = f;
        pot_frame_fresh_ = false;
        kin_frame_fresh_ = false;
    }

    const FrameCenter& frame() const { return frame_; }

    // advances amps by one step starting at time t; returns |norm-1| before
    // renormalization
    double step(Vector& amps, double t, const NoiseIncrement& noise) {
        if (has_potential_) {
            refresh_potential(t + 0.5 * dt_);
            apply_diagonalized(amps, ws_->q_vecs, pot_phase_);
            if (has_kinetic_) {
                refresh_kinetic();
                apply_diagonalized(amps, ws_->k_vecs, kin_phase_);
            }
            apply_diagonalized(amps, ws_->q_vecs, pot_phase_);
        } else if (has_kinetic_) {
            refresh_kinetic();
            apply_diagonalized(amps, ws_->k_vecs, kin_phase_);
        }

        apply_measurement_terms(amps, noise);

        const double norm = amps.norm();
        const double drift = std::abs(norm - 1.0);
        amps /= norm;
        return drift;
    }

private:
    void apply_ladder_a(const Vector& in, Vector& out) const {
        for (int n = 0; n < N_; ++n) out(n) = sq_(n + 1) * in(n + 1);
        out(N_) = 0.0;
    }
    void apply_ladder_adag(const Vector& in, Vector& out) const {
        out(0) = 0.0;
        for (int n = 1; n <= N_; ++n) out(n) = sq_(n) * in(n - 1);
    }

    void apply_measurement_terms(Vector& amps, const NoiseIncrement& noise) {
        switch (rates_.mode) {
        case MeasurementRates::Mode::none:
            return;
        case MeasurementRates::Mode::joint: {
            const double g = rates_.gamma;
            apply_ladder_a(amps, v1_);    // a psi
            apply_ladder_adag(amps, v2_); // a^dag psi
            const Complex ea = amps.dot(v1_);
            const Complex dxi = noise.dxi();
            const double sg = std::sqrt(g);
            // drift: -g (n + 1/2 - <a^dag> a - a^dag <a> + |<a>|^2) psi dt
            for (int n = 0; n <= N_; ++n) {
                const Complex drift = -g * (static_cast<double>(n) * amps(n) + 0.5 * amps(n) -
                                            std::conj(ea) * v1_(n) - ea * v2_(n) +
                                            std::norm(ea) * amps(n));
                const Complex stoch = sg * ((v2_(n) - std::conj(ea) * amps(n)) * dxi +
                                            (v1_(n) - ea * amps(n)) * std::conj(dxi));
                tmp_(n) = amps(n) + drift * dt_ + stoch;
            }
            amps.swap(tmp_);
            return;
        }
        case MeasurementRates::Mode::position_only: {
            const double cx = std::sqrt(hs_.hbar / (2.0 * hs_.s));
            apply_ladder_a(amps, v1_);
            apply_ladder_adag(amps, v2_);
            v3_ = cx * (v1_ + v2_); // x psi (frame-local)
            const double ex = amps.dot(v3_).real();
            v3_ -= ex * amps; // (x - <x>) psi
            // (x - <x>)^2 psi
            apply_ladder_a(v3_, v1_);
            apply_ladder_adag(v3_, v2_);
            tmp_ = cx * (v1_ + v2_) - ex * v3_;
            const double G = rates_.Gamma1;
            amps += -(G / (2.0 * hs_.hbar)) * dt_ * tmp_ +
                    std::sqrt(G / hs_.hbar) * noise.dW1 * v3_;
            return;
        }
        case MeasurementRates::Mode::momentum_only: {
            const double cp = std::sqrt(hs_.hbar * hs_.s / 2.0);
            const Complex ic(0.0, 1.0);
            apply_ladder_a(amps, v1_);
            apply_ladder_adag(amps, v2_);
            v3_ = ic * cp * (v2_ - v1_); // p psi
            const double ep = amps.dot(v3_).real();
            v3_ -= ep * amps;
            apply_ladder_a(v3_, v1_);
            apply_ladder_adag(v3_, v2_);
            tmp_ = ic * cp * (v2_ - v1_) - ep * v3_;
            const double G = rates_.Gamma2;
            amps += -(G / (2.0 * hs_.hbar)) * dt_ * tmp_ +
                    std::sqrt(G / hs_.hbar) * noise.dW2 * v3_;
            return;
        }
        }
    }

    void apply_diagonalized(Vector& amps, const Eigen::MatrixXcd& U, const Vector& phase) {
        tmp_.noalias() = U.adjoint() * amps;
        tmp_.array() *= phase.array();
        amps.noalias() = U * tmp_;
    }

    void refresh_potential(double t_mid) {
        const double drive = hp_.d * std::cos(hp_.omega * t_mid);
        if (pot_frame_fresh_ && drive == pot_drive_) return;
        const double cx = std::sqrt(hs_.hbar / (2.0 * hs_.s));
        for (int j = 0; j <= N_; ++j) {
            const double x = cx * ws_->q_eigs(j) + frame_.x0;
            const double x2 = x * x;
            const double V = hp_.b * x2 + hp_.c * x2 * x2 + drive * x;
            pot_phase_(j) = std::polar(1.0, -0.5 * dt_ * V / hs_.hbar);
        }
        pot_drive_ = drive;
        pot_frame_fresh_ = true;
    }

    void refresh_kinetic() {
        if (kin_frame_fresh_) return;
        const double cp = std::sqrt(hs_.hbar * hs_.s / 2.0);
        for (int j = 0; j <= N_; ++j) {
            const double p = -cp * ws_->k_eigs(j) + frame_.p0; // p = -cp K
            kin_phase_(j) = std::polar(1.0, -dt_ * hp_.a * p * p / hs_.hbar);
        }
        kin_frame_fresh_ = true;
    }

    int N_;
    HbarS hs_;
    DrivenHamiltonianParams hp_;
    MeasurementRates rates_;
    double dt_;
    std::shared_ptr<const FockWorkspace> ws_;
    FrameCenter frame_;
    bool has_potential_ = false;
    bool has_kinetic_ = false;
    bool pot_frame_fresh_ = false;
    bool kin_frame_fresh_ = false;
    double pot_drive_ = 0.0;
    Vector pot_phase_, kin_phase_, tmp_, v1_, v2_, v3_;
    Eigen::VectorXd sq_;
};

void recenter_in_place(Vector& amps, FrameCenter& frame, const HbarS& hs, FrameCenter nf,
                       double t) {
    const Complex a_old = frame.alpha(hs);
    const Complex a_new = nf.alpha(hs);
    apply_displacement(amps, a_old - a_new);
    amps *= std::polar(1.0, std::imag(std::conj(a_new) * a_old));
    frame = nf;
    const double tm = tail_mass(amps);
    if (tm > 1e-8) {
        char buf[80];
        std::snprintf(buf, sizeof(buf), "recenter: tail mass %.3e exceeds 1e-8", tm);
        throw TruncationError(buf, t);
    }
    amps /= amps.norm();
}

} // namespace

StateVector sse_step(const StateVector& psi, const DrivenHamiltonianParams& hp,
                     const MeasurementRates& rates, double t, double dt,
                     const NoiseIncrement& noise, double* norm_drift) {
    if (!(dt > 0.0)) throw Error("sse_step: dt must be positive");
    StateVector out = psi;
    StepEngine engine(psi.max_index(), psi.hs, hp, rates, dt);
    engine.set_frame(psi.frame);
    const double drift = engine.step(out.amps, t, noise);
    if (norm_drift) *norm_drift = drift;
    check_tail(out, 1e-8, t + dt);
    return out;
}

StateVector position_only_step(const StateVector& psi, const DrivenHamiltonianParams& hp,
                               double Gamma1, double t, double dt, double dW,
                               double* norm_drift) {
    return sse_step(psi, hp, MeasurementRates::position_only(Gamma1), t, dt,
                    NoiseIncrement{dW, 0.0}, norm_drift);
}

StateVector momentum_only_step(const StateVector& psi, const DrivenHamiltonianParams& hp,
                               double Gamma2, double t, double dt, double dW,
                               double* norm_drift) {
    return sse_step(psi, hp, MeasurementRates::momentum_only(Gamma2), t, dt,
                    NoiseIncrement{0.0, dW}, norm_drift);
}

TrajectoryResult run_trajectory(const StateVector& initial, const DrivenHamiltonianParams& hp,
                                const MeasurementRates& rates, const TrajectoryOptions& opt,
                                Philox rng) {
    if (!(opt.dt > 0.0)) throw Error("run_trajectory: dt must be positive");
    const long n_steps = std::lround(opt.t_final / opt.dt);
    const long snap_stride = std::lround(opt.snapshot_interval / opt.dt);
    if (snap_stride < 1 ||
        std::abs(snap_stride * opt.dt - opt.snapshot_interval) > 1e-9 * opt.snapshot_interval)
        throw Error("run_trajectory: snapshot_interval must be a positive multiple of dt");

    TrajectoryResult res;
    res.final_state = initial;
    Vector& amps = res.final_state.amps;
    FrameCenter& frame = res.final_state.frame;
    const HbarS hs = initial.hs;
    const int N = initial.max_index();

    StepEngine engine(N, hs, hp, rates, opt.dt);
    engine.set_frame(frame);

    const bool measuring = rates.mode != MeasurementRates::Mode::none;
    const bool record_on = measuring && opt.record_stride > 0;
    const bool rec_x = rates.mode == MeasurementRates::Mode::joint ||
                       rates.mode == MeasurementRates::Mode::position_only;
    const bool rec_p = rates.mode == MeasurementRates::Mode::joint ||
                       rates.mode == MeasurementRates::Mode::momentum_only;
    res.record.has_position = record_on && rec_x;
    res.record.has_momentum = record_on && rec_p;

    const double amp1 = rates.Gamma1 > 0.0 ? 0.5 * std::sqrt(hs.hbar / rates.Gamma1) : 0.0;
    const double amp2 = rates.Gamma2 > 0.0 ? 0.5 * std::sqrt(hs.hbar / rates.Gamma2) : 0.0;

    double X1 = 0.0, X2 = 0.0;
    double win_dX1 = 0.0, win_dX2 = 0.0, win_dW1 = 0.0, win_dW2 = 0.0, win_drift = 0.0;
    double snap_drift = 0.0;
    std::size_t next_state_snap = 0;

    const auto want_state_snapshot = [&](double t) {
        return next_state_snap < opt.state_snapshot_times.size() &&
               std::abs(opt.state_snapshot_times[next_state_snap] - t) < 0.5 * opt.dt;
    };

    try {
        for (long k = 0; k <= n_steps; ++k) {
            const double t = k * opt.dt;
            const bool at_snapshot = (k % snap_stride == 0) || k == n_steps;
            StateMoments m;
            const bool need_moments = at_snapshot || record_on;
            if (need_moments) m = state_moments(amps, frame, hs);
            if (at_snapshot) {
                res.snapshots.push_back(Snapshot{t, m, snap_drift});
                snap_drift = 0.0;
            }
            if (want_state_snapshot(t)) {
                res.state_snapshots.push_back(StateVector{amps, frame, hs});
                ++next_state_snap;
            }
            if (k == n_steps) break;

            NoiseIncrement noise;
            switch (rates.mode) {
            case MeasurementRates::Mode::joint:
                noise.dW1 = rng.next_gaussian() * std::sqrt(opt.dt);
                noise.dW2 = rng.next_gaussian() * std::sqrt(opt.dt);
                break;
            case MeasurementRates::Mode::position_only:
                noise.dW1 = rng.next_gaussian() * std::sqrt(opt.dt);
                break;
            case MeasurementRates::Mode::momentum_only:
                noise.dW2 = rng.next_gaussian() * std::sqrt(opt.dt);
                break;
            case MeasurementRates::Mode::none:
                break;
            }

            const double drift = engine.step(amps, t, noise);
            snap_drift = std::max(snap_drift, drift);

            if (record_on) {
                if (rec_x) {
                    const double dX1 = m.mean_x * opt.dt + amp1 * noise.dW1;
                    X1 += dX1;
                    win_dX1 += dX1;
                    win_dW1 += noise.dW1;
                }
                if (rec_p) {
                    const double dX2 = m.mean_p * opt.dt + amp2 * noise.dW2;
                    X2 += dX2;
                    win_dX2 += dX2;
                    win_dW2 += noise.dW2;
                }
                win_drift = std::max(win_drift, drift);
                if ((k + 1) % opt.record_stride == 0 || k + 1 == n_steps) {
                    const StateMoments mw = state_moments(amps, frame, hs);
                    res.record.times.push_back(t + opt.dt);
                    res.record.dX1.push_back(win_dX1);
                    res.record.dX2.push_back(win_dX2);
                    res.record.X1.push_back(X1);
                    res.record.X2.push_back(X2);
                    res.record.dW1.push_back(win_dW1);
                    res.record.dW2.push_back(win_dW2);
                    res.record.mean_x.push_back(mw.mean_x);
                    res.record.mean_p.push_back(mw.mean_p);
                    res.record.Vx.push_back(mw.Vx);
                    res.record.Vp.push_back(mw.Vp);
                    res.record.Cxp.push_back(mw.Cxp);
                    res.record.norm_drift.push_back(win_drift);
                    win_dX1 = win_dX2 = win_dW1 = win_dW2 = win_drift = 0.0;
                }
            }

            const double tm = tail_mass(amps);
            if (tm > 1e-8) {
                char buf[80];
                std::snprintf(buf, sizeof(buf),
                              "trajectory truncation overflow: tail mass %.3e", tm);
                throw TruncationError(buf, t + opt.dt);
            }

            if (std::abs(expect_a(amps)) > opt.recenter_threshold) {
                const StateMoments mm = state_moments(amps, frame, hs);
                recenter_in_place(amps, frame, hs, FrameCenter{mm.mean_x, mm.mean_p}, t + opt.dt);
                engine.set_frame(frame);
            }
        }
    } catch (const TruncationError& e) {
        res.failure = TrajectoryFailure{e.time, e.what()};
    }
    return res;
}

} // namespace contmeas
