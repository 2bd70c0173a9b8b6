#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "contmeas/ensemble.hpp"
#include "contmeas/gaussian.hpp"
#include "contmeas/rng.hpp"
#include "contmeas/sse.hpp"

using namespace contmeas;
using Complex = std::complex<double>;

namespace {

constexpr double kHbar = 0.05;
constexpr double kSqrtHalf = 0.70710678118654752;

StateVector squeezed_start(double Vx, double Cxp, const HbarS& hs, int N,
                           FrameCenter frame = {}) {
    const double Vp = (hs.hbar * hs.hbar / 4.0 + Cxp * Cxp) / Vx;
    return gaussian_state(Vx, Vp, Cxp, hs, N, frame);
}

} // namespace

TEST_CASE("build_hamiltonian") {
    const HbarS hs(kHbar, 1.0);
    SUBCASE("all parameters zero gives the zero matrix") {
        const Operator H = build_hamiltonian({}, 0.0, 12, hs, FrameCenter{});
        CHECK(H.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("quartic matches direct polynomial evaluation on x eigenvectors") {
        const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};
        const int N = 24;
        const FrameCenter f{0.3, -0.2};
        const Operator H = build_hamiltonian(hp, 0.0, N, hs, f);
        const LadderOps ops = build_ladder(N, hs);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ops.x);
        // potential part acts diagonally on x eigenvectors; kinetic does not,
        // so compare <v|H|v> with V(x) + a <v|(p+p0)^2|v>
        const Operator p_lab =
            ops.p + f.p0 * Eigen::MatrixXcd::Identity(N + 1, N + 1);
        const Operator p2 = p_lab * p_lab;
        for (int j = 3; j < N - 3; ++j) {
            const Vector v = es.eigenvectors().col(j);
            const double x = es.eigenvalues()(j) + f.x0;
            const double want = hp.b * x * x + hp.c * x * x * x * x +
                                hp.a * (v.dot(p2 * v)).real();
            CHECK((v.dot(H * v)).real() == doctest::Approx(want).epsilon(1e-9));
        }
    }
    SUBCASE("drive vanishes at a quarter period") {
        const DrivenHamiltonianParams hp{5.0, -8.0, 1.0, 15.0, 2.0 * M_PI};
        const DrivenHamiltonianParams undriven{5.0, -8.0, 1.0, 0.0, 0.0};
        const Operator H1 = build_hamiltonian(hp, 0.25, 16, hs, FrameCenter{});
        const Operator H2 = build_hamiltonian(undriven, 0.25, 16, hs, FrameCenter{});
        CHECK((H1 - H2).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("sse_step basics") {
    const HbarS hs(kHbar, 1.0);
    SUBCASE("gamma = 0 and H = 0 is the identity") {
        const StateVector psi = squeezed_start(kHbar, 0.0, hs, 24);
        const StateVector out =
            sse_step(psi, {}, MeasurementRates::none(), 0.0, 1e-4, NoiseIncrement{});
        CHECK((out.amps - psi.amps).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("position-only with Gamma = 0 is the unitary step alone") {
        const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};
        const StateVector psi = coherent_state(Complex(0.5, 0.2), 32, hs);
        const StateVector unitary =
            sse_step(psi, hp, MeasurementRates::none(), 0.0, 1e-4, NoiseIncrement{});
        const StateVector stepped = position_only_step(psi, hp, 0.0, 0.0, 1e-4, 0.37);
        CHECK((unitary.amps - stepped.amps).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("harmonic rotation follows the classical flow") {
    // a = b harmonic: the coherent center rotates at Omega = 2a and the state
    // returns after one period
    const double a = 2.0;
    const HbarS hs(kHbar, 1.0);
    const DrivenHamiltonianParams hp{a, a, 0.0, 0.0, 0.0};
    const FrameCenter f0{0.8, 0.0};
    const StateVector psi = coherent_state(f0.alpha(hs), 48, hs, f0);

    TrajectoryOptions opt;
    opt.t_final = M_PI / a; // one period
    opt.dt = opt.t_final / 16000;
    opt.snapshot_interval = opt.t_final / 8;
    opt.record_stride = 0;
    const TrajectoryResult res =
        run_trajectory(psi, hp, MeasurementRates::none(), opt, Philox(1, 0));
    REQUIRE(!res.failure);

    const double omega = 2.0 * a;
    for (const Snapshot& s : res.snapshots) {
        const double x = f0.x0 * std::cos(omega * s.t);
        const double p = -f0.x0 * std::sin(omega * s.t);
        CHECK(std::abs(s.moments.mean_x - x) < 2e-5);
        CHECK(std::abs(s.moments.mean_p - p) < 2e-5);
        // coherent width is stationary for the matched oscillator
        CHECK(s.moments.Vx == doctest::Approx(kHbar / 2).epsilon(2e-3));
    }
    CHECK(std::abs(res.snapshots.back().moments.mean_x - f0.x0) < 2e-5);
    CHECK(std::abs(res.snapshots.back().moments.mean_p - 0.0) < 2e-5);
}

TEST_CASE("joint-measurement ensemble reproduces the tanh moment solutions") {
    const double gamma = kSqrtHalf, s = 1.0;
    const HbarS hs(kHbar, s);
    const GaussianMoments m0{kHbar, kHbar / 4, 0.0};
    const StateVector initial = gaussian_state(m0.Vx, m0.Vp, m0.Cxp, hs, 32);

    EnsembleOptions opt;
    opt.traj.dt = 1e-4;
    opt.traj.t_final = 1.0;
    opt.traj.snapshot_interval = 0.25;
    opt.traj.record_stride = 0;
    opt.n_trajectories = 2000;
    opt.master_seed = 2024;
    const EnsembleResult res =
        run_ensemble(initial, {}, MeasurementRates::joint(gamma, s), opt);
    CHECK(res.n_failed == 0);

    for (std::size_t i = 1; i < res.means.t.size(); ++i) {
        const GaussianMoments cf = moments_closed_form(m0, gamma, s, kHbar, res.means.t[i]);
        CHECK(std::abs(res.means.Vx[i] - cf.Vx) < 0.05 * cf.Vx);
        CHECK(std::abs(res.means.Vp[i] - cf.Vp) < 0.05 * cf.Vp);
        CHECK(std::abs(res.means.Cxp[i] - cf.Cxp) < 0.05 * kHbar / 2);
    }
}

TEST_CASE("position-only momentum heating and Riccati collapse") {
    const double G1 = 1.0;
    const HbarS hs(kHbar, 1.0);
    const GaussianMoments m0{kHbar / 2, kHbar / 2, 0.0};
    const StateVector initial = gaussian_state(m0.Vx, m0.Vp, m0.Cxp, hs, 64);

    EnsembleOptions opt;
    opt.traj.dt = 1e-4;
    opt.traj.t_final = 1.0;
    opt.traj.snapshot_interval = 0.25;
    opt.traj.record_stride = 0;
    opt.n_trajectories = 2000;
    opt.master_seed = 4242;
    const EnsembleResult res =
        run_ensemble(initial, {}, MeasurementRates::position_only(G1), opt);
    CHECK(res.n_failed == 0);

    for (std::size_t i = 1; i < res.means.t.size(); ++i) {
        const GaussianMoments cf = position_only_closed_form(m0, G1, kHbar, res.means.t[i]);
        CHECK(std::abs(res.means.Vp[i] - cf.Vp) < 0.05 * cf.Vp);
        CHECK(std::abs(res.means.Vx[i] - cf.Vx) < 0.05 * cf.Vx);
    }
}

TEST_CASE("momentum-only mirror of the variance collapse") {
    // variances of a Gaussian state under linear measurement evolve
    // deterministically, so a single trajectory suffices
    const double G2 = 1.0;
    const HbarS hs(kHbar, 1.0);
    const StateVector initial = squeezed_start(kHbar / 2, 0.0, hs, 64);

    TrajectoryOptions opt;
    opt.dt = 1e-4;
    opt.t_final = 1.0;
    opt.snapshot_interval = 0.5;
    opt.record_stride = 0;
    const TrajectoryResult res =
        run_trajectory(initial, {}, MeasurementRates::momentum_only(G2), opt, Philox(5, 0));
    REQUIRE(!res.failure);
    const GaussianMoments m0{kHbar / 2, kHbar / 2, 0.0};
    for (const Snapshot& s : res.snapshots) {
        if (s.t == 0.0) continue;
        // x <-> p mirror of the position-only closed form
        const GaussianMoments cf = position_only_closed_form(m0, G2, kHbar, s.t);
        CHECK(std::abs(s.moments.Vp - cf.Vx) < 0.03 * cf.Vx);
        CHECK(std::abs(s.moments.Vx - cf.Vp) < 0.03 * cf.Vp);
    }
}

TEST_CASE("free particle under position measurement approaches the fixed point") {
    const double a = 5.0, G1 = 2.0;
    const HbarS hs(kHbar, 1.0);
    const DrivenHamiltonianParams hp{a, 0.0, 0.0, 0.0, 0.0};
    const StateVector initial = coherent_state(0.0, 64, hs);

    TrajectoryOptions opt;
    opt.dt = 1e-4;
    opt.t_final = 10.0 / G1;
    opt.snapshot_interval = 1.0;
    opt.record_stride = 0;
    const TrajectoryResult res =
        run_trajectory(initial, hp, MeasurementRates::position_only(G1), opt, Philox(77, 0));
    REQUIRE(!res.failure);
    const GaussianMoments fp{std::sqrt(a / (2 * G1)) * kHbar, std::sqrt(G1 / (2 * a)) * kHbar,
                             kHbar / 2};
    const Snapshot& last = res.snapshots.back();
    CHECK(std::abs(last.moments.Vx - fp.Vx) < 0.15 * fp.Vx);
    CHECK(std::abs(last.moments.Vp - fp.Vp) < 0.15 * fp.Vp);
    CHECK(std::abs(last.moments.Cxp - fp.Cxp) < 0.15 * fp.Cxp);
}

TEST_CASE("norm drift per step stays small on the localized quartic run") {
    // the pre-renormalization deviation per Euler step is
    // gamma (2<A^dag A>+1) (|dxi|^2 - dt) + ..., i.e. O(dt) with chi-squared
    // fluctuations; squeeze transients push the worst step to a few 1e-3 at
    // dt = 1e-4, and the whole distribution scales linearly with dt
    const HbarS hs(kHbar, 1.0);
    const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};
    const FrameCenter f{-2.0, 1.0};
    const StateVector initial = coherent_state(f.alpha(hs), 128, hs, f);

    TrajectoryOptions opt;
    opt.dt = 1e-4;
    opt.t_final = 1.0;
    opt.snapshot_interval = 0.1;
    opt.record_stride = 0;
    const TrajectoryResult res = run_trajectory(
        initial, hp, MeasurementRates::joint(kSqrtHalf, 1.0), opt, Philox(3, 0));
    REQUIRE(!res.failure);
    int below = 0;
    double worst = 0.0;
    for (const Snapshot& s : res.snapshots) {
        worst = std::max(worst, s.max_norm_drift);
        if (s.max_norm_drift < 1e-3) ++below;
    }
    CHECK(worst < 5e-3);
    CHECK(below * 2 >= static_cast<int>(res.snapshots.size()));

    // O(dt) scaling of the drift: a 4x smaller step shrinks the worst drift
    // by roughly 4x
    TrajectoryOptions fine = opt;
    fine.dt = 2.5e-5;
    const TrajectoryResult res_fine = run_trajectory(
        initial, hp, MeasurementRates::joint(kSqrtHalf, 1.0), fine, Philox(3, 0));
    REQUIRE(!res_fine.failure);
    double worst_fine = 0.0;
    for (const Snapshot& s : res_fine.snapshots)
        worst_fine = std::max(worst_fine, s.max_norm_drift);
    CHECK(worst_fine < 1e-3);
    CHECK(worst_fine < 0.6 * worst);
}

TEST_CASE("record increments reuse the driving noise") {
    const HbarS hs(kHbar, 1.0);
    const StateVector initial = coherent_state(0.0, 32, hs);
    TrajectoryOptions opt;
    opt.dt = 1e-4;
    opt.t_final = 10.0; // 1e5 steps
    opt.snapshot_interval = 1.0;
    opt.record_stride = 1;
    const double gamma = 1.0;
    const TrajectoryResult res =
        run_trajectory(initial, {}, MeasurementRates::joint(gamma, 1.0), opt, Philox(8, 0));
    REQUIRE(!res.failure);
    const MeasurementRecord& rec = res.record;
    REQUIRE(rec.size() == 100000);

    SUBCASE("regression of dX1 - <x> dt on dW1 gives the record amplitude") {
        // mean_x in the record is post-step; reconstruct pre-step via X sums:
        // dX1 = mean_x_pre dt + amp dW1 with the same draw, so regressing
        // (dX1 - mean_x_pre dt) is exact; use the stored dW and increments
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < rec.size(); ++i) {
            // remove the deterministic part using the recorded post-step mean
            // of the previous entry (equal to the pre-step mean of this one)
            const double mean_pre = i == 0 ? 0.0 : rec.mean_x[i - 1];
            const double y = rec.dX1[i] - mean_pre * opt.dt;
            sxy += rec.dW1[i] * y;
            sxx += rec.dW1[i] * rec.dW1[i];
        }
        const double slope = sxy / sxx;
        const double want = 0.5 * std::sqrt(kHbar / (gamma * 1.0));
        CHECK(std::abs(slope - want) < 0.01 * want);
    }
    SUBCASE("windowed record noise averages to zero") {
        // x1 - <x> = (dX1 - <x> dt)/dt accumulated over long windows is a
        // scaled Brownian increment with mean zero
        const std::size_t window = 5000;
        const double amp = 0.5 * std::sqrt(kHbar / gamma);
        std::vector<double> means;
        for (std::size_t start = 0; start + window <= rec.size(); start += window) {
            double acc = 0;
            for (std::size_t i = start; i < start + window; ++i) {
                const double mean_pre = i == 0 ? 0.0 : rec.mean_x[i - 1];
                acc += rec.dX1[i] - mean_pre * opt.dt;
            }
            means.push_back(acc / (window * opt.dt));
        }
        double grand = 0;
        for (double m : means) grand += m;
        grand /= means.size();
        // sd of each window mean: amp / sqrt(window dt)
        const double se = amp / std::sqrt(window * opt.dt) / std::sqrt((double)means.size());
        CHECK(std::abs(grand) < 3.0 * se);
    }
}

TEST_CASE("weak order one in dt with common random numbers") {
    // Bias differences between dt levels sharing one Brownian path isolate
    // the Euler-Maruyama order: d(dt -> dt/2) = c dt/2, so consecutive
    // differences halve (log-log slope 1).
    const HbarS hs(kHbar, 1.0);
    const double gamma = 4.0;
    const GaussianMoments m0{kHbar, kHbar / 4, 0.0};
    const StateVector initial = gaussian_state(m0.Vx, m0.Vp, m0.Cxp, hs, 32);
    const double T = 0.3;
    const double dt_fine = 1e-4;
    const int n_fine = 3000;
    const int M = 128;
    const std::vector<int> levels = {8, 4, 2, 1};

    std::vector<double> vtot(levels.size());
    std::vector<double> diff(levels.size() - 1, 0.0);
    for (int traj = 0; traj < M; ++traj) {
        Philox rng(777, traj);
        std::vector<double> w1(n_fine), w2(n_fine);
        const double sd = std::sqrt(dt_fine);
        for (int i = 0; i < n_fine; ++i) {
            w1[i] = rng.next_gaussian() * sd;
            w2[i] = rng.next_gaussian() * sd;
        }
        for (std::size_t L = 0; L < levels.size(); ++L) {
            const int blk = levels[L];
            const double dt = dt_fine * blk;
            StateVector psi = initial;
            for (int k = 0; k < n_fine / blk; ++k) {
                NoiseIncrement noise;
                for (int j = 0; j < blk; ++j) {
                    noise.dW1 += w1[k * blk + j];
                    noise.dW2 += w2[k * blk + j];
                }
                psi = sse_step(psi, {}, MeasurementRates::joint(gamma, 1.0), k * dt, dt, noise);
            }
            const StateMoments m = state_moments(psi);
            vtot[L] = m.Vx + m.Vp;
        }
        for (std::size_t L = 0; L + 1 < levels.size(); ++L) diff[L] += vtot[L] - vtot[L + 1];
    }
    for (double& d : diff) d /= M;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
        REQUIRE(diff[i] > 0.0);
        const double lx = std::log(levels[i] * dt_fine), ly = std::log(diff[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = diff.size();
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("mean bias on the driven quartic shrinks with dt") {
    // E[<x>(T)] against the finest level; the coarse-step bias must drop by
    // clearly more than the level ratio would allow for a non-converging
    // scheme (the exact slope mixes the Euler O(dt) and Strang O(dt^2) parts)
    const HbarS hs(kHbar, 1.0);
    const int N = 96;
    const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};
    const MeasurementRates rates = MeasurementRates::joint(kSqrtHalf, 1.0);
    const FrameCenter f{-2.0, 1.0};
    const StateVector initial = coherent_state(f.alpha(hs), N, hs, f);

    const double T = 0.24;
    const double dt_fine = 1e-4;
    const int n_fine = 2400;
    const int M = 128;
    const std::vector<int> levels = {16, 8, 2, 1};

    std::vector<double> mean_x(levels.size(), 0.0);
    for (int traj = 0; traj < M; ++traj) {
        Philox rng(555, traj);
        std::vector<double> w1(n_fine), w2(n_fine);
        const double sd = std::sqrt(dt_fine);
        for (int i = 0; i < n_fine; ++i) {
            w1[i] = rng.next_gaussian() * sd;
            w2[i] = rng.next_gaussian() * sd;
        }
        for (std::size_t L = 0; L < levels.size(); ++L) {
            const int blk = levels[L];
            const double dt = dt_fine * blk;
            StateVector psi = initial;
            for (int k = 0; k < n_fine / blk; ++k) {
                NoiseIncrement noise;
                for (int j = 0; j < blk; ++j) {
                    noise.dW1 += w1[k * blk + j];
                    noise.dW2 += w2[k * blk + j];
                }
                psi = sse_step(psi, hp, rates, k * dt, dt, noise);
                if (std::abs(expect_a(psi.amps)) > 1.0) {
                    const StateMoments m = state_moments(psi);
                    psi = recenter(psi, FrameCenter{m.mean_x, m.mean_p});
                }
            }
            mean_x[L] += expect_x(psi);
        }
    }
    for (double& v : mean_x) v /= M;
    const double ref = mean_x.back();
    const double b16 = std::abs(mean_x[0] - ref);
    const double b8 = std::abs(mean_x[1] - ref);
    const double b2 = std::abs(mean_x[2] - ref);
    CHECK(b16 > 1.8 * b8);
    CHECK(b8 > 1.8 * b2);
    CHECK(b2 < 1e-4);
}

TEST_CASE("recenter policy does not change the physics") {
    const HbarS hs(kHbar, 1.0);
    const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};
    const FrameCenter f{-2.0, 1.0};
    const StateVector initial = coherent_state(f.alpha(hs), 128, hs, f);

    TrajectoryOptions opt;
    opt.dt = 1e-4;
    opt.t_final = 0.5;
    opt.snapshot_interval = 0.5;
    opt.record_stride = 0;

    opt.recenter_threshold = 0.7;
    const TrajectoryResult a = run_trajectory(initial, hp, MeasurementRates::joint(kSqrtHalf, 1.0),
                                              opt, Philox(99, 0));
    opt.recenter_threshold = 1.3;
    const TrajectoryResult b = run_trajectory(initial, hp, MeasurementRates::joint(kSqrtHalf, 1.0),
                                              opt, Philox(99, 0));
    REQUIRE(!a.failure);
    REQUIRE(!b.failure);
    CHECK(std::abs(a.snapshots.back().moments.mean_x - b.snapshots.back().moments.mean_x) < 1e-6);
    CHECK(std::abs(a.snapshots.back().moments.mean_p - b.snapshots.back().moments.mean_p) < 1e-6);
    CHECK(std::abs(a.snapshots.back().moments.Vx - b.snapshots.back().moments.Vx) < 1e-7);
}

TEST_CASE("truncation overflow is reported with the trajectory time") {
    const HbarS hs(kHbar, 1.0);
    // no-measurement quartic run in a tiny basis must overflow quickly
    const FrameCenter f{-2.0, 1.0};
    const StateVector initial = coherent_state(f.alpha(hs), 8, hs, f);
    const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};

    TrajectoryOptions opt;
    opt.dt = 1e-4;
    opt.t_final = 2.0;
    opt.snapshot_interval = 0.01;
    opt.record_stride = 0;
    opt.recenter_threshold = 1e9; // keep the frame pinned
    const TrajectoryResult res =
        run_trajectory(initial, hp, MeasurementRates::none(), opt, Philox(1, 0));
    REQUIRE(res.failure.has_value());
    CHECK(res.failure->time > 0.0);
    CHECK(res.failure->time < 2.0);
    CHECK(res.snapshots.size() >= 1); // partial series retained
}
