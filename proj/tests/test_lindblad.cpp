#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "contmeas/ensemble.hpp"
#include "contmeas/gaussian.hpp"
#include "contmeas/lindblad.hpp"
#include "contmeas/rng.hpp"

using namespace contmeas;
using Complex = std::complex<double>;

namespace {

constexpr double kHbar = 0.05;

DensityMatrix random_density(int N, const HbarS& hs, std::uint64_t seed, int support, int rank) {
    Philox rng(seed, 0);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    for (int r = 0; r < rank; ++r) {
        Vector v = Vector::Zero(N + 1);
        for (int n = 0; n <= support; ++n) v(n) = Complex(rng.next_gaussian(), rng.next_gaussian());
        v.normalize();
        rho += (1.0 / rank) * v * v.adjoint();
    }
    return DensityMatrix{std::move(rho), FrameCenter{}, hs};
}

} // namespace

TEST_CASE("vacuum dissipator expands to |0><0| - |1><1|") {
    const HbarS hs(1.0, 1.0);
    const int N = 6;
    DensityMatrix rho{Eigen::MatrixXcd::Zero(N + 1, N + 1), FrameCenter{}, hs};
    rho.mat(0, 0) = 1.0;
    const double gamma = 0.8;
    LindbladGenerator gen{{}, MeasurementRates::joint(gamma, 1.0), hs};
    const DensityMatrix d = lindblad_rhs(rho, gen, 0.0);
    for (int m = 0; m <= N; ++m)
        for (int n = 0; n <= N; ++n) {
            double want = 0.0;
            if (m == 0 && n == 0) want = -gamma;
            if (m == 1 && n == 1) want = gamma;
            CHECK(std::abs(d.mat(m, n) - want) < 1e-14);
        }
}

TEST_CASE("rhs preserves trace and Hermiticity") {
    const HbarS hs(kHbar, 1.3);
    const DensityMatrix rho = random_density(24, hs, 5, 18, 3);
    LindbladGenerator gen{DrivenHamiltonianParams{5.0, 5.0, 1.0, 2.0, 1.5},
                         MeasurementRates::joint(0.7, 1.3), hs};
    const DensityMatrix d = lindblad_rhs(rho, gen, 0.37);
    CHECK(std::abs(d.mat.trace()) < 1e-12);
    CHECK((d.mat - d.mat.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("unitary part conserves energy for a static Hamiltonian") {
    const HbarS hs(kHbar, 1.0);
    const DensityMatrix rho = random_density(20, hs, 7, 14, 2);
    const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};
    LindbladGenerator gen{hp, MeasurementRates::none(), hs};
    const DensityMatrix d = lindblad_rhs(rho, gen, 0.0);
    const Operator H = build_hamiltonian(hp, 0.0, 20, hs, FrameCenter{});
    CHECK(std::abs((H * d.mat).trace()) < 1e-11);
}

TEST_CASE("x/p double-commutator form equals the a form") {
    const HbarS hs(kHbar, 1.4);
    const double gamma = 0.9;
    const DensityMatrix rho = random_density(28, hs, 11, 20, 4);
    LindbladGenerator gen{{}, MeasurementRates::joint(gamma, hs.s), hs};
    const DensityMatrix via_xp = lindblad_rhs(rho, gen, 0.0);
    const Eigen::MatrixXcd via_a = dissipator_a_form(rho.mat, gamma);
    // edge rows corrupted by truncation in either representation are excluded
    const int M = 26;
    CHECK((via_xp.mat.topLeftCorner(M, M) - via_a.topLeftCorner(M, M)).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("propagation monitors") {
    const HbarS hs(kHbar, 1.0);
    SUBCASE("trace, Hermiticity and positivity stay clean") {
        const StateVector psi = gaussian_state(kHbar, kHbar / 4, 0.0, hs, 32);
        DensityMatrix rho0{psi.amps * psi.amps.adjoint(), FrameCenter{}, hs};
        LindbladGenerator gen{{}, MeasurementRates::joint(1.0, 1.0), hs};
        LindbladOptions opt;
        opt.dt = 1e-4;
        opt.t_final = 1.0;
        opt.snapshot_interval = 0.1;
        const LindbladResult res = propagate(rho0, gen, opt);
        CHECK(res.max_trace_error < 1e-8);
        CHECK(res.min_eigenvalue > -1e-8);
        for (const LindbladSnapshot& s : res.snapshots) CHECK(s.hermiticity_error < 1e-10);
    }
    SUBCASE("purity decays monotonically for H = 0") {
        for (int rep = 0; rep < 20; ++rep) {
            const DensityMatrix rho0 = random_density(32, hs, 100 + rep, 8, 2);
            LindbladGenerator gen{{}, MeasurementRates::joint(1.0, 1.0), hs};
            LindbladOptions opt;
            opt.dt = 2e-4;
            opt.t_final = 0.2;
            opt.snapshot_interval = 0.02;
            const LindbladResult res = propagate(rho0, gen, opt);
            // purity from the propagated snapshots
            double prev = (rho0.mat * rho0.mat).trace().real();
            DensityMatrix rho = rho0;
            for (int k = 1; k <= 10; ++k) {
                LindbladOptions step = opt;
                step.t_final = 0.02;
                rho = propagate(rho, gen, step).final_state;
                const double purity = (rho.mat * rho.mat).trace().real();
                CHECK(purity <= prev + 1e-10);
                prev = purity;
            }
        }
    }
    SUBCASE("oversized step reports step-too-large") {
        const StateVector psi = coherent_state(0.0, 48, hs);
        DensityMatrix rho0{psi.amps * psi.amps.adjoint(), FrameCenter{}, hs};
        LindbladGenerator gen{DrivenHamiltonianParams{5.0, 5.0, 1.0, 0.0, 0.0},
                             MeasurementRates::joint(0.7, 1.0), hs};
        LindbladOptions opt;
        opt.dt = 0.02; // far beyond the RK4 stability limit for this H
        opt.t_final = 1.0;
        opt.snapshot_interval = 0.1;
        CHECK_THROWS_AS(propagate(rho0, gen, opt), Error);
    }
}

TEST_CASE("unconditional moment growth rates") {
    const HbarS hs(kHbar, 1.0);
    SUBCASE("position-only: Vp grows at hbar Gamma1 for any state") {
        const double G1 = 1.0;
        const StateVector psi = gaussian_state(kHbar / 2, kHbar / 2, 0.0, hs, 32);
        DensityMatrix rho0{psi.amps * psi.amps.adjoint(), FrameCenter{}, hs};
        LindbladGenerator gen{{}, MeasurementRates::position_only(G1), hs};
        LindbladOptions opt;
        opt.dt = 1e-4;
        opt.t_final = 0.5;
        opt.snapshot_interval = 0.05;
        const LindbladResult res = propagate(rho0, gen, opt);
        for (std::size_t i = 1; i < res.snapshots.size(); ++i) {
            const double slope = (res.snapshots[i].moments.Vp - res.snapshots[i - 1].moments.Vp) /
                                 (res.snapshots[i].t - res.snapshots[i - 1].t);
            CHECK(std::abs(slope - kHbar * G1) < 1e-6);
        }
    }
    SUBCASE("joint: Vx grows at gamma hbar / s in the unconditional flow") {
        const double gamma = 0.8, s = 1.3;
        const HbarS h2(kHbar, s);
        const StateVector psi =
            gaussian_state(kHbar / (2 * s), s * kHbar / 2, 0.0, h2, 32);
        DensityMatrix rho0{psi.amps * psi.amps.adjoint(), FrameCenter{}, h2};
        LindbladGenerator gen{{}, MeasurementRates::joint(gamma, s), h2};
        LindbladOptions opt;
        opt.dt = 1e-4;
        opt.t_final = 0.4;
        opt.snapshot_interval = 0.05;
        const LindbladResult res = propagate(rho0, gen, opt);
        for (std::size_t i = 1; i < res.snapshots.size(); ++i) {
            const double slope = (res.snapshots[i].moments.Vx - res.snapshots[i - 1].moments.Vx) /
                                 (res.snapshots[i].t - res.snapshots[i - 1].t);
            CHECK(std::abs(slope - gamma * kHbar / s) < 1e-6);
        }
    }
}

TEST_CASE("trace distance") {
    const HbarS hs(kHbar, 1.0);
    const StateVector a = coherent_state(0.0, 40, hs);
    const StateVector b = coherent_state(Complex(3.0, 0.0), 40, hs);
    DensityMatrix ra{a.amps * a.amps.adjoint(), FrameCenter{}, hs};
    DensityMatrix rb{b.amps * b.amps.adjoint(), FrameCenter{}, hs};
    CHECK(trace_distance(ra, ra) < 1e-14);
    // nearly orthogonal pure states have trace distance close to 1
    CHECK(trace_distance(ra, rb) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("ensemble-averaged projectors reproduce the unconditional evolution") {
    const HbarS hs(kHbar, 1.0);
    const double gamma = 1.0;
    const int N = 32;
    const StateVector initial = gaussian_state(kHbar, kHbar / 4, 0.0, hs, N);

    EnsembleOptions eopt;
    eopt.traj.dt = 1e-4;
    eopt.traj.t_final = 0.5;
    eopt.traj.snapshot_interval = 0.5;
    eopt.traj.record_stride = 0;
    eopt.n_trajectories = 2000;
    eopt.master_seed = 31337;
    const EnsembleResult ens =
        run_ensemble(initial, {}, MeasurementRates::joint(gamma, 1.0), eopt);
    REQUIRE(ens.n_failed == 0);

    DensityMatrix rho0{initial.amps * initial.amps.adjoint(), FrameCenter{}, hs};
    LindbladGenerator gen{{}, MeasurementRates::joint(gamma, 1.0), hs};
    LindbladOptions lopt;
    lopt.dt = 1e-4;
    lopt.t_final = 0.5;
    lopt.snapshot_interval = 0.1;
    const LindbladResult lres = propagate(rho0, gen, lopt);

    const DensityMatrix avg =
        average_projector(ens.trajectories, lres.final_state.frame, lres.final_state.max_index());
    CHECK(trace_distance(avg, lres.final_state) <= 0.05);
}
