#include "contmeas/lindblad.hpp"

#include <cmath>
#include <string>

namespace contmeas {

namespace {

// [A,[A, rho]] = A^2 rho + rho A^2 - 2 A rho A for Hermitian A and rho;
// uses rho A^2 = (A^2 rho)^dag to save a product.
Eigen::MatrixXcd double_commutator(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& A2,
                                   const Eigen::MatrixXcd& rho) {
    const Eigen::MatrixXcd A2rho = A2 * rho;
    const Eigen::MatrixXcd Arho = A * rho;
    return A2rho + A2rho.adjoint() - 2.0 * (Arho * A);
}

struct FrameOps {
    Eigen::MatrixXcd x, p, x2, p2;
    Eigen::MatrixXcd h_static; // a p^2 + b x^2 + c x^4 (lab-corrected)
    Eigen::MatrixXcd x_drive;  // x + x0 (multiplies d cos(omega t))

    FrameOps(int N, const HbarS& hs, const DrivenHamiltonianParams& hp, FrameCenter f) {
        const LadderOps ops = build_ladder(N, hs);
        const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N + 1, N + 1);
        x = ops.x + f.x0 * I;
        p = ops.p + f.p0 * I;
        x2 = x * x;
        p2 = p * p;
        h_static = hp.a * p2 + hp.b * x2 + hp.c * (x2 * x2);
        x_drive = x;
    }
};

Eigen::MatrixXcd rhs_with_ops(const Eigen::MatrixXcd& rho, const FrameOps& ops,
                              const LindbladGenerator& gen, double t) {
    const Complex ih(0.0, 1.0 / gen.hs.hbar);
    Eigen::MatrixXcd H = ops.h_static;
    if (gen.hp.d != 0.0) H += (gen.hp.d * std::cos(gen.hp.omega * t)) * ops.x_drive;
    const Eigen::MatrixXcd Hrho = H * rho;
    Eigen::MatrixXcd out = -ih * (Hrho - Hrho.adjoint());
    if (gen.rates.Gamma1 > 0.0)
        out -= (gen.rates.Gamma1 / (2.0 * gen.hs.hbar)) * double_commutator(ops.x, ops.x2, rho);
    if (gen.rates.Gamma2 > 0.0)
        out -= (gen.rates.Gamma2 / (2.0 * gen.hs.hbar)) * double_commutator(ops.p, ops.p2, rho);
    return out;
}

} // namespace

DensityMatrix lindblad_rhs(const DensityMatrix& rho, const LindbladGenerator& gen, double t) {
    const int N = rho.max_index();
    if (N < 1) throw BasisTooSmallError("lindblad_rhs: basis too small");
    FrameOps ops(N, gen.hs, gen.hp, rho.frame);
    return DensityMatrix{rhs_with_ops(rho.mat, ops, gen, t), rho.frame, rho.hs};
}

Eigen::MatrixXcd dissipator_a_form(const Eigen::MatrixXcd& rho, double gamma) {
    const int N = static_cast<int>(rho.rows()) - 1;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    for (int n = 1; n <= N; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const Eigen::MatrixXcd ad = a.adjoint();
    // -gamma [a,[a^dag, rho]]
    const Eigen::MatrixXcd inner = ad * rho - rho * ad;
    return -gamma * (a * inner - inner * a);
}

LindbladResult propagate(const DensityMatrix& rho0, const LindbladGenerator& gen,
                         const LindbladOptions& opt) {
    if (!(opt.dt > 0.0)) throw Error("propagate: dt must be positive");
    const long n_steps = std::lround(opt.t_final / opt.dt);
    const long snap_stride = std::lround(opt.snapshot_interval / opt.dt);
    if (snap_stride < 1) throw Error("propagate: snapshot_interval must be >= dt");

    const int N = rho0.max_index();
    LindbladResult res;
    res.final_state = rho0;
    Eigen::MatrixXcd& rho = res.final_state.mat;
    FrameCenter& frame = res.final_state.frame;
    const HbarS hs = rho0.hs;

    auto ops = std::make_unique<FrameOps>(N, hs, gen.hp, frame);
    res.min_eigenvalue = 1.0;
    std::size_t next_state_snap = 0;

    Eigen::MatrixXcd k1, k2, k3, k4;
    for (long k = 0; k <= n_steps; ++k) {
        const double t = k * opt.dt;
        if (k % snap_stride == 0 || k == n_steps) {
            LindbladSnapshot snap;
            snap.t = t;
            snap.moments = state_moments(res.final_state);
            snap.trace_error = std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag());
            snap.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
                0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
            snap.min_eigenvalue = es.eigenvalues().minCoeff();
            res.snapshots.push_back(snap);
            res.max_trace_error = std::max(res.max_trace_error, snap.trace_error);
            res.min_eigenvalue = std::min(res.min_eigenvalue, snap.min_eigenvalue);
            if (snap.trace_error > 1e-6)
                throw StepTooLargeError("propagate: trace drift " +
                                        std::to_string(snap.trace_error) + " at t = " +
                                        std::to_string(t) + "; reduce dt");
            // diagonal tail leak would silently corrupt the run
            double tail = 0.0;
            for (int n = static_cast<int>(0.9 * N) + 1; n <= N; ++n) tail += rho(n, n).real();
            if (tail > 1e-6)
                throw TruncationError("propagate: density tail mass " + std::to_string(tail), t);
        }
        if (next_state_snap < opt.state_snapshot_times.size() &&
            std::abs(opt.state_snapshot_times[next_state_snap] - t) < 0.5 * opt.dt) {
            res.state_snapshots.push_back(res.final_state);
            ++next_state_snap;
        }
        if (k == n_steps) break;

        k1 = rhs_with_ops(rho, *ops, gen, t);
        k2 = rhs_with_ops(rho + (0.5 * opt.dt) * k1, *ops, gen, t + 0.5 * opt.dt);
        k3 = rhs_with_ops(rho + (0.5 * opt.dt) * k2, *ops, gen, t + 0.5 * opt.dt);
        k4 = rhs_with_ops(rho + opt.dt * k3, *ops, gen, t + opt.dt);
        rho += (opt.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (!(rho.cwiseAbs().maxCoeff() < 1e3))
            throw StepTooLargeError("propagate: density matrix blow-up at t = " +
                                    std::to_string(t + opt.dt));

        // moving frame, same policy as the trajectories
        Complex ea = 0.0;
        for (int n = 0; n < N; ++n)
            ea += std::sqrt(static_cast<double>(n + 1)) * rho(n + 1, n);
        if (std::abs(ea) > opt.recenter_threshold) {
            const StateMoments m = state_moments(res.final_state);
            res.final_state = recenter(res.final_state, FrameCenter{m.mean_x, m.mean_p});
            ops = std::make_unique<FrameOps>(N, hs, gen.hp, frame);
        }
    }
    return res;
}

double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.mat.rows() != rho2.mat.rows())
        throw DimensionError("trace_distance: dimension mismatch");
    if (!(rho1.frame == rho2.frame))
        throw Error("trace_distance: density matrices must share a frame");
    const Eigen::MatrixXcd diff = rho1.mat - rho2.mat;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (diff + diff.adjoint()),
                                                       Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

} // namespace contmeas
