#include "contmeas/fock.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace contmeas {

namespace {

std::mutex g_ws_mutex;
std::map<int, std::shared_ptr<const FockWorkspace>> g_ws_cache;

Eigen::MatrixXcd lowering_matrix(int N) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    for (int n = 1; n <= N; ++n)
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

// Coherent amplitudes of |alpha> relative to the local vacuum, unnormalized
// tail handling left to the caller. Returns the raw (pre-renormalization)
// amplitudes so that 1 - |amps|^2 is the mass lost to truncation.
Vector coherent_amps_raw(Complex alpha, int N) {
    Vector v(N + 1);
    v(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= N; ++n)
        v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return v;
}

} // namespace

std::shared_ptr<const FockWorkspace> fock_workspace(int N) {
    if (N < 1) throw BasisTooSmallError("fock_workspace: basis size N must be >= 1");
    {
        std::lock_guard<std::mutex> lock(g_ws_mutex);
        auto it = g_ws_cache.find(N);
        if (it != g_ws_cache.end()) return it->second;
    }
    auto ws = std::make_shared<FockWorkspace>();
    ws->N = N;

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(N + 1, N + 1);
    for (int n = 1; n <= N; ++n) {
        const double r = std::sqrt(static_cast<double>(n));
        q(n - 1, n) = r;
        q(n, n - 1) = r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qs(q);
    ws->q_eigs = qs.eigenvalues();
    ws->q_vecs = qs.eigenvectors().cast<Complex>();

    Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    for (int n = 1; n <= N; ++n) {
        const double r = std::sqrt(static_cast<double>(n));
        k(n - 1, n) = Complex(0.0, r);
        k(n, n - 1) = Complex(0.0, -r);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ks(k);
    ws->k_eigs = ks.eigenvalues();
    ws->k_vecs = ks.eigenvectors();

    std::lock_guard<std::mutex> lock(g_ws_mutex);
    auto [it, inserted] = g_ws_cache.emplace(N, std::move(ws));
    return it->second;
}

LadderOps build_ladder(int N, const HbarS& hs) {
    if (N < 1) throw BasisTooSmallError("build_ladder: basis size N must be >= 1");
    LadderOps ops;
    ops.a = lowering_matrix(N);
    ops.adag = ops.a.adjoint();

    const double cx = std::sqrt(hs.hbar / (2.0 * hs.s));
    const double cp = std::sqrt(hs.hbar * hs.s / 2.0);
    ops.x = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    ops.p = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    for (int n = 1; n <= N; ++n) {
        const double r = std::sqrt(static_cast<double>(n));
        ops.x(n - 1, n) = cx * r;
        ops.x(n, n - 1) = cx * r;
        ops.p(n - 1, n) = Complex(0.0, -cp * r);
        ops.p(n, n - 1) = Complex(0.0, cp * r);
    }
    return ops;
}

double tail_mass(const Vector& amps) {
    const int N = static_cast<int>(amps.size()) - 1;
    const int start = static_cast<int>(0.9 * N) + 1;
    double m = 0.0;
    for (int n = start; n <= N; ++n) m += std::norm(amps(n));
    const double total = amps.squaredNorm();
    return total > 0.0 ? m / total : 0.0;
}

void check_tail(const StateVector& psi, double tol, double when) {
    const double m = tail_mass(psi.amps);
    if (m > tol) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "truncation overflow: tail mass %.3e exceeds %.1e", m,
                      tol);
        throw TruncationError(buf, when);
    }
}

StateVector coherent_state(Complex alpha, int N, const HbarS& hs, FrameCenter frame) {
    if (N < 1) throw BasisTooSmallError("coherent_state: basis size N must be >= 1");
    const Complex local = alpha - frame.alpha(hs);
    Vector raw = coherent_amps_raw(local, N);
    const double missing = 1.0 - raw.squaredNorm();
    if (missing > 1e-8)
        throw TruncationError("coherent_state: mass beyond basis is " + std::to_string(missing));
    StateVector psi{std::move(raw), frame, hs};
    psi.normalize();
    return psi;
}

StateVector gaussian_state(double Vx, double Vp, double Cxp, const HbarS& hs, int N,
                           FrameCenter frame) {
    if (N < 1) throw BasisTooSmallError("gaussian_state: basis size N must be >= 1");
    const double hbar = hs.hbar, s = hs.s;
    const double det = Vx * Vp - Cxp * Cxp;
    if (std::abs(det - hbar * hbar / 4.0) > 1e-9 * hbar * hbar)
        throw Error("gaussian_state: moments are not a pure Gaussian state (Vx Vp - C^2 != hbar^2/4)");

    // squeezed vacuum S(r e^{i phi})|0>: solve cosh(2r), phi from the moments
    const double c2r = s * Vx / hbar + Vp / (s * hbar);
    const double r = 0.5 * std::acosh(std::max(1.0, c2r));
    const double sh2r = std::sinh(2.0 * r);
    double phi = 0.0;
    if (sh2r > 1e-14)
        phi = std::atan2(-2.0 * Cxp / hbar, (Vp / (s * hbar) - s * Vx / hbar));

    Vector amps = Vector::Zero(N + 1);
    amps(0) = 1.0;
    const Complex tz = -std::polar(std::tanh(r), phi);
    for (int m = 1; 2 * m <= N; ++m)
        amps(2 * m) = amps(2 * m - 2) * tz * std::sqrt((2.0 * m - 1.0) / (2.0 * m));
    StateVector psi{std::move(amps), frame, hs};
    psi.normalize();
    check_tail(psi);
    return psi;
}

Operator displacement_operator(Complex zeta, int N) {
    if (N < 1) throw BasisTooSmallError("displacement_operator: basis size N must be >= 1");
    if (std::norm(zeta) > 0.25 * N)
        throw TruncationError("displacement_operator: |zeta|^2 exceeds N/4 truncation bound");
    auto ws = fock_workspace(N);
    const double r = std::abs(zeta);
    const double theta = std::arg(zeta);

    Eigen::VectorXcd phase(N + 1);
    for (int n = 0; n <= N; ++n) phase(n) = std::polar(1.0, theta * n);
    Eigen::VectorXcd core = (Eigen::VectorXcd)(ws->k_eigs.array() * r)
                                .unaryExpr([](double v) { return std::polar(1.0, v); });

    Operator D = ws->k_vecs * core.asDiagonal() * ws->k_vecs.adjoint();
    return phase.asDiagonal() * D * phase.conjugate().asDiagonal();
}

void apply_displacement(Vector& amps, Complex zeta) {
    const int M = static_cast<int>(amps.size()) - 1;
    if (zeta == Complex(0.0, 0.0) || M < 1) return;
    const double gen_norm = 2.0 * std::abs(zeta) * std::sqrt(static_cast<double>(std::max(M, 1)));
    const int chunks = std::max(1, static_cast<int>(std::ceil(gen_norm)));
    const Complex zc = zeta / static_cast<double>(chunks);
    const Complex zcc = std::conj(zc);

    Vector term(M + 1), next(M + 1);
    for (int c = 0; c < chunks; ++c) {
        term = amps;
        double acc_norm2 = amps.squaredNorm();
        for (int j = 1; j <= 64; ++j) {
            // next = (zc a^dag - zc^* a) term / j
            next(0) = -zcc * term(1);
            for (int n = 1; n < M; ++n)
                next(n) = zc * std::sqrt(static_cast<double>(n)) * term(n - 1) -
                          zcc * std::sqrt(static_cast<double>(n + 1)) * term(n + 1);
            next(M) = zc * std::sqrt(static_cast<double>(M)) * term(M - 1);
            next /= static_cast<double>(j);
            amps += next;
            term.swap(next);
            const double tn2 = term.squaredNorm();
            acc_norm2 = amps.squaredNorm();
            if (tn2 < 1e-34 * acc_norm2) break;
        }
    }
}

Complex expect(const Operator& op, const StateVector& psi) {
    if (op.rows() != op.cols() || op.rows() != psi.amps.size())
        throw DimensionError("expect: operator/state dimension mismatch");
    return psi.amps.dot(op * psi.amps);
}

Complex expect_a(const Vector& amps) {
    const int N = static_cast<int>(amps.size()) - 1;
    Complex e = 0.0;
    for (int n = 0; n < N; ++n)
        e += std::conj(amps(n)) * std::sqrt(static_cast<double>(n + 1)) * amps(n + 1);
    return e;
}

Complex expect_a2(const Vector& amps) {
    const int N = static_cast<int>(amps.size()) - 1;
    Complex e = 0.0;
    for (int n = 0; n + 2 <= N; ++n)
        e += std::conj(amps(n)) *
             std::sqrt(static_cast<double>((n + 1) * (n + 2))) * amps(n + 2);
    return e;
}

double expect_n(const Vector& amps) {
    const int N = static_cast<int>(amps.size()) - 1;
    double e = 0.0;
    for (int n = 1; n <= N; ++n) e += n * std::norm(amps(n));
    return e;
}

double expect_x(const StateVector& psi) {
    const double cx = std::sqrt(psi.hs.hbar / (2.0 * psi.hs.s));
    return psi.frame.x0 + 2.0 * cx * expect_a(psi.amps).real();
}

double expect_p(const StateVector& psi) {
    const double cp = std::sqrt(psi.hs.hbar * psi.hs.s / 2.0);
    return psi.frame.p0 + 2.0 * cp * expect_a(psi.amps).imag();
}

StateMoments state_moments(const StateVector& psi) {
    return state_moments(psi.amps, psi.frame, psi.hs);
}

StateMoments state_moments(const Vector& amps, const FrameCenter& frame, const HbarS& hs) {
    const double hbar = hs.hbar, s = hs.s;
    const Complex ea = expect_a(amps);
    const Complex ea2 = expect_a2(amps);
    const double en = expect_n(amps);

    const double cx = std::sqrt(hbar / (2.0 * s));
    const double cp = std::sqrt(hbar * s / 2.0);
    const double mx = 2.0 * cx * ea.real();
    const double mp = 2.0 * cp * ea.imag();

    StateMoments m;
    m.mean_x = frame.x0 + mx;
    m.mean_p = frame.p0 + mp;
    // <x^2> = (hbar/2s)(2 Re<a^2> + 2<n> + 1), <p^2> = (hbar s/2)(2<n> + 1 - 2 Re<a^2>),
    // (1/2)<xp+px> = hbar Im<a^2>  (all frame-local)
    m.Vx = (hbar / (2.0 * s)) * (2.0 * ea2.real() + 2.0 * en + 1.0) - mx * mx;
    m.Vp = (hbar * s / 2.0) * (2.0 * en + 1.0 - 2.0 * ea2.real()) - mp * mp;
    m.Cxp = hbar * ea2.imag() - mx * mp;
    return m;
}

StateMoments state_moments(const DensityMatrix& rho) {
    const int N = rho.max_index();
    const double hbar = rho.hs.hbar, s = rho.hs.s;

    // tr(a rho), tr(a^2 rho), tr(n rho) via the band structure of the ladder ops
    Complex ea = 0.0, ea2 = 0.0;
    double en = 0.0;
    for (int n = 0; n < N; ++n)
        ea += std::sqrt(static_cast<double>(n + 1)) * rho.mat(n + 1, n);
    for (int n = 0; n + 2 <= N; ++n)
        ea2 += std::sqrt(static_cast<double>((n + 1) * (n + 2))) * rho.mat(n + 2, n);
    for (int n = 1; n <= N; ++n) en += n * rho.mat(n, n).real();

    const double cx = std::sqrt(hbar / (2.0 * s));
    const double cp = std::sqrt(hbar * s / 2.0);
    const double mx = 2.0 * cx * ea.real();
    const double mp = 2.0 * cp * ea.imag();

    StateMoments m;
    m.mean_x = rho.frame.x0 + mx;
    m.mean_p = rho.frame.p0 + mp;
    m.Vx = (hbar / (2.0 * s)) * (2.0 * ea2.real() + 2.0 * en + 1.0) - mx * mx;
    m.Vp = (hbar * s / 2.0) * (2.0 * en + 1.0 - 2.0 * ea2.real()) - mp * mp;
    m.Cxp = hbar * ea2.imag() - mx * mp;
    return m;
}

StateVector recenter(const StateVector& psi, FrameCenter new_frame) {
    if (new_frame == psi.frame) return psi;
    const Complex a_old = psi.frame.alpha(psi.hs);
    const Complex a_new = new_frame.alpha(psi.hs);
    const Complex zeta = a_old - a_new;

    StateVector out{psi.amps, new_frame, psi.hs};
    apply_displacement(out.amps, zeta);
    out.amps *= std::polar(1.0, std::imag(std::conj(a_new) * a_old));
    check_tail(out);
    out.normalize();
    return out;
}

DensityMatrix recenter(const DensityMatrix& rho, FrameCenter new_frame) {
    if (new_frame == rho.frame) return rho;
    const Complex a_old = rho.frame.alpha(rho.hs);
    const Complex a_new = new_frame.alpha(rho.hs);
    const Operator D = displacement_operator(a_old - a_new, rho.max_index());
    DensityMatrix out{D * rho.mat * D.adjoint(), new_frame, rho.hs};
    return out;
}

namespace {

// coherent-overlap row <z|psi_local> for one grid node; O(N)
double husimi_node(const Vector& amps, Complex z_local) {
    const int N = static_cast<int>(amps.size()) - 1;
    const double mag2 = std::norm(z_local);
    if (mag2 > 1400.0) return 0.0; // coefficient underflow region
    Complex c = std::exp(-0.5 * mag2);
    Complex acc = std::conj(c) * amps(0);
    for (int n = 1; n <= N; ++n) {
        c *= z_local / std::sqrt(static_cast<double>(n));
        acc += std::conj(c) * amps(n);
    }
    return std::norm(acc);
}

double husimi_node_density(const Eigen::MatrixXcd& rho, Complex z_local) {
    const int N = static_cast<int>(rho.rows()) - 1;
    const double mag2 = std::norm(z_local);
    if (mag2 > 1400.0) return 0.0;
    Vector c(N + 1);
    c(0) = std::exp(-0.5 * mag2);
    for (int n = 1; n <= N; ++n)
        c(n) = c(n - 1) * z_local / std::sqrt(static_cast<double>(n));
    const Complex q = c.dot(rho * c);
    return q.real();
}

} // namespace

HusimiField husimi_q(const StateVector& psi, const PhaseSpaceGrid& grid, bool parallel) {
    HusimiField field;
    field.grid = grid;
    field.q.resize(grid.nx, grid.np);
    const Complex fa = psi.frame.alpha(psi.hs);
    const double rs = std::sqrt(psi.hs.s);
    const double den = std::sqrt(2.0 * psi.hs.hbar);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x_at(i);
        for (int j = 0; j < grid.np; ++j) {
            const double p = grid.p_at(j);
            const Complex chi(rs * x / den, p / (rs * den));
            field.q(i, j) = husimi_node(psi.amps, chi - fa);
        }
    }
    return field;
}

HusimiField husimi_q(const DensityMatrix& rho, const PhaseSpaceGrid& grid, bool parallel) {
    HusimiField field;
    field.grid = grid;
    field.q.resize(grid.nx, grid.np);
    const Complex fa = rho.frame.alpha(rho.hs);
    const double rs = std::sqrt(rho.hs.s);
    const double den = std::sqrt(2.0 * rho.hs.hbar);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x_at(i);
        for (int j = 0; j < grid.np; ++j) {
            const double p = grid.p_at(j);
            const Complex chi(rs * x / den, p / (rs * den));
            field.q(i, j) = husimi_node_density(rho.mat, chi - fa);
        }
    }
    return field;
}

} // namespace contmeas
