#pragma once

#include <complex>
#include <memory>

#include <Eigen/Dense>

#include "contmeas/errors.hpp"

namespace contmeas {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Operator = Eigen::MatrixXcd;

// hbar together with the squeezing parameter s of the measurement basis.
// Convention used throughout: a = (sqrt(s) x + i p / sqrt(s)) / sqrt(2 hbar).
struct HbarS {
    double hbar = 1.0;
    double s = 1.0;

    HbarS() = default;
    HbarS(double hbar_, double s_) : hbar(hbar_), s(s_) {
        if (!(hbar > 0.0) || !(s > 0.0))
            throw Error("HbarS: hbar and s must be positive");
    }
};

// Phase-space center (x0, p0) of the local displaced number basis.
struct FrameCenter {
    double x0 = 0.0;
    double p0 = 0.0;

    Complex alpha(const HbarS& hs) const {
        const double rs = std::sqrt(hs.s);
        return Complex(rs * x0, p0 / rs) / std::sqrt(2.0 * hs.hbar);
    }
    bool operator==(const FrameCenter&) const = default;
};

// Conditional pure state: amplitudes over the frame-local number basis.
struct StateVector {
    Vector amps;
    FrameCenter frame;
    HbarS hs;

    int max_index() const { return static_cast<int>(amps.size()) - 1; }
    double norm() const { return amps.norm(); }
    void normalize() { amps /= amps.norm(); }
};

struct DensityMatrix {
    Eigen::MatrixXcd mat;
    FrameCenter frame;
    HbarS hs;

    int max_index() const { return static_cast<int>(mat.rows()) - 1; }
    double trace_real() const { return mat.trace().real(); }
};

struct LadderOps {
    Operator a;
    Operator adag;
    Operator x;
    Operator p;
};

// Cached per-basis-size spectral data:
//   q = a + a^dag          (x = sqrt(hbar/2s) q)
//   k = i (a - a^dag)      (p = -sqrt(hbar s/2) k)
// k also generates displacements: exp(zeta a^dag - zeta^* a) for zeta = r e^{i theta}
// equals R(theta) exp(i r k) R(theta)^dag with R(theta) = diag(e^{i theta n}),
// exactly on the truncated space.
struct FockWorkspace {
    int N = 0;
    Eigen::VectorXd q_eigs;
    Eigen::MatrixXcd q_vecs;
    Eigen::VectorXd k_eigs;
    Eigen::MatrixXcd k_vecs;
};

std::shared_ptr<const FockWorkspace> fock_workspace(int N);

LadderOps build_ladder(int N, const HbarS& hs);

// Fraction of amplitude mass above index 0.9 N; the truncation-overflow monitor.
double tail_mass(const Vector& amps);
void check_tail(const StateVector& psi, double tol = 1e-8, double when = -1.0);

StateVector coherent_state(Complex alpha, int N, const HbarS& hs, FrameCenter frame = {});

// Pure Gaussian (squeezed vacuum) state centered on the frame with the given
// second moments, which must satisfy Vx*Vp - Cxp^2 = hbar^2/4.
StateVector gaussian_state(double Vx, double Vp, double Cxp, const HbarS& hs, int N,
                           FrameCenter frame = {});

// Unitary matrix exp(zeta a^dag - zeta^* a) on the truncated basis, built by
// spectral exponentiation of the (Hermitian i*generator), so D D^dag = I to
// machine precision.
Operator displacement_operator(Complex zeta, int N);

// In-place exp(zeta a^dag - zeta^* a) on a raw amplitude vector of any length,
// via norm-limited Taylor chunks. No truncation checks; callers inspect tails.
void apply_displacement(Vector& amps, Complex zeta);

Complex expect(const Operator& op, const StateVector& psi);

// O(N) ladder-structure sums over raw amplitudes (frame-local).
Complex expect_a(const Vector& amps);
Complex expect_a2(const Vector& amps);
double expect_n(const Vector& amps);

// Lab-frame first and second moments.
double expect_x(const StateVector& psi);
double expect_p(const StateVector& psi);

struct StateMoments {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double Vx = 0.0;
    double Vp = 0.0;
    double Cxp = 0.0;
    double total_variance() const { return Vx + Vp; }
};
StateMoments state_moments(const Vector& amps, const FrameCenter& frame, const HbarS& hs);
StateMoments state_moments(const StateVector& psi);
StateMoments state_moments(const DensityMatrix& rho);

StateVector recenter(const StateVector& psi, FrameCenter new_frame);
DensityMatrix recenter(const DensityMatrix& rho, FrameCenter new_frame);

struct PhaseSpaceGrid {
    double x_min = -1.0, x_max = 1.0;
    int nx = 201;
    double p_min = -1.0, p_max = 1.0;
    int np = 201;

    double x_at(int i) const { return x_min + (x_max - x_min) * i / (nx - 1); }
    double p_at(int j) const { return p_min + (p_max - p_min) * j / (np - 1); }
};

struct HusimiField {
    PhaseSpaceGrid grid;
    Eigen::MatrixXd q; // nx rows (x index), np cols (p index)
    double t = 0.0;
};

HusimiField husimi_q(const StateVector& psi, const PhaseSpaceGrid& grid, bool parallel = true);
HusimiField husimi_q(const DensityMatrix& rho, const PhaseSpaceGrid& grid, bool parallel = true);

} // namespace contmeas
