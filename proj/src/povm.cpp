#include "contmeas/povm.hpp"

#include <cmath>
#include <string>

namespace contmeas {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477563; // pi^{-1/2}

double upsilon_ratio(double sigma) { return (sigma * sigma - 1.0) / (sigma * sigma + 1.0); }

Eigen::VectorXcd power_diagonal(double ratio, int N) {
    Eigen::VectorXcd d(N + 1);
    d(0) = 1.0;
    for (int n = 1; n <= N; ++n) d(n) = d(n - 1) * ratio;
    return d;
}

// inverse CDF of the normalized linear density A(1-u) + B u on [0,1]
double sample_linear(double A, double B, double u) {
    const double total = A + B;
    if (total <= 0.0) return u;
    const double diff = B - A;
    if (std::abs(diff) < 1e-14 * total) return u;
    const double disc = A * A + u * diff * total;
    return (std::sqrt(std::max(0.0, disc)) - A) / diff;
}

} // namespace

Operator resolution_operator(Complex chi, MeasurementStrength sigma, int N, const HbarS&) {
    if (N < 1) throw BasisTooSmallError("resolution_operator: basis size N must be >= 1");
    if (std::norm(chi) > 0.25 * N)
        throw TruncationError("resolution_operator: |chi|^2 exceeds N/4 truncation bound");
    const double pref = kInvSqrtPi * 2.0 * sigma.sigma / (sigma.sigma * sigma.sigma + 1.0);
    const Eigen::VectorXcd diag = power_diagonal(upsilon_ratio(sigma.sigma), N);
    if (chi == Complex(0.0, 0.0))
        return pref * Operator(diag.asDiagonal());
    const Operator D = displacement_operator(chi, N);
    return pref * D * diag.asDiagonal() * D.adjoint();
}

Operator effect_density(Complex chi, MeasurementStrength sigma, int N, const HbarS&) {
    if (N < 1) throw BasisTooSmallError("effect_density: basis size N must be >= 1");
    if (std::norm(chi) > 0.25 * N)
        throw TruncationError("effect_density: |chi|^2 exceeds N/4 truncation bound");
    const double s2 = sigma.sigma * sigma.sigma;
    const double kF = 4.0 * s2 / ((s2 + 1.0) * (s2 + 1.0));
    const Eigen::VectorXcd diag = power_diagonal(1.0 - kF, N);
    const double pref = kF / M_PI;
    if (chi == Complex(0.0, 0.0))
        return pref * Operator(diag.asDiagonal());
    const Operator D = displacement_operator(chi, N);
    return pref * D * diag.asDiagonal() * D.adjoint();
}

OutcomeSampler::OutcomeSampler(const StateVector& psi, MeasurementStrength sigma, int grid_n,
                               bool parallel) {
    if (std::abs(psi.norm() - 1.0) > 1e-9)
        throw Error("OutcomeSampler: state must be normalized");
    frame_alpha_ = psi.frame.alpha(psi.hs);
    conv_sd_ = (sigma.sigma * sigma.sigma - 1.0) / (2.0 * sigma.sigma) / std::sqrt(2.0);
    n_ = grid_n;

    // Husimi extent: per-quadrature variance of Q is the state quadrature
    // variance (in chi units) plus the vacuum 1/4.
    const StateMoments m = state_moments(psi);
    const double hbar = psi.hs.hbar, s = psi.hs.s;
    const Complex mean_local = Complex(std::sqrt(s) * m.mean_x, m.mean_p / std::sqrt(s)) /
                                   std::sqrt(2.0 * hbar) -
                               frame_alpha_;
    const double sd1 = std::sqrt(s * m.Vx / (2.0 * hbar) + 0.25);
    const double sd2 = std::sqrt(m.Vp / (2.0 * s * hbar) + 0.25);
    const double half1 = 6.0 * sd1, half2 = 6.0 * sd2;
    const double half = std::max(half1, half2);
    c1_min_ = mean_local.real() - half;
    c2_min_ = mean_local.imag() - half;
    cell_ = 2.0 * half / (n_ - 1);

    q_.resize(n_, n_);
    const Vector& amps = psi.amps;
    const int N = psi.max_index();
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n_; ++i) {
        const double c1 = c1_min_ + i * cell_;
        for (int j = 0; j < n_; ++j) {
            const double c2 = c2_min_ + j * cell_;
            const Complex z(c1, c2);
            const double mag2 = std::norm(z);
            double val = 0.0;
            if (mag2 < 1400.0) {
                Complex coef = std::exp(-0.5 * mag2);
                Complex acc = std::conj(coef) * amps(0);
                for (int nn = 1; nn <= N; ++nn) {
                    coef *= z / std::sqrt(static_cast<double>(nn));
                    acc += std::conj(coef) * amps(nn);
                }
                val = std::norm(acc);
            }
            q_(i, j) = val;
        }
    }

    // cell masses from corner averages; cumulative tables in fixed order
    row_cum_.assign(n_ - 1, 0.0);
    col_cum_.resize(n_ - 1, n_ - 1);
    double running = 0.0;
    for (int i = 0; i + 1 < n_; ++i) {
        double row = 0.0;
        for (int j = 0; j + 1 < n_; ++j) {
            row += 0.25 * (q_(i, j) + q_(i + 1, j) + q_(i, j + 1) + q_(i + 1, j + 1));
            col_cum_(i, j) = row;
        }
        running += row;
        row_cum_[i] = running;
    }
    if (!(running > 0.0))
        throw Error("OutcomeSampler: state has no Husimi mass on the sampling grid");
}

Outcome OutcomeSampler::sample(Philox& rng) const {
    const double total = row_cum_.back();
    const double u = rng.next_double() * total;
    int i = static_cast<int>(std::lower_bound(row_cum_.begin(), row_cum_.end(), u) -
                             row_cum_.begin());
    if (i > n_ - 2) i = n_ - 2;
    const double row_mass = col_cum_(i, n_ - 2);
    const double v = rng.next_double() * row_mass;
    int lo = 0, hi = n_ - 2;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (col_cum_(i, mid) < v)
            lo = mid + 1;
        else
            hi = mid;
    }
    const int j = lo;

    // bilinear refinement within the chosen cell
    const double c00 = q_(i, j), c10 = q_(i + 1, j), c01 = q_(i, j + 1), c11 = q_(i + 1, j + 1);
    const double fx = sample_linear(0.5 * (c00 + c01), 0.5 * (c10 + c11), rng.next_double());
    const double h0 = (1.0 - fx) * c00 + fx * c10;
    const double h1 = (1.0 - fx) * c01 + fx * c11;
    const double fy = sample_linear(h0, h1, rng.next_double());

    Complex z(c1_min_ + (i + fx) * cell_, c2_min_ + (j + fy) * cell_);
    z += frame_alpha_;
    if (conv_sd_ > 0.0) {
        const double w1 = rng.next_gaussian();
        const double w2 = rng.next_gaussian();
        z += conv_sd_ * Complex(w1, w2);
    }
    return Outcome{z};
}

Outcome sample_outcome(const StateVector& psi, MeasurementStrength sigma, Philox& rng) {
    OutcomeSampler sampler(psi, sigma);
    return sampler.sample(rng);
}

StateVector apply_measurement(const StateVector& psi, Outcome outcome,
                              MeasurementStrength sigma) {
    const int N = psi.max_index();
    const Complex chi_local = outcome.chi - psi.frame.alpha(psi.hs);
    const double r = upsilon_ratio(sigma.sigma);

    // working basis large enough for D(-chi) psi
    int support = N;
    {
        double mass = 0.0;
        const double total = psi.amps.squaredNorm();
        for (int n = N; n >= 0; --n) {
            mass += std::norm(psi.amps(n));
            if (mass > 1e-14 * total) {
                support = n;
                break;
            }
        }
    }
    const double reach = std::abs(chi_local) + std::sqrt(static_cast<double>(support + 1)) + 10.0;
    const long big = std::lround(reach * reach) + 16;
    if (big > 2000000)
        throw DegenerateOutcomeError(
            "apply_measurement: outcome too far in the tail to resolve (|chi_local| = " +
            std::to_string(std::abs(chi_local)) + ")");
    const int M = std::max<long>(big, N + 1) - 1;

    Vector work = Vector::Zero(M + 1);
    work.head(N + 1) = psi.amps;
    const double pre_norm2 = work.squaredNorm();
    apply_displacement(work, -chi_local);
    if (r == 0.0) {
        const Complex c0 = work(0);
        work.setZero();
        work(0) = c0;
    } else {
        double w = 1.0;
        for (int n = 1; n <= M; ++n) {
            w *= r;
            work(n) *= w;
        }
    }
    apply_displacement(work, chi_local);

    // amplitudes below ~1e-10 of the input are indistinguishable from the
    // displacement roundoff floor; such outcomes cannot be conditioned on
    const double norm2 = work.squaredNorm();
    if (!(norm2 > 1e-20 * pre_norm2) || !(norm2 > 1e-300))
        throw DegenerateOutcomeError("apply_measurement: outcome probability underflows");
    const double out_mass = work.head(N + 1).squaredNorm();
    if (1.0 - out_mass / norm2 > 1e-8)
        throw TruncationError("apply_measurement: posterior state does not fit the basis");

    StateVector out{work.head(N + 1), psi.frame, psi.hs};
    out.normalize();
    check_tail(out);
    return out;
}

} // namespace contmeas
