#pragma once

#include <Eigen/Dense>

#include "contmeas/fock.hpp"
#include "contmeas/rng.hpp"

namespace contmeas {

// Detector-width parameter of the generalized Arthurs-Kelly measurement.
// sigma = 1 is the strong limit (collapse onto coherent states); sigma -> inf
// is the weak limit. Values in (0,1) are rejected.
struct MeasurementStrength {
    double sigma;
    explicit MeasurementStrength(double sigma_) : sigma(sigma_) {
        if (!(sigma >= 1.0))
            throw Error("MeasurementStrength: sigma must be >= 1");
    }
};

// Phase-space readout chi = chi_1 + i chi_2 in lab coordinates.
struct Outcome {
    Complex chi;

    // readout-variable parametrization: chi = (sqrt(s) x1 + i x2/sqrt(s)) / sqrt(2 hbar)
    double x1(const HbarS& hs) const { return std::sqrt(2.0 * hs.hbar / hs.s) * chi.real(); }
    double x2(const HbarS& hs) const { return std::sqrt(2.0 * hs.hbar * hs.s) * chi.imag(); }
};

// Kraus operator Upsilon_sigma(chi) = pi^{-1/2} (2 sigma/(sigma^2+1))
//     D(chi) r^{n} D(chi)^dag,  r = (sigma^2-1)/(sigma^2+1),
// in the frame-local basis (chi here is frame-local).
Operator resolution_operator(Complex chi, MeasurementStrength sigma, int N, const HbarS& hs);

// Effect density F_sigma(chi) = Upsilon^dag Upsilon
//   = pi^{-1} kF D(chi) (1-kF)^{n} D(chi)^dag,  kF = (2 sigma/(sigma^2+1))^2.
Operator effect_density(Complex chi, MeasurementStrength sigma, int N, const HbarS& hs);

// Draws outcomes from Prob(chi) = <F_sigma(chi)>. The density factorizes
// exactly as the Husimi density convolved with an isotropic Gaussian of
// per-quadrature variance ((sigma^2-1)/(2 sigma))^2 / 2; the Husimi factor is
// drawn from a cumulative grid table (bilinear within cells), the Gaussian
// factor directly.
class OutcomeSampler {
public:
    OutcomeSampler(const StateVector& psi, MeasurementStrength sigma, int grid_n = 256,
                   bool parallel = false);
    Outcome sample(Philox& rng) const;

private:
    Complex frame_alpha_;
    double conv_sd_; // per-quadrature std of the detector-noise Gaussian
    double c1_min_, c2_min_, cell_;
    int n_;
    Eigen::MatrixXd q_;           // Husimi values at grid nodes (local chi coords)
    std::vector<double> row_cum_; // cumulative over cell rows
    Eigen::MatrixXd col_cum_;     // per-row cumulative over cells
};

Outcome sample_outcome(const StateVector& psi, MeasurementStrength sigma, Philox& rng);

// Conditional state update psi -> Upsilon_sigma(chi') psi / norm. Works in a
// temporarily enlarged basis so that the displaced intermediate fits, then
// projects back; throws TruncationError if the posterior does not fit the
// original basis and DegenerateOutcomeError if the outcome likelihood
// underflows.
StateVector apply_measurement(const StateVector& psi, Outcome outcome,
                              MeasurementStrength sigma);

} // namespace contmeas
