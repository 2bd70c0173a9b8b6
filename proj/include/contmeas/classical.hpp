#pragma once

#include <vector>

#include "contmeas/errors.hpp"

namespace contmeas {

// Coefficients of H = a p^2 + b x^2 + c x^4 + d x cos(omega t).
struct DrivenHamiltonianParams {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double omega = 0.0;
};

struct PhasePoint {
    double x = 0.0;
    double p = 0.0;
};

double hamiltonian_value(PhasePoint pt, const DrivenHamiltonianParams& hp, double t);

// xdot = 2 a p, pdot = -(2 b x + 4 c x^3 + d cos(omega t))
PhasePoint hamilton_rhs(PhasePoint pt, const DrivenHamiltonianParams& hp, double t);

struct ClassicalTrajectory {
    std::vector<double> t;
    std::vector<PhasePoint> pts;
};

// Fixed-step RK4. Stores every store_stride-th step (plus the initial point).
ClassicalTrajectory integrate_classical(PhasePoint pt0, const DrivenHamiltonianParams& hp,
                                        double dt, double t_final, int store_stride = 1);

// Stroboscopic samples at t = k * strobe_period for each seed, including k = 0.
std::vector<std::vector<PhasePoint>> poincare_map(const std::vector<PhasePoint>& seeds,
                                                  const DrivenHamiltonianParams& hp,
                                                  double strobe_period, int n_strobes,
                                                  double dt, bool parallel = true);

} // namespace contmeas
