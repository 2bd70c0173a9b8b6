#pragma once

#include "contmeas/errors.hpp"

namespace contmeas {

// Expected second moments (Vx, Vp, Cxp) of the conditional state, averaged
// over measurement histories.
struct GaussianMoments {
    double Vx = 0.0;
    double Vp = 0.0;
    double Cxp = 0.0;
};

// Validates the generalized uncertainty relation Vx Vp - C^2 >= hbar^2/4.
GaussianMoments checked_moments(double Vx, double Vp, double Cxp, double hbar);

// H = 0 moment flow under joint measurement with rates (gamma, s).
GaussianMoments moments_ode_rhs(const GaussianMoments& m, double gamma, double s, double hbar);

// tanh/sech closed-form solution of the H = 0 flow.
GaussianMoments moments_closed_form(const GaussianMoments& m0, double gamma, double s,
                                    double hbar, double t);

// Gamma2 = 0 (position measurement only), H = 0.
GaussianMoments position_only_closed_form(const GaussianMoments& m0, double Gamma1,
                                          double hbar, double t);

// H = a p^2 with position-only measurement: moment flow and its attractor.
GaussianMoments free_particle_ode_rhs(const GaussianMoments& m, double a, double Gamma1,
                                      double hbar);
GaussianMoments free_particle_fixed_point(double a, double Gamma1, double hbar);
GaussianMoments integrate_free_particle_moments(GaussianMoments m0, double a, double Gamma1,
                                                double hbar, double dt, double t_final);

} // namespace contmeas
