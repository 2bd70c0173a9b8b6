#include "contmeas/gaussian.hpp"

#include <cmath>
#include <string>

namespace contmeas {

GaussianMoments checked_moments(double Vx, double Vp, double Cxp, double hbar) {
    if (!(Vx >= 0.0) || !(Vp >= 0.0))
        throw Error("GaussianMoments: variances must be nonnegative");
    if (Vx * Vp - Cxp * Cxp < hbar * hbar / 4.0 - 1e-12)
        throw Error("GaussianMoments: uncertainty relation Vx Vp - C^2 >= hbar^2/4 violated");
    return GaussianMoments{Vx, Vp, Cxp};
}

GaussianMoments moments_ode_rhs(const GaussianMoments& m, double gamma, double s, double hbar) {
    GaussianMoments d;
    d.Vx = gamma * hbar / s - 4.0 * s * gamma / hbar * m.Vx * m.Vx -
           4.0 * gamma / (s * hbar) * m.Cxp * m.Cxp;
    d.Vp = s * gamma * hbar - 4.0 * gamma / (s * hbar) * m.Vp * m.Vp -
           4.0 * s * gamma / hbar * m.Cxp * m.Cxp;
    d.Cxp = -4.0 * gamma / hbar * m.Cxp * (s * m.Vx + m.Vp / s);
    return d;
}

GaussianMoments moments_closed_form(const GaussianMoments& m0, double gamma, double s,
                                    double hbar, double t) {
    if (t < 0.0) throw Error("moments_closed_form: t must be >= 0");
    if (t == 0.0) return m0;
    if (2.0 * gamma * t > 350.0) // tanh saturates; avoid exp overflow
        return GaussianMoments{hbar / (2.0 * s), s * hbar / 2.0, 0.0};

    const double T = std::tanh(2.0 * gamma * t);
    const double sech = 1.0 / std::cosh(2.0 * gamma * t);
    const double c2 = m0.Cxp * m0.Cxp;
    const double den = (hbar + 2.0 * s * m0.Vx * T) * (s * hbar + 2.0 * m0.Vp * T) -
                       4.0 * s * c2 * T * T;

    GaussianMoments m;
    m.Vx = (hbar / (2.0 * s)) *
           ((2.0 * s * m0.Vx + hbar * T) * (s * hbar + 2.0 * m0.Vp * T) - 4.0 * s * c2 * T) / den;
    m.Vp = (s * hbar / 2.0) *
           ((2.0 * m0.Vp + s * hbar * T) * (hbar + 2.0 * s * m0.Vx * T) - 4.0 * s * c2 * T) / den;
    m.Cxp = s * hbar * hbar * m0.Cxp * sech * sech / den;
    return m;
}

GaussianMoments position_only_closed_form(const GaussianMoments& m0, double Gamma1,
                                          double hbar, double t) {
    if (t < 0.0) throw Error("position_only_closed_form: t must be >= 0");
    if (t == 0.0) return m0;
    const double den = hbar + 4.0 * m0.Vx * Gamma1 * t;
    GaussianMoments m;
    m.Vx = hbar * m0.Vx / den;
    m.Vp = m0.Vp + hbar * Gamma1 * t - 4.0 * m0.Cxp * m0.Cxp * Gamma1 * t / den;
    m.Cxp = hbar * m0.Cxp / den;
    return m;
}

GaussianMoments free_particle_ode_rhs(const GaussianMoments& m, double a, double Gamma1,
                                      double hbar) {
    GaussianMoments d;
    d.Vx = -4.0 * Gamma1 / hbar * m.Vx * m.Vx + 4.0 * a * m.Cxp;
    d.Vp = Gamma1 * hbar - 4.0 * Gamma1 / hbar * m.Cxp * m.Cxp;
    d.Cxp = -4.0 * Gamma1 / hbar * m.Cxp * m.Vx + 2.0 * a * m.Vp;
    return d;
}

GaussianMoments free_particle_fixed_point(double a, double Gamma1, double hbar) {
    if (!(a > 0.0) || !(Gamma1 > 0.0))
        throw Error("free_particle_fixed_point: a and Gamma1 must be positive");
    return GaussianMoments{std::sqrt(a / (2.0 * Gamma1)) * hbar,
                           std::sqrt(Gamma1 / (2.0 * a)) * hbar, hbar / 2.0};
}

GaussianMoments integrate_free_particle_moments(GaussianMoments m0, double a, double Gamma1,
                                                double hbar, double dt, double t_final) {
    const auto add = [](const GaussianMoments& u, const GaussianMoments& v, double w) {
        return GaussianMoments{u.Vx + w * v.Vx, u.Vp + w * v.Vp, u.Cxp + w * v.Cxp};
    };
    const long n = std::lround(t_final / dt);
    GaussianMoments y = m0;
    for (long i = 0; i < n; ++i) {
        const GaussianMoments k1 = free_particle_ode_rhs(y, a, Gamma1, hbar);
        const GaussianMoments k2 = free_particle_ode_rhs(add(y, k1, dt / 2), a, Gamma1, hbar);
        const GaussianMoments k3 = free_particle_ode_rhs(add(y, k2, dt / 2), a, Gamma1, hbar);
        const GaussianMoments k4 = free_particle_ode_rhs(add(y, k3, dt), a, Gamma1, hbar);
        y.Vx += dt / 6.0 * (k1.Vx + 2 * k2.Vx + 2 * k3.Vx + k4.Vx);
        y.Vp += dt / 6.0 * (k1.Vp + 2 * k2.Vp + 2 * k3.Vp + k4.Vp);
        y.Cxp += dt / 6.0 * (k1.Cxp + 2 * k2.Cxp + 2 * k3.Cxp + k4.Cxp);
    }
    return y;
}

} // namespace contmeas
