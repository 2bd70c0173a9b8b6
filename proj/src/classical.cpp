#include "contmeas/classical.hpp"

#include <cmath>
#include <string>

namespace contmeas {

namespace {

constexpr double kDivergenceBound = 1e6;

inline PhasePoint rk4_step(PhasePoint y, const DrivenHamiltonianParams& hp, double t, double dt) {
    const PhasePoint k1 = hamilton_rhs(y, hp, t);
    const PhasePoint k2 = hamilton_rhs({y.x + dt / 2 * k1.x, y.p + dt / 2 * k1.p}, hp, t + dt / 2);
    const PhasePoint k3 = hamilton_rhs({y.x + dt / 2 * k2.x, y.p + dt / 2 * k2.p}, hp, t + dt / 2);
    const PhasePoint k4 = hamilton_rhs({y.x + dt * k3.x, y.p + dt * k3.p}, hp, t + dt);
    y.x += dt / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    y.p += dt / 6.0 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
    return y;
}

inline void guard(const PhasePoint& y, double t) {
    if (!(std::abs(y.x) < kDivergenceBound) || !(std::abs(y.p) < kDivergenceBound))
        throw DivergenceError("classical trajectory diverged at t = " + std::to_string(t), t);
}

} // namespace

double hamiltonian_value(PhasePoint pt, const DrivenHamiltonianParams& hp, double t) {
    const double x2 = pt.x * pt.x;
    return hp.a * pt.p * pt.p + hp.b * x2 + hp.c * x2 * x2 +
           hp.d * pt.x * std::cos(hp.omega * t);
}

PhasePoint hamilton_rhs(PhasePoint pt, const DrivenHamiltonianParams& hp, double t) {
    PhasePoint v;
    v.x = 2.0 * hp.a * pt.p;
    v.p = -(2.0 * hp.b * pt.x + 4.0 * hp.c * pt.x * pt.x * pt.x +
            hp.d * std::cos(hp.omega * t));
    return v;
}

ClassicalTrajectory integrate_classical(PhasePoint pt0, const DrivenHamiltonianParams& hp,
                                        double dt, double t_final, int store_stride) {
    if (!(dt > 0.0)) throw Error("integrate_classical: dt must be positive");
    if (store_stride < 1) store_stride = 1;
    const long n = std::lround(t_final / dt);

    ClassicalTrajectory traj;
    traj.t.reserve(n / store_stride + 2);
    traj.pts.reserve(n / store_stride + 2);
    traj.t.push_back(0.0);
    traj.pts.push_back(pt0);

    PhasePoint y = pt0;
    for (long i = 0; i < n; ++i) {
        const double t = i * dt;
        y = rk4_step(y, hp, t, dt);
        guard(y, t + dt);
        if ((i + 1) % store_stride == 0 || i + 1 == n) {
            traj.t.push_back((i + 1) * dt);
            traj.pts.push_back(y);
        }
    }
    return traj;
}

std::vector<std::vector<PhasePoint>> poincare_map(const std::vector<PhasePoint>& seeds,
                                                  const DrivenHamiltonianParams& hp,
                                                  double strobe_period, int n_strobes,
                                                  double dt, bool parallel) {
    if (!(strobe_period > 0.0)) throw Error("poincare_map: strobe period must be positive");
    if (!(dt > 0.0)) throw Error("poincare_map: dt must be positive");
    const long steps_per_strobe = std::lround(strobe_period / dt);
    if (steps_per_strobe < 1) throw Error("poincare_map: dt larger than strobe period");

    std::vector<std::vector<PhasePoint>> out(seeds.size());

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long s = 0; s < static_cast<long>(seeds.size()); ++s) {
        std::vector<PhasePoint> strobes;
        strobes.reserve(n_strobes + 1);
        PhasePoint y = seeds[s];
        strobes.push_back(y);
        bool diverged = false;
        for (int k = 0; k < n_strobes && !diverged; ++k) {
            for (long i = 0; i < steps_per_strobe; ++i) {
                const double t = k * strobe_period + i * dt;
                y = rk4_step(y, hp, t, dt);
                if (!(std::abs(y.x) < kDivergenceBound) || !(std::abs(y.p) < kDivergenceBound)) {
                    diverged = true; // drop this seed's remaining strobes
                    break;
                }
            }
            if (!diverged) strobes.push_back(y);
        }
        out[s] = std::move(strobes);
    }
    return out;
}

} // namespace contmeas
