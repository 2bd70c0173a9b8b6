// Compares the serial reference paths against the OpenMP kernels:
// trajectory ensembles, Husimi grids, and Poincare seed fans.

#include <chrono>
#include <cstdio>

#include "contmeas/classical.hpp"
#include "contmeas/ensemble.hpp"

using namespace contmeas;

namespace {

template <typename F>
double time_ms(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

} // namespace

int main() {
    const HbarS hs(0.05, 1.0);
    const FrameCenter frame{-2.0, 1.0};
    const StateVector initial = coherent_state(frame.alpha(hs), 64, hs, frame);
    const DrivenHamiltonianParams hp{5.0, 5.0, 1.0, 0.0, 0.0};
    const MeasurementRates rates = MeasurementRates::joint(0.70710678118654752, 1.0);

    EnsembleOptions opt;
    opt.traj.dt = 1e-4;
    opt.traj.t_final = 0.2;
    opt.traj.snapshot_interval = 0.05;
    opt.traj.record_stride = 0;
    opt.n_trajectories = 64;
    opt.master_seed = 7;

    std::printf("%-28s %12s %12s %9s\n", "kernel", "serial [ms]", "parallel", "speedup");

    opt.parallel = false;
    EnsembleResult serial_res;
    const double t_serial = time_ms([&] { serial_res = run_ensemble(initial, hp, rates, opt); });
    opt.parallel = true;
    EnsembleResult par_res;
    const double t_par = time_ms([&] { par_res = run_ensemble(initial, hp, rates, opt); });
    const bool same =
        serial_res.means.Vx == par_res.means.Vx && serial_res.means.mean_x == par_res.means.mean_x;
    std::printf("%-28s %12.1f %12.1f %8.2fx  (results %s)\n", "sse ensemble (64 traj)",
                t_serial, t_par, t_serial / t_par, same ? "identical" : "DIFFER");

    const PhaseSpaceGrid grid{-3.2, 3.2, 401, -3.2, 3.2, 401};
    HusimiField h_serial, h_par;
    const double hs_ms = time_ms([&] { h_serial = husimi_q(initial, grid, false); });
    const double hp_ms = time_ms([&] { h_par = husimi_q(initial, grid, true); });
    std::printf("%-28s %12.1f %12.1f %8.2fx  (results %s)\n", "husimi grid 401x401", hs_ms,
                hp_ms, hs_ms / hp_ms, h_serial.q == h_par.q ? "identical" : "DIFFER");

    const DrivenHamiltonianParams chaotic{5.0, -8.0, 1.0, 15.0, 2.0 * M_PI};
    std::vector<PhasePoint> seeds;
    for (int i = 0; i < 16; ++i)
        seeds.push_back(PhasePoint{-3.0 + 6.0 * i / 15.0, 0.3 * (i % 5 - 2)});
    std::vector<std::vector<PhasePoint>> m_serial, m_par;
    const double ps_ms =
        time_ms([&] { m_serial = poincare_map(seeds, chaotic, 1.0, 100, 1e-3, false); });
    const double pp_ms =
        time_ms([&] { m_par = poincare_map(seeds, chaotic, 1.0, 100, 1e-3, true); });
    bool pm_same = m_serial.size() == m_par.size();
    for (std::size_t i = 0; pm_same && i < m_serial.size(); ++i)
        pm_same = m_serial[i].size() == m_par[i].size() &&
                  (m_serial[i].empty() || (m_serial[i].back().x == m_par[i].back().x &&
                                           m_serial[i].back().p == m_par[i].back().p));
    std::printf("%-28s %12.1f %12.1f %8.2fx  (results %s)\n", "poincare map (16 seeds)", ps_ms,
                pp_ms, ps_ms / pp_ms, pm_same ? "identical" : "DIFFER");
    return 0;
}
