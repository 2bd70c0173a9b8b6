#pragma once

#include <optional>
#include <string>
#include <vector>

#include "contmeas/classical.hpp"
#include "contmeas/fock.hpp"
#include "contmeas/rng.hpp"

namespace contmeas {

// Measurement rates Gamma1 = gamma s (position), Gamma2 = gamma / s (momentum).
// Joint measurement uses the a-operator form of the conditional equation;
// the single-quadrature modes use the Gamma2 = 0 / Gamma1 = 0 specializations.
struct MeasurementRates {
    enum class Mode { none, joint, position_only, momentum_only };

    Mode mode = Mode::none;
    double gamma = 0.0;
    double s = 1.0;
    double Gamma1 = 0.0;
    double Gamma2 = 0.0;

    static MeasurementRates none() { return MeasurementRates{}; }
    static MeasurementRates joint(double gamma, double s);
    static MeasurementRates position_only(double Gamma1);
    static MeasurementRates momentum_only(double Gamma2);
};

struct NoiseIncrement {
    double dW1 = 0.0;
    double dW2 = 0.0;
    Complex dxi() const { return Complex(dW1, dW2) / std::sqrt(2.0); }
};

// Readout record. Entries are aggregated over `record_stride` steps; the dW
// sums are the same draws that drove the state, X1/X2 are running integrals.
struct MeasurementRecord {
    std::vector<double> times;
    std::vector<double> dX1, dX2;
    std::vector<double> X1, X2;
    std::vector<double> dW1, dW2;
    std::vector<double> mean_x, mean_p, Vx, Vp, Cxp;
    std::vector<double> norm_drift; // max pre-renormalization |norm-1| in window
    bool has_position = false;
    bool has_momentum = false;

    std::size_t size() const { return times.size(); }
};

struct Snapshot {
    double t = 0.0;
    StateMoments moments;
    double max_norm_drift = 0.0; // since the previous snapshot
};

struct TrajectoryFailure {
    double time = 0.0;
    std::string message;
};

struct TrajectoryResult {
    StateVector final_state;
    std::vector<Snapshot> snapshots;
    MeasurementRecord record;
    std::vector<StateVector> state_snapshots;
    std::optional<TrajectoryFailure> failure;
};

struct TrajectoryOptions {
    double dt = 1e-4;
    double t_final = 1.0;
    double snapshot_interval = 0.01; // must be an integer multiple of dt
    int record_stride = 1;           // steps per record entry; 0 disables the record
    double recenter_threshold = 1.0; // recenter when |<a>_local| exceeds this
    std::vector<double> state_snapshot_times;
};

// H(t) as a matrix in the given frame with lab offsets substituted,
// x_lab = x_local + x0, p_lab = p_local + p0.
Operator build_hamiltonian(const DrivenHamiltonianParams& hp, double t, int N, const HbarS& hs,
                           FrameCenter frame);

// One integrator step: Strang split of the deterministic part (half potential,
// full kinetic, half potential, drive evaluated at t + dt/2) followed by an
// Euler-Maruyama application of the measurement drift and noise, then
// renormalization. If norm_drift is non-null it receives |norm - 1| before
// renormalization.
StateVector sse_step(const StateVector& psi, const DrivenHamiltonianParams& hp,
                     const MeasurementRates& rates, double t, double dt,
                     const NoiseIncrement& noise, double* norm_drift = nullptr);

// Gamma2 = 0 specialization: drift -(Gamma/2 hbar)(x - <x>)^2 dt, noise
// sqrt(Gamma/hbar)(x - <x>) dW. momentum_only_step is the mirror image.
StateVector position_only_step(const StateVector& psi, const DrivenHamiltonianParams& hp,
                               double Gamma1, double t, double dt, double dW,
                               double* norm_drift = nullptr);
StateVector momentum_only_step(const StateVector& psi, const DrivenHamiltonianParams& hp,
                               double Gamma2, double t, double dt, double dW,
                               double* norm_drift = nullptr);

// Full conditional trajectory with the moving-frame policy. A truncation
// overflow is reported through `failure` (with the trajectory time); the
// partial series gathered so far are retained.
TrajectoryResult run_trajectory(const StateVector& initial, const DrivenHamiltonianParams& hp,
                                const MeasurementRates& rates, const TrajectoryOptions& opt,
                                Philox rng);

} // namespace contmeas
