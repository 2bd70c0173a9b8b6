#pragma once

#include <vector>

#include "contmeas/fock.hpp"
#include "contmeas/sse.hpp"

namespace contmeas {

// Unconditional master equation
//   drho/dt = -(i/hbar)[H, rho] - (Gamma1/2 hbar)[x,[x,rho]] - (Gamma2/2 hbar)[p,[p,rho]],
// equal to -(i/hbar)[H,rho] - gamma [a,[a^dag,rho]] when Gamma1 = gamma s,
// Gamma2 = gamma/s.
struct LindbladGenerator {
    DrivenHamiltonianParams hp;
    MeasurementRates rates;
    HbarS hs;
};

// Right-hand side in the x/p double-commutator form (any mode).
DensityMatrix lindblad_rhs(const DensityMatrix& rho, const LindbladGenerator& gen, double t);

// The a-operator form of the dissipator, for the equivalence check.
Eigen::MatrixXcd dissipator_a_form(const Eigen::MatrixXcd& rho, double gamma);

struct LindbladSnapshot {
    double t = 0.0;
    StateMoments moments;
    double trace_error = 0.0;     // |tr rho - 1|
    double hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
};

struct LindbladOptions {
    double dt = 1e-4;
    double t_final = 1.0;
    double snapshot_interval = 0.01;
    double recenter_threshold = 1.0;
    std::vector<double> state_snapshot_times; // density snapshots to retain
};

struct LindbladResult {
    DensityMatrix final_state;
    std::vector<LindbladSnapshot> snapshots;
    std::vector<DensityMatrix> state_snapshots;
    double max_trace_error = 0.0;
    double min_eigenvalue = 0.0;
};

// Fixed-step RK4 on the vectorized density matrix with a moving frame.
// Trace and positivity are monitored, not enforced; a blow-up raises
// StepTooLargeError.
LindbladResult propagate(const DensityMatrix& rho0, const LindbladGenerator& gen,
                         const LindbladOptions& opt);

// (1/2) || rho1 - rho2 ||_1; both must share a frame and basis size.
double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);

} // namespace contmeas
