#pragma once

#include "qmem/memory.hpp"
#include "qmem/pulse.hpp"
#include "qmem/state_space.hpp"

#include <complex>
#include <string>
#include <vector>

namespace qmem {

/// Per-step representation of the input inside the integrator: cubic
/// interpolation through four neighbouring samples, or the second-order
/// midpoint value.  Cubic is the default; see propagate.
enum class InputHold { cubic, midpoint };

/// Result of a single linear input-output run on a uniform grid.
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    Mat c;    // n_modes  x (n_steps + 1)
    Mat eta;  // n_ports  x (n_steps + 1), outputs eta = C c + D xi
    Mat xi;   // n_ports  x (n_steps + 1), inputs actually used
    double energy_residual = 0.0;

    Eigen::Index n_steps() const { return c.cols() - 1; }
    double time_at(Eigen::Index i) const { return t0 + dt * static_cast<double>(i); }

    /// Output envelope of one port as a Pulse.
    Pulse output_pulse(Eigen::Index port, const std::string& label) const;
};

/// Integrate dc/dt = A c + B xi, eta = C c + D xi over [t_start, t_end] with
/// piecewise-exact stepping: per step c <- exp(A dt) c + driven moments of the
/// interpolated input.  `inputs` holds one Pulse per port on exactly this
/// grid; an empty list means vacuum at every port.  The energy-balance
/// residual |  |c(T)|^2 + int sum|eta|^2 - |c(0)|^2 - int sum|xi|^2  | is
/// evaluated with composite Simpson quadrature and stored on the result.
Trajectory propagate(const StateSpace& ss, const std::vector<Pulse>& inputs,
                     const Vec& c0, double t_start, double t_end, double dt,
                     InputHold hold = InputHold::cubic);

/// Metrics of a three-stage write/store/read run.
struct ProtocolResult {
    Eigen::Index n_qubits = 0;
    double t0 = 0.0, t1 = 0.0, t2 = 0.0, t3 = 0.0, dt = 0.0;

    std::vector<double> write_efficiency;  // |c_dark_k(t1)|^2 per module
    double write_efficiency_total = 0.0;   // sum / |beta|^2
    double storage_drift = 0.0;            // max | |c_dark(t)| - |c_dark(t1)| |
    double readout_overlap = 0.0;          // |<expected envelope, output>|^2
    double readout_phase = 0.0;            // arg of that overlap
    double roundtrip_fidelity = 0.0;       // |conj(a0) a0 + <beta, decoded>|^2

    Vec stored_dfs;              // dark amplitudes at t1, module order
    Vec retrieved_beta;          // decoded from per-module emission profiles
    Vec retrieved_beta_nominal;  // decoded against the nominal read envelopes
    StorageState stored_state;   // Fock-basis reconstruction at t1

    std::vector<double> energy_residuals;  // one per stage
    std::vector<double> pulse_overlaps;    // |<xi_j, xi_k>| for j < k
    Pulse output;                          // read-out stage emission
    std::vector<std::string> warnings;
};

/// Full memory protocol for a single photon split over the modules:
/// write Sum_k beta_k xi_k into the cascade over [t0, t1], hold in the
/// storage configuration over [t1, t2], release over [t2, t3].  Requires
/// |alpha0|^2 + |beta|^2 = 1.
ProtocolResult run_protocol(const MemorySpec& spec, const Vec& beta,
                            std::complex<double> alpha0, double t0, double t1,
                            double t2, double t3, double dt,
                            InputHold hold = InputHold::cubic);

/// Same staging for a coherent mean field with envelope Sum_k alpha_k xi_k;
/// alpha is unconstrained (linearity, not probability).  Fidelities are
/// computed on normalized amplitude vectors.
ProtocolResult coherent_run(const MemorySpec& spec, const Vec& alpha, double t0,
                            double t1, double t2, double t3, double dt,
                            InputHold hold = InputHold::cubic);

/// One leakage measurement of the storage configuration with a detuned
/// controller mirror.
struct SweepPoint {
    double epsilon = 0.0;        // kappa_c1 = (1 + epsilon) gamma / 2
    double rate = 0.0;           // -ln |<dark, c(T)>|^2 / T
    double max_re_lambda = 0.0;  // spectral abscissa of the perturbed drift
};

/// Store a unit dark-mode excitation in the perturbed storage module and
/// report its effective decay rate after `duration`, one point per epsilon.
/// `max_threads` > 1 evaluates points concurrently.
std::vector<SweepPoint> mismatch_sweep(const MemorySpec& base,
                                       const std::vector<double>& epsilons,
                                       double duration, double dt,
                                       int max_threads = 1);

}  // namespace qmem
