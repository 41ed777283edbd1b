#pragma once

#include "qmem/slh.hpp"

#include <complex>
#include <string>
#include <vector>

namespace qmem {

/// Parameters of the qubit/qudit memory network.  Every module consists of a
/// plant cavity and a controller cavity; all four mirror rates default to
/// gamma/2 and can be overridden individually (the overrides apply to every
/// module alike).
struct MemorySpec {
    Eigen::Index n_qubits = 1;
    double gamma = 1.0;
    double kappa_p1 = -1.0;  // negative means "use gamma/2"
    double kappa_p2 = -1.0;
    double kappa_c1 = -1.0;
    double kappa_c2 = -1.0;

    double kp1() const { return kappa_p1 < 0 ? 0.5 * gamma : kappa_p1; }
    double kp2() const { return kappa_p2 < 0 ? 0.5 * gamma : kappa_p2; }
    double kc1() const { return kappa_c1 < 0 ? 0.5 * gamma : kappa_c1; }
    double kc2() const { return kappa_c2 < 0 ? 0.5 * gamma : kappa_c2; }

    void validate() const;
};

/// Single mode behind m partially transmitting mirrors: S = I,
/// K column = (sqrt(kappa_1), ..., sqrt(kappa_m)), Omega = 0.
/// All rates must be positive.
SlhModel make_cavity(const std::vector<double>& kappas, const std::string& name);

/// The common two-mirror case.
SlhModel make_cavity(double kappa1, double kappa2, const std::string& name = "cav");

/// One memory module (plant + controller cavity) wired for writing/read-out
/// (which = 1) or for storage (which = 2).  Mode order is (plant, controller).
SlhModel qubit_config(const MemorySpec& spec, int which);

/// n-module network: configuration 1 cascades the modules in series,
/// configuration 2 keeps them side by side.  Mode order is
/// (plant_1, controller_1, plant_2, controller_2, ...).
SlhModel qudit_config(const MemorySpec& spec, int which);

/// Block-diagonal per-module Hadamard sending (plant_j, controller_j) to the
/// bright/dark pair; the dark modes land at odd (0-based) positions.
Mat module_rotation(Eigen::Index n_qubits);

/// Single-excitation Fock-basis state stored in the memory:
/// coefficient 0 multiplies the vacuum, then per module |1_p 0_c> and
/// |0_p 1_c> in module order.
struct StorageState {
    Eigen::Index n_qubits = 0;
    std::vector<std::string> labels;
    Vec coefficients;
};

/// Build the storage-stage state alpha0 |vac> + sum_k beta_k |phi_k> where
/// |phi_k> = (|1_p 0_c> - |0_p 1_c>)/sqrt(2) on module k.  The amplitudes
/// must satisfy |alpha0|^2 + sum |beta_k|^2 = 1 within 1e-9; the returned
/// coefficients are renormalized to unit norm.
StorageState storage_state(std::complex<double> alpha0, const Vec& beta);

}  // namespace qmem
