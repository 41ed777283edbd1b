#pragma once

#include "qmem/slh.hpp"

#include <complex>
#include <vector>

namespace qmem {

/// First-order input-output model of the single-excitation amplitudes:
///   dc/dt = A c + B xi,   eta = C c + D xi.
struct StateSpace {
    Mat A;
    Mat B;
    Mat C;
    Mat D;

    Eigen::Index n_modes() const { return A.rows(); }
    Eigen::Index n_ports() const { return D.rows(); }

    void validate() const;
};

/// Residuals of the passivity identities A + A^dag + C^dag C = 0 and
/// B + C^dag D = 0 (max-abs entries).
struct PassivityResiduals {
    double drift = 0.0;
    double input = 0.0;
};

/// A = -(i Omega + K^dag K / 2), B = -K^dag S, C = K, D = S.
StateSpace to_state_space(const SlhModel& model);

PassivityResiduals passivity_residuals(const StateSpace& ss);

/// Kalman controllability matrix [B, AB, ..., A^{n-1}B].
Mat controllability_matrix(const StateSpace& ss);

/// Kalman observability matrix [C; CA; ...; CA^{n-1}] (stacked rows).
Mat observability_matrix(const StateSpace& ss);

/// Numerical ranks via SVD, counting singular values above 1e-9 * sigma_max.
Eigen::Index rank_controllability(const StateSpace& ss);
Eigen::Index rank_observability(const StateSpace& ss);

struct HurwitzReport {
    bool hurwitz = false;
    std::vector<std::complex<double>> eigenvalues;  // sorted by (Re, Im)
};

/// Strict Hurwitz test: every eigenvalue satisfies Re(z) < -1e-10.
HurwitzReport is_hurwitz(const StateSpace& ss);

/// Change of mode basis c -> U^dag c: A -> U^dag A U, B -> U^dag B, C -> C U.
/// U must be unitary.
StateSpace rotate(const StateSpace& ss, const Mat& u);

/// G(s) = C (sI - A)^{-1} B + D; throws when (sI - A) is singular.
Mat transfer_function(const StateSpace& ss, std::complex<double> s);

/// Unitary exposing the decoherence-free subspace: rotated modes are ordered
/// with decaying modes first and DFS modes last.
struct DfsDecomposition {
    Mat u;
    std::vector<Eigen::Index> dfs_indices;  // indices in the rotated basis
    StateSpace rotated;
};

/// Find the simultaneously uncontrollable and unobservable modes.  When A is
/// normal this is an eigendecomposition (DFS modes = imaginary-axis
/// eigenvalues); otherwise the kernel intersection of the Kalman matrices is
/// used.  Columns are phase-fixed so their first significant entry is real
/// and positive.
DfsDecomposition dfs_decompose(const StateSpace& ss);

}  // namespace qmem
