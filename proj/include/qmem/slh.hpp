#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace qmem {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// Passive linear SLH triple.  The coupling vector is L = K a and the
/// Hamiltonian is H = a^dag Omega a, so the whole network is described by
/// the scattering matrix S (n_ports x n_ports, unitary), the coupling
/// matrix K (n_ports x n_modes) and the Hermitian Omega (n_modes x n_modes).
///
/// Each channel pairs one input port with one output port.  For atomic
/// components the two share a name; feedback reduction can pair an input
/// of one component with an output of another, so the labels are kept
/// separately per side.
struct SlhModel {
    Mat S;
    Mat K;
    Mat Omega;
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;

    Eigen::Index n_modes() const { return K.cols(); }
    Eigen::Index n_ports() const { return S.rows(); }

    /// Combined per-channel label: "in" when both sides agree, "in>out" otherwise.
    std::string port_label(Eigen::Index j) const;

    /// Index of the channel whose input (output) side carries `name`; throws if absent.
    Eigen::Index input_index(const std::string& name) const;
    Eigen::Index output_index(const std::string& name) const;

    /// Check shapes, unitarity of S and Hermiticity of Omega (1e-12 relative).
    /// Throws std::invalid_argument with a description of the first violation.
    void validate() const;

    /// m-channel model with S = I and no internal modes (identity wire).
    static SlhModel passthrough(Eigen::Index m_ports, const std::string& name = "wire");
};

/// Directed internal connections of a network: each entry maps an output
/// port index to the input port index it feeds (0-based, within one model).
struct AdjacencyMap {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> connections;

    /// Throws if a port is out of range or a source/target is used twice.
    void validate(Eigen::Index n_ports) const;
};

/// Concatenate independent components: block-diagonal S, K, Omega.
/// Modes and ports keep the order in which the models are given.
SlhModel parallel_sum(const std::vector<SlhModel>& models);

/// Optional diagnostics from feedback_reduce.
struct ReduceInfo {
    double loop_condition = 0.0;  // condition number of (eta - S_ii)
};

/// Eliminate the internal channels given by `adj` from `model`.
/// Remaining external inputs and outputs keep their original relative order.
/// Throws std::runtime_error when the algebraic loop (eta - S_ii) is
/// numerically singular (condition number above 1e12).
SlhModel feedback_reduce(const SlhModel& model, const AdjacencyMap& adj,
                         ReduceInfo* info = nullptr);

/// Cascade: every output of `upstream` feeds the same-index input of
/// `downstream`.  Port counts must match.
SlhModel series(const SlhModel& upstream, const SlhModel& downstream);

}  // namespace qmem
