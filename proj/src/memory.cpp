#include "qmem/memory.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qmem {

void MemorySpec::validate() const {
    if (n_qubits < 1) throw std::invalid_argument("n_qubits must be at least 1");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    for (double k : {kp1(), kp2(), kc1(), kc2()})
        if (!(k > 0.0)) throw std::invalid_argument("mirror rates must be positive");
}

SlhModel make_cavity(const std::vector<double>& kappas, const std::string& name) {
    if (kappas.empty()) throw std::invalid_argument("cavity needs at least one mirror");
    for (double k : kappas)
        if (!(k > 0.0)) {
            std::ostringstream os;
            os << "cavity '" << name << "': mirror rate " << k << " is not positive";
            throw std::invalid_argument(os.str());
        }
    const Eigen::Index m = static_cast<Eigen::Index>(kappas.size());
    SlhModel cav;
    cav.S = Mat::Identity(m, m);
    cav.K = Mat(m, 1);
    for (Eigen::Index j = 0; j < m; ++j) cav.K(j, 0) = std::sqrt(kappas[j]);
    cav.Omega = Mat::Zero(1, 1);
    for (Eigen::Index j = 0; j < m; ++j) {
        cav.input_labels.push_back(name + "." + std::to_string(j + 1));
        cav.output_labels.push_back(name + "." + std::to_string(j + 1));
    }
    return cav;
}

SlhModel make_cavity(double kappa1, double kappa2, const std::string& name) {
    return make_cavity(std::vector<double>{kappa1, kappa2}, name);
}

namespace {

// Ports of the open-loop pair, 0-based: 0 = p.1, 1 = p.2, 2 = c.1, 3 = c.2.
AdjacencyMap config_adjacency(int which) {
    AdjacencyMap adj;
    if (which == 1) {
        adj.connections = {{0, 3}, {3, 1}, {1, 2}};
    } else if (which == 2) {
        adj.connections = {{0, 3}, {2, 1}};
    } else {
        throw std::invalid_argument("configuration must be 1 or 2");
    }
    return adj;
}

SlhModel module_config(const MemorySpec& spec, int which, const std::string& prefix) {
    const SlhModel plant = make_cavity(spec.kp1(), spec.kp2(), prefix + "p");
    const SlhModel ctrl = make_cavity(spec.kc1(), spec.kc2(), prefix + "c");
    return feedback_reduce(parallel_sum({plant, ctrl}), config_adjacency(which));
}

}  // namespace

SlhModel qubit_config(const MemorySpec& spec, int which) {
    spec.validate();
    return module_config(spec, which, "");
}

SlhModel qudit_config(const MemorySpec& spec, int which) {
    spec.validate();
    if (which != 1 && which != 2)
        throw std::invalid_argument("configuration must be 1 or 2");
    if (spec.n_qubits == 1) return qubit_config(spec, which);

    std::vector<SlhModel> modules;
    for (Eigen::Index j = 1; j <= spec.n_qubits; ++j)
        modules.push_back(module_config(spec, which, "q" + std::to_string(j) + "."));

    if (which == 2) return parallel_sum(modules);

    SlhModel chain = modules[0];
    for (size_t j = 1; j < modules.size(); ++j) chain = series(chain, modules[j]);
    return chain;
}

Mat module_rotation(Eigen::Index n_qubits) {
    if (n_qubits < 1) throw std::invalid_argument("n_qubits must be at least 1");
    const double h = 1.0 / std::sqrt(2.0);
    Mat u = Mat::Zero(2 * n_qubits, 2 * n_qubits);
    for (Eigen::Index j = 0; j < n_qubits; ++j) {
        u(2 * j, 2 * j) = h;
        u(2 * j, 2 * j + 1) = h;
        u(2 * j + 1, 2 * j) = h;
        u(2 * j + 1, 2 * j + 1) = -h;
    }
    return u;
}

StorageState storage_state(std::complex<double> alpha0, const Vec& beta) {
    const Eigen::Index n = beta.size();
    if (n < 1) throw std::invalid_argument("need at least one module amplitude");
    const double norm2 = std::norm(alpha0) + beta.squaredNorm();
    if (std::abs(norm2 - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "amplitudes are not normalized: |alpha0|^2 + |beta|^2 = " << norm2;
        throw std::invalid_argument(os.str());
    }

    StorageState st;
    st.n_qubits = n;
    st.coefficients = Vec::Zero(2 * n + 1);
    st.coefficients(0) = alpha0;
    st.labels.push_back("vacuum");
    const double r = 1.0 / std::sqrt(2.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        st.coefficients(2 * k + 1) = r * beta(k);
        st.coefficients(2 * k + 2) = -r * beta(k);
        const std::string mod = "m" + std::to_string(k + 1);
        st.labels.push_back(mod + ".p");
        st.labels.push_back(mod + ".c");
    }
    st.coefficients /= st.coefficients.norm();
    return st;
}

}  // namespace qmem
