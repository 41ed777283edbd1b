#include "qmem/slh.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qmem {

namespace {

const std::complex<double> kI(0.0, 1.0);

// Relative tolerance for structural checks on stored matrices.
constexpr double kStructTol = 1e-12;

// Loops with condition number above this are treated as singular.
constexpr double kLoopCondLimit = 1e12;

double unitarity_gap(const Mat& s) {
    if (s.rows() == 0) return 0.0;
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    const Mat gap = s.adjoint() * s - Mat::Identity(s.rows(), s.cols());
    return gap.cwiseAbs().maxCoeff() / (scale * scale);
}

double hermiticity_gap(const Mat& h) {
    if (h.rows() == 0) return 0.0;
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    return (h - h.adjoint()).cwiseAbs().maxCoeff() / scale;
}

std::string combine_label(const std::string& in, const std::string& out) {
    return in == out ? in : in + ">" + out;
}

}  // namespace

std::string SlhModel::port_label(Eigen::Index j) const {
    return combine_label(input_labels.at(static_cast<size_t>(j)),
                         output_labels.at(static_cast<size_t>(j)));
}

Eigen::Index SlhModel::input_index(const std::string& name) const {
    for (size_t j = 0; j < input_labels.size(); ++j)
        if (input_labels[j] == name) return static_cast<Eigen::Index>(j);
    throw std::invalid_argument("no input port labeled '" + name + "'");
}

Eigen::Index SlhModel::output_index(const std::string& name) const {
    for (size_t j = 0; j < output_labels.size(); ++j)
        if (output_labels[j] == name) return static_cast<Eigen::Index>(j);
    throw std::invalid_argument("no output port labeled '" + name + "'");
}

void SlhModel::validate() const {
    const Eigen::Index m = S.rows();
    const Eigen::Index n = K.cols();
    if (S.cols() != m)
        throw std::invalid_argument("scattering matrix must be square");
    if (K.rows() != m)
        throw std::invalid_argument("coupling matrix must have one row per port");
    if (Omega.rows() != n || Omega.cols() != n)
        throw std::invalid_argument("Omega must be n_modes x n_modes");
    if (input_labels.size() != static_cast<size_t>(m) ||
        output_labels.size() != static_cast<size_t>(m))
        throw std::invalid_argument("need one input and one output label per port");
    if (double g = unitarity_gap(S); g > kStructTol) {
        std::ostringstream os;
        os << "scattering matrix is not unitary (residual " << g << ")";
        throw std::invalid_argument(os.str());
    }
    if (double g = hermiticity_gap(Omega); g > kStructTol) {
        std::ostringstream os;
        os << "Omega is not Hermitian (residual " << g << ")";
        throw std::invalid_argument(os.str());
    }
}

SlhModel SlhModel::passthrough(Eigen::Index m_ports, const std::string& name) {
    SlhModel w;
    w.S = Mat::Identity(m_ports, m_ports);
    w.K = Mat::Zero(m_ports, 0);
    w.Omega = Mat::Zero(0, 0);
    for (Eigen::Index j = 0; j < m_ports; ++j) {
        w.input_labels.push_back(name + "." + std::to_string(j + 1));
        w.output_labels.push_back(name + "." + std::to_string(j + 1));
    }
    return w;
}

void AdjacencyMap::validate(Eigen::Index n_ports) const {
    std::set<Eigen::Index> sources, targets;
    for (const auto& [src, dst] : connections) {
        if (src < 0 || src >= n_ports || dst < 0 || dst >= n_ports) {
            std::ostringstream os;
            os << "connection (" << src << " -> " << dst << ") references a port outside 0.."
               << n_ports - 1;
            throw std::invalid_argument(os.str());
        }
        if (!sources.insert(src).second)
            throw std::invalid_argument("output port " + std::to_string(src) +
                                        " is used as a source twice");
        if (!targets.insert(dst).second)
            throw std::invalid_argument("input port " + std::to_string(dst) +
                                        " is used as a target twice");
    }
}

SlhModel parallel_sum(const std::vector<SlhModel>& models) {
    if (models.empty())
        throw std::invalid_argument("parallel_sum needs at least one model");

    Eigen::Index m = 0, n = 0;
    for (const auto& g : models) {
        m += g.n_ports();
        n += g.n_modes();
    }

    SlhModel sum;
    sum.S = Mat::Zero(m, m);
    sum.K = Mat::Zero(m, n);
    sum.Omega = Mat::Zero(n, n);
    Eigen::Index pr = 0, nr = 0;
    for (const auto& g : models) {
        const Eigen::Index mj = g.n_ports(), nj = g.n_modes();
        sum.S.block(pr, pr, mj, mj) = g.S;
        sum.K.block(pr, nr, mj, nj) = g.K;
        sum.Omega.block(nr, nr, nj, nj) = g.Omega;
        sum.input_labels.insert(sum.input_labels.end(), g.input_labels.begin(),
                                g.input_labels.end());
        sum.output_labels.insert(sum.output_labels.end(), g.output_labels.begin(),
                                 g.output_labels.end());
        pr += mj;
        nr += nj;
    }
    return sum;
}

SlhModel feedback_reduce(const SlhModel& model, const AdjacencyMap& adj, ReduceInfo* info) {
    model.validate();
    const Eigen::Index m = model.n_ports();
    const Eigen::Index n = model.n_modes();
    adj.validate(m);

    if (adj.connections.empty()) {
        if (info) info->loop_condition = 1.0;
        return model;
    }

    // Internal output ports (sources) and internal input ports (targets),
    // each kept in ascending index order.
    std::vector<Eigen::Index> int_out, int_in;
    for (const auto& [src, dst] : adj.connections) {
        int_out.push_back(src);
        int_in.push_back(dst);
    }
    std::sort(int_out.begin(), int_out.end());
    std::sort(int_in.begin(), int_in.end());

    std::vector<Eigen::Index> ext_out, ext_in;
    for (Eigen::Index j = 0; j < m; ++j) {
        if (!std::binary_search(int_out.begin(), int_out.end(), j)) ext_out.push_back(j);
        if (!std::binary_search(int_in.begin(), int_in.end(), j)) ext_in.push_back(j);
    }
    const Eigen::Index q = static_cast<Eigen::Index>(int_out.size());
    const Eigen::Index me = m - q;

    const auto pos = [](const std::vector<Eigen::Index>& v, Eigen::Index x) {
        return static_cast<Eigen::Index>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
    };

    // eta(s, r) = 1 when internal output s feeds internal input r.
    Mat eta = Mat::Zero(q, q);
    for (const auto& [src, dst] : adj.connections)
        eta(pos(int_out, src), pos(int_in, dst)) = 1.0;

    const auto take = [](const Mat& a, const std::vector<Eigen::Index>& rows,
                         const std::vector<Eigen::Index>& cols) {
        Mat out(rows.size(), cols.size());
        for (size_t r = 0; r < rows.size(); ++r)
            for (size_t c = 0; c < cols.size(); ++c) out(r, c) = a(rows[r], cols[c]);
        return out;
    };
    const auto take_rows = [](const Mat& a, const std::vector<Eigen::Index>& rows) {
        Mat out(rows.size(), a.cols());
        for (size_t r = 0; r < rows.size(); ++r) out.row(r) = a.row(rows[r]);
        return out;
    };

    const Mat s_ii = take(model.S, int_out, int_in);
    const Mat s_ie = take(model.S, int_out, ext_in);
    const Mat s_ei = take(model.S, ext_out, int_in);
    const Mat s_ee = take(model.S, ext_out, ext_in);
    const Mat k_i = take_rows(model.K, int_out);
    const Mat k_e = take_rows(model.K, ext_out);

    const Mat loop = eta - s_ii;
    Eigen::JacobiSVD<Mat> svd(loop, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(q - 1);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (info) info->loop_condition = cond;
    if (!(cond < kLoopCondLimit)) {
        std::ostringstream os;
        os << "algebraic loop is not well-posed: cond(eta - S_ii) = " << cond;
        throw std::runtime_error(os.str());
    }

    Eigen::PartialPivLU<Mat> lu(loop);
    const Mat loop_inv_k_i = lu.solve(k_i);       // (eta - S_ii)^-1 K_i
    const Mat loop_inv_s_ie = lu.solve(s_ie);     // (eta - S_ii)^-1 S_ie

    SlhModel red;
    red.S = s_ee + s_ei * loop_inv_s_ie;
    red.K = k_e + s_ei * loop_inv_k_i;

    // H_red = H + sum_j Im{ L_j^dag S_{j,i} (eta - S_ii)^-1 L_i } becomes, with
    // L = K a, a quadratic form with coefficient X below; Im of an operator is
    // (X - X^dag)/2i at the matrix level.
    Mat s_all_i(m, q);
    for (size_t c = 0; c < int_in.size(); ++c) s_all_i.col(c) = model.S.col(int_in[c]);
    const Mat x = model.K.adjoint() * s_all_i * loop_inv_k_i;
    red.Omega = model.Omega + (x - x.adjoint()) / (2.0 * kI);

    red.input_labels.reserve(me);
    red.output_labels.reserve(me);
    for (Eigen::Index j = 0; j < me; ++j) {
        red.input_labels.push_back(model.input_labels[static_cast<size_t>(ext_in[j])]);
        red.output_labels.push_back(model.output_labels[static_cast<size_t>(ext_out[j])]);
    }
    (void)n;
    return red;
}

SlhModel series(const SlhModel& upstream, const SlhModel& downstream) {
    if (upstream.n_ports() != downstream.n_ports())
        throw std::invalid_argument("series requires equal port counts");
    const Eigen::Index m = upstream.n_ports();
    const SlhModel sum = parallel_sum({upstream, downstream});
    AdjacencyMap adj;
    for (Eigen::Index j = 0; j < m; ++j) adj.connections.emplace_back(j, m + j);
    return feedback_reduce(sum, adj);
}

}  // namespace qmem
