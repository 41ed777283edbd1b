#include "qmem/state_space.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qmem {

namespace {

const std::complex<double> kI(0.0, 1.0);

constexpr double kRankTol = 1e-9;       // relative SVD threshold for ranks
constexpr double kHurwitzTol = 1e-10;   // strict stability margin
constexpr double kUnitaryTol = 1e-10;   // rotation matrices
constexpr double kNormalTol = 1e-10;    // ||A A^dag - A^dag A|| test

std::vector<std::complex<double>> sorted_eigenvalues(const Mat& a) {
    Eigen::ComplexEigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                         es.eigenvalues().data() + a.rows());
    std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    return ev;
}

Eigen::Index svd_rank(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double cut = kRankTol * sv(0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++r;
    return r;
}

// Multiply each column by a phase making its first significant entry real > 0.
void fix_column_phases(Mat& u) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        const double big = u.col(c).cwiseAbs().maxCoeff();
        if (big == 0.0) continue;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            const std::complex<double> v = u(r, c);
            if (std::abs(v) > 1e-8 * big) {
                u.col(c) *= std::conj(v) / std::abs(v);
                break;
            }
        }
    }
}

double dfs_axis_tolerance(const Mat& a) {
    const double scale = a.rows() > 0 ? std::max(1.0, a.cwiseAbs().maxCoeff()) : 1.0;
    return 1e-10 * scale;
}

}  // namespace

void StateSpace::validate() const {
    const Eigen::Index n = A.rows(), m = D.rows();
    if (A.cols() != n) throw std::invalid_argument("A must be square");
    if (B.rows() != n || B.cols() != m)
        throw std::invalid_argument("B must be n_modes x n_ports");
    if (C.rows() != m || C.cols() != n)
        throw std::invalid_argument("C must be n_ports x n_modes");
    if (D.cols() != m) throw std::invalid_argument("D must be square");
}

StateSpace to_state_space(const SlhModel& model) {
    model.validate();
    StateSpace ss;
    ss.A = -(kI * model.Omega + 0.5 * model.K.adjoint() * model.K);
    ss.B = -model.K.adjoint() * model.S;
    ss.C = model.K;
    ss.D = model.S;
    return ss;
}

PassivityResiduals passivity_residuals(const StateSpace& ss) {
    PassivityResiduals r;
    if (ss.n_modes() > 0) {
        r.drift = (ss.A + ss.A.adjoint() + ss.C.adjoint() * ss.C).cwiseAbs().maxCoeff();
        r.input = (ss.B + ss.C.adjoint() * ss.D).cwiseAbs().maxCoeff();
    }
    return r;
}

Mat controllability_matrix(const StateSpace& ss) {
    const Eigen::Index n = ss.n_modes(), m = ss.n_ports();
    Mat ctrb(n, n * m);
    Mat blk = ss.B;
    for (Eigen::Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * m, m) = blk;
        if (k + 1 < n) blk = ss.A * blk;
    }
    return ctrb;
}

Mat observability_matrix(const StateSpace& ss) {
    const Eigen::Index n = ss.n_modes(), m = ss.n_ports();
    Mat obsv(n * m, n);
    Mat blk = ss.C;
    for (Eigen::Index k = 0; k < n; ++k) {
        obsv.middleRows(k * m, m) = blk;
        if (k + 1 < n) blk = blk * ss.A;
    }
    return obsv;
}

Eigen::Index rank_controllability(const StateSpace& ss) {
    return svd_rank(controllability_matrix(ss));
}

Eigen::Index rank_observability(const StateSpace& ss) {
    return svd_rank(observability_matrix(ss));
}

HurwitzReport is_hurwitz(const StateSpace& ss) {
    HurwitzReport rep;
    rep.eigenvalues = sorted_eigenvalues(ss.A);
    rep.hurwitz = !rep.eigenvalues.empty();
    for (const auto& z : rep.eigenvalues)
        if (!(z.real() < -kHurwitzTol)) rep.hurwitz = false;
    return rep;
}

StateSpace rotate(const StateSpace& ss, const Mat& u) {
    ss.validate();
    const Eigen::Index n = ss.n_modes();
    if (u.rows() != n || u.cols() != n)
        throw std::invalid_argument("rotation must be n_modes x n_modes");
    const double gap = (u.adjoint() * u - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (gap > kUnitaryTol) {
        std::ostringstream os;
        os << "rotation is not unitary (residual " << gap << ")";
        throw std::invalid_argument(os.str());
    }
    StateSpace out;
    out.A = u.adjoint() * ss.A * u;
    out.B = u.adjoint() * ss.B;
    out.C = ss.C * u;
    out.D = ss.D;
    return out;
}

Mat transfer_function(const StateSpace& ss, std::complex<double> s) {
    const Eigen::Index n = ss.n_modes();
    if (n == 0) return ss.D;
    const Mat m = s * Mat::Identity(n, n) - ss.A;
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) {
        std::ostringstream os;
        os << "(sI - A) is singular at s = " << s;
        throw std::runtime_error(os.str());
    }
    return ss.C * lu.solve(ss.B) + ss.D;
}

DfsDecomposition dfs_decompose(const StateSpace& ss) {
    ss.validate();
    const Eigen::Index n = ss.n_modes();
    DfsDecomposition dec;
    if (n == 0) {
        dec.u = Mat(0, 0);
        dec.rotated = ss;
        return dec;
    }

    const double scale = std::max(1.0, ss.A.cwiseAbs().maxCoeff());
    const bool hermitian =
        (ss.A - ss.A.adjoint()).cwiseAbs().maxCoeff() <= kNormalTol * scale;
    const bool normal =
        (ss.A * ss.A.adjoint() - ss.A.adjoint() * ss.A).cwiseAbs().maxCoeff() <=
        kNormalTol * scale * scale;
    const double axis_tol = dfs_axis_tolerance(ss.A);

    Mat u(n, n);
    Eigen::Index d = 0;  // dimension of the DFS block (always the trailing columns)
    if (hermitian) {
        Eigen::SelfAdjointEigenSolver<Mat> es(ss.A);
        u = es.eigenvectors();  // eigenvalues ascending: decaying first, DFS last
        for (Eigen::Index k = 0; k < n; ++k)
            if (std::abs(es.eigenvalues()(k)) <= axis_tol) ++d;
    } else if (normal) {
        Eigen::ComplexSchur<Mat> schur(ss.A);
        // For normal A the Schur form is diagonal, so Q is an orthonormal
        // eigenbasis; sort columns by (Re, Im) of the eigenvalue.
        std::vector<Eigen::Index> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        const Mat& t = schur.matrixT();
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
            const auto a = t(i, i), b = t(j, j);
            if (a.real() != b.real()) return a.real() < b.real();
            return a.imag() < b.imag();
        });
        for (Eigen::Index c = 0; c < n; ++c) {
            u.col(c) = schur.matrixU().col(order[c]);
            if (std::abs(t(order[c], order[c]).real()) <= axis_tol) ++d;
        }
    } else {
        // General passive case: DFS = ker(Ctrb^dag) A ker(Obsv), obtained as
        // the kernel of the stacked matrix [Ctrb^dag; Obsv].
        const Mat ctrb = controllability_matrix(ss);
        const Mat obsv = observability_matrix(ss);
        Mat stacked(ctrb.cols() + obsv.rows(), n);
        stacked.topRows(ctrb.cols()) = ctrb.adjoint();
        stacked.bottomRows(obsv.rows()) = obsv;
        Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double cut = sv.size() > 0 ? kRankTol * sv(0) : 0.0;
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > cut) ++rank;
        d = n - rank;
        if (d == 0) {
            dec.u = Mat::Identity(n, n);
            dec.rotated = ss;
            return dec;
        }
        u.leftCols(rank) = svd.matrixV().leftCols(rank);
        Mat v_dfs = svd.matrixV().rightCols(d);
        // A restricted to the DFS block is skew-Hermitian; diagonalize it so
        // the rotated drift is as clean as possible.
        if (d > 1) {
            const Mat m_dfs = v_dfs.adjoint() * ss.A * v_dfs;
            Eigen::SelfAdjointEigenSolver<Mat> es(kI * m_dfs);
            v_dfs = v_dfs * es.eigenvectors();
        }
        u.rightCols(d) = v_dfs;
    }

    fix_column_phases(u);
    dec.u = u;
    dec.rotated = rotate(ss, u);
    for (Eigen::Index k = n - d; k < n; ++k) dec.dfs_indices.push_back(k);
    return dec;
}

}  // namespace qmem
