#include "qmem/pulse.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace qmem {

namespace {

constexpr double kGridTol = 1e-9;
constexpr double kAxisTol = 1e-9;
constexpr double kStableTol = 1e-10;

// exp(M t) c decays iff every mode is strictly stable except for slots that
// are structurally decoupled (zero row, zero column, zero entry of c), which
// the product never excites.
bool decaying_branch(const Mat& m, const Mat& c_col) {
    const Eigen::Index n = m.rows();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> live;
    for (Eigen::Index k = 0; k < n; ++k) {
        const bool decoupled = m.row(k).cwiseAbs().maxCoeff() <= kAxisTol * scale &&
                               m.col(k).cwiseAbs().maxCoeff() <= kAxisTol * scale &&
                               std::abs(c_col(k, 0)) <= kAxisTol * scale;
        if (!decoupled) live.push_back(k);
    }
    if (live.empty()) return true;

    Mat sub(live.size(), live.size());
    for (size_t r = 0; r < live.size(); ++r)
        for (size_t c = 0; c < live.size(); ++c) sub(r, c) = m(live[r], live[c]);
    Eigen::ComplexEigenSolver<Mat> es(sub, false);
    for (Eigen::Index k = 0; k < sub.rows(); ++k)
        if (es.eigenvalues()(k).real() > -kStableTol * scale) return false;
    return true;
}

Mat select_branch(const Mat& a_sharp, const Mat& c_col) {
    if (decaying_branch(a_sharp, c_col)) return a_sharp;
    if (decaying_branch(-a_sharp, c_col)) return -a_sharp;
    throw std::runtime_error(
        "no rising-exponential solution: neither sign of the drift decays");
}

void check_synthesis_args(const StateSpace& rotated,
                          const std::vector<Eigen::Index>& dfs_indices) {
    rotated.validate();
    if (rotated.n_ports() != 1)
        throw std::invalid_argument("pulse synthesis needs exactly one external port");
    for (Eigen::Index idx : dfs_indices)
        if (idx < 0 || idx >= rotated.n_modes())
            throw std::invalid_argument("component index " + std::to_string(idx) +
                                        " is outside the mode range");
}

Pulse finalize(Pulse p) {
    const double nn = norm(p);
    if (!(nn > 1e-12)) {
        std::ostringstream os;
        os << "pulse '" << p.label << "' has zero norm; the requested component "
           << "never couples to the port";
        throw std::runtime_error(os.str());
    }
    p.samples /= nn;
    p.norm_constant = nn;
    p.normalized = true;
    return p;
}

}  // namespace

Eigen::Index grid_steps(double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(t1 > t0)) throw std::invalid_argument("grid end must exceed its start");
    const double span = (t1 - t0) / dt;
    const double rounded = std::round(span);
    if (std::abs(span - rounded) > kGridTol * std::max(1.0, span))
        throw std::invalid_argument("grid span is not a whole number of steps");
    return static_cast<Eigen::Index>(rounded);
}

void Pulse::validate() const {
    if (samples.size() != grid_steps(t0, t1, dt) + 1)
        throw std::invalid_argument("sample count does not match the grid");
}

double norm(const Pulse& p) {
    const Eigen::Index n = p.samples.size();
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += std::norm(p.samples(i));
    sum -= 0.5 * (std::norm(p.samples(0)) + std::norm(p.samples(n - 1)));
    return std::sqrt(p.dt * sum);
}

std::complex<double> overlap(const Pulse& p, const Pulse& q) {
    const double tscale = std::max({1.0, std::abs(p.t0), std::abs(q.t0)});
    if (p.samples.size() != q.samples.size() ||
        std::abs(p.t0 - q.t0) > kGridTol * tscale ||
        std::abs(p.dt - q.dt) > kGridTol * std::max(p.dt, q.dt))
        throw std::invalid_argument("pulse grids differ");
    const Eigen::Index n = p.samples.size();
    if (n < 2) return 0.0;
    std::complex<double> sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += std::conj(p.samples(i)) * q.samples(i);
    sum -= 0.5 * (std::conj(p.samples(0)) * q.samples(0) +
                  std::conj(p.samples(n - 1)) * q.samples(n - 1));
    return p.dt * sum;
}

Pulse embed(const Pulse& p, double t0, double t1) {
    p.validate();
    const Eigen::Index steps = grid_steps(t0, t1, p.dt);
    const double off = (p.t0 - t0) / p.dt;
    const double off_rounded = std::round(off);
    if (off < -kGridTol || std::abs(off - off_rounded) > kGridTol * std::max(1.0, off))
        throw std::invalid_argument("embedding start is not grid-commensurate");
    const Eigen::Index shift = static_cast<Eigen::Index>(off_rounded);
    if (shift + p.samples.size() > steps + 1)
        throw std::invalid_argument("pulse does not fit in the embedding window");

    Pulse out = p;
    out.t0 = t0;
    out.t1 = t1;
    out.samples = Vec::Zero(steps + 1);
    out.samples.segment(shift, p.samples.size()) = p.samples;
    return out;
}

Pulse zero_pulse(double t0, double t1, double dt, const std::string& label) {
    Pulse p;
    p.t0 = t0;
    p.t1 = t1;
    p.dt = dt;
    p.samples = Vec::Zero(grid_steps(t0, t1, dt) + 1);
    p.label = label;
    return p;
}

std::vector<Pulse> write_pulses(const StateSpace& rotated,
                                const std::vector<Eigen::Index>& dfs_indices,
                                double t_start, double t_switch, double dt) {
    check_synthesis_args(rotated, dfs_indices);
    const Eigen::Index steps = grid_steps(t_start, t_switch, dt);
    const Mat m = select_branch(rotated.A.conjugate(), rotated.C.transpose());
    const Mat e = (m * dt).exp();

    std::vector<Vec> buf(dfs_indices.size(), Vec(steps + 1));
    Vec v = rotated.C.transpose();
    for (Eigen::Index j = 0;; ++j) {
        for (size_t k = 0; k < dfs_indices.size(); ++k)
            buf[k](steps - j) = -v(dfs_indices[k]);
        if (j == steps) break;
        v = e * v;
    }

    std::vector<Pulse> out;
    for (size_t k = 0; k < dfs_indices.size(); ++k) {
        Pulse p;
        p.t0 = t_start;
        p.t1 = t_switch;
        p.dt = dt;
        p.samples = std::move(buf[k]);
        p.label = "write_" + std::to_string(k + 1);
        p.t_anchor = t_switch;
        out.push_back(finalize(std::move(p)));
    }
    return out;
}

std::vector<Pulse> read_pulses(const StateSpace& rotated,
                               const std::vector<Eigen::Index>& dfs_indices,
                               double t_release, double t_end, double dt) {
    check_synthesis_args(rotated, dfs_indices);
    const Eigen::Index steps = grid_steps(t_release, t_end, dt);
    const Mat m = select_branch(rotated.A.conjugate(), rotated.C.transpose());
    const Mat e = (m * dt).exp();

    std::vector<Vec> buf(dfs_indices.size(), Vec(steps + 1));
    Vec v = rotated.C.transpose();
    for (Eigen::Index j = 0;; ++j) {
        for (size_t k = 0; k < dfs_indices.size(); ++k) buf[k](j) = v(dfs_indices[k]);
        if (j == steps) break;
        v = e * v;
    }

    std::vector<Pulse> out;
    for (size_t k = 0; k < dfs_indices.size(); ++k) {
        Pulse p;
        p.t0 = t_release;
        p.t1 = t_end;
        p.dt = dt;
        p.samples = std::move(buf[k]);
        p.label = "read_" + std::to_string(k + 1);
        p.t_anchor = t_release;
        out.push_back(finalize(std::move(p)));
    }
    return out;
}

}  // namespace qmem
