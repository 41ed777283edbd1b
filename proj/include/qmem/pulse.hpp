#pragma once

#include "qmem/state_space.hpp"

#include <complex>
#include <string>
#include <vector>

namespace qmem {

/// Complex envelope sampled on the uniform grid t0, t0+dt, ..., t1.
struct Pulse {
    double t0 = 0.0;
    double t1 = 0.0;
    double dt = 0.0;
    Vec samples;
    std::string label;
    bool normalized = false;
    double norm_constant = 1.0;  // L2 norm divided out when normalizing
    double t_anchor = 0.0;       // switch time (write) or release time (read)

    Eigen::Index n_samples() const { return samples.size(); }
    double time_at(Eigen::Index i) const { return t0 + dt * static_cast<double>(i); }
    void validate() const;
};

/// Number of steps in [t0, t1] at step dt; the span must be a whole number of
/// steps within a 1e-9 relative tolerance.
Eigen::Index grid_steps(double t0, double t1, double dt);

/// Trapezoid-rule L2 norm sqrt(integral |p|^2).
double norm(const Pulse& p);

/// Trapezoid-rule inner product integral conj(p) q.  Grids must coincide.
std::complex<double> overlap(const Pulse& p, const Pulse& q);

/// Zero-extend p onto the enclosing grid [t0, t1] (same dt; both endpoints
/// grid-commensurate with p).
Pulse embed(const Pulse& p, double t0, double t1);

/// All-zero envelope on the given grid.
Pulse zero_pulse(double t0, double t1, double dt, const std::string& label = "vacuum");

/// Rising-exponential write envelopes nu(t) = -exp(M (t_switch - t)) C^T on
/// [t_start, t_switch], M the decaying branch of the entrywise-conjugate
/// drift, one pulse per requested component index.  The system must expose a
/// single external port.  Each pulse is L2-normalized with the constant
/// reported; pulses are understood to vanish for t > t_switch.
std::vector<Pulse> write_pulses(const StateSpace& rotated,
                                const std::vector<Eigen::Index>& dfs_indices,
                                double t_start, double t_switch, double dt);

/// Decaying read-out envelopes nu'(t) = exp(M (t - t_release)) C^T on
/// [t_release, t_end]; zero for t < t_release.  Same conventions as
/// write_pulses.
std::vector<Pulse> read_pulses(const StateSpace& rotated,
                               const std::vector<Eigen::Index>& dfs_indices,
                               double t_release, double t_end, double dt);

}  // namespace qmem
