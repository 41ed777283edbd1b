#pragma once

#include "qmem/sim.hpp"
#include "qmem/slh.hpp"
#include "qmem/state_space.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace qmem {

using Json = nlohmann::ordered_json;

/// Model file: {"n_modes","n_ports","S","K","Omega","port_labels"} with
/// complex entries encoded as [re, im] and port_labels as [input, output]
/// label pairs.
Json model_to_json(const SlhModel& model);
SlhModel model_from_json(const Json& j);

/// Adjacency file: {"connections": [[src, dst], ...]}.
Json adjacency_to_json(const AdjacencyMap& adj);
AdjacencyMap adjacency_from_json(const Json& j);

/// Analysis report: spectrum, Hurwitz flag, Kalman ranks, decoherence-free
/// indices and passivity residuals of the model's state-space form.
Json analyze_model(const SlhModel& model);

/// Reduction report: the model fields plus its (A, B, C, D) realization.
Json reduce_report(const SlhModel& model);

Json protocol_to_json(const ProtocolResult& result);
Json sweep_to_json(const std::vector<SweepPoint>& points, double duration, double dt);

/// CSV with header "t,re,im", one row per sample.
std::string pulse_to_csv(const Pulse& pulse);
/// Sidecar metadata: {"label","norm_constant","t_switch","dt"}.
Json pulse_meta_to_json(const Pulse& pulse);

/// CSV with header "t,re_c1,im_c1,...,re_eta1,im_eta1,...".
std::string trajectory_to_csv(const Trajectory& traj);

/// Canonical serialization used everywhere: two-space indent plus newline.
std::string dump(const Json& j);

}  // namespace qmem
