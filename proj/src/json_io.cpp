#include "qmem/json_io.hpp"

#include <charconv>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace qmem {

namespace {

Json cx(const std::complex<double>& z) { return Json::array({z.real(), z.imag()}); }

Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(cx(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vec_to_json(const Vec& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(cx(v(i)));
    return out;
}

std::complex<double> cx_from(const Json& j) {
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument("complex entries must be [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

Mat mat_from_json(const Json& j, const char* name) {
    if (!j.is_array())
        throw std::invalid_argument(std::string(name) + " must be an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = 0;
    if (rows > 0) cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols)
            throw std::invalid_argument(std::string(name) + " rows have uneven lengths");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = cx_from(j[r][c]);
    }
    return m;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

Json model_to_json(const SlhModel& model) {
    Json j;
    j["n_modes"] = model.n_modes();
    j["n_ports"] = model.n_ports();
    j["S"] = mat_to_json(model.S);
    j["K"] = mat_to_json(model.K);
    j["Omega"] = mat_to_json(model.Omega);
    Json labels = Json::array();
    for (Eigen::Index p = 0; p < model.n_ports(); ++p)
        labels.push_back(Json::array({model.input_labels[static_cast<size_t>(p)],
                                      model.output_labels[static_cast<size_t>(p)]}));
    j["port_labels"] = std::move(labels);
    return j;
}

SlhModel model_from_json(const Json& j) {
    SlhModel model;
    model.S = mat_from_json(j.at("S"), "S");
    model.K = mat_from_json(j.at("K"), "K");
    model.Omega = mat_from_json(j.at("Omega"), "Omega");
    if (j.contains("port_labels")) {
        for (const auto& pair : j.at("port_labels")) {
            model.input_labels.push_back(pair.at(0).get<std::string>());
            model.output_labels.push_back(pair.at(1).get<std::string>());
        }
    } else {
        for (Eigen::Index p = 0; p < model.n_ports(); ++p) {
            model.input_labels.push_back("p." + std::to_string(p + 1));
            model.output_labels.push_back("p." + std::to_string(p + 1));
        }
    }
    if (j.contains("n_modes") && j.at("n_modes").get<Eigen::Index>() != model.n_modes())
        throw std::invalid_argument("n_modes disagrees with the K matrix shape");
    if (j.contains("n_ports") && j.at("n_ports").get<Eigen::Index>() != model.n_ports())
        throw std::invalid_argument("n_ports disagrees with the S matrix shape");
    model.validate();
    return model;
}

Json adjacency_to_json(const AdjacencyMap& adj) {
    Json j;
    Json conns = Json::array();
    for (const auto& [src, dst] : adj.connections)
        conns.push_back(Json::array({src, dst}));
    j["connections"] = std::move(conns);
    return j;
}

AdjacencyMap adjacency_from_json(const Json& j) {
    AdjacencyMap adj;
    for (const auto& pair : j.at("connections"))
        adj.connections.emplace_back(pair.at(0).get<Eigen::Index>(),
                                     pair.at(1).get<Eigen::Index>());
    return adj;
}

Json analyze_model(const SlhModel& model) {
    const StateSpace ss = to_state_space(model);
    const HurwitzReport hw = is_hurwitz(ss);
    const DfsDecomposition dfs = dfs_decompose(ss);

    Json j;
    j["n_modes"] = ss.n_modes();
    j["n_ports"] = ss.n_ports();
    Json eigs = Json::array();
    for (const auto& z : hw.eigenvalues) eigs.push_back(cx(z));
    j["eigenvalues"] = std::move(eigs);
    j["hurwitz"] = hw.hurwitz;
    j["ctrb_rank"] = rank_controllability(ss);
    j["obsv_rank"] = rank_observability(ss);
    j["dfs_indices"] = dfs.dfs_indices;
    const Mat drift_res = ss.A + ss.A.adjoint() + ss.C.adjoint() * ss.C;
    const Mat input_res = ss.B + ss.C.adjoint() * ss.D;
    j["passivity"] = Json{
        {"drift_residual", drift_res.size() ? drift_res.cwiseAbs().maxCoeff() : 0.0},
        {"input_residual", input_res.size() ? input_res.cwiseAbs().maxCoeff() : 0.0},
    };
    return j;
}

Json reduce_report(const SlhModel& model) {
    Json j = model_to_json(model);
    const StateSpace ss = to_state_space(model);
    j["A"] = mat_to_json(ss.A);
    j["B"] = mat_to_json(ss.B);
    j["C"] = mat_to_json(ss.C);
    j["D"] = mat_to_json(ss.D);
    return j;
}

Json protocol_to_json(const ProtocolResult& r) {
    Json state;
    state["labels"] = r.stored_state.labels;
    state["coefficients"] = vec_to_json(r.stored_state.coefficients);

    Json j;
    j["n_qubits"] = r.n_qubits;
    j["t0"] = r.t0;
    j["t1"] = r.t1;
    j["t2"] = r.t2;
    j["t3"] = r.t3;
    j["dt"] = r.dt;
    j["write_efficiency"] = r.write_efficiency;
    j["write_efficiency_total"] = r.write_efficiency_total;
    j["storage_drift"] = r.storage_drift;
    j["readout_overlap"] = r.readout_overlap;
    j["readout_phase"] = r.readout_phase;
    j["roundtrip_fidelity"] = r.roundtrip_fidelity;
    j["stored_dfs"] = vec_to_json(r.stored_dfs);
    j["retrieved_beta"] = vec_to_json(r.retrieved_beta);
    j["retrieved_beta_nominal"] = vec_to_json(r.retrieved_beta_nominal);
    j["stored_state"] = std::move(state);
    j["energy_residuals"] = r.energy_residuals;
    j["pulse_overlaps"] = r.pulse_overlaps;
    j["warnings"] = r.warnings;
    return j;
}

Json sweep_to_json(const std::vector<SweepPoint>& points, double duration, double dt) {
    Json j;
    j["duration"] = duration;
    j["dt"] = dt;
    Json rows = Json::array();
    for (const auto& p : points)
        rows.push_back(Json{{"epsilon", p.epsilon},
                            {"rate", p.rate},
                            {"max_re_lambda", p.max_re_lambda}});
    j["points"] = std::move(rows);
    return j;
}

std::string pulse_to_csv(const Pulse& pulse) {
    std::ostringstream os;
    os << "t,re,im\n";
    for (Eigen::Index i = 0; i < pulse.n_samples(); ++i)
        os << fmt(pulse.time_at(i)) << ',' << fmt(pulse.samples(i).real()) << ','
           << fmt(pulse.samples(i).imag()) << '\n';
    return os.str();
}

Json pulse_meta_to_json(const Pulse& pulse) {
    Json j;
    j["label"] = pulse.label;
    j["norm_constant"] = pulse.norm_constant;
    j["t_switch"] = pulse.t_anchor;
    j["dt"] = pulse.dt;
    return j;
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << 't';
    for (Eigen::Index r = 0; r < traj.c.rows(); ++r)
        os << ",re_c" << (r + 1) << ",im_c" << (r + 1);
    for (Eigen::Index r = 0; r < traj.eta.rows(); ++r)
        os << ",re_eta" << (r + 1) << ",im_eta" << (r + 1);
    os << '\n';
    for (Eigen::Index i = 0; i <= traj.n_steps(); ++i) {
        os << fmt(traj.time_at(i));
        for (Eigen::Index r = 0; r < traj.c.rows(); ++r)
            os << ',' << fmt(traj.c(r, i).real()) << ',' << fmt(traj.c(r, i).imag());
        for (Eigen::Index r = 0; r < traj.eta.rows(); ++r)
            os << ',' << fmt(traj.eta(r, i).real()) << ',' << fmt(traj.eta(r, i).imag());
        os << '\n';
    }
    return os.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace qmem
