// qmem: compose, analyze and simulate passive linear optical networks.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include "qmem/json_io.hpp"
#include "qmem/memory.hpp"
#include "qmem/netdsl.hpp"
#include "qmem/pulse.hpp"
#include "qmem/sim.hpp"

#include "CLI11.hpp"

#include <complex>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace {

using namespace qmem;

struct ModelSource {
    std::string preset;
    std::string qnet;
    std::string model;
    double gamma = 1.0;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--preset", preset,
                        "built-in network: qubit1, qubit2, quditN-1, quditN-2");
        cmd->add_option("--qnet", qnet, ".qnet netlist to compile");
        cmd->add_option("--model", model, "model JSON file");
        cmd->add_option("--gamma", gamma, "module linewidth for presets")
            ->check(CLI::PositiveNumber);
    }

    SlhModel load() const {
        const int given = !preset.empty() + !qnet.empty() + !model.empty();
        if (given != 1)
            throw CLI::ValidationError(
                "exactly one of --preset, --qnet or --model is required");
        if (!qnet.empty()) {
            if (!std::ifstream(qnet))
                throw CLI::ValidationError("cannot open '" + qnet + "'");
            return compile(parse_file(qnet));
        }
        if (!model.empty()) {
            std::ifstream in(model);
            if (!in) throw CLI::ValidationError("cannot open '" + model + "'");
            return model_from_json(Json::parse(in));
        }

        MemorySpec spec;
        spec.gamma = gamma;
        spec.n_qubits = 1;
        if (preset == "qubit1") return qubit_config(spec, 1);
        if (preset == "qubit2") return qubit_config(spec, 2);
        std::smatch m;
        if (std::regex_match(preset, m, std::regex(R"(qudit(\d+)-([12]))"))) {
            spec.n_qubits = std::stol(m[1]);
            return qudit_config(spec, std::stoi(m[2]));
        }
        throw CLI::ValidationError("unknown preset '" + preset + "'");
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CLI::ValidationError("cannot write '" + path + "'");
    out << text;
}

Vec to_complex_vector(const std::vector<double>& re, std::vector<double> im,
                      const char* what) {
    if (im.empty()) im.assign(re.size(), 0.0);
    if (im.size() != re.size())
        throw CLI::ValidationError(std::string(what) +
                                   ": real and imaginary lists differ in length");
    Vec v(static_cast<Eigen::Index>(re.size()));
    for (size_t i = 0; i < re.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = {re[i], im[i]};
    return v;
}

int env_threads() {
    const char* raw = std::getenv("QMEM_THREADS");
    if (!raw) return 1;
    const int v = std::atoi(raw);
    return v > 0 ? v : 1;
}

// QMEM_THREADS also acts as a hard cap on an explicit --threads request.
int cap_threads(int requested) {
    const int capped = std::max(1, requested);
    return std::getenv("QMEM_THREADS") ? std::min(capped, env_threads()) : capped;
}

InputHold parse_hold(const std::string& name) {
    if (name == "cubic") return InputHold::cubic;
    if (name == "midpoint") return InputHold::midpoint;
    throw CLI::ValidationError("unknown hold '" + name + "' (cubic or midpoint)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"passive linear quantum optical network toolkit"};
    app.require_subcommand(1);

    ModelSource reduce_src, analyze_src, sim_src;
    std::string output, hold_name = "cubic";

    auto* reduce = app.add_subcommand("reduce", "compile a network to a model JSON");
    reduce_src.add_flags(reduce);
    reduce->add_option("--output,-o", output, "output path (default stdout)");

    auto* analyze = app.add_subcommand("analyze", "spectrum, ranks, DFS, passivity");
    analyze_src.add_flags(analyze);
    analyze->add_option("--output,-o", output, "output path (default stdout)");

    auto* pulse_cmd = app.add_subcommand("pulse", "write/read envelopes as CSV");
    Eigen::Index pulse_n = 1;
    double pulse_gamma = 1.0, p_t0 = -60.0, p_t1 = 0.0, p_dt = 0.01;
    std::optional<double> p_t2, p_t3;
    int pulse_which = 1;
    std::string prefix = "pulse";
    pulse_cmd->add_option("--n", pulse_n, "number of modules")->check(CLI::PositiveNumber);
    pulse_cmd->add_option("--gamma", pulse_gamma, "module linewidth")
        ->check(CLI::PositiveNumber);
    pulse_cmd->add_option("--which", pulse_which, "configuration (1 write/read, 2 storage)");
    pulse_cmd->add_option("--t0", p_t0, "write window start");
    pulse_cmd->add_option("--t1", p_t1, "switch-off time");
    pulse_cmd->add_option("--t2", p_t2, "release time (default t1)");
    pulse_cmd->add_option("--t3", p_t3, "read window end (default t2 + (t1 - t0))");
    pulse_cmd->add_option("--dt", p_dt, "sample spacing")->check(CLI::PositiveNumber);
    pulse_cmd->add_option("--output,-o", prefix, "output file prefix");

    auto* simulate = app.add_subcommand("simulate", "propagate one stage, emit a trajectory CSV");
    sim_src.add_flags(simulate);
    double s_t0 = 0.0, s_t1 = 10.0, s_dt = 0.01;
    std::vector<double> c0_re, c0_im;
    std::vector<std::string> input_files;
    simulate->add_option("--t0", s_t0, "start time");
    simulate->add_option("--t1", s_t1, "end time");
    simulate->add_option("--dt", s_dt, "sample spacing")->check(CLI::PositiveNumber);
    simulate->add_option("--c0", c0_re, "initial amplitudes (real parts)")->delimiter(',');
    simulate->add_option("--c0-imag", c0_im, "initial amplitudes (imaginary parts)")
        ->delimiter(',');
    simulate->add_option("--input", input_files, "input pulse CSV, one per port");
    simulate->add_option("--hold", hold_name, "input hold: cubic (default) or midpoint");
    simulate->add_option("--output,-o", output, "output path (default stdout)");

    auto* protocol = app.add_subcommand("protocol", "full write/store/read run");
    Eigen::Index proto_n = 1;
    double proto_gamma = 1.0, t0 = -60.0, t1 = 0.0, t2 = 100.0, t3 = 160.0, dt = 0.01;
    std::vector<double> beta_re, beta_im, alpha0_parts;
    protocol->add_option("--n", proto_n, "number of modules")->check(CLI::PositiveNumber);
    protocol->add_option("--gamma", proto_gamma, "module linewidth")
        ->check(CLI::PositiveNumber);
    protocol->add_option("--beta", beta_re, "stored amplitudes (real parts)")
        ->delimiter(',')
        ->required();
    protocol->add_option("--beta-imag", beta_im, "stored amplitudes (imaginary parts)")
        ->delimiter(',');
    protocol->add_option("--alpha0", alpha0_parts, "vacuum amplitude re[,im]")->delimiter(',');
    protocol->add_option("--t0", t0, "write start");
    protocol->add_option("--t1", t1, "storage start");
    protocol->add_option("--t2", t2, "read start");
    protocol->add_option("--t3", t3, "read end");
    protocol->add_option("--dt", dt, "sample spacing")->check(CLI::PositiveNumber);
    protocol->add_option("--hold", hold_name, "input hold: cubic (default) or midpoint");
    bool coherent = false;
    protocol->add_flag("--coherent", coherent, "treat beta as an unnormalized field");
    protocol->add_option("--output,-o", output, "output path (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "dark-state leakage vs mirror mismatch");
    double sweep_gamma = 1.0, duration = 100.0, sweep_dt = 0.05;
    std::vector<double> epsilons = {0.0, 0.001, 0.01, 0.05};
    int threads = env_threads();
    sweep->add_option("--gamma", sweep_gamma, "module linewidth")->check(CLI::PositiveNumber);
    sweep->add_option("--epsilon", epsilons, "relative kappa_c1 offsets")->delimiter(',');
    sweep->add_option("--duration", duration, "hold time per point")->check(CLI::PositiveNumber);
    sweep->add_option("--dt", sweep_dt, "sample spacing")->check(CLI::PositiveNumber);
    sweep->add_option("--threads", threads, "worker cap (default QMEM_THREADS or 1)");
    sweep->add_option("--output,-o", output, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (reduce->parsed()) {
            write_text(output, dump(reduce_report(reduce_src.load())));
        } else if (analyze->parsed()) {
            write_text(output, dump(analyze_model(analyze_src.load())));
        } else if (pulse_cmd->parsed()) {
            MemorySpec spec;
            spec.n_qubits = pulse_n;
            spec.gamma = pulse_gamma;
            const StateSpace rot =
                rotate(to_state_space(qudit_config(spec, pulse_which)), module_rotation(pulse_n));
            std::vector<Eigen::Index> slots;
            for (Eigen::Index k = 0; k < pulse_n; ++k) slots.push_back(2 * k + 1);
            const double r0 = p_t2.value_or(p_t1);
            const double r1 = p_t3.value_or(r0 + (p_t1 - p_t0));
            const auto writes = write_pulses(rot, slots, p_t0, p_t1, p_dt);
            const auto reads = read_pulses(rot, slots, r0, r1, p_dt);
            for (size_t k = 0; k < writes.size(); ++k) {
                const std::string stem = prefix + "_write_" + std::to_string(k + 1);
                write_text(stem + ".csv", pulse_to_csv(writes[k]));
                write_text(stem + ".json", dump(pulse_meta_to_json(writes[k])));
            }
            for (size_t k = 0; k < reads.size(); ++k) {
                const std::string stem = prefix + "_read_" + std::to_string(k + 1);
                write_text(stem + ".csv", pulse_to_csv(reads[k]));
                write_text(stem + ".json", dump(pulse_meta_to_json(reads[k])));
            }
        } else if (simulate->parsed()) {
            const SlhModel model = sim_src.load();
            const StateSpace ss = to_state_space(model);
            Vec c0 = to_complex_vector(c0_re, c0_im, "--c0");
            if (c0.size() == 0) c0 = Vec::Zero(ss.n_modes());
            std::vector<Pulse> inputs;
            for (const auto& file : input_files) {
                std::ifstream in(file);
                if (!in) throw CLI::ValidationError("cannot open '" + file + "'");
                std::string line;
                std::getline(in, line);  // header
                Pulse p = zero_pulse(s_t0, s_t1, s_dt);
                Eigen::Index i = 0;
                double t, re, im;
                char comma;
                while (in >> t >> comma >> re >> comma >> im && i < p.n_samples())
                    p.samples(i++) = {re, im};
                if (i != p.n_samples())
                    throw CLI::ValidationError("'" + file + "' does not cover the grid");
                inputs.push_back(std::move(p));
            }
            const Trajectory tr =
                propagate(ss, inputs, c0, s_t0, s_t1, s_dt, parse_hold(hold_name));
            write_text(output, trajectory_to_csv(tr));
        } else if (protocol->parsed()) {
            MemorySpec spec;
            spec.n_qubits = proto_n;
            spec.gamma = proto_gamma;
            const Vec beta = to_complex_vector(beta_re, beta_im, "--beta");
            std::complex<double> alpha0 = 0.0;
            if (!alpha0_parts.empty())
                alpha0 = {alpha0_parts[0],
                          alpha0_parts.size() > 1 ? alpha0_parts[1] : 0.0};
            const ProtocolResult res =
                coherent
                    ? coherent_run(spec, beta, t0, t1, t2, t3, dt, parse_hold(hold_name))
                    : run_protocol(spec, beta, alpha0, t0, t1, t2, t3, dt,
                                   parse_hold(hold_name));
            write_text(output, dump(protocol_to_json(res)));
        } else if (sweep->parsed()) {
            MemorySpec spec;
            spec.n_qubits = 1;
            spec.gamma = sweep_gamma;
            const auto points =
                mismatch_sweep(spec, epsilons, duration, sweep_dt, cap_threads(threads));
            write_text(output, dump(sweep_to_json(points, duration, sweep_dt)));
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
