// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Runs against the library directly except for the determinism check, which
// shells out to the qmem binary (QMEM_CLI).

#include "qmem/memory.hpp"
#include "qmem/netdsl.hpp"
#include "qmem/pulse.hpp"
#include "qmem/sim.hpp"
#include "qmem/slh.hpp"
#include "qmem/state_space.hpp"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace qmem;

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Mat mat2(std::complex<double> a, std::complex<double> b, std::complex<double> c,
         std::complex<double> d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

struct Outcome {
    bool ok = true;
    std::string note;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            note = what;
        }
    }
    void annotate(const std::string& extra) {
        if (ok) note = note.empty() ? extra : note + ", " + extra;
    }
};

// Protocol runs shared between criteria; computed on first use so a failure
// inside one is charged to every criterion that depends on it.
struct Shared {
    std::optional<ProtocolResult> qubit, fock, ditpair, dit_lo, dit_hi;

    MemorySpec spec(Eigen::Index n) const {
        MemorySpec s;
        s.n_qubits = n;
        s.gamma = 1.0;
        return s;
    }

    const ProtocolResult& qubit_run() {
        if (!qubit) {
            Vec beta(1);
            beta << 1.0;
            qubit = run_protocol(spec(1), beta, 0.0, -60, 0, 100, 160, 0.01);
        }
        return *qubit;
    }
    const ProtocolResult& fock_run() {
        if (!fock) {
            Vec beta(1);
            beta << 0.8;
            fock = run_protocol(spec(1), beta, 0.6, -60, 0, 100, 160, 0.01);
        }
        return *fock;
    }
    const ProtocolResult& ditpair_run() {
        if (!ditpair) {
            Vec beta(2);
            beta << 0.6, 0.8;
            ditpair = run_protocol(spec(2), beta, 0.0, -100, 0, 100, 200, 0.01);
        }
        return *ditpair;
    }
    const ProtocolResult& dit_lo_run() {
        if (!dit_lo) {
            Vec beta(2);
            beta << 1.0, 0.0;
            dit_lo = run_protocol(spec(2), beta, 0.0, -100, 0, 100, 200, 0.01);
        }
        return *dit_lo;
    }
    const ProtocolResult& dit_hi_run() {
        if (!dit_hi) {
            Vec beta(2);
            beta << 0.0, 1.0;
            dit_hi = run_protocol(spec(2), beta, 0.0, -100, 0, 100, 200, 0.01);
        }
        return *dit_hi;
    }
};

Shared shared;

MemorySpec spec_for(double gamma, Eigen::Index n = 1) {
    MemorySpec s;
    s.n_qubits = n;
    s.gamma = gamma;
    return s;
}

SlhModel reduce_config1(double gamma) {
    const std::vector<SlhModel> cavities = {make_cavity(gamma / 2, gamma / 2, "p"),
                                            make_cavity(gamma / 2, gamma / 2, "c")};
    AdjacencyMap adj;
    adj.connections = {{0, 3}, {3, 1}, {1, 2}};
    return feedback_reduce(parallel_sum(cavities), adj);
}

Outcome criterion_reduction() {
    Outcome out;
    for (double gamma : {0.5, 1.0, 2.0}) {
        const SlhModel red = reduce_config1(gamma);
        out.require(red.n_ports() == 1 && red.n_modes() == 2, "unexpected shape");
        if (!out.ok) return out;
        const std::complex<double> kval = std::sqrt(2.0 * gamma);
        out.require(std::abs(red.K(0, 0) - kval) <= 1e-12 &&
                        std::abs(red.K(0, 1) - kval) <= 1e-12,
                    "K != sqrt(2 gamma) [1,1] at gamma " + fmt(gamma));
        const Mat want = mat2(-gamma, -gamma / 2, -1.5 * gamma, -gamma);
        const double err = max_abs(to_state_space(red).A - want);
        out.require(err <= 1e-12, "drift off by " + fmt(err) + " at gamma " + fmt(gamma));
    }
    out.annotate("gamma 0.5, 1, 2");
    return out;
}

Outcome criterion_spectra() {
    Outcome out;
    const double root3 = std::sqrt(3.0) / 2.0;
    for (double gamma : {0.5, 1.0, 2.0}) {
        const auto ev1 =
            is_hurwitz(to_state_space(qubit_config(spec_for(gamma), 1))).eigenvalues;
        out.require(std::abs(ev1[0] - std::complex<double>(-gamma * (1 + root3))) <= 1e-10 &&
                        std::abs(ev1[1] - std::complex<double>(-gamma * (1 - root3))) <= 1e-10,
                    "write-mode spectrum wrong at gamma " + fmt(gamma));
        const auto ev2 =
            is_hurwitz(to_state_space(qubit_config(spec_for(gamma), 2))).eigenvalues;
        out.require(std::abs(ev2[0] - std::complex<double>(-gamma)) <= 1e-10 &&
                        std::abs(ev2[1]) <= 1e-10,
                    "storage spectrum wrong at gamma " + fmt(gamma));
    }
    out.annotate("-gamma(1 +/- sqrt(3)/2) and {0, -gamma}");
    return out;
}

Outcome criterion_dfs() {
    Outcome out;
    for (double gamma : {0.5, 1.0, 2.0}) {
        const StateSpace ss = to_state_space(qubit_config(spec_for(gamma), 2));
        const DfsDecomposition dec = dfs_decompose(ss);
        out.require(dec.dfs_indices.size() == 1, "expected exactly one protected mode");
        if (!out.ok) return out;
        const Eigen::Index k = dec.dfs_indices[0];
        out.require(max_abs(dec.rotated.A - mat2(-gamma, 0, 0, 0)) <= 1e-12,
                    "rotated drift is not diag(-gamma, 0)");
        out.require(max_abs(dec.rotated.B.row(k)) <= 1e-12 &&
                        max_abs(dec.rotated.C.col(k)) <= 1e-12,
                    "protected mode still couples to the ports");
        out.require(rank_controllability(ss) == 1 && rank_observability(ss) == 1,
                    "ranks are not (1, 1)");
    }
    out.annotate("one dark mode, ranks 1/1");
    return out;
}

Outcome criterion_passivity() {
    Outcome out;
    std::vector<SlhModel> models;
    for (double gamma : {0.5, 1.0, 2.0})
        for (int which : {1, 2}) models.push_back(qubit_config(spec_for(gamma), which));
    for (Eigen::Index n : {2, 3})
        for (int which : {1, 2}) models.push_back(qudit_config(spec_for(1.0, n), which));
    for (double eps : {0.001, 0.05}) {
        MemorySpec s = spec_for(1.0);
        s.kappa_c1 = (1 + eps) * 0.5;
        models.push_back(qubit_config(s, 1));
        models.push_back(qubit_config(s, 2));
    }
    models.push_back(make_cavity(0.5, 0.5, "lone"));
    models.push_back(compile(parse_file(QMEM_SOURCE_DIR "/netlists/qubit_config1.qnet")));
    models.push_back(compile(parse_file(QMEM_SOURCE_DIR "/netlists/qubit_config2.qnet")));

    double worst = 0.0;
    for (const SlhModel& m : models) {
        m.validate();
        const PassivityResiduals pr = passivity_residuals(to_state_space(m));
        worst = std::max({worst, pr.drift, pr.input});
    }
    out.require(worst <= 1e-10,
                "passivity residual " + fmt(worst) + " above 1e-10");

    double worst_energy = 0.0;
    for (const ProtocolResult* r : {&shared.qubit_run(), &shared.fock_run(),
                                    &shared.ditpair_run()})
        for (double res : r->energy_residuals) worst_energy = std::max(worst_energy, res);
    out.require(worst_energy <= 1e-7,
                "energy residual " + fmt(worst_energy) + " above 1e-7");
    out.annotate(std::to_string(models.size()) + " models, worst passivity " +
                 fmt(worst) + ", worst energy " + fmt(worst_energy));
    return out;
}

Outcome criterion_pulse_shape() {
    Outcome out;
    for (double gamma : {1.0, 2.0}) {
        const StateSpace rot =
            rotate(to_state_space(qubit_config(spec_for(gamma), 1)), module_rotation(1));
        const double dt = 0.01 / gamma;
        const Pulse w = write_pulses(rot, {1}, -60 / gamma, 0.0, dt)[0];

        // least-squares slope of log|xi| against time-before-switch
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < w.n_samples(); ++i) {
            const double t = w.time_at(i);
            if (t < -60 / gamma - 1e-12 || t > -40 / gamma + 1e-12) continue;
            const double x = -t;
            const double y = std::log(std::abs(w.samples(i)));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++count;
        }
        const double n = static_cast<double>(count);
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double target = -(1.0 - std::sqrt(3.0) / 2.0) * gamma;
        out.require(std::abs(slope - target) <= 0.02 * std::abs(target),
                    "slope " + fmt(slope) + " vs " + fmt(target) + " at gamma " +
                        fmt(gamma));
        if (gamma == 1.0)
            out.annotate("slope " + fmt(slope) + " vs " + fmt(target));

        const Pulse r = read_pulses(rot, {1}, 100, 100 + 60 / gamma, dt)[0];
        double mirror = 0.0;
        const Eigen::Index last = w.n_samples() - 1;
        for (Eigen::Index i = 0; i < w.n_samples(); ++i)
            mirror = std::max(mirror, std::abs(std::abs(w.samples(last - i)) -
                                               std::abs(r.samples(i))));
        out.require(mirror <= 1e-9, "read is not the mirrored write: " + fmt(mirror));
    }
    return out;
}

Outcome criterion_protocol() {
    Outcome out;
    const ProtocolResult& p = shared.qubit_run();
    out.require(p.write_efficiency_total >= 0.999,
                "write efficiency " + fmt(p.write_efficiency_total));
    out.require(p.storage_drift <= 1e-9, "storage drift " + fmt(p.storage_drift));
    out.require(p.readout_overlap >= 0.999, "readout overlap " + fmt(p.readout_overlap));

    Vec beta(1);
    beta << 1.0;
    double prev_fid = -1.0, prev_eff = -1.0;
    for (double window : {20.0, 40.0, 60.0}) {
        const ProtocolResult r = run_protocol(shared.spec(1), beta, 0.0, -window, 0,
                                              100, 100 + window, 0.01);
        out.require(r.roundtrip_fidelity > prev_fid && r.write_efficiency_total > prev_eff,
                    "fidelity not monotone at window " + fmt(window));
        prev_fid = r.roundtrip_fidelity;
        prev_eff = r.write_efficiency_total;
    }
    out.annotate("eff deficit " + fmt(1 - p.write_efficiency_total) + ", drift " +
                 fmt(p.storage_drift) + ", readout deficit " +
                 fmt(1 - p.readout_overlap));
    return out;
}

Outcome criterion_storage_state() {
    Outcome out;
    const ProtocolResult& p = shared.fock_run();
    const double over_root2 = 0.8 / std::sqrt(2.0);
    Vec want(3);
    want << 0.6, over_root2, -over_root2;
    out.require(p.stored_state.coefficients.size() == 3, "wrong basis size");
    if (!out.ok) return out;
    const double err = (p.stored_state.coefficients - want).cwiseAbs().maxCoeff();
    out.require(err <= 1e-3, "coefficient error " + fmt(err));
    out.annotate("max coefficient error " + fmt(err));
    return out;
}

Outcome criterion_qudit() {
    Outcome out;
    const Mat block = mat2(-2, -0.5, 0.5, 0);
    for (Eigen::Index n : {Eigen::Index(2), Eigen::Index(3)}) {
        const StateSpace ss = to_state_space(qudit_config(spec_for(1.0, n), 1));
        out.require(is_hurwitz(ss).hurwitz, "cascade drift is not Hurwitz");
        const StateSpace rot = rotate(ss, module_rotation(n));
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k) {
                const Mat sub = rot.A.block(2 * j, 2 * k, 2, 2);
                if (j == k)
                    out.require(max_abs(sub - block) <= 1e-12,
                                "diagonal block differs at module " + std::to_string(j));
                else if (k > j)
                    out.require(max_abs(sub) <= 1e-12, "upper block is nonzero");
            }

        const auto writes = write_pulses(rot, [&] {
            std::vector<Eigen::Index> slots;
            for (Eigen::Index k = 0; k < n; ++k) slots.push_back(2 * k + 1);
            return slots;
        }(), -100, 0, 0.01);
        double worst_overlap = 0.0;
        for (size_t j = 0; j < writes.size(); ++j)
            for (size_t k = j + 1; k < writes.size(); ++k)
                worst_overlap =
                    std::max(worst_overlap, std::abs(overlap(writes[j], writes[k])));
        out.require(worst_overlap <= 1e-6,
                    "pulse overlap " + fmt(worst_overlap) + " at n " + std::to_string(n));
        if (n == 3) out.annotate("max pulse overlap " + fmt(worst_overlap));
    }

    const ProtocolResult& p = shared.ditpair_run();
    const std::complex<double> ratio = p.retrieved_beta(1) / p.retrieved_beta(0);
    const double ratio_err = std::abs(ratio / (0.8 / 0.6) - 1.0);
    out.require(ratio_err <= 1e-3, "retrieval ratio off by " + fmt(ratio_err));
    const double cross = std::max(std::abs(shared.dit_lo_run().retrieved_beta(1)),
                                  std::abs(shared.dit_hi_run().retrieved_beta(0)));
    out.require(cross <= 1e-3, "cross-talk " + fmt(cross));
    out.annotate("ratio err " + fmt(ratio_err) + ", cross-talk " + fmt(cross));
    return out;
}

Outcome criterion_mismatch() {
    Outcome out;
    const auto pts = mismatch_sweep(spec_for(1.0), {0.0, 0.001, 0.01, 0.05}, 100, 0.05);
    out.require(pts[0].rate <= 1e-10, "matched mirrors still leak: " + fmt(pts[0].rate));
    for (size_t i = 2; i < pts.size(); ++i)
        out.require(pts[i].rate > pts[i - 1].rate, "leakage rate is not monotone");
    for (size_t i = 1; i < pts.size(); ++i) {
        const double spectral = 2.0 * std::abs(pts[i].max_re_lambda);
        out.require(std::abs(pts[i].rate - spectral) <= 0.10 * spectral,
                    "rate " + fmt(pts[i].rate) + " vs spectral " + fmt(spectral) +
                        " at epsilon " + fmt(pts[i].epsilon));
    }
    out.annotate("rate(0) = " + fmt(pts[0].rate) + ", rate(0.05) = " +
                 fmt(pts.back().rate));
    return out;
}

Outcome criterion_dsl() {
    Outcome out;
    for (int which : {1, 2}) {
        const std::string path = std::string(QMEM_SOURCE_DIR) + "/netlists/qubit_config" +
                                 std::to_string(which) + ".qnet";
        const SlhModel net = compile(parse_file(path));
        const SlhModel ref = qubit_config(spec_for(1.0), which);
        const double err = std::max({max_abs(net.S - ref.S), max_abs(net.K - ref.K),
                                     max_abs(net.Omega - ref.Omega)});
        out.require(err <= 1e-12, "netlist " + std::to_string(which) +
                                      " differs from the preset by " + fmt(err));
        out.require(net.input_labels == ref.input_labels &&
                        net.output_labels == ref.output_labels,
                    "netlist labels differ from the preset");
    }

    const fs::path dir = fs::path(QMEM_SOURCE_DIR) / "tests/fixtures/netdsl/invalid";
    std::ifstream manifest(dir / "manifest.txt");
    out.require(bool(manifest), "missing invalid-fixture manifest");
    std::string line;
    int checked = 0;
    while (std::getline(manifest, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string file, lineno, needle;
        std::getline(row, file, '|');
        std::getline(row, lineno, '|');
        std::getline(row, needle);
        bool threw = false;
        try {
            compile(parse_file((dir / file).string()));
        } catch (const NetError& e) {
            threw = true;
            out.require(e.pos().line == std::stoi(lineno),
                        file + ": diagnostic at line " + std::to_string(e.pos().line) +
                            ", expected " + lineno);
            out.require(std::string(e.what()).find(needle) != std::string::npos,
                        file + ": diagnostic lacks '" + needle + "'");
        }
        out.require(threw, file + " compiled without a diagnostic");
        ++checked;
    }
    out.require(checked >= 10, "too few invalid fixtures");
    out.annotate("2 netlists, " + std::to_string(checked) + " invalid fixtures");
    return out;
}

Outcome criterion_determinism() {
    Outcome out;
    const fs::path dir = fs::temp_directory_path() / "qmem_acceptance";
    fs::create_directories(dir);
    const fs::path a = dir / "run_a.json";
    const fs::path b = dir / "run_b.json";
    const std::string flags =
        " protocol --n 2 --gamma 1 --beta 0.6,0.8 --t0 -60 --t1 0 --t2 60 --t3 120"
        " --dt 0.02 -o ";
    for (const fs::path* p : {&a, &b}) {
        const std::string cmd =
            std::string(QMEM_CLI) + flags + p->string() + " 2>/dev/null";
        const int status = std::system(cmd.c_str());
        out.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "protocol run failed");
    }
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    const std::string bytes = slurp(a);
    out.require(!bytes.empty() && bytes == slurp(b), "repeated runs differ");
    out.annotate(std::to_string(bytes.size()) + " bytes identical");
    return out;
}

struct Criterion {
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"network reduction reproduces the hand-derived qubit drift", criterion_reduction},
        {"spectra of the write and storage configurations", criterion_spectra},
        {"storage configuration protects exactly one dark mode", criterion_dfs},
        {"passivity identities and simulation energy balance", criterion_passivity},
        {"write pulse is a rising exponential, read its mirror", criterion_pulse_shape},
        {"qubit protocol fidelity and window monotonicity", criterion_protocol},
        {"reconstructed storage state matches the superposition", criterion_storage_state},
        {"qudit cascade structure, retrieval and pulse overlaps", criterion_qudit},
        {"mirror mismatch leakage follows the perturbed spectrum", criterion_mismatch},
        {"netlists reproduce presets; invalid fixtures diagnose", criterion_dsl},
        {"repeated protocol runs are byte-identical", criterion_determinism},
    };

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Outcome out;
        try {
            out = criteria[i].run();
        } catch (const std::exception& e) {
            out.ok = false;
            out.note = std::string("exception: ") + e.what();
        }
        if (!out.ok) ++failures;
        std::cout << (out.ok ? "[PASS] " : "[FAIL] ") << i + 1 << ". "
                  << criteria[i].title
                  << (out.note.empty() ? "" : " (" + out.note + ")") << "\n";
    }
    if (failures)
        std::cout << failures << " of " << criteria.size() << " criteria failed\n";
    else
        std::cout << "all " << criteria.size() << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
