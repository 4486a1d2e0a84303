// spinlind command-line driver.
//
// Exit codes: 0 success, 2 bad input (validation, parse, missing file),
// 3 physics failure (divergent or degenerate pair in a single-geometry run).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinlind/cce_engine.hpp"
#include "spinlind/ensemble_gen.hpp"
#include "spinlind/error.hpp"
#include "spinlind/fit_report.hpp"
#include "spinlind/pipeline.hpp"
#include "spinlind/rate_engine.hpp"
#include "spinlind/spin_model.hpp"
#include "spinlind/synth.hpp"

namespace fs = std::filesystem;
using namespace spinlind;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitPhysics = 3;

struct Flags {
    std::string delta_mode = "ab-initio";
    double t_max_ms = 0.1;
    int steps = 400;
    double norm_a = 1.0;
    std::string observable = "echo";
    std::string dipolar = "verbatim";
    int threads = 0;
    std::string out = ".";
};

void add_run_flags(CLI::App* cmd, Flags& f, bool with_mode = true) {
    if (with_mode) {
        cmd->add_option("--delta-mode", f.delta_mode, "Detuning model")
            ->check(CLI::IsMember({"ab-initio", "zero"}))
            ->capture_default_str();
    }
    cmd->add_option("--tmax-ms", f.t_max_ms, "Grid end time (ms)")->capture_default_str();
    cmd->add_option("--steps", f.steps, "Number of grid points")->capture_default_str();
    cmd->add_option("--norm-a", f.norm_a, "Spin normalization factor A")->capture_default_str();
    cmd->add_option("--observable", f.observable, "Electron readout")
        ->check(CLI::IsMember({"echo", "fid"}))
        ->capture_default_str();
    cmd->add_option("--dipolar", f.dipolar, "Dipolar prefactor convention")
        ->check(CLI::IsMember({"verbatim", "si"}))
        ->capture_default_str();
    cmd->add_option("--threads", f.threads, "Worker count (0 = SPINLIND_THREADS or auto)")->capture_default_str();
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
}

RunConfig to_config(const Flags& f) {
    RunConfig c;
    c.delta_mode = parse_delta_mode(f.delta_mode);
    c.t_max_ms = f.t_max_ms;
    c.steps = f.steps;
    c.norm_a = f.norm_a;
    c.observable = parse_observable(f.observable);
    c.convention = f.dipolar == "si" ? DipolarConvention::si : DipolarConvention::verbatim;
    c.threads = f.threads;
    c.out_dir = f.out;
    c.validate();
    return c;
}

fs::path out_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + c.out_dir.string() + ": " + ec.message());
    return c.out_dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + p.string());
    return os;
}

// A file holding an "equilibrium" key is an ensemble; anything else a system.
struct Loaded {
    EnsembleInput ensemble;
    bool is_ensemble = false;
};

Loaded load_any(const fs::path& path) {
    const auto j = detail::read_json_file(path);
    Loaded l;
    try {
        if (j.is_object() && j.contains("equilibrium")) {
            l.ensemble = ensemble_from_json(j);
            l.is_ensemble = true;
        } else {
            l.ensemble = single_geometry_ensemble(system_from_json(j));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return l;
}

void write_rate_row(std::ostream& os, const std::string& geom, const FlipFlopPair& p) {
    os << geom << ',' << p.i << ',' << p.j << ',' << format_number(p.coupling) << ',' << format_number(p.kappa)
       << ',' << format_number(p.delta) << ',' << format_number(p.rate) << '\n';
}

int cmd_rates(const std::string& input, const Flags& f) {
    const auto cfg = to_config(f);
    const auto opt = cfg.rate_options();
    const auto loaded = load_any(input);
    const auto dir = out_dir(cfg);
    const std::string header = "geometry,i,j,J_rad_s,kappa_rad_s,delta_rad_s,T_rad_s\n";

    if (!loaded.is_ensemble) {
        // single geometry: a failing pair aborts the run
        const auto table = pair_table(loaded.ensemble.equilibrium, cfg.delta_mode, opt);
        auto os = open_out(dir / "rates.csv");
        os << header;
        for (const auto& p : table.pairs) write_rate_row(os, table.geometry, p);
        std::cout << "wrote " << (dir / "rates.csv").string() << " (" << table.pairs.size() << " pairs)\n";
        return 0;
    }

    const auto& e = loaded.ensemble;
    const auto spreads = ensemble_rates(e, cfg.delta_mode, opt, cfg.threads);
    auto os = open_out(dir / "rates.csv");
    os << header;
    const int n = static_cast<int>(e.equilibrium.size());
    for (const auto& s : e.geometries) {
        const auto couplings = coupling_matrix(s, opt);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                try {
                    write_rate_row(os, s.name, detail::pair_entry(s, couplings, i, j, cfg.delta_mode, opt));
                } catch (const PhysicsError&) {
                    os << s.name << ',' << i << ',' << j << ",nan,nan,nan,nan\n";
                }
            }
        }
    }
    auto ss = open_out(dir / "sigma.csv");
    ss << "i,j,sigma_rad_s,flagged\n";
    for (const auto& p : spreads.pairs) {
        ss << p.i << ',' << p.j << ',' << format_number(p.sigma) << ',' << (p.flagged ? 1 : 0) << '\n';
        if (p.flagged) std::cerr << "warning: pair (" << p.i << "," << p.j << ") flagged: " << p.reason << '\n';
    }
    std::cout << "wrote " << (dir / "rates.csv").string() << " and " << (dir / "sigma.csv").string() << " ("
              << e.geometries.size() << " geometries, " << spreads.pairs.size() << " pairs)\n";
    return 0;
}

int cmd_simulate(const std::string& input, const Flags& f, bool per_cluster) {
    const auto cfg = to_config(f);
    const auto loaded = load_any(input);
    const auto result = simulate_ensemble(loaded.ensemble, cfg);
    const auto dir = out_dir(cfg);
    save_profile_csv(dir / "coherence.csv", result.cce.combined);
    std::size_t flagged = 0;
    for (std::size_t k = 0; k < result.cce.clusters.size(); ++k) {
        const auto& c = result.cce.clusters[k];
        if (c.flagged) ++flagged;
        if (per_cluster) {
            save_profile_csv(dir / ("cluster_" + std::to_string(c.i) + "_" + std::to_string(c.j) + ".csv"),
                             result.cce.per_cluster[k]);
        }
    }
    std::cout << "wrote " << (dir / "coherence.csv").string() << " (" << result.cce.clusters.size() << " clusters, "
              << flagged << " flagged)\n";
    return 0;
}

int cmd_fit(const std::string& input, const std::string& out) {
    const auto profile = load_profile_csv(input);
    const auto r = fit_stretched_exp(profile);
    std::cout << "T2_ms=" << format_number(r.t2_ms) << " beta=" << format_number(r.beta)
              << " rmse=" << format_number(r.rmse) << " converged=" << (r.converged ? "yes" : "no")
              << " iterations=" << r.iterations << '\n';
    RunConfig c;
    c.out_dir = out;
    const auto dir = out_dir(c);
    auto os = open_out(dir / "fit.csv");
    os << "T2_ms,beta,rmse,converged,iterations\n"
       << format_number(r.t2_ms) << ',' << format_number(r.beta) << ',' << format_number(r.rmse) << ','
       << (r.converged ? 1 : 0) << ',' << r.iterations << '\n';
    return 0;
}

int cmd_compare(const std::vector<std::string>& inputs, const Flags& f) {
    const auto cfg = to_config(f);
    std::vector<EnsembleInput> ensembles;
    for (const auto& p : inputs) ensembles.push_back(load_any(p).ensemble);
    const auto cmp = compare_ensembles(ensembles, cfg);
    const auto dir = out_dir(cfg);
    {
        auto os = open_out(dir / "report.csv");
        write_report_csv(os, cmp.report);
    }
    {
        auto os = open_out(dir / "ordering.txt");
        write_ordering(os, cmp.report);
    }
    std::vector<LabeledProfile> curves;
    for (const auto& [name, p] : cmp.ab_initio_profiles) curves.push_back({name + " (ab-initio)", p});
    for (const auto& [name, p] : cmp.zero_profiles) curves.push_back({name + " (zero)", p});
    emit_svg(curves, dir / "coherence.svg", "Electron coherence");
    write_ordering(std::cout, cmp.report);
    return 0;
}

// "ladder:3" -> {"ladder", 3}
std::pair<std::string, int> split_template(const std::string& t) {
    const auto colon = t.find(':');
    if (colon == std::string::npos) return {t, 0};
    const std::string count = t.substr(colon + 1);
    std::size_t used = 0;
    int n = 0;
    try {
        n = std::stoi(count, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != count.size() || count.empty()) throw ValidationError("bad template count in '" + t + "'");
    return {t.substr(0, colon), n};
}

int cmd_synth(const std::string& tmpl, const std::string& output, std::uint64_t seed) {
    const auto [kind, n] = split_template(tmpl);
    if (kind == "barrier-demo") {
        save_ensemble(output, synth::barrier_demo(seed));
        std::cout << "wrote " << output << '\n';
    } else if (kind == "ladder") {
        std::error_code ec;
        fs::create_directories(output, ec);
        if (ec) throw ValidationError("cannot create " + output + ": " + ec.message());
        for (const auto& e : synth::ladder(n, seed)) {
            const auto p = fs::path(output) / (e.equilibrium.name + ".json");
            save_ensemble(p, e);
            std::cout << "wrote " << p.string() << '\n';
        }
    } else if (kind == "cluster") {
        save_ensemble(output, synth::cluster(n, seed));
        std::cout << "wrote " << output << '\n';
    } else {
        throw ValidationError("unknown template '" + tmpl + "' (barrier-demo, ladder:N, cluster:N)");
    }
    return 0;
}

int cmd_ensemble(const std::string& system, const std::string& modes, const std::string& output, double amplitude) {
    const auto s = load_system(system);
    const auto m = load_modes(modes);
    AmplitudeRule rule = ZeroPointAmplitude{};
    if (amplitude > 0.0) rule = FixedAmplitude{amplitude};
    const auto g = generate_ensemble(s, m, rule, point_dipole_provider());
    for (const auto& w : g.warnings) std::cerr << "warning: " << w << '\n';
    save_ensemble(output, g.ensemble);
    std::cout << "wrote " << output << " (" << g.ensemble.geometries.size() << " geometries)\n";
    return 0;
}

// "0-1,2-3" -> pairs
std::vector<std::pair<int, int>> parse_pairs(const std::string& s) {
    std::vector<std::pair<int, int>> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        int a = 0, b = 0;
        char dash = 0;
        std::stringstream is(item);
        if (!(is >> a >> dash >> b) || dash != '-' || !(is >> std::ws).eof() || a == b) {
            throw ValidationError("bad pair '" + item + "' (expected i-j)");
        }
        out.emplace_back(std::min(a, b), std::max(a, b));
    }
    return out;
}

int cmd_oracle(const std::string& input, const Flags& f, const std::optional<std::string>& couple) {
    const auto cfg = to_config(f);
    const auto loaded = load_any(input);
    const auto& eq = loaded.ensemble.equilibrium;
    if (eq.size() > kOracleMaxNuclei) {
        throw ValidationError("full oracle supports at most " + std::to_string(kOracleMaxNuclei) + " nuclei, got " +
                              std::to_string(eq.size()));
    }
    const auto opt = cfg.rate_options();
    const auto rates = ensemble_rates(loaded.ensemble, cfg.delta_mode, opt, cfg.threads);
    auto clusters = enumerate_clusters(eq, rates, opt);
    if (couple) {
        // dipolar terms kept only for the listed pairs; the rest are decoupled
        const auto keep = parse_pairs(*couple);
        for (const auto& [a, b] : keep) {
            if (a < 0 || static_cast<std::size_t>(b) >= eq.size()) {
                throw ValidationError("pair " + std::to_string(a) + "-" + std::to_string(b) + " is out of range");
            }
        }
        for (auto& c : clusters) {
            if (std::find(keep.begin(), keep.end(), std::pair{c.i, c.j}) == keep.end()) c.coupling = 0.0;
        }
    }
    const auto grid = cfg.grid();
    const auto oracle = full_oracle(eq, clusters, grid, cfg.observable);
    const auto cce = run_cce(clusters, grid, cfg.observable, cfg.threads).combined;
    double dev = 0.0;
    for (std::size_t k = 0; k < oracle.values.size(); ++k) {
        dev = std::max(dev, std::abs(oracle.values[k] - cce.values[k]));
    }
    std::cout << "max_abs_deviation=" << format_number(dev) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinlind: ensemble flip-flop rates, Lindblad pair-cluster coherence and decay fits"};
    app.require_subcommand(1);

    Flags f;
    std::string input;
    std::vector<std::string> inputs;
    bool per_cluster = false;
    std::string tmpl, output, modes;
    std::uint64_t seed = synth::kDefaultSeed;
    double amplitude = 0.0;
    std::string couple;

    auto* rates = app.add_subcommand("rates", "Pair flip-flop rates (and sigma for ensembles)");
    rates->add_option("input", input, "System or ensemble JSON")->required();
    add_run_flags(rates, f);

    auto* sim = app.add_subcommand("simulate", "Pair-cluster coherence profile");
    sim->add_option("input", input, "Ensemble (or system) JSON")->required();
    sim->add_flag("--per-cluster", per_cluster, "Also write one profile per pair");
    add_run_flags(sim, f);

    auto* fit = app.add_subcommand("fit", "Stretched-exponential fit of a profile CSV");
    fit->add_option("input", input, "Profile CSV (t_ms,L)")->required();
    fit->add_option("--out", f.out, "Output directory")->capture_default_str();

    auto* cmp = app.add_subcommand("compare", "Fit both detuning modes for several ensembles");
    cmp->add_option("inputs", inputs, "Ensemble JSON files")->required();
    add_run_flags(cmp, f, false);

    auto* syn = app.add_subcommand("synth", "Write a synthetic point-dipole ensemble");
    syn->add_option("template", tmpl, "barrier-demo | ladder:N | cluster:N")->required();
    syn->add_option("output", output, "Output file (directory for ladder)")->required();
    syn->add_option("--seed", seed, "Mode generator seed")->capture_default_str();

    auto* ens = app.add_subcommand("ensemble", "Displaced geometries from a system and its normal modes");
    ens->add_option("system", input, "Equilibrium system JSON")->required();
    ens->add_option("modes", modes, "Normal modes JSON")->required();
    ens->add_option("output", output, "Output ensemble JSON")->required();
    ens->add_option("--amplitude", amplitude, "Fixed amplitude in Angstrom (default: zero-point)");

    auto* orc = app.add_subcommand("oracle", "Full unfactorized simulation vs pair-cluster product");
    orc->add_option("input", input, "System or ensemble JSON (at most 5 nuclei)")->required();
    orc->add_option("--couple", couple, "Keep dipolar terms only for these pairs, e.g. 0-1,2-3");
    add_run_flags(orc, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*rates) return cmd_rates(input, f);
        if (*sim) return cmd_simulate(input, f, per_cluster);
        if (*fit) return cmd_fit(input, f.out);
        if (*cmp) return cmd_compare(inputs, f);
        if (*syn) return cmd_synth(tmpl, output, seed);
        if (*ens) return cmd_ensemble(input, modes, output, amplitude);
        if (*orc) return cmd_oracle(input, f, couple.empty() ? std::nullopt : std::optional{couple});
    } catch (const PhysicsError& e) {
        std::cerr << "physics error: " << e.what() << '\n';
        return kExitPhysics;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return 0;
}
