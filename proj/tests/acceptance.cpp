// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
// Exit status is the number of failed criteria.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spinlind/cce_engine.hpp"
#include "spinlind/fit_report.hpp"
#include "spinlind/gksl_core.hpp"
#include "spinlind/pipeline.hpp"
#include "spinlind/rate_engine.hpp"
#include "spinlind/synth.hpp"

namespace fs = std::filesystem;
using namespace spinlind;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit_s; // <= 0: no limit
    std::function<Outcome()> check;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

const TimeGrid kGrid(0.1, 400);

Outcome analytic_dephasing() {
    constexpr double gamma = 1e5, tol = 1e-8;
    const SpinOperatorSet ops(1);
    const DecayChannel ch[] = {electron_dephasing(ops, gamma)};
    const auto l = build_liouvillian(ComplexMatrix::Zero(2, 2), ch);
    std::vector<double> ref;
    for (double t : kGrid.times()) ref.push_back(std::exp(-gamma * units::ms_to_s(t) / 2));
    double worst = 0.0;
    for (auto o : {Observable::hahn_echo, Observable::free_induction}) {
        worst = std::max(worst, max_abs_diff(simulate_coherence(l, initial_state(ops), kGrid, ops, o).values, ref));
    }
    return {worst < tol, "max |L - exp(-gamma t/2)| = " + fmt("%.3g", worst) + " (tol 1e-8)"};
}

Outcome gksl_sanity() {
    constexpr int clusters = 50;
    constexpr double trace_tol = 1e-10, eig_tol = -1e-10;
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> a(-5e6, 5e6), j(-2e5, 2e5), g(0.0, 3e5);
    const SpinOperatorSet ops(3);
    double worst_trace = 0.0, min_eig = INFINITY;
    for (int c = 0; c < clusters; ++c) {
        const auto h = build_cluster_hamiltonian(a(rng), a(rng), j(rng), ops).matrix;
        const DecayChannel ch[] = {electron_dephasing(ops, g(rng))};
        std::vector<ComplexMatrix> traj;
        try {
            traj = propagate(build_liouvillian(h, ch), initial_state(ops), kGrid);
        } catch (const InvariantViolation& e) {
            return {false, std::string("cluster ") + std::to_string(c) + ": " + e.what()};
        }
        for (const auto& rho : traj) {
            const auto chk = check_density(rho);
            worst_trace = std::max(worst_trace, chk.trace_error);
            min_eig = std::min(min_eig, chk.min_eigenvalue);
        }
    }
    return {worst_trace < trace_tol && min_eig >= eig_tol,
            "50 clusters x 400 points: max |Tr-1| = " + fmt("%.2g", worst_trace) + ", min eig = " +
                fmt("%.2g", min_eig)};
}

Outcome oracle_equivalence() {
    constexpr double tol = 1e-6;
    const auto e = synth::barrier_demo();
    const auto rates = ensemble_rates(e, DeltaMode::ab_initio);
    auto clusters = enumerate_clusters(e.equilibrium, rates);
    // two pairs (0,1) and (2,3); every other dipolar term forced to zero
    for (auto& c : clusters) {
        const bool intra = (c.i == 0 && c.j == 1) || (c.i == 2 && c.j == 3);
        if (!intra) c.coupling = 0.0;
    }
    const auto oracle = full_oracle(e.equilibrium, clusters, kGrid);
    const auto cce = run_cce(clusters, kGrid).combined;
    const double dev = max_abs_diff(oracle.values, cce.values);
    double min_l = 1.0;
    for (double v : cce.values) min_l = std::min(min_l, v);
    return {dev < tol, "max |oracle - CCE| = " + fmt("%.3g", dev) + " (tol 1e-6), min L = " + fmt("%.3f", min_l)};
}

Outcome magic_angle() {
    NuclearSpinSite a, b;
    a.id = 0;
    b.id = 1;
    a.gamma = b.gamma = *PhysicalConstants::gyromagnetic_ratio("1H");
    const double r = 2.5;
    b.position = r * Vec3::UnitZ();
    const double j0 = dipolar_coupling(a, b, Vec3::UnitZ());
    // exact magic angle: cos^2 = 1/3
    b.position = r * Vec3(std::sqrt(2.0), 0.0, 1.0) / std::sqrt(3.0);
    const double jm = dipolar_coupling(a, b, Vec3::UnitZ());
    const double ratio = std::abs(jm) / std::abs(j0);
    // the four-decimal angle for reference
    const double th = 54.7356 * std::numbers::pi / 180.0;
    b.position = r * Vec3(std::sin(th), 0.0, std::cos(th));
    const double literal = std::abs(dipolar_coupling(a, b, Vec3::UnitZ())) / std::abs(j0);
    return {ratio < 1e-12, "|J(acos(1/sqrt3))|/|J(0)| = " + fmt("%.2g", ratio) + " (tol 1e-12); at 54.7356 deg: " +
                               fmt("%.2g", literal)};
}

Outcome rate_ratios() {
    const double k = 3.7e4, j = 2.1e4;
    const double ratio = flipflop_rate(j, k, 2.0 * std::sqrt(2.0) * k) / flipflop_rate(j, k, 0.0);
    const double err = std::abs(ratio - std::exp(-1.0));
    bool decreasing = true;
    double prev = INFINITY;
    for (int n = 0; n < 100; ++n) {
        const double t = flipflop_rate(j, k, n * 6.0 * k / 99.0);
        decreasing = decreasing && t < prev;
        prev = t;
    }
    return {err < 1e-12 && decreasing,
            "|ratio - 1/e| = " + fmt("%.2g", err) + " (tol 1e-12), strictly decreasing: " + (decreasing ? "yes" : "no")};
}

Outcome barrier_trend() {
    RunConfig cfg;
    const auto cmp = compare_ensembles(synth::ladder(3), cfg);
    const auto& ab = cmp.report.ab_initio_order;
    const auto& zr = cmp.report.zero_order;
    const bool ab_top = !ab.empty() && ab.front() == std::vector<std::string>{"ladder_1"};
    const bool zero_bottom = !zr.empty() && zr.back() == std::vector<std::string>{"ladder_1"};
    return {ab_top && zero_bottom, "ab-initio: " + format_ordering(ab) + "; zero: " + format_ordering(zr)};
}

Outcome channel_additivity() {
    constexpr double g1 = 3.3e4, g2 = 7.9e4, tol = 1e-10;
    const SpinOperatorSet ops(3);
    const auto h = build_cluster_hamiltonian(1.8e6, -6e5, 4.5e4, ops).matrix;
    double worst = 0.0;
    for (auto o : {Observable::hahn_echo, Observable::free_induction}) {
        const DecayChannel two[] = {electron_dephasing(ops, g1), electron_dephasing(ops, g2)};
        const DecayChannel one[] = {electron_dephasing(ops, g1 + g2)};
        const auto a = simulate_coherence(build_liouvillian(h, two), initial_state(ops), kGrid, ops, o);
        const auto b = simulate_coherence(build_liouvillian(h, one), initial_state(ops), kGrid, ops, o);
        worst = std::max(worst, max_abs_diff(a.values, b.values));
    }
    return {worst < tol, "max profile difference = " + fmt("%.2g", worst) + " (tol 1e-10)"};
}

Outcome fit_roundtrips() {
    auto profile = [](double t2, double beta) {
        CoherenceProfile p{kGrid.times(), {}};
        for (double t : p.t_ms) p.values.push_back(stretched_exp(t, t2, beta));
        return p;
    };
    const auto a = fit_stretched_exp(profile(0.0274, 1.3));
    const auto b = fit_stretched_exp(profile(0.01, 1.0));
    const double ea = std::max(std::abs(a.t2_ms / 0.0274 - 1), std::abs(a.beta / 1.3 - 1));
    const double eb = std::max(std::abs(b.t2_ms / 0.01 - 1), std::abs(b.beta - 1));
    return {ea < 0.01 && eb < 0.001, "T2=0.0274,beta=1.3 rel err " + fmt("%.2g", ea) +
                                         " (tol 1e-2); T2=0.01,beta=1 rel err " + fmt("%.2g", eb) + " (tol 1e-3)"};
}

int run_shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto dir = fs::temp_directory_path() / "spinlind_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = "\"" SPINLIND_CLI "\"";
    if (run_shell(cli + " synth ladder:3 \"" + (dir / "in").string() + "\" > /dev/null") != 0) {
        return {false, "synth failed"};
    }
    const std::string inputs = "\"" + (dir / "in" / "ladder_1.json").string() + "\" \"" +
                               (dir / "in" / "ladder_2.json").string() + "\" \"" +
                               (dir / "in" / "ladder_3.json").string() + "\"";
    for (const char* t : {"1", "8"}) {
        const std::string out = (dir / (std::string("t") + t)).string();
        if (run_shell(std::string("SPINLIND_THREADS=") + t + " " + cli + " compare " + inputs + " --out \"" + out +
                      "\" > /dev/null") != 0) {
            return {false, std::string("compare failed with SPINLIND_THREADS=") + t};
        }
    }
    for (const char* f : {"report.csv", "ordering.txt", "coherence.svg"}) {
        const auto a = slurp(dir / "t1" / f), b = slurp(dir / "t8" / f);
        if (a.empty() || a != b) return {false, std::string(f) + " differs between 1 and 8 workers"};
    }
    return {true, "report.csv, ordering.txt, coherence.svg byte-identical for SPINLIND_THREADS=1 and 8"};
}

Outcome scale_check() {
    const auto e = synth::cluster(13);
    RunConfig cfg;
    const auto r = simulate_ensemble(e, cfg);
    const auto fit = fit_stretched_exp(r.cce.combined);
    const bool shape = e.geometries.size() == 66 && r.cce.clusters.size() == 78;
    return {shape && std::isfinite(fit.t2_ms), std::to_string(e.geometries.size()) + " geometries, " +
                                                   std::to_string(r.cce.clusters.size()) + " clusters, fitted T2 = " +
                                                   fmt("%.4g", fit.t2_ms) + " ms"};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "analytic dephasing", 1.0, analytic_dephasing},
        {2, "GKSL trace and positivity", 30.0, gksl_sanity},
        {3, "oracle equivalence", 60.0, oracle_equivalence},
        {4, "magic-angle zero", 0.0, magic_angle},
        {5, "rate detuning ratios", 0.0, rate_ratios},
        {6, "spin-diffusion-barrier trend", 300.0, barrier_trend},
        {7, "channel additivity", 0.0, channel_additivity},
        {8, "fit roundtrips", 0.0, fit_roundtrips},
        {9, "determinism across workers", 0.0, determinism},
        {10, "13-nucleus scale check", 600.0, scale_check},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = c.time_limit_s <= 0.0 || secs < c.time_limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("[%s] %2d %-30s %7.2fs%s  %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                    in_time ? "" : " (over time limit)", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
