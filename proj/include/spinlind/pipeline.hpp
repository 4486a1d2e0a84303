#pragma once

// End-to-end wiring: ensemble -> pair rate spreads -> pair clusters ->
// combined coherence profile -> fitted decay constant.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spinlind/cce_engine.hpp"
#include "spinlind/fit_report.hpp"
#include "spinlind/gksl_core.hpp"
#include "spinlind/rate_engine.hpp"
#include "spinlind/spin_model.hpp"

namespace spinlind {

struct RunConfig {
    DeltaMode delta_mode = DeltaMode::ab_initio;
    double t_max_ms = 0.1;
    int steps = 400; // grid points
    double norm_a = 1.0;
    DipolarConvention convention = DipolarConvention::verbatim;
    Observable observable = Observable::hahn_echo;
    int threads = 0;
    std::filesystem::path out_dir = ".";

    void validate() const {
        if (!(t_max_ms > 0.0)) throw ValidationError("t_max must be positive");
        if (steps < 10) throw ValidationError("need at least 10 time steps");
        NormalizationA{norm_a};
    }

    TimeGrid grid() const { return TimeGrid(t_max_ms, steps); }

    RateOptions rate_options() const {
        RateOptions o;
        o.norm = NormalizationA{norm_a};
        o.convention = convention;
        return o;
    }
};

struct SimulationResult {
    EnsembleRates rates;
    CceResult cce;
};

inline SimulationResult simulate_ensemble(const EnsembleInput& e, const RunConfig& cfg) {
    cfg.validate();
    const auto opt = cfg.rate_options();
    auto rates = ensemble_rates(e, cfg.delta_mode, opt, cfg.threads);
    auto clusters = enumerate_clusters(e.equilibrium, rates, opt);
    auto cce = run_cce(std::move(clusters), cfg.grid(), cfg.observable, cfg.threads);
    return {std::move(rates), std::move(cce)};
}

struct ModeComparison {
    ComparisonReport report;
    std::map<std::string, CoherenceProfile> ab_initio_profiles;
    std::map<std::string, CoherenceProfile> zero_profiles;
};

/// Simulates every ensemble in both detuning modes and fits each profile.
inline ModeComparison compare_ensembles(const std::vector<EnsembleInput>& ensembles, RunConfig cfg) {
    ModeComparison out;
    std::map<std::string, FitResult> fa, fz;
    for (const auto& e : ensembles) {
        const std::string& name = e.equilibrium.name;
        if (out.ab_initio_profiles.count(name)) throw ValidationError("duplicate system name '" + name + "'");
        cfg.delta_mode = DeltaMode::ab_initio;
        auto pa = simulate_ensemble(e, cfg).cce.combined;
        cfg.delta_mode = DeltaMode::zero;
        auto pz = simulate_ensemble(e, cfg).cce.combined;
        fa[name] = fit_stretched_exp(pa);
        fz[name] = fit_stretched_exp(pz);
        out.ab_initio_profiles[name] = std::move(pa);
        out.zero_profiles[name] = std::move(pz);
    }
    out.report = compare_modes(fa, fz);
    return out;
}

} // namespace spinlind
