#pragma once

// Pair-cluster expansion of the electron coherence: one electron + two
// nuclei per cluster, one S_z dephasing channel per cluster at the pair's
// ensemble rate spread, and a pointwise product over clusters.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spinlind/gksl_core.hpp"
#include "spinlind/parallel.hpp"
#include "spinlind/rate_engine.hpp"
#include "spinlind/spin_model.hpp"

namespace spinlind {

struct PairCluster {
    int i = 0;
    int j = 0;
    double hyperfine_i = 0.0; // rad/s, equilibrium geometry
    double hyperfine_j = 0.0;
    double coupling = 0.0;    // J_ij, rad/s, equilibrium geometry
    double rate = 0.0;        // gamma_K = sigma{T_ij}, 1/s
    bool flagged = false;
};

inline constexpr int kClusterOrder = 2;

/// One cluster per nuclear pair, carrying equilibrium Hamiltonian parameters
/// and the pair's sigma as its channel rate. Flagged pairs get rate 0.
inline std::vector<PairCluster> enumerate_clusters(const SpinSystem& equilibrium, const EnsembleRates& rates,
                                                   const RateOptions& opt = {}, int order = kClusterOrder) {
    if (order != kClusterOrder) {
        throw ValidationError("cluster order " + std::to_string(order) + " is not supported (pairs only)");
    }
    if (rates.nuclei != equilibrium.size() || rates.pairs.size() != equilibrium.pair_count()) {
        throw ValidationError("ensemble rates cover " + std::to_string(rates.nuclei) + " nuclei, system '" +
                              equilibrium.name + "' has " + std::to_string(equilibrium.size()));
    }
    const auto couplings = coupling_matrix(equilibrium, opt);
    std::vector<PairCluster> out;
    out.reserve(rates.pairs.size());
    for (const auto& p : rates.pairs) {
        if (p.i < 0 || p.j <= p.i || static_cast<std::size_t>(p.j) >= equilibrium.size()) {
            throw ValidationError("ensemble rates hold an invalid pair (" + std::to_string(p.i) + "," +
                                  std::to_string(p.j) + ")");
        }
        PairCluster c;
        c.i = p.i;
        c.j = p.j;
        c.hyperfine_i = equilibrium.nuclei[p.i].hyperfine;
        c.hyperfine_j = equilibrium.nuclei[p.j].hyperfine;
        c.coupling = couplings(p.i, p.j);
        c.flagged = p.flagged || std::isnan(c.coupling);
        if (std::isnan(c.coupling)) c.coupling = 0.0;
        c.rate = c.flagged ? 0.0 : p.sigma;
        out.push_back(c);
    }
    return out;
}

inline CoherenceProfile unit_profile(const TimeGrid& grid) {
    return {grid.times(), std::vector<double>(grid.points, 1.0)};
}

/// Coherence of one electron + pair cluster. Flagged clusters contribute 1.
inline CoherenceProfile cluster_coherence(const PairCluster& c, const TimeGrid& grid,
                                          Observable observable = Observable::hahn_echo) {
    if (c.i >= c.j || c.i < 0) throw ValidationError("cluster needs i < j");
    if (!(c.rate >= 0.0)) throw ValidationError("cluster rate must be non-negative");
    if (c.flagged) return unit_profile(grid);
    const SpinOperatorSet ops(3);
    const auto h = build_cluster_hamiltonian(c.hyperfine_i, c.hyperfine_j, c.coupling, ops);
    const DecayChannel channels[] = {electron_dephasing(ops, c.rate)};
    const auto l = build_liouvillian(h.matrix, channels);
    return simulate_coherence(l, initial_state(ops), grid, ops, observable);
}

/// Pointwise product; identical grids required.
inline CoherenceProfile combine(std::span<const CoherenceProfile> profiles) {
    if (profiles.empty()) throw ValidationError("combine: no profiles");
    CoherenceProfile out = profiles.front();
    for (std::size_t k = 1; k < profiles.size(); ++k) {
        const auto& p = profiles[k];
        if (p.t_ms != out.t_ms || p.values.size() != out.values.size()) {
            throw ValidationError("combine: profile " + std::to_string(k) + " is on a different time grid");
        }
        for (std::size_t t = 0; t < out.values.size(); ++t) out.values[t] *= p.values[t];
    }
    return out;
}

struct CceResult {
    std::vector<PairCluster> clusters;
    std::vector<CoherenceProfile> per_cluster;
    CoherenceProfile combined;
};

/// Simulates every cluster (in parallel) and multiplies in cluster order.
inline CceResult run_cce(std::vector<PairCluster> clusters, const TimeGrid& grid,
                         Observable observable = Observable::hahn_echo, int threads = 0) {
    CceResult r;
    r.per_cluster.resize(clusters.size());
    parallel_for(clusters.size(), resolve_threads(threads),
                 [&](std::size_t k) { r.per_cluster[k] = cluster_coherence(clusters[k], grid, observable); });
    r.combined = clusters.empty() ? unit_profile(grid) : combine(r.per_cluster);
    r.clusters = std::move(clusters);
    return r;
}

inline constexpr std::size_t kOracleMaxNuclei = 5;

/// Unfactorized simulation of electron + all nuclei: every nucleus' hyperfine
/// term, a dipolar term and an S_z channel per listed cluster.
inline CoherenceProfile full_oracle(const SpinSystem& s, std::span<const PairCluster> clusters, const TimeGrid& grid,
                                    Observable observable = Observable::hahn_echo) {
    if (s.size() > kOracleMaxNuclei) {
        throw ValidationError("full oracle supports at most " + std::to_string(kOracleMaxNuclei) + " nuclei, got " +
                              std::to_string(s.size()));
    }
    if (s.nuclei.empty()) throw ValidationError("full oracle needs at least one nucleus");
    const SpinOperatorSet ops(static_cast<int>(s.size()) + 1);
    std::vector<double> hyperfine;
    for (const auto& n : s.nuclei) hyperfine.push_back(n.hyperfine);
    std::vector<PairCoupling> pairs;
    std::vector<DecayChannel> channels;
    for (const auto& c : clusters) {
        if (c.flagged) continue;
        pairs.push_back({c.i, c.j, c.coupling});
        channels.push_back(electron_dephasing(ops, c.rate));
    }
    const auto h = build_spin_hamiltonian(hyperfine, pairs, ops);
    const auto l = build_liouvillian(h, channels);
    return simulate_coherence(l, initial_state(ops), grid, ops, observable);
}

/// Oracle with dipolar couplings for every pair taken from the geometry and
/// per-pair channel rates in lexicographic pair order.
inline CoherenceProfile full_oracle(const SpinSystem& s, std::span<const double> pair_rates, const TimeGrid& grid,
                                    Observable observable = Observable::hahn_echo, const RateOptions& opt = {}) {
    if (pair_rates.size() != s.pair_count()) {
        throw ValidationError("full oracle: expected " + std::to_string(s.pair_count()) + " pair rates");
    }
    const auto couplings = coupling_matrix(s, opt);
    std::vector<PairCluster> clusters;
    std::size_t p = 0;
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
        for (int j = i + 1; j < static_cast<int>(s.size()); ++j, ++p) {
            if (std::isnan(couplings(i, j))) throw DegenerateGeometryError("coincident nuclei", std::pair{i, j});
            clusters.push_back({i, j, s.nuclei[i].hyperfine, s.nuclei[j].hyperfine, couplings(i, j), pair_rates[p]});
        }
    }
    return full_oracle(s, clusters, grid, observable);
}

} // namespace spinlind
