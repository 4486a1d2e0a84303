#pragma once

// Nuclear flip-flop rates for every pair of a spin system and their spread
// over an ensemble of geometries.
//
//   J_ij     dipolar coupling         -1/4 g_i g_j hbar mu0 (1 - 3 cos^2 theta) / r^3
//   kappa_ij broadening linewidth      sqrt(16/3 I(I+1) sum_{n != i,j} (J_in - J_jn)^2)
//   Delta_ij hyperfine detuning        |A_i - A_j|   (or 0 in DeltaMode::zero)
//   T_ij     flip-flop rate            2 sqrt(2 pi) A(I) J^2 / kappa exp(-Delta^2 / (8 kappa^2))
//
// Everything is in rad/s. The ensemble spread sigma_ij is the population
// standard deviation of T_ij over geometries and becomes the Lindblad rate of
// the pair's dephasing channel.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinlind/constants.hpp"
#include "spinlind/error.hpp"
#include "spinlind/parallel.hpp"
#include "spinlind/spin_model.hpp"

namespace spinlind {

enum class DeltaMode { ab_initio, zero };

inline const char* to_string(DeltaMode m) { return m == DeltaMode::ab_initio ? "ab-initio" : "zero"; }

inline DeltaMode parse_delta_mode(const std::string& s) {
    if (s == "ab-initio") return DeltaMode::ab_initio;
    if (s == "zero") return DeltaMode::zero;
    throw ValidationError("unknown delta mode '" + s + "' (expected ab-initio or zero)");
}

// verbatim: mu0 as printed in the coupling formula; si: mu0 replaced by mu0/(4 pi).
enum class DipolarConvention { verbatim, si };

struct NormalizationA {
    double value = 1.0;

    explicit NormalizationA(double v = 1.0) : value(v) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("normalization A(I) must be positive");
    }
};

struct RateOptions {
    NormalizationA norm{};
    double kappa_floor = 1e-6; // rad/s
    DipolarConvention convention = DipolarConvention::verbatim;
    PhysicalConstants constants{};
};

inline constexpr double kCoincidenceAngstrom = 1e-3;

struct FlipFlopPair {
    int i = 0;
    int j = 0;
    double coupling = 0.0; // J, rad/s (signed)
    double kappa = 0.0;
    double delta = 0.0;
    double rate = 0.0;
};

struct RateTable {
    std::string geometry;
    std::vector<FlipFlopPair> pairs;
};

struct PairSpread {
    int i = 0;
    int j = 0;
    std::vector<double> rates; // one per geometry; NaN where the pair failed
    double sigma = 0.0;        // rad/s
    bool flagged = false;
    std::string reason;
};

struct EnsembleRates {
    DeltaMode mode = DeltaMode::ab_initio;
    std::size_t nuclei = 0;
    std::vector<PairSpread> pairs; // lexicographic (i, j)

    const PairSpread& at(int i, int j) const;
};

/// Position of pair (i, j), i < j, in lexicographic pair order over n nuclei.
inline std::size_t pair_index(int i, int j, std::size_t n) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(j);
    return a * n - a * (a + 1) / 2 + (b - a - 1);
}

inline const PairSpread& EnsembleRates::at(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || i == j || static_cast<std::size_t>(j) >= nuclei) {
        throw ValidationError("no pair (" + std::to_string(i) + "," + std::to_string(j) + ") in ensemble rates");
    }
    return pairs[pair_index(i, j, nuclei)];
}

/// Dipolar coupling J_ij in rad/s. Sign preserved; r measured in metres.
inline double dipolar_coupling(const NuclearSpinSite& a, const NuclearSpinSite& b, const Vec3& field_direction,
                               const PhysicalConstants& c = kCodata2018,
                               DipolarConvention convention = DipolarConvention::verbatim) {
    const Vec3 d = b.position - a.position;
    const double r_angstrom = d.norm();
    if (!(r_angstrom >= kCoincidenceAngstrom)) {
        throw DegenerateGeometryError("coincident nuclei (r = " + std::to_string(r_angstrom) + " A)",
                                      std::pair{std::min(a.id, b.id), std::max(a.id, b.id)});
    }
    const double cos_theta = d.dot(field_direction) / r_angstrom;
    const double r = units::angstrom_to_m(r_angstrom);
    const double mu = convention == DipolarConvention::verbatim ? c.mu0 : c.mu0 / (4.0 * std::numbers::pi);
    return -0.25 * a.gamma * b.gamma * c.hbar * mu * (1.0 - 3.0 * cos_theta * cos_theta) / (r * r * r);
}

/// Symmetric matrix of J_ij (zero diagonal). Coincident pairs hold NaN so a
/// single bad contact only poisons the pairs that actually use it.
inline Eigen::MatrixXd coupling_matrix(const SpinSystem& s, const RateOptions& opt = {}) {
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = std::numeric_limits<double>::quiet_NaN();
            try {
                v = dipolar_coupling(s.nuclei[i], s.nuclei[j], s.field_direction, opt.constants, opt.convention);
            } catch (const DegenerateGeometryError&) {
            }
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

namespace detail {

inline double spin_factor(double spin) { return 16.0 / 3.0 * spin * (spin + 1.0); }

inline double kappa_from_couplings(const Eigen::MatrixXd& couplings, int i, int j, double spin) {
    double sum = 0.0;
    for (Eigen::Index n = 0; n < couplings.rows(); ++n) {
        if (n == i || n == j) continue;
        const double jin = couplings(i, n);
        const double jjn = couplings(j, n);
        if (std::isnan(jin) || std::isnan(jjn)) {
            throw DegenerateGeometryError("nucleus " + std::to_string(n) + " coincides with a pair member",
                                          std::pair{i, j});
        }
        const double d = jin - jjn;
        sum += d * d;
    }
    return std::sqrt(spin_factor(spin) * sum);
}

} // namespace detail

/// Broadening linewidth of pair (i, j) from all other nuclei, rad/s.
inline double kappa(int i, int j, const SpinSystem& s, const RateOptions& opt = {}) {
    if (s.size() < 2) throw ValidationError("kappa needs at least 2 nuclei");
    return detail::kappa_from_couplings(coupling_matrix(s, opt), i, j, s.nuclei.at(i).spin);
}

/// Flip-flop rate T for given coupling, broadening and detuning, rad/s.
inline double flipflop_rate(double coupling, double kappa, double delta, const RateOptions& opt = {}) {
    if (kappa < 0.0 || delta < 0.0) throw ValidationError("flipflop_rate: kappa and delta must be non-negative");
    if (kappa <= opt.kappa_floor) {
        if (delta > 0.0) return 0.0;
        throw DivergentRateError("resonant pair with kappa below floor; flip-flop rate diverges");
    }
    const double prefactor = 2.0 * std::sqrt(2.0 * std::numbers::pi) * opt.norm.value;
    return prefactor * coupling * coupling / kappa * std::exp(-delta * delta / (8.0 * kappa * kappa));
}

namespace detail {

inline FlipFlopPair pair_entry(const SpinSystem& s, const Eigen::MatrixXd& couplings, int i, int j, DeltaMode mode,
                               const RateOptions& opt) {
    FlipFlopPair p;
    p.i = i;
    p.j = j;
    p.coupling = couplings(i, j);
    if (std::isnan(p.coupling)) {
        throw DegenerateGeometryError("coincident nuclei", std::pair{i, j});
    }
    p.kappa = kappa_from_couplings(couplings, i, j, s.nuclei[i].spin);
    p.delta = mode == DeltaMode::ab_initio ? std::abs(s.nuclei[i].hyperfine - s.nuclei[j].hyperfine) : 0.0;
    try {
        p.rate = flipflop_rate(p.coupling, p.kappa, p.delta, opt);
    } catch (const DivergentRateError&) {
        throw DivergentRateError("kappa = " + std::to_string(p.kappa) + " rad/s with zero detuning", std::pair{i, j});
    }
    return p;
}

} // namespace detail

/// One FlipFlopPair per unordered pair, lexicographic order.
inline RateTable pair_table(const SpinSystem& s, DeltaMode mode, const RateOptions& opt = {}) {
    if (s.size() < 2) throw ValidationError("system '" + s.name + "' needs at least 2 nuclei for pair rates");
    const auto couplings = coupling_matrix(s, opt);
    RateTable t;
    t.geometry = s.name;
    t.pairs.reserve(s.pair_count());
    const int n = static_cast<int>(s.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) t.pairs.push_back(detail::pair_entry(s, couplings, i, j, mode, opt));
    }
    return t;
}

/// Population standard deviation with a fixed summation order.
inline double population_std(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double sum = 0.0;
    for (double v : x) sum += v;
    const double mean = sum / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size()));
}

/// Per-pair sigma of T_ij over all geometries. A pair that fails in any
/// geometry is flagged with sigma = 0 instead of aborting the ensemble.
inline EnsembleRates ensemble_rates(const EnsembleInput& e, DeltaMode mode, const RateOptions& opt = {},
                                    int threads = 0) {
    if (e.geometries.empty()) throw ValidationError("ensemble has no geometries");
    const std::size_t n = e.equilibrium.size();
    if (n < 2) throw ValidationError("ensemble needs at least 2 nuclei for pair rates");
    const std::size_t n_pairs = n * (n - 1) / 2;
    const std::size_t n_geom = e.geometries.size();

    // rates[g][p]; errors[g][p] holds a message when the pair failed there.
    std::vector<std::vector<double>> rates(n_geom, std::vector<double>(n_pairs));
    std::vector<std::vector<std::string>> errors(n_geom, std::vector<std::string>(n_pairs));

    parallel_for(n_geom, resolve_threads(threads), [&](std::size_t g) {
        const auto& s = e.geometries[g];
        const auto couplings = coupling_matrix(s, opt);
        std::size_t p = 0;
        for (int i = 0; i < static_cast<int>(n); ++i) {
            for (int j = i + 1; j < static_cast<int>(n); ++j, ++p) {
                try {
                    rates[g][p] = detail::pair_entry(s, couplings, i, j, mode, opt).rate;
                } catch (const PhysicsError& err) {
                    rates[g][p] = std::numeric_limits<double>::quiet_NaN();
                    errors[g][p] = "geometry '" + s.name + "': " + err.what();
                }
            }
        }
    });

    EnsembleRates out;
    out.mode = mode;
    out.nuclei = n;
    out.pairs.reserve(n_pairs);
    std::size_t p = 0;
    for (int i = 0; i < static_cast<int>(n); ++i) {
        for (int j = i + 1; j < static_cast<int>(n); ++j, ++p) {
            PairSpread ps;
            ps.i = i;
            ps.j = j;
            ps.rates.reserve(n_geom);
            for (std::size_t g = 0; g < n_geom; ++g) {
                ps.rates.push_back(rates[g][p]);
                if (!ps.flagged && !errors[g][p].empty()) {
                    ps.flagged = true;
                    ps.reason = errors[g][p];
                }
            }
            ps.sigma = ps.flagged ? 0.0 : population_std(ps.rates);
            out.pairs.push_back(std::move(ps));
        }
    }
    return out;
}

/// Point-dipole electron-nuclear coupling projected on the field, in MHz.
/// Synthetic stand-in for quantum-chemistry hyperfine data.
inline double point_dipole_hyperfine(const NuclearSpinSite& site, const Vec3& electron_position, double electron_g,
                                     const Vec3& field_direction, const PhysicalConstants& c = kCodata2018) {
    const Vec3 d = site.position - electron_position;
    const double r_angstrom = d.norm();
    if (!(r_angstrom >= kCoincidenceAngstrom)) {
        throw DegenerateGeometryError("nucleus " + std::to_string(site.id) + " coincides with the electron");
    }
    const double cos_theta = d.dot(field_direction) / r_angstrom;
    const double r = units::angstrom_to_m(r_angstrom);
    const double a = c.mu0 / (4.0 * std::numbers::pi) * c.electron_gamma(electron_g) * site.gamma * c.hbar *
                     (1.0 - 3.0 * cos_theta * cos_theta) / (r * r * r);
    return units::rad_s_to_mhz(a);
}

} // namespace spinlind
