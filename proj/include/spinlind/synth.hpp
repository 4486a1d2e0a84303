#pragma once

// Synthetic proton networks around a point electron, with point-dipole
// hyperfine couplings and deterministic pseudo-random internal normal modes.
// Used for demos and self-contained tests; no quantum-chemistry data needed.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinlind/constants.hpp"
#include "spinlind/ensemble_gen.hpp"
#include "spinlind/error.hpp"
#include "spinlind/rate_engine.hpp"
#include "spinlind/spin_model.hpp"

namespace spinlind::synth {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

/// Protons at the given positions, electron at `electron`, field along z.
/// Hyperfine values from the point-dipole model.
inline SpinSystem proton_system(const std::string& name, const std::vector<Vec3>& positions,
                                const Vec3& electron = Vec3::Zero(), const Vec3& field = Vec3::UnitZ()) {
    SpinSystem s;
    s.name = name;
    s.field_direction = field.normalized();
    s.field_magnitude = 0.35;
    s.electron_position = electron;
    const double gamma_h = *PhysicalConstants::gyromagnetic_ratio("1H");
    for (std::size_t k = 0; k < positions.size(); ++k) {
        NuclearSpinSite n;
        n.id = static_cast<int>(k);
        n.isotope = "1H";
        n.gamma = gamma_h;
        n.position = positions[k];
        n.hyperfine = units::mhz_to_rad_s(
            point_dipole_hyperfine(n, electron, s.electron_g, s.field_direction, kCodata2018));
        s.nuclei.push_back(std::move(n));
    }
    validate(s);
    return s;
}

namespace detail {

// Uniform in [-1, 1) from raw 64-bit output; portable across standard libraries.
inline double symmetric_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline void orthogonalize(Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& basis) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) v -= b.dot(v) * b;
    }
}

} // namespace detail

/// 3N-6 orthonormal internal displacement directions (rigid translations and
/// rotations projected out), frequencies spread over [low, high] cm^-1.
inline std::vector<NormalMode> synthetic_modes(const SpinSystem& s, std::uint64_t seed = kDefaultSeed,
                                               double low_cm1 = 800.0, double high_cm1 = 3200.0,
                                               double reduced_mass_amu = 1.008) {
    const auto n = static_cast<Eigen::Index>(s.size());
    if (n < 3) throw ValidationError("synthetic modes need at least 3 nuclei");
    const Eigen::Index dof = 3 * n;
    Vec3 com = Vec3::Zero();
    for (const auto& nu : s.nuclei) com += nu.position;
    com /= static_cast<double>(n);

    std::vector<Eigen::VectorXd> basis;
    auto add = [&](Eigen::VectorXd v) {
        detail::orthogonalize(v, basis);
        const double norm = v.norm();
        if (norm < 1e-8) return false;
        basis.push_back(v / norm);
        return true;
    };
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(dof);
        for (Eigen::Index a = 0; a < n; ++a) t[3 * a + axis] = 1.0;
        add(t);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(dof);
        for (Eigen::Index a = 0; a < n; ++a) {
            const Vec3 d = Vec3::Unit(axis).cross(s.nuclei[a].position - com);
            r.segment<3>(3 * a) = d;
        }
        add(r);
    }
    const std::size_t rigid = basis.size();
    const std::size_t wanted = static_cast<std::size_t>(dof) - rigid;

    std::mt19937_64 rng(seed);
    std::vector<NormalMode> modes;
    while (modes.size() < wanted) {
        Eigen::VectorXd v(dof);
        for (Eigen::Index k = 0; k < dof; ++k) v[k] = detail::symmetric_unit(rng);
        if (!add(v)) continue;
        NormalMode m;
        m.index = static_cast<int>(modes.size());
        m.frequency_cm1 = wanted == 1 ? low_cm1
                                      : low_cm1 + (high_cm1 - low_cm1) * static_cast<double>(modes.size()) /
                                                      static_cast<double>(wanted - 1);
        m.reduced_mass_amu = reduced_mass_amu;
        m.displacement.resize(n, 3);
        for (Eigen::Index a = 0; a < n; ++a) m.displacement.row(a) = basis.back().segment<3>(3 * a).transpose();
        modes.push_back(std::move(m));
    }
    return modes;
}

/// Zero-point ensemble of a point-dipole system (hyperfine recomputed per geometry).
inline EnsembleInput point_dipole_ensemble(const SpinSystem& s, std::uint64_t seed = kDefaultSeed) {
    const auto modes = synthetic_modes(s, seed);
    return generate_ensemble(s, modes, ZeroPointAmplitude{}, point_dipole_provider()).ensemble;
}

/// Proton network motif, centred on the origin (Angstrom, unit scale).
inline std::vector<Vec3> motif() {
    return {
        {-1.45, -0.35, 0.20}, {1.45, 0.35, -0.20}, // close pair
        {-0.60, 2.55, 0.75},  {1.90, 3.05, -0.65},
    };
}

struct LadderRung {
    double distance;  // electron to motif centre, Angstrom
    double scale;     // motif size factor
};

/// Motif scaled by `scale` and centred at `distance` along a direction 40 deg
/// from the field, electron at the origin.
inline SpinSystem rung_system(const std::string& name, const LadderRung& rung) {
    const double alpha = 40.0 * std::numbers::pi / 180.0;
    const Vec3 centre = rung.distance * Vec3(std::sin(alpha), 0.0, std::cos(alpha));
    std::vector<Vec3> pos;
    for (const auto& p : motif()) pos.push_back(centre + rung.scale * p);
    return proton_system(name, pos);
}

/// n systems with the proton network moving away from the electron and
/// loosening slightly: rung k sits at 5 + 5k Angstrom with scale 0.85 + 0.15k.
inline std::vector<LadderRung> ladder_rungs(int n) {
    if (n < 1) throw ValidationError("ladder needs at least one rung");
    std::vector<LadderRung> r;
    for (int k = 0; k < n; ++k) r.push_back({5.0 + 5.0 * k, 0.85 + 0.15 * k});
    return r;
}

inline std::vector<EnsembleInput> ladder(int n, std::uint64_t seed = kDefaultSeed) {
    std::vector<EnsembleInput> out;
    const auto rungs = ladder_rungs(n);
    for (int k = 0; k < n; ++k) {
        out.push_back(point_dipole_ensemble(rung_system("ladder_" + std::to_string(k + 1), rungs[k]), seed));
    }
    return out;
}

/// Four protons: a pair 3.5 A from the electron whose detuning dwarfs its
/// broadening (flip-flops blocked in ab-initio mode), and a second pair 6 A
/// out with detuning comparable to broadening.
inline EnsembleInput barrier_demo(std::uint64_t seed = kDefaultSeed) {
    const double alpha = 40.0 * std::numbers::pi / 180.0;
    const Vec3 u(std::sin(alpha), 0.0, std::cos(alpha));
    std::vector<Vec3> pos{
        3.5 * u + Vec3(-0.30, -0.80, 0.55),
        3.5 * u + Vec3(0.35, 0.85, -0.45),
        6.0 * u + Vec3(0.30, 1.50, 0.0),
        6.0 * u + Vec3(0.0, -1.50, 0.0),
    };
    return point_dipole_ensemble(proton_system("barrier_demo", pos), seed);
}

/// n protons on a deterministic jittered shell network around the electron.
inline EnsembleInput cluster(int n, std::uint64_t seed = kDefaultSeed) {
    if (n < 3) throw ValidationError("cluster template needs at least 3 nuclei");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Vec3> pos;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / n;
        const double rho = std::sqrt(1.0 - z * z);
        const double phi = golden * k;
        const double radius = 4.0 + 4.0 * (k % 3) / 2.0 + 0.4 * detail::symmetric_unit(rng);
        pos.push_back(radius * Vec3(rho * std::cos(phi), rho * std::sin(phi), z));
    }
    return point_dipole_ensemble(proton_system("cluster_" + std::to_string(n), pos), seed);
}

} // namespace spinlind::synth
