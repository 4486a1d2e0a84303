#pragma once

// Zero-point geometry ensemble: two geometries (+q, -q) per normal mode.

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinlind/constants.hpp"
#include "spinlind/error.hpp"
#include "spinlind/rate_engine.hpp"
#include "spinlind/spin_model.hpp"

namespace spinlind {

using Displacement = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct NormalMode {
    int index = 0;
    double frequency_cm1 = 0.0;
    double reduced_mass_amu = 1.0;
    Displacement displacement; // N x 3, unit Frobenius norm
};

inline constexpr double kModeNormTolerance = 1e-10;

inline void validate(const NormalMode& m) {
    const std::string where = "mode " + std::to_string(m.index);
    if (!(m.frequency_cm1 > 0.0) || !std::isfinite(m.frequency_cm1)) {
        throw ValidationError(where + ": frequency must be positive (imaginary modes are rejected)");
    }
    if (!(m.reduced_mass_amu > 0.0) || !std::isfinite(m.reduced_mass_amu)) {
        throw ValidationError(where + ": reduced mass must be positive");
    }
    if (!m.displacement.allFinite() || std::abs(m.displacement.norm() - 1.0) > kModeNormTolerance) {
        throw ValidationError(where + ": displacement is not unit-normalized");
    }
}

struct ZeroPointAmplitude {};
struct FixedAmplitude {
    double angstrom = 0.0;
};
using AmplitudeRule = std::variant<ZeroPointAmplitude, FixedAmplitude>;

/// sqrt(hbar / (2 mu omega)) in Angstrom for a harmonic mode.
inline double zero_point_amplitude(const NormalMode& m, const PhysicalConstants& c = kCodata2018) {
    const double omega = 2.0 * std::numbers::pi * c.speed_of_light * 100.0 * m.frequency_cm1;
    const double mu = m.reduced_mass_amu * c.atomic_mass_unit;
    return units::m_to_angstrom(std::sqrt(c.hbar / (2.0 * mu * omega)));
}

/// Returns hyperfine couplings (rad/s, one per nucleus) for a displaced geometry.
using HyperfineProvider = std::function<std::vector<double>(const SpinSystem&)>;

/// Provider backed by the point-dipole model; needs an electron position.
inline HyperfineProvider point_dipole_provider(const PhysicalConstants& c = kCodata2018) {
    return [c](const SpinSystem& s) {
        if (!s.electron_position) {
            throw ValidationError("system '" + s.name + "': point-dipole hyperfine needs an electron position");
        }
        std::vector<double> out;
        out.reserve(s.size());
        for (const auto& n : s.nuclei) {
            out.push_back(units::mhz_to_rad_s(
                point_dipole_hyperfine(n, *s.electron_position, s.electron_g, s.field_direction, c)));
        }
        return out;
    };
}

struct GeneratedEnsemble {
    EnsembleInput ensemble;
    std::vector<std::string> warnings;
};

/// Geometries ordered by (mode order, +q then -q). Hyperfine values come from
/// the provider when given, otherwise they are copied from equilibrium.
inline GeneratedEnsemble generate_ensemble(const SpinSystem& equilibrium, std::span<const NormalMode> modes,
                                           const AmplitudeRule& rule, const HyperfineProvider& hyperfine = {},
                                           const PhysicalConstants& c = kCodata2018) {
    validate(equilibrium);
    GeneratedEnsemble out;
    out.ensemble.equilibrium = equilibrium;
    const auto n = static_cast<Eigen::Index>(equilibrium.size());
    const std::size_t expected = equilibrium.size() >= 3 ? 3 * equilibrium.size() - 6 : 0;
    if (modes.size() != expected) {
        out.warnings.push_back("expected " + std::to_string(expected) + " modes (3N-6), got " +
                               std::to_string(modes.size()));
    }
    if (modes.empty()) throw ValidationError("no normal modes supplied");

    out.ensemble.geometries.reserve(2 * modes.size());
    for (const auto& m : modes) {
        validate(m);
        if (m.displacement.rows() != n) {
            throw ValidationError("mode " + std::to_string(m.index) + " has " +
                                  std::to_string(m.displacement.rows()) + " rows, system has " + std::to_string(n) +
                                  " nuclei");
        }
        const double q = std::holds_alternative<FixedAmplitude>(rule) ? std::get<FixedAmplitude>(rule).angstrom
                                                                       : zero_point_amplitude(m, c);
        for (const double sign : {1.0, -1.0}) {
            SpinSystem g = equilibrium;
            g.name = "mode" + std::to_string(m.index) + (sign > 0 ? "+" : "-");
            for (Eigen::Index a = 0; a < n; ++a) {
                g.nuclei[a].position += sign * q * m.displacement.row(a).transpose();
            }
            if (hyperfine) {
                const auto values = hyperfine(g);
                if (values.size() != g.size()) throw ValidationError("hyperfine provider returned wrong count");
                for (Eigen::Index a = 0; a < n; ++a) g.nuclei[a].hyperfine = values[a];
            }
            out.ensemble.geometries.push_back(std::move(g));
        }
    }
    return out;
}

inline std::vector<NormalMode> modes_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("modes") || !j.at("modes").is_array()) {
        throw ParseError("mode file: 'modes' must be an array");
    }
    std::vector<NormalMode> modes;
    for (const auto& jm : j.at("modes")) {
        NormalMode m;
        m.index = detail::required<int>(jm, "index", "mode");
        const std::string where = "mode " + std::to_string(m.index);
        m.frequency_cm1 = detail::required<double>(jm, "frequency_cm1", where);
        m.reduced_mass_amu = detail::required<double>(jm, "reduced_mass_amu", where);
        if (!jm.contains("displacement") || !jm.at("displacement").is_array()) {
            throw ParseError(where + ": 'displacement' must be an array");
        }
        const auto& d = jm.at("displacement");
        m.displacement.resize(static_cast<Eigen::Index>(d.size()), 3);
        for (std::size_t a = 0; a < d.size(); ++a) {
            m.displacement.row(static_cast<Eigen::Index>(a)) = detail::read_vec3(d[a], "displacement").transpose();
        }
        validate(m);
        modes.push_back(std::move(m));
    }
    return modes;
}

inline nlohmann::json modes_to_json(std::span<const NormalMode> modes) {
    auto arr = nlohmann::json::array();
    for (const auto& m : modes) {
        auto d = nlohmann::json::array();
        for (Eigen::Index a = 0; a < m.displacement.rows(); ++a) {
            d.push_back(detail::write_vec3(m.displacement.row(a).transpose()));
        }
        arr.push_back({{"index", m.index},
                       {"frequency_cm1", m.frequency_cm1},
                       {"reduced_mass_amu", m.reduced_mass_amu},
                       {"displacement", d}});
    }
    return {{"modes", arr}};
}

inline std::vector<NormalMode> load_modes(const std::filesystem::path& path) {
    return modes_from_json(detail::read_json_file(path));
}

inline void save_modes(const std::filesystem::path& path, std::span<const NormalMode> modes) {
    detail::write_json_file(path, modes_to_json(modes));
}

} // namespace spinlind
