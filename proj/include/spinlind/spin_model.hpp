#pragma once

// Domain types for one molecular spin system (electron + spin-active nuclei)
// and for an ensemble of displaced geometries, plus their JSON file schemas.
//
// Internal unit conventions: positions in Angstrom, angular frequencies
// (including hyperfine couplings) in rad/s. Files carry hyperfine values in
// MHz; conversion happens only at the file boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinlind/constants.hpp"
#include "spinlind/error.hpp"

namespace spinlind {

using Vec3 = Eigen::Vector3d;

struct NuclearSpinSite {
    int id = 0;
    std::string isotope;
    Vec3 position = Vec3::Zero(); // Angstrom
    double gamma = 0.0;           // rad s^-1 T^-1
    double spin = 0.5;
    double hyperfine = 0.0;       // rad/s
};

struct SpinSystem {
    std::string name;
    Vec3 field_direction = Vec3::UnitZ();
    double field_magnitude = 0.0; // T, provenance only
    double electron_g = kCodata2018.free_electron_g;
    std::optional<Vec3> electron_position; // Angstrom
    std::vector<NuclearSpinSite> nuclei;

    std::size_t size() const { return nuclei.size(); }
    std::size_t pair_count() const { return nuclei.empty() ? 0 : nuclei.size() * (nuclei.size() - 1) / 2; }
};

struct EnsembleInput {
    SpinSystem equilibrium;
    std::vector<SpinSystem> geometries; // name holds the geometry label
};

inline constexpr double kUnitVectorTolerance = 1e-12;

namespace detail {

inline bool finite(const Vec3& v) { return v.allFinite(); }

inline Vec3 read_vec3(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError(std::string(what) + ": expected an array of 3 numbers");
    }
    Vec3 v;
    for (int k = 0; k < 3; ++k) {
        if (!j[k].is_number()) throw ParseError(std::string(what) + ": non-numeric component");
        v[k] = j[k].get<double>();
    }
    return v;
}

inline nlohmann::json write_vec3(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

template <class T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(where + ": missing key '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": bad value for '" + key + "': " + e.what());
    }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace detail

/// Checks every SpinSystem invariant; throws ValidationError on the first failure.
inline void validate(const SpinSystem& s) {
    const std::string where = "system '" + s.name + "'";
    if (!detail::finite(s.field_direction) ||
        std::abs(s.field_direction.norm() - 1.0) > kUnitVectorTolerance) {
        throw ValidationError(where + ": field direction is not a unit vector");
    }
    if (!std::isfinite(s.field_magnitude)) throw ValidationError(where + ": non-finite field magnitude");
    if (!std::isfinite(s.electron_g) || s.electron_g == 0.0) {
        throw ValidationError(where + ": electron g must be finite and non-zero");
    }
    if (s.electron_position && !detail::finite(*s.electron_position)) {
        throw ValidationError(where + ": non-finite electron position");
    }
    for (std::size_t k = 0; k < s.nuclei.size(); ++k) {
        const auto& n = s.nuclei[k];
        if (n.id != static_cast<int>(k)) {
            throw ValidationError(where + ": nucleus ids must be unique and contiguous from 0");
        }
        if (n.spin != 0.5) {
            throw ValidationError(where + ": nucleus " + std::to_string(n.id) + " has spin " +
                                  std::to_string(n.spin) + "; only spin 1/2 is supported");
        }
        if (!std::isfinite(n.gamma) || n.gamma == 0.0) {
            throw ValidationError(where + ": nucleus " + std::to_string(n.id) + " has zero or non-finite gamma");
        }
        if (!detail::finite(n.position)) {
            throw ValidationError(where + ": nucleus " + std::to_string(n.id) + " has a non-finite position");
        }
        if (!std::isfinite(n.hyperfine)) {
            throw ValidationError(where + ": nucleus " + std::to_string(n.id) + " has a non-finite hyperfine value");
        }
    }
}

/// Geometries must match the equilibrium nucleus-for-nucleus; only positions
/// and hyperfine values may differ.
inline void validate(const EnsembleInput& e) {
    validate(e.equilibrium);
    if (e.geometries.empty()) throw ValidationError("ensemble has no geometries");
    const auto& eq = e.equilibrium.nuclei;
    for (const auto& g : e.geometries) {
        validate(g);
        if (g.nuclei.size() != eq.size()) {
            throw ValidationError("geometry '" + g.name + "' has " + std::to_string(g.nuclei.size()) +
                                  " nuclei, equilibrium has " + std::to_string(eq.size()));
        }
        for (std::size_t k = 0; k < eq.size(); ++k) {
            const auto& a = eq[k];
            const auto& b = g.nuclei[k];
            if (a.id != b.id || a.isotope != b.isotope || a.gamma != b.gamma || a.spin != b.spin) {
                throw ValidationError("geometry '" + g.name + "': nucleus " + std::to_string(k) +
                                      " differs from equilibrium in id, isotope, gamma or spin");
            }
        }
    }
}

inline SpinSystem system_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("system: expected a JSON object");
    SpinSystem s;
    s.name = detail::required<std::string>(j, "name", "system");
    const std::string where = "system '" + s.name + "'";

    const auto& field = j.contains("field") ? j.at("field") : throw ParseError(where + ": missing key 'field'");
    s.field_magnitude = detail::required<double>(field, "magnitude_T", where + " field");
    if (!field.contains("direction")) throw ParseError(where + ": missing field direction");
    s.field_direction = detail::read_vec3(field.at("direction"), "field.direction");

    if (j.contains("electron")) {
        const auto& el = j.at("electron");
        if (el.contains("g")) s.electron_g = detail::required<double>(el, "g", where + " electron");
        if (el.contains("position_angstrom")) {
            s.electron_position = detail::read_vec3(el.at("position_angstrom"), "electron.position_angstrom");
        }
    }

    if (!j.contains("nuclei") || !j.at("nuclei").is_array()) {
        throw ParseError(where + ": 'nuclei' must be an array");
    }
    std::set<int> seen;
    for (const auto& jn : j.at("nuclei")) {
        NuclearSpinSite n;
        n.id = detail::required<int>(jn, "id", where + " nucleus");
        if (!seen.insert(n.id).second) {
            throw ValidationError(where + ": duplicate nucleus id " + std::to_string(n.id));
        }
        const std::string nw = where + " nucleus " + std::to_string(n.id);
        n.isotope = detail::required<std::string>(jn, "isotope", nw);
        if (jn.contains("gamma_rad_per_s_T")) {
            n.gamma = detail::required<double>(jn, "gamma_rad_per_s_T", nw);
        } else if (auto g = PhysicalConstants::gyromagnetic_ratio(n.isotope)) {
            n.gamma = *g;
        } else {
            throw ValidationError(nw + ": unknown isotope '" + n.isotope + "' and no gamma_rad_per_s_T given");
        }
        n.spin = detail::required<double>(jn, "spin", nw);
        if (!jn.contains("position_angstrom")) throw ParseError(nw + ": missing position_angstrom");
        n.position = detail::read_vec3(jn.at("position_angstrom"), "position_angstrom");
        n.hyperfine = units::mhz_to_rad_s(detail::required<double>(jn, "hyperfine_MHz", nw));
        s.nuclei.push_back(std::move(n));
    }
    std::sort(s.nuclei.begin(), s.nuclei.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    validate(s);
    return s;
}

inline nlohmann::json system_to_json(const SpinSystem& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["field"] = {{"magnitude_T", s.field_magnitude}, {"direction", detail::write_vec3(s.field_direction)}};
    nlohmann::json el = {{"g", s.electron_g}};
    if (s.electron_position) el["position_angstrom"] = detail::write_vec3(*s.electron_position);
    j["electron"] = el;
    auto arr = nlohmann::json::array();
    for (const auto& n : s.nuclei) {
        arr.push_back({{"id", n.id},
                       {"isotope", n.isotope},
                       {"gamma_rad_per_s_T", n.gamma},
                       {"spin", n.spin},
                       {"position_angstrom", detail::write_vec3(n.position)},
                       {"hyperfine_MHz", units::rad_s_to_mhz(n.hyperfine)}});
    }
    j["nuclei"] = std::move(arr);
    return j;
}

inline EnsembleInput ensemble_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("equilibrium")) throw ParseError("ensemble: missing 'equilibrium'");
    EnsembleInput e;
    e.equilibrium = system_from_json(j.at("equilibrium"));
    if (!j.contains("geometries") || !j.at("geometries").is_array()) {
        throw ParseError("ensemble: 'geometries' must be an array");
    }
    const std::size_t n = e.equilibrium.size();
    for (const auto& jg : j.at("geometries")) {
        SpinSystem g = e.equilibrium;
        g.name = detail::required<std::string>(jg, "label", "geometry");
        const std::string where = "geometry '" + g.name + "'";
        const auto pos = jg.contains("positions_angstrom") ? jg.at("positions_angstrom") : nlohmann::json();
        const auto hf = jg.contains("hyperfine_MHz") ? jg.at("hyperfine_MHz") : nlohmann::json();
        if (!pos.is_array() || !hf.is_array()) {
            throw ParseError(where + ": positions_angstrom and hyperfine_MHz must be arrays");
        }
        if (pos.size() != n || hf.size() != n) {
            throw ValidationError(where + ": expected " + std::to_string(n) + " nuclei, got " +
                                  std::to_string(pos.size()) + " positions and " + std::to_string(hf.size()) +
                                  " hyperfine values");
        }
        for (std::size_t k = 0; k < n; ++k) {
            g.nuclei[k].position = detail::read_vec3(pos[k], "positions_angstrom");
            if (!hf[k].is_number()) throw ParseError(where + ": non-numeric hyperfine value");
            g.nuclei[k].hyperfine = units::mhz_to_rad_s(hf[k].get<double>());
        }
        e.geometries.push_back(std::move(g));
    }
    validate(e);
    return e;
}

inline nlohmann::json ensemble_to_json(const EnsembleInput& e) {
    nlohmann::json j;
    j["equilibrium"] = system_to_json(e.equilibrium);
    auto geoms = nlohmann::json::array();
    for (const auto& g : e.geometries) {
        auto pos = nlohmann::json::array();
        auto hf = nlohmann::json::array();
        for (const auto& n : g.nuclei) {
            pos.push_back(detail::write_vec3(n.position));
            hf.push_back(units::rad_s_to_mhz(n.hyperfine));
        }
        geoms.push_back({{"label", g.name}, {"positions_angstrom", pos}, {"hyperfine_MHz", hf}});
    }
    j["geometries"] = std::move(geoms);
    return j;
}

inline SpinSystem load_system(const std::filesystem::path& path) {
    return system_from_json(detail::read_json_file(path));
}

inline EnsembleInput load_ensemble(const std::filesystem::path& path) {
    return ensemble_from_json(detail::read_json_file(path));
}

inline void save_system(const std::filesystem::path& path, const SpinSystem& s) {
    detail::write_json_file(path, system_to_json(s));
}

inline void save_ensemble(const std::filesystem::path& path, const EnsembleInput& e) {
    detail::write_json_file(path, ensemble_to_json(e));
}

/// Treats a plain system as a one-geometry ensemble of itself.
inline EnsembleInput single_geometry_ensemble(const SpinSystem& s) {
    EnsembleInput e{s, {s}};
    return e;
}

} // namespace spinlind
