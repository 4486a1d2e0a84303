#pragma once

#include <array>
#include <numbers>
#include <optional>
#include <string_view>

namespace spinlind {

struct IsotopeEntry {
    std::string_view label;
    double gamma; // rad s^-1 T^-1
};

/// CODATA 2018 constants plus reference gyromagnetic ratios for the isotopes
/// the built-in table knows. All members are const; copies are cheap.
struct PhysicalConstants {
    const double hbar = 1.054571817e-34;             // J s
    const double mu0 = 1.25663706212e-6;             // T^2 m^3 / J
    const double bohr_magneton = 9.2740100783e-24;   // J / T
    const double speed_of_light = 299792458.0;       // m / s
    const double atomic_mass_unit = 1.66053906660e-27; // kg
    const double free_electron_g = 2.00231930436256;

    static constexpr std::array<IsotopeEntry, 5> isotopes{{
        {"1H", 2.6752218744e8},
        {"51V", 7.0455e7},
        {"63Cu", 7.1118e7},
        {"77Se", 5.1254e7},
        {"33S", 2.0557e7},
    }};

    static constexpr std::optional<double> gyromagnetic_ratio(std::string_view isotope) {
        for (const auto& e : isotopes) {
            if (e.label == isotope) return e.gamma;
        }
        return std::nullopt;
    }

    /// Electron gyromagnetic ratio magnitude for a given g factor, rad s^-1 T^-1.
    constexpr double electron_gamma(double g) const { return g * bohr_magneton / hbar; }
};

inline constexpr PhysicalConstants kCodata2018{};

namespace units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double mhz_to_rad_s(double mhz) { return mhz * kTwoPi * 1e6; }
constexpr double rad_s_to_mhz(double w) { return w / (kTwoPi * 1e6); }
constexpr double angstrom_to_m(double a) { return a * 1e-10; }
constexpr double m_to_angstrom(double m) { return m * 1e10; }
constexpr double ms_to_s(double ms) { return ms * 1e-3; }

} // namespace units

} // namespace spinlind
