#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "spinlind/gksl_core.hpp"
#include "spinlind/spin_model.hpp"

namespace spinlind::testing {

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return a.size() == b.size() ? d : INFINITY;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("spinlind_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline NuclearSpinSite proton(int id, const Vec3& pos, double hyperfine_rad_s = 0.0) {
    NuclearSpinSite n;
    n.id = id;
    n.isotope = "1H";
    n.gamma = 2.6752218744e8;
    n.position = pos;
    n.hyperfine = hyperfine_rad_s;
    return n;
}

inline SpinSystem protons(const std::vector<Vec3>& pos, const std::vector<double>& hyperfine = {}) {
    SpinSystem s;
    s.name = "test";
    for (std::size_t k = 0; k < pos.size(); ++k) {
        s.nuclei.push_back(proton(static_cast<int>(k), pos[k], hyperfine.empty() ? 0.0 : hyperfine[k]));
    }
    return s;
}

inline Vec3 random_position(std::mt19937_64& rng, double half_width) {
    std::uniform_real_distribution<double> u(-half_width, half_width);
    return {u(rng), u(rng), u(rng)};
}

} // namespace spinlind::testing
