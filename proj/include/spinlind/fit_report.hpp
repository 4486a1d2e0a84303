#pragma once

// Decay-constant extraction and report output: stretched-exponential fits,
// ab-initio vs zero-detuning comparison tables, profile CSV and SVG plots.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <stdexcept>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spinlind/error.hpp"
#include "spinlind/gksl_core.hpp"
#include "spinlind/nelder_mead.hpp"

namespace spinlind {

struct FitResult {
    double t2_ms = 0.0;
    double beta = 1.0;
    double rmse = 0.0;
    bool converged = false;
    int iterations = 0;
};

inline constexpr double kBetaMin = 0.5;
inline constexpr double kBetaMax = 3.0;
// Upper bound on T2 relative to the grid end; keeps flat profiles finite.
inline constexpr double kMaxT2GridFactor = 1e6;
inline constexpr std::size_t kMinFitPoints = 10;

inline double stretched_exp(double t, double t2, double beta) { return std::exp(-std::pow(t / t2, beta)); }

inline double fit_rmse(const CoherenceProfile& p, double t2, double beta) {
    double ss = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double r = p.values[k] - stretched_exp(p.t_ms[k], t2, beta);
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(p.size()));
}

/// Least-squares fit of L(t) = exp(-(t/T2)^beta). A fit that does not reach
/// the simplex tolerance reports converged = false with its best point.
inline FitResult fit_stretched_exp(const CoherenceProfile& p) {
    if (p.size() < kMinFitPoints || p.t_ms.size() != p.size()) {
        throw ValidationError("fit needs at least " + std::to_string(kMinFitPoints) + " points");
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (!std::isfinite(p.values[k]) || !std::isfinite(p.t_ms[k])) {
            throw ValidationError("fit: non-finite profile value at index " + std::to_string(k));
        }
    }
    const double t_end = p.t_ms.back();
    double t2_start = t_end;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p.values[k] < std::exp(-1.0)) {
            t2_start = p.t_ms[k];
            break;
        }
    }
    if (!(t2_start > 0.0)) t2_start = t_end;
    const double t2_cap = kMaxT2GridFactor * t_end;

    auto objective = [&](const std::array<double, 2>& x) {
        if (!(x[0] > 0.0) || x[0] > t2_cap || x[1] < kBetaMin || x[1] > kBetaMax) {
            return std::numeric_limits<double>::infinity();
        }
        return fit_rmse(p, x[0], x[1]);
    };
    const auto r = nelder_mead<2>(objective, {t2_start, 1.0});
    return {r.x[0], r.x[1], r.value, r.converged, r.iterations};
}

struct ComparisonRow {
    std::string name;
    FitResult ab_initio;
    FitResult zero;
    double ratio = 1.0; // T2(ab-initio) / T2(zero)
};

// Longest-lived first; names inside a tier are tied within kTieToleranceMs.
using Ordering = std::vector<std::vector<std::string>>;

inline constexpr double kTieToleranceMs = 1e-6;

struct ComparisonReport {
    std::vector<ComparisonRow> rows; // name order
    Ordering ab_initio_order;
    Ordering zero_order;
};

/// Orders names by decreasing T2. Sorted neighbours within the tie tolerance
/// share a tier, so a tier is a chain of close values.
inline Ordering coherence_ordering(const std::map<std::string, FitResult>& fits) {
    std::vector<std::pair<std::string, double>> v;
    for (const auto& [name, f] : fits) v.emplace_back(name, f.t2_ms);
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Ordering out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k == 0 || std::abs(v[k - 1].second - v[k].second) > kTieToleranceMs) out.emplace_back();
        out.back().push_back(v[k].first);
    }
    return out;
}

inline ComparisonReport compare_modes(const std::map<std::string, FitResult>& ab_initio,
                                      const std::map<std::string, FitResult>& zero) {
    if (ab_initio.size() != zero.size()) throw ValidationError("compare: mode results cover different systems");
    ComparisonReport rep;
    for (const auto& [name, fa] : ab_initio) {
        const auto it = zero.find(name);
        if (it == zero.end()) throw ValidationError("compare: '" + name + "' missing from zero-mode results");
        rep.rows.push_back({name, fa, it->second, fa.t2_ms / it->second.t2_ms});
    }
    rep.ab_initio_order = coherence_ordering(ab_initio);
    rep.zero_order = coherence_ordering(zero);
    return rep;
}

/// Position (0 = longest-lived tier) of a name in an ordering, or -1.
inline int tier_of(const Ordering& o, const std::string& name) {
    for (std::size_t t = 0; t < o.size(); ++t) {
        if (std::find(o[t].begin(), o[t].end(), name) != o[t].end()) return static_cast<int>(t);
    }
    return -1;
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline std::string format_ordering(const Ordering& o) {
    std::string s;
    for (std::size_t t = 0; t < o.size(); ++t) {
        if (t > 0) s += " > ";
        for (std::size_t k = 0; k < o[t].size(); ++k) {
            if (k > 0) s += " = ";
            s += o[t][k];
        }
    }
    return s;
}

inline void write_report_csv(std::ostream& os, const ComparisonReport& rep) {
    os << "name,T2_ms_abinitio,beta_abinitio,T2_ms_zero,beta_zero,ratio\n";
    for (const auto& r : rep.rows) {
        os << r.name << ',' << format_number(r.ab_initio.t2_ms) << ',' << format_number(r.ab_initio.beta) << ','
           << format_number(r.zero.t2_ms) << ',' << format_number(r.zero.beta) << ',' << format_number(r.ratio)
           << '\n';
    }
}

inline void write_ordering(std::ostream& os, const ComparisonReport& rep) {
    os << "ab-initio: " << format_ordering(rep.ab_initio_order) << '\n';
    os << "zero: " << format_ordering(rep.zero_order) << '\n';
}

// ---------------------------------------------------------------------------
// Profile CSV (t_ms,L)

inline void write_profile_csv(std::ostream& os, const CoherenceProfile& p) {
    os << "t_ms,L\n";
    for (std::size_t k = 0; k < p.size(); ++k) os << format_number(p.t_ms[k]) << ',' << format_number(p.values[k]) << '\n';
}

inline void save_profile_csv(const std::filesystem::path& path, const CoherenceProfile& p) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    write_profile_csv(out, p);
}

inline CoherenceProfile read_profile_csv(std::istream& in, const std::string& where = "profile") {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(where + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_ms,L") throw ParseError(where + ": expected header 't_ms,L'");
    CoherenceProfile p;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(where + ": row " + std::to_string(row) + " has no comma");
        // strtod rather than stod: subnormal values must parse, not throw
        auto number = [&](const std::string& field) {
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (field.empty() || end != field.c_str() + field.size()) {
                throw ParseError(where + ": row " + std::to_string(row) + " is not numeric");
            }
            return v;
        };
        p.t_ms.push_back(number(line.substr(0, comma)));
        p.values.push_back(number(line.substr(comma + 1)));
    }
    for (std::size_t k = 1; k < p.t_ms.size(); ++k) {
        if (!(p.t_ms[k] > p.t_ms[k - 1])) throw ValidationError(where + ": time grid is not strictly increasing");
    }
    return p;
}

inline CoherenceProfile load_profile_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return read_profile_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// SVG

struct LabeledProfile {
    std::string label;
    CoherenceProfile profile;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

/// Standalone SVG with linear axes (t in ms, L) and a legend in input order.
/// Output bytes depend only on the inputs.
inline std::string render_svg(const std::vector<LabeledProfile>& profiles, const std::string& title = "") {
    if (profiles.empty()) throw ValidationError("svg: no profiles to plot");
    const auto& grid = profiles.front().profile.t_ms;
    if (grid.size() < 2) throw ValidationError("svg: profiles need at least 2 points");
    double y_max = 1.0;
    double y_min = 0.0;
    for (const auto& lp : profiles) {
        if (lp.profile.t_ms != grid) throw ValidationError("svg: profiles are not on a common grid");
        for (double v : lp.profile.values) {
            y_max = std::max(y_max, v);
            y_min = std::min(y_min, v);
        }
    }
    constexpr double width = 720, height = 450, left = 70, right = 180, top = 40, bottom = 60;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    const double t0 = grid.front();
    const double t1 = grid.back();
    auto px = [&](double t) { return left + (t - t0) / (t1 - t0) * pw; };
    auto py = [&](double v) { return top + (y_max - v) / (y_max - y_min) * ph; };

    static constexpr std::array<const char*, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                         "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) {
        os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           << "font-size=\"15\">" << detail::xml_escape(title) << "</text>\n";
    }
    os << "<g stroke=\"black\" fill=\"none\">\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
       << "\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
    os << "</g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int k = 0; k <= 5; ++k) {
        const double t = t0 + (t1 - t0) * k / 5.0;
        const double v = y_min + (y_max - y_min) * k / 5.0;
        os << "<text x=\"" << detail::fixed(px(t)) << "\" y=\"" << top + ph + 18
           << "\" text-anchor=\"middle\">" << format_number(t) << "</text>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << detail::fixed(py(v) + 4) << "\" text-anchor=\"end\">"
           << format_number(v) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">t (ms)</text>\n";
    os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << top + ph / 2 << ")\">L(t)</text>\n";
    os << "</g>\n";

    for (std::size_t c = 0; c < profiles.size(); ++c) {
        const auto& p = profiles[c].profile;
        os << "<polyline fill=\"none\" stroke=\"" << palette[c % palette.size()] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (k > 0) os << ' ';
            os << detail::fixed(px(p.t_ms[k])) << ',' << detail::fixed(py(p.values[k]));
        }
        os << "\"/>\n";
    }
    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t c = 0; c < profiles.size(); ++c) {
        const double y = top + 10 + 20.0 * static_cast<double>(c);
        os << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << y << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << y
           << "\" stroke=\"" << palette[c % palette.size()] << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 46 << "\" y=\"" << y + 4 << "\">" << detail::xml_escape(profiles[c].label)
           << "</text>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

inline void emit_svg(const std::vector<LabeledProfile>& profiles, const std::filesystem::path& path,
                     const std::string& title = "") {
    const std::string svg = render_svg(profiles, title);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << svg;
    if (!out) throw ValidationError("write failed for " + path.string());
}

} // namespace spinlind
