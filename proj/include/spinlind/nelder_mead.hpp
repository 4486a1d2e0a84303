#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

namespace spinlind {

template <std::size_t N>
struct SimplexResult {
    std::array<double, N> x{};
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

struct SimplexOptions {
    double relative_diameter = 1e-10;
    int max_iterations = 2000;
    double initial_step = 0.1; // relative to each start coordinate (absolute if that is 0)
};

/// Nelder-Mead downhill simplex with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Deterministic.
/// The objective may return +inf to mark infeasible points.
template <std::size_t N, class F>
SimplexResult<N> nelder_mead(F&& f, const std::array<double, N>& start, const SimplexOptions& opt = {}) {
    using Point = std::array<double, N>;
    std::array<Point, N + 1> v{};
    std::array<double, N + 1> fv{};
    v[0] = start;
    for (std::size_t d = 0; d < N; ++d) {
        v[d + 1] = start;
        v[d + 1][d] += start[d] != 0.0 ? opt.initial_step * start[d] : opt.initial_step;
    }
    for (std::size_t k = 0; k <= N; ++k) fv[k] = f(v[k]);

    std::array<std::size_t, N + 1> order{};
    auto sort_vertices = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::array<Point, N + 1> vs{};
        std::array<double, N + 1> fs{};
        for (std::size_t k = 0; k <= N; ++k) {
            vs[k] = v[order[k]];
            fs[k] = fv[order[k]];
        }
        v = vs;
        fv = fs;
    };
    auto diameter = [&] {
        double worst = 0.0;
        for (std::size_t k = 1; k <= N; ++k) {
            for (std::size_t d = 0; d < N; ++d) {
                const double scale = std::max(std::abs(v[0][d]), std::numeric_limits<double>::min());
                worst = std::max(worst, std::abs(v[k][d] - v[0][d]) / scale);
            }
        }
        return worst;
    };
    auto along = [](const Point& from, const Point& to, double t) {
        Point p{};
        for (std::size_t d = 0; d < N; ++d) p[d] = from[d] + t * (to[d] - from[d]);
        return p;
    };

    SimplexResult<N> r;
    sort_vertices();
    for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
        if (diameter() < opt.relative_diameter) {
            r.converged = true;
            break;
        }
        Point centroid{};
        for (std::size_t k = 0; k < N; ++k) {
            for (std::size_t d = 0; d < N; ++d) centroid[d] += v[k][d] / static_cast<double>(N);
        }
        const Point reflected = along(centroid, v[N], -1.0);
        const double fr = f(reflected);
        if (fr < fv[0]) {
            const Point expanded = along(centroid, v[N], -2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                v[N] = expanded;
                fv[N] = fe;
            } else {
                v[N] = reflected;
                fv[N] = fr;
            }
        } else if (fr < fv[N - 1]) {
            v[N] = reflected;
            fv[N] = fr;
        } else {
            const bool outside = fr < fv[N];
            const Point contracted = along(centroid, outside ? reflected : v[N], 0.5);
            const double fc = f(contracted);
            if (fc < (outside ? fr : fv[N])) {
                v[N] = contracted;
                fv[N] = fc;
            } else {
                for (std::size_t k = 1; k <= N; ++k) {
                    v[k] = along(v[0], v[k], 0.5);
                    fv[k] = f(v[k]);
                }
            }
        }
        sort_vertices();
    }
    if (!r.converged && diameter() < opt.relative_diameter) r.converged = true;
    r.x = v[0];
    r.value = fv[0];
    return r;
}

} // namespace spinlind
