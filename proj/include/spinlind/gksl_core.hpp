#pragma once

// Spin operators, secular electron + nuclear-pair Hamiltonians, the GKSL
// generator in vectorized form, and exact step propagation.
//
// Conventions:
//   * spin 0 is the electron; the basis index has spin 0 as its most
//     significant bit and bit value 0 means "up" (S_z = +1/2);
//   * Hamiltonians are in rad/s, so hbar is absorbed and d rho/dt = -i[H, rho] + ...;
//   * vec() stacks columns, vec(A X B) = (B^T kron A) vec(X);
//   * time grids are in milliseconds, rates in 1/s.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "spinlind/constants.hpp"
#include "spinlind/error.hpp"

namespace spinlind {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using SparseOperator = Eigen::SparseMatrix<Complex>;

inline constexpr int kMaxSpins = 12;

/// Single-site S_z, S_+, S_- embedded in the 2^n product space.
class SpinOperatorSet {
public:
    explicit SpinOperatorSet(int n_spins) : n_(n_spins) {
        if (n_spins < 1 || n_spins > kMaxSpins) {
            throw ValidationError("spin count " + std::to_string(n_spins) + " outside [1, " +
                                  std::to_string(kMaxSpins) + "]");
        }
        dim_ = Eigen::Index{1} << n_spins;
        for (int site = 0; site < n_; ++site) {
            const Eigen::Index mask = Eigen::Index{1} << (n_ - 1 - site);
            std::vector<Eigen::Triplet<Complex>> z, plus, minus;
            for (Eigen::Index b = 0; b < dim_; ++b) {
                const bool down = (b & mask) != 0;
                z.emplace_back(b, b, down ? -0.5 : 0.5);
                if (down) {
                    plus.emplace_back(b ^ mask, b, 1.0);
                } else {
                    minus.emplace_back(b ^ mask, b, 1.0);
                }
            }
            sz_.push_back(from_triplets(z));
            sp_.push_back(from_triplets(plus));
            sm_.push_back(from_triplets(minus));
        }
    }

    int spins() const { return n_; }
    Eigen::Index dim() const { return dim_; }

    const SparseOperator& z(int site) const { return sz_.at(site); }
    const SparseOperator& plus(int site) const { return sp_.at(site); }
    const SparseOperator& minus(int site) const { return sm_.at(site); }

    SparseOperator x(int site) const { return 0.5 * (plus(site) + minus(site)); }
    SparseOperator identity() const {
        SparseOperator id(dim_, dim_);
        id.setIdentity();
        return id;
    }

private:
    SparseOperator from_triplets(const std::vector<Eigen::Triplet<Complex>>& t) const {
        SparseOperator m(dim_, dim_);
        m.setFromTriplets(t.begin(), t.end());
        return m;
    }

    int n_;
    Eigen::Index dim_ = 0;
    std::vector<SparseOperator> sz_, sp_, sm_;
};

inline SpinOperatorSet build_operators(int n_spins) { return SpinOperatorSet(n_spins); }

/// Dipolar coupling term between two nuclear sites (secular form).
struct PairCoupling {
    int a = 0; // nucleus index (0-based, electron excluded)
    int b = 0;
    double coupling = 0.0; // rad/s
};

struct ClusterHamiltonian {
    ComplexMatrix matrix;
    double hyperfine_i = 0.0;
    double hyperfine_j = 0.0;
    double coupling = 0.0;
};

/// H = sum_n A_n S_z I_z^n + sum_pairs J (2 I_z^a I_z^b - 1/2 (I_+^a I_-^b + I_-^a I_+^b)).
/// Nucleus n lives on site n + 1.
inline ComplexMatrix build_spin_hamiltonian(std::span<const double> hyperfine, std::span<const PairCoupling> pairs,
                                            const SpinOperatorSet& ops) {
    if (static_cast<int>(hyperfine.size()) + 1 != ops.spins()) {
        throw ValidationError("hamiltonian: " + std::to_string(hyperfine.size()) + " nuclei but operators for " +
                              std::to_string(ops.spins()) + " spins");
    }
    SparseOperator h(ops.dim(), ops.dim());
    for (std::size_t n = 0; n < hyperfine.size(); ++n) {
        const int site = static_cast<int>(n) + 1;
        h += hyperfine[n] * SparseOperator(ops.z(0) * ops.z(site));
    }
    for (const auto& p : pairs) {
        if (p.a == p.b || p.a < 0 || p.b < 0 || p.a >= static_cast<int>(hyperfine.size()) ||
            p.b >= static_cast<int>(hyperfine.size())) {
            throw ValidationError("hamiltonian: bad pair (" + std::to_string(p.a) + "," + std::to_string(p.b) + ")");
        }
        const int sa = p.a + 1;
        const int sb = p.b + 1;
        h += (2.0 * p.coupling) * SparseOperator(ops.z(sa) * ops.z(sb));
        h += (-0.5 * p.coupling) * SparseOperator(ops.plus(sa) * ops.minus(sb));
        h += (-0.5 * p.coupling) * SparseOperator(ops.minus(sa) * ops.plus(sb));
    }
    return ComplexMatrix(h);
}

inline ClusterHamiltonian build_cluster_hamiltonian(double hyperfine_i, double hyperfine_j, double coupling,
                                                    const SpinOperatorSet& ops) {
    if (ops.spins() != 3) throw ValidationError("cluster hamiltonian needs operators for electron + 2 nuclei");
    const double a[] = {hyperfine_i, hyperfine_j};
    const PairCoupling p[] = {{0, 1, coupling}};
    return {build_spin_hamiltonian(a, p, ops), hyperfine_i, hyperfine_j, coupling};
}

struct DecayChannel {
    ComplexMatrix op;
    double rate = 0.0; // 1/s
};

/// S_z on the electron at the given rate.
inline DecayChannel electron_dephasing(const SpinOperatorSet& ops, double rate) {
    if (!(rate >= 0.0)) throw ValidationError("decay rate must be non-negative");
    return {ComplexMatrix(ops.z(0)), rate};
}

struct Liouvillian {
    ComplexMatrix generator; // d^2 x d^2, acts on column-stacked vec(rho)
    Eigen::Index dim = 0;    // Hilbert dimension d
};

inline Liouvillian build_liouvillian(const ComplexMatrix& h, std::span<const DecayChannel> channels) {
    const Eigen::Index d = h.rows();
    if (h.cols() != d) throw ValidationError("liouvillian: hamiltonian is not square");
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    const Complex i{0.0, 1.0};

    // -i (I kron H - H^T kron I)
    ComplexMatrix l = -i * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
    for (const auto& ch : channels) {
        if (ch.op.rows() != d || ch.op.cols() != d) {
            throw ValidationError("liouvillian: channel dimension " + std::to_string(ch.op.rows()) +
                                  " does not match hamiltonian dimension " + std::to_string(d));
        }
        if (!(ch.rate >= 0.0)) throw ValidationError("liouvillian: negative channel rate");
        if (ch.rate == 0.0) continue;
        const ComplexMatrix cdc = ch.op.adjoint() * ch.op;
        l += ch.rate * (Eigen::kroneckerProduct(ch.op.conjugate(), ch.op).eval() -
                        0.5 * Eigen::kroneckerProduct(id, cdc).eval() -
                        0.5 * Eigen::kroneckerProduct(cdc.transpose(), id).eval());
    }
    return {std::move(l), d};
}

inline ComplexVector vec(const ComplexMatrix& m) { return Eigen::Map<const ComplexVector>(m.data(), m.size()); }

inline ComplexMatrix unvec(const ComplexVector& v, Eigen::Index d) {
    return Eigen::Map<const ComplexMatrix>(v.data(), d, d);
}

/// Uniform grid over [0, t_max] in milliseconds, endpoints included.
struct TimeGrid {
    double t_max_ms = 0.1;
    int points = 400;

    TimeGrid() = default;
    TimeGrid(double t_max, int n) : t_max_ms(t_max), points(n) {
        if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("time grid: t_max must be positive");
        if (n < 2) throw ValidationError("time grid: need at least 2 points");
    }

    double step_ms() const { return t_max_ms / (points - 1); }
    double at(int k) const { return t_max_ms * static_cast<double>(k) / static_cast<double>(points - 1); }
    std::vector<double> times() const {
        std::vector<double> t(points);
        for (int k = 0; k < points; ++k) t[k] = at(k);
        return t;
    }
};

struct CoherenceProfile {
    std::vector<double> t_ms;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kHermiticityTolerance = 1e-12;
inline constexpr double kPositivityTolerance = 1e-10;

struct DensityCheck {
    double trace_error = 0.0;  // |Tr rho - 1|
    double hermiticity = 0.0;  // max |rho - rho^dagger|
    double min_eigenvalue = 0.0;

    bool ok() const {
        return trace_error < kTraceTolerance && hermiticity <= kHermiticityTolerance &&
               min_eigenvalue >= -kPositivityTolerance;
    }
};

inline DensityCheck check_density(const ComplexMatrix& rho) {
    DensityCheck c;
    c.trace_error = std::abs(rho.trace() - Complex{1.0, 0.0});
    c.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

namespace detail {

inline void require_density(const ComplexMatrix& rho, int step, double t_ms) {
    const auto c = check_density(rho);
    if (!c.ok()) {
        std::ostringstream os;
        os.precision(3);
        os << "density matrix invariant violated at step " << step << " (t = " << t_ms
           << " ms): |Tr rho - 1| = " << c.trace_error << ", max|rho - rho^+| = " << c.hermiticity
           << ", min eigenvalue = " << c.min_eigenvalue;
        throw InvariantViolation(os.str());
    }
}

} // namespace detail

/// Electron in |+x>, every nucleus maximally mixed.
inline ComplexMatrix initial_state(const SpinOperatorSet& ops) {
    ComplexMatrix rho = ComplexMatrix::Constant(2, 2, Complex{0.5, 0.0});
    const ComplexMatrix mixed = 0.5 * ComplexMatrix::Identity(2, 2);
    for (int s = 1; s < ops.spins(); ++s) rho = Eigen::kroneckerProduct(rho, mixed).eval();
    return rho;
}

/// Step propagator exp(L dt), dt in milliseconds.
inline ComplexMatrix step_propagator(const Liouvillian& l, double dt_ms) {
    const ComplexMatrix scaled = l.generator * Complex{units::ms_to_s(dt_ms), 0.0};
    return scaled.exp();
}

/// rho(t_k) on every grid point; the step propagator is computed once.
inline std::vector<ComplexMatrix> propagate(const Liouvillian& l, const ComplexMatrix& rho0, const TimeGrid& grid) {
    if (rho0.rows() != l.dim || rho0.cols() != l.dim) throw ValidationError("propagate: rho0 dimension mismatch");
    detail::require_density(rho0, 0, 0.0);
    const ComplexMatrix step = step_propagator(l, grid.step_ms());
    std::vector<ComplexMatrix> out;
    out.reserve(grid.points);
    out.push_back(rho0);
    ComplexVector v = vec(rho0);
    for (int k = 1; k < grid.points; ++k) {
        v = step * v;
        out.push_back(unvec(v, l.dim));
        detail::require_density(out.back(), k, grid.at(k));
    }
    return out;
}

/// Free-induction coherence |Tr(rho(t) S_+^e)| / |Tr(rho(0) S_+^e)|.
inline CoherenceProfile coherence(std::span<const ComplexMatrix> trajectory, const TimeGrid& grid,
                                  const SpinOperatorSet& ops) {
    if (trajectory.empty()) throw ValidationError("coherence: empty trajectory");
    if (static_cast<int>(trajectory.size()) != grid.points) {
        throw ValidationError("coherence: trajectory length does not match the time grid");
    }
    const ComplexMatrix splus(ops.plus(0));
    auto observe = [&](const ComplexMatrix& rho) { return std::abs((rho * splus).trace()); };
    const double norm = observe(trajectory.front());
    if (!(norm > 0.0)) throw ValidationError("coherence: initial state has no electron coherence");
    CoherenceProfile p;
    p.t_ms = grid.times();
    p.values.reserve(trajectory.size());
    p.values.push_back(1.0);
    for (std::size_t k = 1; k < trajectory.size(); ++k) p.values.push_back(observe(trajectory[k]) / norm);
    return p;
}

enum class Observable { hahn_echo, free_induction };

inline const char* to_string(Observable o) { return o == Observable::hahn_echo ? "echo" : "fid"; }

inline Observable parse_observable(const std::string& s) {
    if (s == "echo") return Observable::hahn_echo;
    if (s == "fid") return Observable::free_induction;
    throw ValidationError("unknown observable '" + s + "' (expected echo or fid)");
}

/// Hahn-echo coherence: evolve t/2, ideal pi pulse about x on the electron,
/// evolve t/2, read |Tr(rho S_+^e)|, normalized to the zero-delay echo.
///
/// With E the half-step propagator and w = vec((S_+^e)^T), the signal at
/// t_k is w^T E^k P E^k vec(rho0) = ((E^T)^k w)^T P (E^k vec(rho0)), so one
/// forward and one adjoint recurrence give every grid point.
inline CoherenceProfile echo_coherence(const Liouvillian& l, const ComplexMatrix& rho0, const TimeGrid& grid,
                                       const SpinOperatorSet& ops) {
    const Eigen::Index d = l.dim;
    if (rho0.rows() != d || ops.dim() != d) throw ValidationError("echo: dimension mismatch");
    detail::require_density(rho0, 0, 0.0);
    const ComplexMatrix half = step_propagator(l, 0.5 * grid.step_ms());
    const ComplexMatrix half_t = half.transpose();
    const ComplexMatrix pulse = ComplexMatrix(ops.plus(0) + ops.minus(0)); // sigma_x on the electron
    const ComplexMatrix splus(ops.plus(0));

    ComplexVector forward = vec(rho0);
    ComplexVector adjoint = vec(splus.transpose());
    std::vector<Complex> signal(grid.points);
    for (int k = 0; k < grid.points; ++k) {
        if (k > 0) {
            forward = half * forward;
            adjoint = half_t * adjoint;
            detail::require_density(unvec(forward, d), k, 0.5 * grid.at(k));
        }
        const ComplexMatrix flipped = pulse * unvec(forward, d) * pulse.adjoint();
        signal[k] = adjoint.transpose() * vec(flipped);
    }
    const double norm = std::abs(signal[0]);
    if (!(norm > 0.0)) throw ValidationError("echo: initial state has no electron coherence");
    CoherenceProfile p;
    p.t_ms = grid.times();
    p.values.resize(grid.points);
    p.values[0] = 1.0;
    for (int k = 1; k < grid.points; ++k) p.values[k] = std::abs(signal[k]) / norm;
    return p;
}

inline CoherenceProfile simulate_coherence(const Liouvillian& l, const ComplexMatrix& rho0, const TimeGrid& grid,
                                           const SpinOperatorSet& ops, Observable observable) {
    if (observable == Observable::hahn_echo) return echo_coherence(l, rho0, grid, ops);
    const auto trajectory = propagate(l, rho0, grid);
    return coherence(trajectory, grid, ops);
}

} // namespace spinlind
