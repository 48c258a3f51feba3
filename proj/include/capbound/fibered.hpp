#pragma once

// The special class a = (0,...,0,a_n(x')), V = V(x'): reduction to a direct
// integral of non-magnetic fiber operators -Laplace_{x'} + (mu + a_n)^2 + V,
// the bottom curve mu -> lambda_mu, its infimum, and the fibered diameter
// comparison. A periodic strip operator cross-validates the reduction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "capbound/diameter.hpp"
#include "capbound/grid.hpp"
#include "capbound/spectrum.hpp"

namespace capbound {

struct FiberedProblem {
    ScalarField aFiber;          // a_n(x') on the fiber lattice (dim n-1)
    ScalarField VFiber;          // V(x') >= 0
    std::vector<double> muGrid;  // ascending; empty = default grid

    /// Default grid: 64 points on [-muMax, muMax] with
    /// muMax = max|a_n| + sqrt(max V) + 3, which always brackets the
    /// minimizer of (mu + a_n)^2 + V.
    std::vector<double> effective_mu_grid() const {
        if (!muGrid.empty()) return muGrid;
        double maxA = 0.0, maxV = 0.0;
        for (const double v : aFiber.values) maxA = std::max(maxA, std::abs(v));
        for (const double v : VFiber.values) maxV = std::max(maxV, v);
        const double muMax = maxA + std::sqrt(maxV) + 3.0;
        std::vector<double> g;
        const int n = 64;
        for (int k = 0; k < n; ++k) g.push_back(-muMax + 2.0 * muMax * k / double(n - 1));
        return g;
    }
};

struct FiberCurve {
    std::vector<std::pair<double, double>> samples;  // (mu, lambda_mu)
    double minimizerMu = 0.0;
    double lambda = 0.0;
};

namespace detail {

/// Dirichlet fiber operator for one mu: a = 0, V_mu = (mu + a_n)^2 + V.
inline MagneticOperator fiber_operator(const FiberedProblem& p, double mu) {
    const Lattice& lat = p.aFiber.lattice;
    MagneticOperator op;
    op.lattice = lat;
    op.active.assign(lat.node_count(), 1);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
        for (int ax = 0; ax < lat.dim; ++ax)
            if (idx[ax] == 0 || idx[ax] == lat.shape[ax] - 1) op.active[std::size_t(f)] = 0;
    });
    op.a = VectorField(lat);
    op.V = ScalarField(lat);
    for (std::int64_t i = 0; i < lat.node_count(); ++i) {
        const double s = mu + p.aFiber[i];
        op.V[i] = s * s + p.VFiber[i];
    }
    return op;
}

}  // namespace detail

/// Bottom of -Laplace_{x'} + (mu + a_n(x'))^2 + V(x').
inline double fiber_bottom(const FiberedProblem& p, double mu, const EigenOptions& opts = {}) {
    return bottom(detail::fiber_operator(p, mu), opts).lambda;
}

/// Evaluate lambda_mu over the grid, require an interior bracket and refine
/// the argmin by golden section to a width of 1e-3.
inline FiberCurve infimum_over_fibers(const FiberedProblem& p, const EigenOptions& opts = {}) {
    const auto grid = p.effective_mu_grid();
    if (grid.size() < 3) throw Error("infimum_over_fibers: mu grid too short");

    FiberCurve curve;
    std::size_t argmin = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double lam = fiber_bottom(p, grid[k], opts);
        curve.samples.push_back({grid[k], lam});
        if (lam < curve.samples[argmin].second) argmin = k;
    }
    if (argmin == 0 || argmin + 1 == grid.size())
        throw Error("infimum_over_fibers: no interior bracket; extend muGrid");

    double a = grid[argmin - 1], b = grid[argmin + 1];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = fiber_bottom(p, x1, opts), f2 = fiber_bottom(p, x2, opts);
    while (b - a > 1e-3) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = fiber_bottom(p, x1, opts);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = fiber_bottom(p, x2, opts);
        }
    }
    const double muStar = f1 <= f2 ? x1 : x2;
    const double lamStar = std::min(f1, f2);

    curve.minimizerMu = muStar;
    curve.lambda = std::min(lamStar, curve.samples[argmin].second);
    if (curve.samples[argmin].second < lamStar) curve.minimizerMu = grid[argmin];
    return curve;
}

/// Periodic strip operator in dimension n = fiber dim + 1 for the
/// cross-validation solve: periodic in x^n (length periodNodes * h), with
/// a = (0,...,0, a_n(x')). Fourier modes of the strip discretize mu.
inline MagneticOperator periodic_strip_operator(const FiberedProblem& p, int periodNodes) {
    const Lattice& flat = p.aFiber.lattice;
    if (flat.dim != 1) throw Error("periodic_strip_operator: only 1-d fibers supported");
    Lattice lat(2, {flat.shape[0], periodNodes, 1}, flat.h, {flat.origin[0], 0.0, 0.0});

    MagneticOperator op;
    op.lattice = lat;
    op.periodic = {false, true, false};
    op.active.assign(lat.node_count(), 1);
    op.a = VectorField(lat);
    op.V = ScalarField(lat);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
        if (idx[0] == 0 || idx[0] == lat.shape[0] - 1) op.active[std::size_t(f)] = 0;
        const std::int64_t fiberNode = idx[0];
        op.V[f] = p.VFiber[fiberNode];
        op.a.comp[1][std::size_t(f)] = p.aFiber[fiberNode];
    });
    return op;
}

struct FiberedDiameterResult {
    double DTilde = 0.0;                              // sup over mu of D(V_mu)
    double muAt = 0.0;
    std::vector<std::pair<double, double>> table;     // (mu, D(V_mu))
};

/// Fibered diameter: the non-magnetic capacitary diameter of V_mu on the
/// fiber lattice (fiber-dimensional qualification exponent), taken over the
/// mu grid.
inline FiberedDiameterResult fibered_diameter(const FiberedProblem& p, double gamma,
                                              const DiameterOptions& optsIn = {}) {
    const Lattice& lat = p.aFiber.lattice;
    DiameterOptions opts = optsIn;
    opts.gamma = gamma;
    opts.carving.gamma = gamma;
    opts.carving.gaugeBudget = 0;  // non-magnetic fibers: the unit gauge is exact

    FiberedDiameterResult out;
    bool first = true;
    for (const double mu : p.effective_mu_grid()) {
        SweepProblem prob;
        prob.lattice = lat;
        prob.omega.assign(lat.node_count(), 1);
        prob.a = VectorField(lat);
        prob.V = ScalarField(lat);
        for (std::int64_t i = 0; i < lat.node_count(); ++i) {
            const double s = mu + p.aFiber[i];
            prob.V[i] = s * s + p.VFiber[i];
        }
        prob.domainBox.lo = {0, 0, 0};
        prob.domainBox.hi = {lat.shape[0] - 1, lat.shape[1] - 1, lat.shape[2] - 1};
        const auto r = diameter(prob, opts);
        out.table.push_back({mu, r.D});
        if (first || r.D > out.DTilde) {
            out.DTilde = r.D;
            out.muAt = mu;
            first = false;
        }
    }
    return out;
}

}  // namespace capbound
