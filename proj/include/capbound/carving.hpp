#pragma once

// Minimization over negligible compact sets F (with Q_d \ Omega contained in
// F and cap(F) <= gamma * cap(Q_d)) of the integral of the effective
// potential over Q_d \ F, jointly with the gauge. The double infimum is
// approximated from above: greedy superlevel carving under the capacity
// budget, alternated with gauge re-optimization, plus independently sampled
// polynomial gauges. Witnesses are kept so every reported value can be
// re-checked.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "capbound/capacity.hpp"
#include "capbound/gauge.hpp"
#include "capbound/grid.hpp"

namespace capbound {

struct CarvingResult {
    NodeMask F;             // window-local membership mask
    GaugeCandidate omega;
    double integral = kInf;
    double capUsed = 0.0;
    bool feasible = false;
    std::string gaugeLabel; // "unit", "optimized[r]", "poly[k]"
};

struct CarvingOptions {
    double gamma = 0.5;
    int gaugeBudget = 2;        // sampled polynomial gauges per cube
    int rounds = 2;             // alternating minimization rounds
    bool optimizedBranch = true;  // include the smooth optimized-phase family
    std::uint64_t seed = 1;
    CapacityOptions capacity{};
    GaugeOptions gauge{};
};

namespace detail {

inline CompactSet as_compact(const Lattice& lat, NodeMask member, const CubeWindow& cube) {
    CompactSet s;
    s.lattice = lat;
    s.member = std::move(member);
    s.boundingCube = cube;
    return s;
}

/// Trapezoid quadrature weights over the closed cube window: h^n with the
/// usual half factors on window faces, so a constant integrates to d^n
/// exactly instead of (d + h)^n.
inline std::vector<double> window_weights(const Lattice& lat) {
    std::vector<double> w(lat.node_count());
    const double hn = std::pow(lat.h, lat.dim);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
        double v = hn;
        for (int ax = 0; ax < lat.dim; ++ax)
            if (idx[ax] == 0 || idx[ax] == lat.shape[ax] - 1) v *= 0.5;
        w[std::size_t(f)] = v;
    });
    return w;
}

inline double weighted_integral(const ScalarField& f, const NodeMask& region,
                                const std::vector<double>& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < region.size(); ++i)
        if (region[i]) acc += w[i] * f.values[i];
    return acc;
}

}  // namespace detail

/// Greedy superlevel carving of one effective potential. `omegaMask` marks
/// the Omega nodes of the window; `capQ` is cap(Q_d) under the same options.
inline CarvingResult min_over_F(const EffectivePotential& veff, const Lattice& lat,
                                const CubeWindow& cube, const NodeMask& omegaMask,
                                double gamma, double capQ, const CapacityOptions& capOpts = {}) {
    const std::int64_t n = lat.node_count();
    const double budget = gamma * capQ;

    CarvingResult res;
    res.F.assign(n, 0);

    // Mandatory part: out-of-Omega nodes and gauge sentinels.
    bool anyMandatory = false;
    for (std::int64_t i = 0; i < n; ++i) {
        if (!omegaMask[std::size_t(i)] || veff.sentinel[std::size_t(i)]) {
            res.F[std::size_t(i)] = 1;
            anyMandatory = true;
        }
    }

    auto cap_of = [&](const NodeMask& member) {
        return cap(detail::as_compact(lat, member, cube), cube, capOpts);
    };

    double capMandatory = 0.0;
    if (anyMandatory) {
        capMandatory = cap_of(res.F);
        if (capMandatory > budget) {
            res.feasible = false;
            res.integral = kInf;
            res.capUsed = capMandatory;
            return res;
        }
    }

    // Candidates in descending effective-potential order; zero-value nodes
    // are never carved (they cannot lower the integral).
    std::vector<std::int64_t> order;
    order.reserve(std::size_t(n));
    for (std::int64_t i = 0; i < n; ++i)
        if (!res.F[std::size_t(i)] && veff.field[i] > 0.0) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        if (veff.field[a] != veff.field[b]) return veff.field[a] > veff.field[b];
        return a < b;
    });

    auto with_prefix = [&](std::int64_t len) {
        NodeMask m = res.F;
        for (std::int64_t i = 0; i < len; ++i) m[std::size_t(order[std::size_t(i)])] = 1;
        return m;
    };

    // Longest feasible prefix by geometric growth plus bisection; capacity is
    // monotone in the prefix, so bisection is sound.
    std::int64_t lo = 0, hi = -1;
    double capLo = capMandatory;
    std::int64_t probe = std::min<std::int64_t>(std::max<std::int64_t>(16, n / 64),
                                                std::int64_t(order.size()));
    while (probe > lo && !order.empty()) {
        const double c = cap_of(with_prefix(probe));
        if (c <= budget) {
            lo = probe;
            capLo = c;
            if (probe == std::int64_t(order.size())) break;
            probe = std::min<std::int64_t>(probe * 2, std::int64_t(order.size()));
        } else {
            hi = probe;
            break;
        }
    }
    if (hi > 0) {
        while (hi - lo > 1) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            const double c = cap_of(with_prefix(mid));
            if (c <= budget) {
                lo = mid;
                capLo = c;
            } else {
                hi = mid;
            }
        }
    }

    res.F = with_prefix(lo);
    res.capUsed = capLo;
    res.feasible = true;

    NodeMask keep(n, 0);
    for (std::int64_t i = 0; i < n; ++i) keep[std::size_t(i)] = res.F[std::size_t(i)] ? 0 : 1;
    res.integral = detail::weighted_integral(veff.field, keep, detail::window_weights(lat));
    return res;
}

/// Joint minimization over (F, omega): the alternating optimized-phase branch
/// plus every sampled polynomial gauge (and the unit gauge) with its own
/// carving. The incumbent over all branches is returned; ties prefer the
/// smaller capacity, then branch order.
inline CarvingResult joint_min(const Lattice& lat, const CubeWindow& cube, const NodeMask& omegaMask,
                               const VectorField& a, const ScalarField& V,
                               const CarvingOptions& opts) {
    if (opts.rounds < 1) throw Error("joint_min: rounds must be >= 1");
    const std::int64_t n = lat.node_count();
    const double capQ = cap_of_cube(lat, cube, opts.capacity);

    CarvingResult best;
    auto consider = [&](CarvingResult&& cand, const std::string& label) {
        cand.gaugeLabel = label;
        const bool better = cand.integral < best.integral ||
                            (cand.integral == best.integral && cand.feasible &&
                             cand.capUsed < best.capUsed);
        if (better || best.gaugeLabel.empty()) best = std::move(cand);
    };

    const NodeMask allFree(n, 1);

    // Unit gauge: effective potential |a|^2 + V everywhere.
    {
        GaugeCandidate unit = GaugeCandidate::unit();
        auto veff = effective_potential(unit, a, V, allFree);
        auto r = min_over_F(veff, lat, cube, omegaMask, opts.gamma, capQ, opts.capacity);
        r.omega = unit;
        consider(std::move(r), "unit");
    }

    // Alternating optimized-phase branch, seeded from the mandatory set.
    if (opts.optimizedBranch) {
        NodeMask F(n, 0);
        for (std::int64_t i = 0; i < n; ++i)
            if (!omegaMask[std::size_t(i)]) F[std::size_t(i)] = 1;
        for (int round = 0; round < opts.rounds; ++round) {
            GaugeCandidate omega = optimize_gauge(lat, a, F, opts.gauge);
            NodeMask freeMask(n, 0);
            for (std::int64_t i = 0; i < n; ++i) freeMask[std::size_t(i)] = F[std::size_t(i)] ? 0 : 1;
            auto veff = effective_potential(omega, a, V, freeMask);
            auto r = min_over_F(veff, lat, cube, omegaMask, opts.gamma, capQ, opts.capacity);
            const NodeMask Fnext = r.F;
            r.omega = omega;
            consider(std::move(r), "optimized[" + std::to_string(round) + "]");
            if (Fnext == F) break;  // fixed point
            F = Fnext;
        }
    }

    // Independently sampled polynomial gauges.
    if (opts.gaugeBudget > 0) {
        auto gauges = sample_polynomial_gauges(lat, opts.gaugeBudget, opts.seed);
        for (std::size_t k = 0; k < gauges.size(); ++k) {
            auto veff = effective_potential(gauges[k], a, V, allFree);
            auto r = min_over_F(veff, lat, cube, omegaMask, opts.gamma, capQ, opts.capacity);
            r.omega = gauges[k];
            consider(std::move(r), "poly[" + std::to_string(k) + "]");
        }
    }

    return best;
}

}  // namespace capbound
