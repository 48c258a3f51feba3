#pragma once

// Wiener capacity of compact node sets through discrete equilibrium
// potentials. In dimension 3 the whole-space capacity is approximated by a
// truncation box of edge T*d with Richardson extrapolation in 1/T; in
// dimension 2 (and 1) the capacity is taken relative to the concentric
// cube Q_{2d}, matching the capacity convention used by all the criteria.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "capbound/detail/cg.hpp"
#include "capbound/grid.hpp"

namespace capbound {

struct CompactSet {
    Lattice lattice;      // lattice the membership mask refers to
    NodeMask member;
    CubeWindow boundingCube;

    bool empty() const {
        for (auto v : member)
            if (v) return false;
        return true;
    }
};

struct EquilibriumPotential {
    ScalarField field;    // on the condenser lattice, 1 on F, 0 on the outer conductor
    double capValue = 0.0;
    double residual = 0.0;
};

struct CapacityOptions {
    double tol = 1e-8;          // relative CG residual
    double truncationT = 8.0;   // n=3 outer box edge = T*d; extrapolation pairs T/2 with T
    bool extrapolate = true;    // n=3 only
};

namespace detail {

// Node roles inside a condenser solve.
enum : std::uint8_t { kFree = 0, kOnF = 1, kOnOuter = 2 };

}  // namespace detail

/// Discrete equilibrium potential: harmonic between F (value 1) and the
/// outer conductor (value 0). Solved by conjugate gradient on the interior
/// Laplacian; capValue is the Dirichlet energy of the resulting field.
inline EquilibriumPotential equilibrium_potential(const Lattice& lat, const NodeMask& onF,
                                                  const NodeMask& onOuter,
                                                  const CapacityOptions& opts = {}) {
    const std::int64_t n = lat.node_count();
    std::vector<std::uint8_t> role(n, detail::kFree);
    std::int64_t nF = 0, nFree = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (onF[std::size_t(i)]) {
            role[std::size_t(i)] = detail::kOnF;
            ++nF;
        } else if (onOuter[std::size_t(i)]) {
            role[std::size_t(i)] = detail::kOnOuter;
        } else {
            ++nFree;
        }
    }
    if (nF == 0) throw Error("equilibrium_potential: empty F");

    EquilibriumPotential out;
    out.field = ScalarField(lat);
    for (std::int64_t i = 0; i < n; ++i)
        if (role[std::size_t(i)] == detail::kOnF) out.field[i] = 1.0;

    if (nFree > 0) {
        // Laplace on free nodes; fixed neighbours enter through the rhs.
        std::vector<double> b(n, 0.0), x(n, 0.0);
        std::array<std::int64_t, 6> off{};
        int ndirs = 0;
        for (int ax = 0; ax < lat.dim; ++ax) {
            off[ndirs++] = lat.stride(ax);
            off[ndirs++] = -lat.stride(ax);
        }
        for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
            if (role[std::size_t(f)] != detail::kFree) return;
            for (int ax = 0; ax < lat.dim; ++ax) {
                for (int s = -1; s <= 1; s += 2) {
                    Idx3 nb = idx;
                    nb[ax] += s;
                    if (!lat.in_bounds(nb)) continue;
                    if (role[std::size_t(lat.flat(nb))] == detail::kOnF) b[std::size_t(f)] += 1.0;
                }
            }
        });

        const int dim = lat.dim;
        const Idx3 shape = lat.shape;
        auto apply = [&](const std::vector<double>& in, std::vector<double>& outv) {
            Idx3 idx;
            for (idx[2] = 0; idx[2] < shape[2]; ++idx[2])
                for (idx[1] = 0; idx[1] < shape[1]; ++idx[1])
                    for (idx[0] = 0; idx[0] < shape[0]; ++idx[0]) {
                        const std::int64_t f = lat.flat(idx);
                        if (role[std::size_t(f)] != detail::kFree) {
                            outv[std::size_t(f)] = 0.0;
                            continue;
                        }
                        double acc = 0.0;
                        int deg = 0;
                        for (int ax = 0; ax < dim; ++ax) {
                            const std::int64_t s = lat.stride(ax);
                            if (idx[ax] + 1 < shape[ax]) {
                                ++deg;
                                if (role[std::size_t(f + s)] == detail::kFree) acc += in[std::size_t(f + s)];
                            }
                            if (idx[ax] - 1 >= 0) {
                                ++deg;
                                if (role[std::size_t(f - s)] == detail::kFree) acc += in[std::size_t(f - s)];
                            }
                        }
                        outv[std::size_t(f)] = deg * in[std::size_t(f)] - acc;
                    }
        };

        const auto cg = detail::conjugate_gradient(apply, b, x, opts.tol, 10 * nFree + 50);
        out.residual = cg.residual;
        if (!cg.converged)
            throw Error("equilibrium_potential: CG did not converge, residual " +
                        std::to_string(cg.residual));
        for (std::int64_t i = 0; i < n; ++i)
            if (role[std::size_t(i)] == detail::kFree) out.field[i] = x[std::size_t(i)];
    }

    out.capValue = dirichlet_energy(out.field);
    return out;
}

namespace detail {

/// Condenser geometry for a context cube: the standalone solve lattice, the
/// parent index of its first node and the outer-conductor mask (box skin).
struct Condenser {
    Lattice lat;
    Idx3 parentLo{0, 0, 0};
    NodeMask outer;
};

inline Condenser make_condenser(const Lattice& parent, const CubeWindow& context,
                                double boxMultiplier) {
    const int span = context.nodeRange.hi[0] - context.nodeRange.lo[0];
    const int spanOut = std::max(span + 2, int(std::llround(boxMultiplier * span)));
    const int pad = (spanOut - span) / 2;  // odd gaps lean one node low

    Condenser c;
    Idx3 shape{1, 1, 1};
    for (int ax = 0; ax < parent.dim; ++ax) {
        c.parentLo[ax] = context.nodeRange.lo[ax] - pad;
        shape[ax] = spanOut + 1;
    }
    Vec3 origin = parent.origin;
    for (int ax = 0; ax < parent.dim; ++ax) origin[ax] += c.parentLo[ax] * parent.h;
    c.lat = Lattice(parent.dim, shape, parent.h, origin);

    c.outer.assign(c.lat.node_count(), 0);
    for_each_node(c.lat, [&](const Idx3& idx, std::int64_t f) {
        for (int ax = 0; ax < c.lat.dim; ++ax)
            if (idx[ax] == 0 || idx[ax] == c.lat.shape[ax] - 1) {
                c.outer[std::size_t(f)] = 1;
                return;
            }
    });
    return c;
}

/// Transfer a parent-lattice membership mask into condenser coordinates.
inline NodeMask transfer_mask(const NodeMask& member, const Lattice& parent, const Condenser& c) {
    NodeMask out(c.lat.node_count(), 0);
    for_each_node(c.lat, [&](const Idx3& idx, std::int64_t f) {
        Idx3 p = idx;
        for (int ax = 0; ax < parent.dim; ++ax) p[ax] += c.parentLo[ax];
        if (!parent.in_bounds(p)) return;
        if (member[std::size_t(parent.flat(p))]) out[std::size_t(f)] = 1;
    });
    return out;
}

inline double condenser_cap(const NodeMask& member, const Lattice& parent,
                            const CubeWindow& context, double boxMultiplier,
                            const CapacityOptions& opts) {
    Condenser c = make_condenser(parent, context, boxMultiplier);
    NodeMask onF = transfer_mask(member, parent, c);
    // The outer conductor wins where the two overlap (degenerate geometry).
    bool any = false;
    for (std::size_t i = 0; i < onF.size(); ++i) {
        if (c.outer[i]) onF[i] = 0;
        any = any || onF[i];
    }
    if (!any) return 0.0;
    return equilibrium_potential(c.lat, onF, c.outer, opts).capValue;
}

}  // namespace detail

/// Wiener capacity of F in the convention of its dimension: n=3 truncation
/// box of edge T*d extrapolated toward T -> infinity; n=2 (and the 1-d fiber
/// case) relative to the concentric open cube Q_{2d}.
inline double cap(const CompactSet& F, const CubeWindow& context, const CapacityOptions& opts = {}) {
    if (F.empty()) return 0.0;
    if (F.lattice.dim == 3) {
        const double T = opts.truncationT;
        if (!opts.extrapolate)
            return detail::condenser_cap(F.member, F.lattice, context, T, opts);
        // Truncation error is removed on the reciprocal: for a spherical
        // condenser 1/cap is exactly linear in the reciprocal outer radius,
        // so 1/cap(T) = 1/cap(inf) - alpha/T fits the box truncation too.
        const double capT = detail::condenser_cap(F.member, F.lattice, context, T, opts);
        const double capHalf = detail::condenser_cap(F.member, F.lattice, context, 0.5 * T, opts);
        if (capT <= 0.0 || capHalf <= 0.0) return std::max(capT, 0.0);
        const double inv = 2.0 / capT - 1.0 / capHalf;
        if (inv <= 0.0) return capT;  // degenerate fit; fall back to the largest box
        return 1.0 / inv;
    }
    return detail::condenser_cap(F.member, F.lattice, context, 2.0, opts);
}

/// Capacity of the full cube Q_d itself, with the same convention as cap().
inline double cap_of_cube(const Lattice& lat, const CubeWindow& context,
                          const CapacityOptions& opts = {}) {
    CompactSet q;
    q.lattice = lat;
    q.boundingCube = context;
    q.member.assign(lat.node_count(), 0);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
        if (context.nodeRange.contains(idx)) q.member[std::size_t(f)] = 1;
    });
    return cap(q, context, opts);
}

/// Negligibility test cap(F) <= gamma * cap(Q_d), both sides with the same
/// outer conductor so the discretization bias cancels to first order.
inline bool is_negligible(const CompactSet& F, const CubeWindow& Q, double gamma,
                          const CapacityOptions& opts = {}) {
    return cap(F, Q, opts) <= gamma * cap_of_cube(F.lattice, Q, opts);
}

}  // namespace capbound
