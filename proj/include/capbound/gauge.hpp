#pragma once

// Unit-modulus test gauges and the effective potential |grad(omega)/(i omega) + a|^2 + V.
//
// Two families are provided, mirroring the two variants of the variational
// criteria: optimized smooth phases (a continuous Hodge part plus integer
// winding forms around the holes of F, n=2) and generic complex polynomial
// gauges P/|P| sampled at random. Everything here works on the local lattice
// of one cube window.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <queue>
#include <random>
#include <vector>

#include "capbound/detail/cg.hpp"
#include "capbound/grid.hpp"

namespace capbound {

/// Polynomial in x^1..x^n with complex coefficients, monomial form in the
/// affine frame u = (x - center)/scale. Sampling in cube-centered normalized
/// coordinates keeps the coefficients O(1) on every window, so genericity
/// resampling of the constant term works at any cube position.
struct ComplexPolynomial {
    struct Term {
        Idx3 powers{0, 0, 0};
        Complex coeff;
    };
    std::vector<Term> terms;
    Vec3 center{0.0, 0.0, 0.0};
    double scale = 1.0;

    Complex eval(const Vec3& x) const {
        Complex acc = 0.0;
        for (const auto& t : terms) {
            double m = 1.0;
            for (int ax = 0; ax < 3; ++ax)
                for (int p = 0; p < t.powers[ax]; ++p) m *= (x[ax] - center[ax]) / scale;
            acc += t.coeff * m;
        }
        return acc;
    }

    std::array<Complex, 3> grad(const Vec3& x) const {
        std::array<Complex, 3> g{Complex(0.0), Complex(0.0), Complex(0.0)};
        for (const auto& t : terms)
            for (int ax = 0; ax < 3; ++ax) {
                if (t.powers[ax] == 0) continue;
                double m = double(t.powers[ax]);
                for (int bx = 0; bx < 3; ++bx) {
                    const int p = t.powers[bx] - (bx == ax ? 1 : 0);
                    for (int q = 0; q < p; ++q) m *= (x[bx] - center[bx]) / scale;
                }
                g[ax] += t.coeff * m / scale;
            }
        return g;
    }

    static ComplexPolynomial one() {
        ComplexPolynomial p;
        p.terms.push_back({{0, 0, 0}, Complex(1.0)});
        return p;
    }
};

struct GaugeCandidate {
    enum class Kind { OptimizedPhase, Polynomial };
    Kind kind = Kind::Polynomial;

    // Optimized kind: total phase gradient (continuous part + winding forms)
    // on the window lattice, and the chosen winding per hole of F.
    VectorField phaseGradient;
    std::vector<int> winding;
    std::vector<double> holeCirculation;  // circulation of a around each hole
    double energy = 0.0;                  // integral of (dphi + a)^2 over the free region

    // Polynomial kind: P and the cells where its zero set was located.
    ComplexPolynomial poly;
    std::vector<std::int64_t> zeroCells;  // flat lower-corner node indices

    static GaugeCandidate unit() {
        GaugeCandidate g;
        g.kind = Kind::Polynomial;
        g.poly = ComplexPolynomial::one();
        return g;
    }
};

struct EffectivePotential {
    ScalarField field;   // +inf at sentinel nodes
    NodeMask sentinel;   // gauge singular or undefined there; must be carved
};

struct GaugeOptions {
    double tol = 1e-8;
    int maxHoles = 64;
};

namespace detail {

/// Face-connected component labels over a node mask; -1 outside the mask.
inline std::vector<int> label_components(const Lattice& lat, const NodeMask& mask, int* count = nullptr) {
    const std::int64_t n = lat.node_count();
    std::vector<int> label(n, -1);
    int next = 0;
    std::vector<std::int64_t> stack;
    for (std::int64_t seed = 0; seed < n; ++seed) {
        if (!mask[std::size_t(seed)] || label[std::size_t(seed)] >= 0) continue;
        label[std::size_t(seed)] = next;
        stack.assign(1, seed);
        while (!stack.empty()) {
            const std::int64_t f = stack.back();
            stack.pop_back();
            const Idx3 idx = lat.unflat(f);
            for (int ax = 0; ax < lat.dim; ++ax)
                for (int s = -1; s <= 1; s += 2) {
                    Idx3 nb = idx;
                    nb[ax] += s;
                    if (!lat.in_bounds(nb)) continue;
                    const std::int64_t g = lat.flat(nb);
                    if (mask[std::size_t(g)] && label[std::size_t(g)] < 0) {
                        label[std::size_t(g)] = next;
                        stack.push_back(g);
                    }
                }
        }
        ++next;
    }
    if (count) *count = next;
    return label;
}

/// Solve the free part of the gauge: minimize sum over interior edges of
/// (dphi + a)^2. Graph Laplacian normal equations, CG from zero.
inline std::vector<double> solve_phase(const Lattice& lat, const VectorField& a,
                                       const NodeMask& freeMask, double tol) {
    const std::int64_t n = lat.node_count();
    std::vector<double> b(n, 0.0), phi(n, 0.0);
    const double invH = 1.0 / lat.h;
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t hi) {
        if (!freeMask[std::size_t(lo)] || !freeMask[std::size_t(hi)]) return;
        const double v = a.comp[ax][std::size_t(lo)] * invH;
        b[std::size_t(lo)] += v;   // outgoing edge
        b[std::size_t(hi)] -= v;   // incoming edge
    });

    const double invH2 = invH * invH;
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for_each_edge(lat, [&](int, std::int64_t lo, std::int64_t hi) {
            if (!freeMask[std::size_t(lo)] || !freeMask[std::size_t(hi)]) return;
            const double d = (in[std::size_t(lo)] - in[std::size_t(hi)]) * invH2;
            out[std::size_t(lo)] += d;
            out[std::size_t(hi)] -= d;
        });
    };

    const auto cg = conjugate_gradient(apply, b, phi, tol, 10 * n + 50);
    if (!cg.converged)
        throw Error("optimize_gauge: CG did not converge, residual " + std::to_string(cg.residual));
    return phi;
}

/// Plaquette circulation of an edge field (n=2): sum of edge values * h
/// counterclockwise around the cell whose lower corner is `lo`.
inline double plaquette_curl(const Lattice& lat, const VectorField& f, std::int64_t lo) {
    const std::int64_t sx = lat.stride(0), sy = lat.stride(1);
    return lat.h * (f.comp[0][std::size_t(lo)] + f.comp[1][std::size_t(lo + sx)] -
                    f.comp[0][std::size_t(lo + sy)] - f.comp[1][std::size_t(lo)]);
}

/// Edge field of the angle differential about `center`, by shortest angular
/// increment; its circulation around the enclosing cell is exactly 2*pi.
inline VectorField angle_form(const Lattice& lat, const Vec3& center) {
    VectorField f(lat);
    const double invH = 1.0 / lat.h;
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t hi) {
        const Vec3 p = lat.coord(lo), q = lat.coord(hi);
        double dt = std::atan2(q[1] - center[1], q[0] - center[0]) -
                    std::atan2(p[1] - center[1], p[0] - center[0]);
        if (dt > kPi) dt -= 2.0 * kPi;
        if (dt <= -kPi) dt += 2.0 * kPi;
        f.comp[ax][std::size_t(lo)] = dt * invH;
    });
    return f;
}

inline int round_winding(double fluxOver2Pi) {
    const double fl = std::floor(fluxOver2Pi);
    const double frac = fluxOver2Pi - fl;
    if (std::abs(frac - 0.5) < 1e-9) {
        // Tie: the two windings give equal energy; prefer the smaller
        // magnitude, then the negative one.
        const int mLow = -int(fl), mHigh = -int(fl) - 1;
        if (std::abs(mLow) != std::abs(mHigh)) return std::abs(mLow) < std::abs(mHigh) ? mLow : mHigh;
        return std::min(mLow, mHigh);
    }
    return -int(std::llround(fluxOver2Pi));
}

}  // namespace detail

/// Integral over the free region of (phase gradient + a)^2, edge quadrature.
inline double gauge_energy(const Lattice& lat, const VectorField& phaseGrad,
                           const VectorField& a, const NodeMask& freeMask) {
    double acc = 0.0;
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t hi) {
        if (!freeMask[std::size_t(lo)] || !freeMask[std::size_t(hi)]) return;
        const double v = phaseGrad.comp[ax][std::size_t(lo)] + a.comp[ax][std::size_t(lo)];
        acc += v * v;
    });
    return acc * std::pow(lat.h, lat.dim);
}

/// Minimize the gauge energy over single-valued phases plus, in n=2, integer
/// winding forms around the holes of F. The continuous part is the discrete
/// Hodge projection; windings are fixed from the circulation of a around
/// each hole and the continuous part is re-solved once afterwards.
inline GaugeCandidate optimize_gauge(const Lattice& lat, const VectorField& a,
                                     const NodeMask& FMask, const GaugeOptions& opts = {}) {
    const std::int64_t n = lat.node_count();
    NodeMask freeMask(n, 0);
    for (std::int64_t i = 0; i < n; ++i) freeMask[std::size_t(i)] = FMask[std::size_t(i)] ? 0 : 1;

    GaugeCandidate out;
    out.kind = GaugeCandidate::Kind::OptimizedPhase;

    VectorField aTotal = a;
    std::vector<VectorField> forms;

    if (lat.dim == 2) {
        // Holes of F: components of the F-mask that avoid the window boundary.
        int nComp = 0;
        const auto label = detail::label_components(lat, FMask, &nComp);
        std::vector<std::uint8_t> touchesBoundary(nComp, 0);
        std::vector<std::int64_t> holeSize(nComp, 0);
        std::vector<Vec3> centroid(nComp, Vec3{0, 0, 0});
        for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
            const int c = label[std::size_t(f)];
            if (c < 0) return;
            for (int ax = 0; ax < 2; ++ax)
                if (idx[ax] == 0 || idx[ax] == lat.shape[ax] - 1) touchesBoundary[c] = 1;
            const Vec3 p = lat.coord(idx);
            centroid[c][0] += p[0];
            centroid[c][1] += p[1];
            ++holeSize[c];
        });

        std::vector<int> holes;
        for (int c = 0; c < nComp; ++c)
            if (!touchesBoundary[c] && holeSize[c] > 0) holes.push_back(c);
        if (int(holes.size()) > opts.maxHoles)
            throw Error("optimize_gauge: more than " + std::to_string(opts.maxHoles) + " holes");

        // Circulation around each hole via the plaquette curls it covers
        // (discrete Stokes; the single-valued part contributes exactly zero).
        std::vector<double> flux(holes.size(), 0.0);
        const std::int64_t sx = lat.stride(0), sy = lat.stride(1);
        for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
            if (idx[0] + 1 >= lat.shape[0] || idx[1] + 1 >= lat.shape[1]) return;
            int owner = -1;
            for (const std::int64_t corner : {f, f + sx, f + sy, f + sx + sy}) {
                const int c = label[std::size_t(corner)];
                if (c < 0) continue;
                for (std::size_t k = 0; k < holes.size(); ++k)
                    if (holes[k] == c && (owner < 0 || int(k) < owner)) owner = int(k);
            }
            if (owner >= 0) flux[std::size_t(owner)] += detail::plaquette_curl(lat, a, f);
        });

        out.holeCirculation = flux;
        out.winding.resize(holes.size(), 0);
        for (std::size_t k = 0; k < holes.size(); ++k) {
            out.winding[k] = detail::round_winding(flux[k] / (2.0 * kPi));
            if (out.winding[k] == 0) continue;
            // Angle form about a cell center near the hole centroid.
            Vec3 c{centroid[holes[k]][0] / double(holeSize[holes[k]]),
                   centroid[holes[k]][1] / double(holeSize[holes[k]]), 0.0};
            Idx3 best{0, 0, 0};
            double bestDist = kInf;
            for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
                if (label[std::size_t(f)] != holes[k]) return;
                const Vec3 p = lat.coord(idx);
                const double dx = p[0] + 0.5 * lat.h - c[0], dy = p[1] + 0.5 * lat.h - c[1];
                const double dist = dx * dx + dy * dy;
                if (dist < bestDist && idx[0] + 1 < lat.shape[0] && idx[1] + 1 < lat.shape[1]) {
                    bestDist = dist;
                    best = idx;
                }
            });
            const Vec3 p0 = lat.coord(best);
            VectorField form = detail::angle_form(lat, {p0[0] + 0.5 * lat.h, p0[1] + 0.5 * lat.h, 0.0});
            const double m = double(out.winding[k]);
            for (int ax = 0; ax < 2; ++ax)
                for (std::int64_t i = 0; i < n; ++i)
                    aTotal.comp[ax][std::size_t(i)] += m * form.comp[ax][std::size_t(i)];
            forms.push_back(std::move(form));
        }
    }

    const auto phi = detail::solve_phase(lat, aTotal, freeMask, opts.tol);

    // Total phase gradient: d(phi) on free edges plus the winding forms.
    out.phaseGradient = VectorField(lat);
    const double invH = 1.0 / lat.h;
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t hi) {
        double v = (phi[std::size_t(hi)] - phi[std::size_t(lo)]) * invH;
        v += aTotal.comp[ax][std::size_t(lo)] - a.comp[ax][std::size_t(lo)];
        out.phaseGradient.comp[ax][std::size_t(lo)] = v;
    });
    out.energy = gauge_energy(lat, out.phaseGradient, a, freeMask);
    return out;
}

/// Effective potential of a gauge candidate on the free region: per-edge
/// (dphi + a)^2 averaged onto nodes plus V. Sentinel nodes (polynomial zero
/// cells, or nodes outside the gauge's domain) carry +inf and must end up
/// inside F for any finite integral.
inline EffectivePotential effective_potential(const GaugeCandidate& omega, const VectorField& a,
                                              const ScalarField& V, const NodeMask& freeMask) {
    const Lattice& lat = a.lattice;
    const std::int64_t n = lat.node_count();

    EffectivePotential out;
    out.field = ScalarField(lat);
    out.sentinel.assign(n, 0);

    for (std::int64_t i = 0; i < n; ++i)
        if (!freeMask[std::size_t(i)]) out.sentinel[std::size_t(i)] = 1;

    if (omega.kind == GaugeCandidate::Kind::Polynomial) {
        for (const std::int64_t cell : omega.zeroCells) {
            const Idx3 idx = lat.unflat(cell);
            Idx3 corner;
            for (int dz = 0; dz <= (lat.dim > 2 ? 1 : 0); ++dz)
                for (int dy = 0; dy <= (lat.dim > 1 ? 1 : 0); ++dy)
                    for (int dx = 0; dx <= 1; ++dx) {
                        corner = {idx[0] + dx, idx[1] + dy, idx[2] + dz};
                        if (lat.in_bounds(corner)) out.sentinel[std::size_t(lat.flat(corner))] = 1;
                    }
        }
    }

    std::vector<double> sum(n, 0.0);
    std::vector<int> cnt(n, 0);
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t hi) {
        if (out.sentinel[std::size_t(lo)] && out.sentinel[std::size_t(hi)]) return;
        double pg;
        if (omega.kind == GaugeCandidate::Kind::OptimizedPhase) {
            if (!freeMask[std::size_t(lo)] || !freeMask[std::size_t(hi)]) return;
            pg = omega.phaseGradient.comp[ax][std::size_t(lo)];
        } else {
            Vec3 mid = lat.coord(lo);
            mid[ax] += 0.5 * lat.h;
            const Complex p = omega.poly.eval(mid);
            if (std::abs(p) == 0.0) return;  // exactly on the zero set; cell is flagged anyway
            pg = std::imag(omega.poly.grad(mid)[ax] / p);
        }
        const double v = pg + a.comp[ax][std::size_t(lo)];
        sum[std::size_t(lo)] += v * v;
        sum[std::size_t(hi)] += v * v;
        ++cnt[std::size_t(lo)];
        ++cnt[std::size_t(hi)];
    });

    for (std::int64_t i = 0; i < n; ++i) {
        if (out.sentinel[std::size_t(i)]) {
            out.field[i] = kInf;
        } else {
            const double mag = cnt[std::size_t(i)] > 0 ? sum[std::size_t(i)] / cnt[std::size_t(i)] : 0.0;
            out.field[i] = mag + V[i];
        }
    }
    return out;
}

/// Zero cells of P by sign-change scan of (Re P, Im P) over cell corners.
inline std::vector<std::int64_t> locate_zero_cells(const Lattice& lat, const ComplexPolynomial& p) {
    std::vector<std::int64_t> cells;
    for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
        for (int ax = 0; ax < lat.dim; ++ax)
            if (idx[ax] + 1 >= lat.shape[ax]) return;
        double reMin = kInf, reMax = -kInf, imMin = kInf, imMax = -kInf;
        Idx3 c;
        for (int dz = 0; dz <= (lat.dim > 2 ? 1 : 0); ++dz)
            for (int dy = 0; dy <= (lat.dim > 1 ? 1 : 0); ++dy)
                for (int dx = 0; dx <= 1; ++dx) {
                    c = {idx[0] + dx, idx[1] + dy, idx[2] + dz};
                    const Complex v = p.eval(lat.coord(c));
                    reMin = std::min(reMin, v.real());
                    reMax = std::max(reMax, v.real());
                    imMin = std::min(imMin, v.imag());
                    imMax = std::max(imMax, v.imag());
                }
        if (reMin <= 0.0 && reMax >= 0.0 && imMin <= 0.0 && imMax >= 0.0) cells.push_back(f);
    });
    return cells;
}

/// Genericity certificate: on every located zero cell the gradients of Re P
/// and Im P stay transversal (angle >= 1e-3 rad) and |grad P| is bounded
/// below relative to the polynomial's scale.
inline bool genericity_certificate(const Lattice& lat, const ComplexPolynomial& p,
                                   const std::vector<std::int64_t>& zeroCells) {
    double scale = 0.0;
    for (const auto& t : p.terms) scale = std::max(scale, std::abs(t.coeff));
    for (const std::int64_t cell : zeroCells) {
        Vec3 mid = lat.coord(cell);
        for (int ax = 0; ax < lat.dim; ++ax) mid[ax] += 0.5 * lat.h;
        const auto g = p.grad(mid);
        double reNorm = 0.0, imNorm = 0.0, cross = 0.0, dotRI = 0.0;
        for (int ax = 0; ax < lat.dim; ++ax) {
            const double gr = g[ax].real(), gi = g[ax].imag();
            reNorm += gr * gr;
            imNorm += gi * gi;
            dotRI += gr * gi;
        }
        cross = reNorm * imNorm - dotRI * dotRI;  // squared area spanned
        if (reNorm * imNorm == 0.0) return false;
        const double sinAngle = std::sqrt(std::max(cross, 0.0) / (reNorm * imNorm));
        if (sinAngle < 1e-3) return false;
        if (std::sqrt(reNorm + imNorm) < 1e-9 * std::max(scale, 1.0)) return false;
    }
    return true;
}

/// Draw `budget` generic polynomial gauges of total degree <= 3 with
/// standard complex normal coefficients; the constant term is resampled
/// until the genericity certificate passes. Deterministic under the seed.
inline std::vector<GaugeCandidate> sample_polynomial_gauges(const Lattice& lat, int budget,
                                                            std::uint64_t seed) {
    if (budget < 1) throw Error("sample_polynomial_gauges: budget must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Idx3> monomials;
    const int dim = lat.dim;
    for (int px = 0; px <= 3; ++px)
        for (int py = 0; py <= (dim > 1 ? 3 : 0); ++py)
            for (int pz = 0; pz <= (dim > 2 ? 3 : 0); ++pz)
                if (px + py + pz <= 3) monomials.push_back({px, py, pz});

    Vec3 center = lat.origin;
    double extent = 0.0;
    for (int ax = 0; ax < dim; ++ax) {
        center[ax] += 0.5 * (lat.shape[ax] - 1) * lat.h;
        extent = std::max(extent, (lat.shape[ax] - 1) * lat.h);
    }

    std::vector<GaugeCandidate> out;
    out.reserve(std::size_t(budget));
    for (int k = 0; k < budget; ++k) {
        ComplexPolynomial p;
        p.center = center;
        p.scale = std::max(extent, 1e-12);
        for (const auto& m : monomials) {
            const double re = normal(rng), im = normal(rng);
            p.terms.push_back({m, Complex(re, im)});
        }
        bool ok = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto cells = locate_zero_cells(lat, p);
            if (genericity_certificate(lat, p, cells)) {
                GaugeCandidate g;
                g.kind = GaugeCandidate::Kind::Polynomial;
                g.poly = p;
                g.zeroCells = std::move(cells);
                out.push_back(std::move(g));
                ok = true;
                break;
            }
            p.terms[0].coeff = Complex(normal(rng), normal(rng));  // resample the constant
        }
        if (!ok) throw Error("sample_polynomial_gauges: genericity unreachable in 100 resamples");
    }
    return out;
}

/// Arg-principle loop sum: phase increments of P around the rectangle of
/// node corners [lo, hi], divided by 2*pi (n=2 winding count).
inline double polynomial_loop_winding(const Lattice& lat, const ComplexPolynomial& p,
                                      const IndexBox& loop) {
    double total = 0.0;
    std::vector<Idx3> path;
    for (int i = loop.lo[0]; i < loop.hi[0]; ++i) path.push_back({i, loop.lo[1], 0});
    for (int j = loop.lo[1]; j < loop.hi[1]; ++j) path.push_back({loop.hi[0], j, 0});
    for (int i = loop.hi[0]; i > loop.lo[0]; --i) path.push_back({i, loop.hi[1], 0});
    for (int j = loop.hi[1]; j > loop.lo[1]; --j) path.push_back({loop.lo[0], j, 0});
    path.push_back({loop.lo[0], loop.lo[1], 0});
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const Complex va = p.eval(lat.coord(path[k]));
        const Complex vb = p.eval(lat.coord(path[k + 1]));
        total += std::arg(vb / va);
    }
    return total / (2.0 * kPi);
}

}  // namespace capbound
