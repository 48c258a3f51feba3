#pragma once

// Ground-truth spectral quantities for H_{a,V}: the bottom of the Dirichlet
// spectrum, Neumann cube bottoms, the counting function N(lambda) and the
// Persson limit over exteriors of balls.
//
// The lattice form uses Peierls phases exp(i h a_e) on edges, so a discrete
// gauge transformation a -> a + grad(chi) (forward differences of chi) is an
// exact unitary conjugation and gauge invariance holds to solver tolerance.
// Nodes outside Omega are frozen at zero; boundary-crossing edges stay in
// the form with the frozen value. Axes may be declared periodic, in which
// case the wrap edge value lives at the last node index of that axis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "capbound/detail/lobpcg.hpp"
#include "capbound/grid.hpp"

namespace capbound {

struct MagneticOperator {
    Lattice lattice;
    NodeMask active;              // true where the node is an unknown (Omega)
    VectorField a;                // edge values; Peierls phase = exp(i h a_e)
    ScalarField V;
    std::array<bool, 3> periodic{false, false, false};

    static MagneticOperator make(const DomainMask& omega, const VectorField& a,
                                 const ScalarField& V,
                                 std::array<bool, 3> periodic = {false, false, false}) {
        MagneticOperator op;
        op.lattice = omega.lattice;
        op.active = omega.inside;
        op.a = a;
        op.V = V;
        op.periodic = periodic;
        return op;
    }
};

struct SpectralResult {
    double lambda = 0.0;
    std::vector<Complex> eigvec;  // full-lattice layout, zeros at frozen nodes
    double residual = 0.0;
    int iterations = 0;
};

struct EigenOptions {
    double tol = 1e-7;
    std::int64_t maxIter = 20000;
    std::uint64_t seed = 7;
    int block = 2;
};

namespace detail {

/// Precomputed stencil data for fast Hermitian applies.
struct CompiledOperator {
    Lattice lat;
    NodeMask active;
    std::vector<double> diag;                 // degree/h^2 + V
    std::array<std::vector<Cx>, 3> hop;       // exp(i h a_e)/h^2 on usable edges
    std::array<std::vector<std::uint8_t>, 3> edgeOk;  // both endpoints active
    std::array<bool, 3> periodic{};
    double opScale = 1.0;

    std::int64_t activeCount() const {
        std::int64_t c = 0;
        for (auto v : active) c += v;
        return c;
    }

    void apply(const CVec& in, CVec& out) const {
        const std::int64_t n = lat.node_count();
        for (std::int64_t i = 0; i < n; ++i)
            out[std::size_t(i)] = active[std::size_t(i)] ? diag[std::size_t(i)] * in[std::size_t(i)] : Cx(0.0);
        for (int ax = 0; ax < lat.dim; ++ax) {
            const std::int64_t s = lat.stride(ax);
            const std::int64_t wrap = s * std::int64_t(lat.shape[ax] - 1);
            Idx3 idx;
            for (idx[2] = 0; idx[2] < lat.shape[2]; ++idx[2])
                for (idx[1] = 0; idx[1] < lat.shape[1]; ++idx[1])
                    for (idx[0] = 0; idx[0] < lat.shape[0]; ++idx[0]) {
                        const std::int64_t f = lat.flat(idx);
                        if (!edgeOk[ax][std::size_t(f)]) continue;
                        const bool isWrap = idx[ax] == lat.shape[ax] - 1;
                        const std::int64_t g = isWrap ? f - wrap : f + s;
                        const Cx ph = hop[ax][std::size_t(f)];
                        out[std::size_t(f)] -= ph * in[std::size_t(g)];
                        out[std::size_t(g)] -= std::conj(ph) * in[std::size_t(f)];
                    }
        }
    }
};

inline CompiledOperator compile_operator(const MagneticOperator& op) {
    const Lattice& lat = op.lattice;
    const std::int64_t n = lat.node_count();
    CompiledOperator c;
    c.lat = lat;
    c.active = op.active;
    c.periodic = op.periodic;
    c.diag.assign(n, 0.0);
    const double invH2 = 1.0 / (lat.h * lat.h);

    std::vector<int> degree(n, 0);
    for (int ax = 0; ax < lat.dim; ++ax) {
        c.hop[ax].assign(n, Cx(0.0));
        c.edgeOk[ax].assign(n, 0);
    }

    // Enumerate edges including the periodic wrap edge per axis.
    for (int ax = 0; ax < lat.dim; ++ax) {
        const std::int64_t s = lat.stride(ax);
        const std::int64_t wrap = s * std::int64_t(lat.shape[ax] - 1);
        Idx3 idx;
        for (idx[2] = 0; idx[2] < lat.shape[2]; ++idx[2])
            for (idx[1] = 0; idx[1] < lat.shape[1]; ++idx[1])
                for (idx[0] = 0; idx[0] < lat.shape[0]; ++idx[0]) {
                    const bool isWrap = idx[ax] == lat.shape[ax] - 1;
                    if (isWrap && !op.periodic[ax]) continue;
                    const std::int64_t f = lat.flat(idx);
                    const std::int64_t g = isWrap ? f - wrap : f + s;
                    const bool fa = op.active[std::size_t(f)] != 0;
                    const bool ga = op.active[std::size_t(g)] != 0;
                    if (fa) ++degree[std::size_t(f)];
                    if (ga) ++degree[std::size_t(g)];
                    if (fa && ga) {
                        const double theta = lat.h * op.a.comp[ax][std::size_t(f)];
                        c.hop[ax][std::size_t(f)] = std::polar(invH2, theta);
                        c.edgeOk[ax][std::size_t(f)] = 1;
                    }
                }
    }

    double maxDiag = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (!op.active[std::size_t(i)]) continue;
        c.diag[std::size_t(i)] = degree[std::size_t(i)] * invH2 + op.V[i];
        maxDiag = std::max(maxDiag, c.diag[std::size_t(i)]);
    }
    c.opScale = 2.0 * maxDiag + 1e-300;
    return c;
}

}  // namespace detail

/// Smallest eigenvalue of the Hermitian form by LOBPCG with a seeded random
/// complex start. Throws on nonconvergence, reporting the best Rayleigh
/// quotient and residual.
inline SpectralResult bottom(const MagneticOperator& op, const EigenOptions& opts = {}) {
    const auto c = detail::compile_operator(op);
    if (c.activeCount() < 1) throw Error("bottom: domain has no interior node");

    detail::LobpcgOptions lo;
    lo.tol = opts.tol;
    lo.maxIter = opts.maxIter;
    lo.seed = opts.seed;
    lo.block = opts.block;
    lo.opScale = c.opScale;
    lo.support = &c.active;

    auto applyFn = [&](const detail::CVec& in, detail::CVec& out) { c.apply(in, out); };
    const auto r = detail::lobpcg_lowest(applyFn, op.lattice.node_count(), 1, {}, lo);
    if (!r.converged)
        throw Error("bottom: eigensolver did not converge; best Rayleigh quotient " +
                    std::to_string(r.values.empty() ? 0.0 : r.values[0]) + ", residual " +
                    std::to_string(r.residuals.empty() ? 0.0 : r.residuals[0]));

    SpectralResult out;
    out.lambda = r.values[0];
    out.eigvec = r.vectors[0];
    out.residual = r.residuals[0];
    out.iterations = r.iterations;
    return out;
}

/// Bottom of the Neumann spectrum on a cube window: natural boundary on the
/// window faces, Dirichlet frozen on the window part outside Omega.
inline double neumann_bottom(const CubeWindow& Q, const MagneticOperator& op,
                             const EigenOptions& opts = {}) {
    const IndexBox& box = Q.nodeRange;
    MagneticOperator sub;
    sub.lattice = window_lattice(op.lattice, box);
    sub.active = restrict_mask(op.active, op.lattice, box);
    VectorField aw = restrict_field(op.a, box);
    ScalarField vw = restrict_field(op.V, box);
    sub.a = aw;
    sub.V = vw;
    bool any = false;
    for (auto v : sub.active) any = any || v;
    if (!any) throw Error("neumann_bottom: cube does not meet Omega");
    return bottom(sub, opts).lambda;
}

/// Number of eigenvalues strictly below lambda: dense Hermitian solve when
/// the active set is small, blocked LOBPCG with deflation otherwise. Throws
/// when an eigenvalue sits within the resolving accuracy of lambda.
inline int counting(double lambda, const MagneticOperator& op, const EigenOptions& opts = {},
                    std::int64_t denseLimit = 4096) {
    const auto c = detail::compile_operator(op);
    std::vector<std::int64_t> nodes;
    const std::int64_t n = op.lattice.node_count();
    for (std::int64_t i = 0; i < n; ++i)
        if (op.active[std::size_t(i)]) nodes.push_back(i);
    if (nodes.empty()) return 0;
    if (lambda <= 0.0) return 0;  // the form is non-negative

    const double gapTol = 1e-6 * c.opScale * opts.tol / 1e-7;

    if (std::int64_t(nodes.size()) <= denseLimit) {
        // Assemble the active-to-active block densely and solve outright.
        const std::int64_t m = std::int64_t(nodes.size());
        std::vector<std::int64_t> where(n, -1);
        for (std::int64_t k = 0; k < m; ++k) where[std::size_t(nodes[std::size_t(k)])] = k;
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m, m);
        for (std::int64_t k = 0; k < m; ++k)
            H(k, k) = c.diag[std::size_t(nodes[std::size_t(k)])];
        for (int ax = 0; ax < op.lattice.dim; ++ax) {
            const std::int64_t s = op.lattice.stride(ax);
            const std::int64_t wrap = s * std::int64_t(op.lattice.shape[ax] - 1);
            for (std::int64_t f = 0; f < n; ++f) {
                if (!c.edgeOk[ax][std::size_t(f)]) continue;
                const Idx3 idx = op.lattice.unflat(f);
                const std::int64_t g = idx[ax] == op.lattice.shape[ax] - 1 ? f - wrap : f + s;
                const std::int64_t i = where[std::size_t(f)], j = where[std::size_t(g)];
                H(i, j) -= c.hop[ax][std::size_t(f)];
                H(j, i) -= std::conj(c.hop[ax][std::size_t(f)]);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        int count = 0;
        for (std::int64_t k = 0; k < m; ++k) {
            const double ev = es.eigenvalues()(k);
            if (std::abs(ev - lambda) <= gapTol)
                throw Error("counting: eigenvalue " + std::to_string(ev) +
                            " within resolution of lambda = " + std::to_string(lambda));
            if (ev < lambda) ++count;
        }
        return count;
    }

    // Iterative path: converge the lowest pairs one block at a time, locking
    // them, until the newest eigenvalue clears lambda.
    detail::LobpcgOptions lo;
    lo.tol = opts.tol;
    lo.maxIter = opts.maxIter;
    lo.seed = opts.seed;
    lo.block = std::max(4, opts.block);
    lo.opScale = c.opScale;
    lo.support = &c.active;
    auto applyFn = [&](const detail::CVec& in, detail::CVec& out) { c.apply(in, out); };

    std::vector<detail::CVec> locked;
    std::vector<double> found;
    const int maxEigs = 512;
    while (int(found.size()) < maxEigs) {
        lo.seed += 13;
        const auto r = detail::lobpcg_lowest(applyFn, n, 1, locked, lo);
        if (!r.converged)
            throw Error("counting: eigensolver stalled after " + std::to_string(found.size()) +
                        " eigenvalues");
        const double ev = r.values[0];
        if (std::abs(ev - lambda) <= gapTol)
            throw Error("counting: eigenvalue " + std::to_string(ev) +
                        " within resolution of lambda = " + std::to_string(lambda));
        if (ev >= lambda) return int(found.size());
        found.push_back(ev);
        locked.push_back(r.vectors[0]);
    }
    throw Error("counting: more than " + std::to_string(maxEigs) + " eigenvalues below lambda");
}

struct PerssonResult {
    std::vector<double> radii;
    std::vector<double> values;   // +inf when the exterior region is empty
    double lambdaInf = 0.0;
    bool plateaued = false;
};

/// Bottom of the spectrum on Omega minus closed balls of growing radius;
/// the sequence must be non-decreasing and its last value estimates the
/// bottom of the essential spectrum.
inline PerssonResult persson_limit(const MagneticOperator& op, const std::vector<double>& Rs,
                                   const EigenOptions& opts = {}) {
    PerssonResult out;
    for (const double R : Rs) {
        MagneticOperator cut = op;
        std::int64_t left = 0;
        for_each_node(op.lattice, [&](const Idx3& idx, std::int64_t f) {
            const Vec3 p = op.lattice.coord(idx);
            double r2 = 0.0;
            for (int ax = 0; ax < op.lattice.dim; ++ax) r2 += p[ax] * p[ax];
            if (r2 <= R * R) cut.active[std::size_t(f)] = 0;
            left += cut.active[std::size_t(f)];
        });
        out.radii.push_back(R);
        if (left == 0) {
            out.values.push_back(kInf);  // empty region: purely discrete regime
            continue;
        }
        out.values.push_back(bottom(cut, opts).lambda);
    }
    for (std::size_t k = 1; k < out.values.size(); ++k) {
        if (out.values[k] < out.values[k - 1] * (1.0 - 1e-9) - 1e-12)
            throw Error("persson_limit: computed sequence decreased at R = " +
                        std::to_string(out.radii[k]));
    }
    out.lambdaInf = out.values.empty() ? kInf : out.values.back();
    const std::size_t m = out.values.size();
    if (m >= 2 && std::isfinite(out.values[m - 1]) && std::isfinite(out.values[m - 2])) {
        const double rel = std::abs(out.values[m - 1] - out.values[m - 2]) /
                           std::max(std::abs(out.values[m - 1]), 1e-300);
        out.plateaued = rel <= 0.01;
    }
    return out;
}

}  // namespace capbound
