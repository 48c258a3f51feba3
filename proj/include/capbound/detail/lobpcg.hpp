#pragma once

// Matrix-free locally optimal block preconditioned CG (no preconditioner)
// for the smallest eigenpairs of a Hermitian non-negative operator, with
// optional locked (deflated) vectors. Small dense Rayleigh-Ritz problems go
// through Eigen.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace capbound::detail {

using Cx = std::complex<double>;
using CVec = std::vector<Cx>;

inline Cx cdot(const CVec& a, const CVec& b) {  // conj(a) . b
    Cx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double cnorm(const CVec& a) { return std::sqrt(std::abs(cdot(a, a))); }

inline void caxpy(const Cx& alpha, const CVec& x, CVec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void cscale(const Cx& alpha, CVec& x) {
    for (auto& v : x) v *= alpha;
}

/// Two-pass modified Gram-Schmidt of `v` against the columns of `basis`;
/// returns false when v is numerically in their span.
inline bool orthonormalize_against(CVec& v, const std::vector<CVec>& basis) {
    const double n0 = cnorm(v);
    if (n0 == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) caxpy(-cdot(b, v), b, v);
    const double n1 = cnorm(v);
    if (n1 < 1e-10 * n0 || n1 == 0.0) return false;
    cscale(1.0 / n1, v);
    return true;
}

struct LobpcgOptions {
    double tol = 1e-7;          // relative residual
    std::int64_t maxIter = 5000;
    std::uint64_t seed = 7;
    int block = 2;
    double opScale = 1.0;       // magnitude estimate of the operator norm
    const std::vector<std::uint8_t>* support = nullptr;  // restrict iterates to these entries
};

struct LobpcgResult {
    std::vector<double> values;
    std::vector<CVec> vectors;
    std::vector<double> residuals;  // ||Hx - theta x|| per column
    int iterations = 0;
    bool converged = false;
};

/// Iterate until the `want` lowest Ritz pairs (beyond the locked ones) have
/// relative residual below tol. `apply(in, out)` is the Hermitian operator.
template <typename Apply>
LobpcgResult lobpcg_lowest(Apply&& apply, std::int64_t n, int want,
                           const std::vector<CVec>& locked, const LobpcgOptions& opts) {
    const int b = std::max(want, opts.block);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Eigenvalues below 1e-6 of the operator scale count as zero modes and
    // get an absolute threshold; a relative one would be unreachable there.
    auto threshold = [&](double theta) {
        return opts.tol * std::max(std::abs(theta), 1e-6 * opts.opScale);
    };

    std::vector<CVec> X, HX, P;
    for (int j = 0; j < b; ++j) {
        CVec v(n);
        for (std::int64_t i = 0; i < n; ++i) {
            const Cx z(normal(rng), normal(rng));
            // The operator preserves the active subspace, so zeroing the
            // start outside it keeps the whole iteration there.
            v[std::size_t(i)] = (opts.support && !(*opts.support)[std::size_t(i)]) ? Cx(0.0) : z;
        }
        std::vector<CVec> prior = locked;
        prior.insert(prior.end(), X.begin(), X.end());
        if (!orthonormalize_against(v, prior)) continue;
        X.push_back(std::move(v));
    }
    HX.resize(X.size());
    for (std::size_t j = 0; j < X.size(); ++j) {
        HX[j].assign(n, 0.0);
        apply(X[j], HX[j]);
    }

    LobpcgResult out;
    for (std::int64_t it = 0; it < opts.maxIter; ++it) {
        out.iterations = int(it + 1);

        // Ritz values and residuals of the current block.
        std::vector<double> theta(X.size());
        std::vector<CVec> R(X.size());
        std::vector<double> rnorm(X.size());
        bool done = true;
        for (std::size_t j = 0; j < X.size(); ++j) {
            theta[j] = std::real(cdot(X[j], HX[j]));
            R[j] = HX[j];
            caxpy(-theta[j], X[j], R[j]);
            rnorm[j] = cnorm(R[j]);
            if (int(j) < want && rnorm[j] > threshold(theta[j])) done = false;
        }
        if (done) {
            out.converged = true;
            out.values = theta;
            out.vectors = X;
            out.residuals = rnorm;
            return out;
        }

        // Candidate directions: residuals orthogonalized against everything.
        std::vector<CVec> S = X, HS = HX;
        auto push_direction = [&](CVec v) {
            std::vector<CVec> prior = locked;
            prior.insert(prior.end(), S.begin(), S.end());
            if (!orthonormalize_against(v, prior)) return;
            CVec hv(n, 0.0);
            apply(v, hv);
            S.push_back(std::move(v));
            HS.push_back(std::move(hv));
        };
        for (auto& r : R) push_direction(std::move(r));
        for (auto& p : P) push_direction(std::move(p));

        // Rayleigh-Ritz on span(S).
        const int m = int(S.size());
        Eigen::MatrixXcd G(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) {
                const Cx g = cdot(S[std::size_t(i)], HS[std::size_t(j)]);
                G(i, j) = g;
                G(j, i) = std::conj(g);
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
        const auto& Y = es.eigenvectors();

        const int keep = std::min<int>(b, m);
        std::vector<CVec> Xn(std::size_t(keep), CVec(n, 0.0));
        std::vector<CVec> HXn(std::size_t(keep), CVec(n, 0.0));
        for (int c = 0; c < keep; ++c)
            for (int i = 0; i < m; ++i) {
                const Cx y = Y(i, c);
                if (y == 0.0) continue;
                caxpy(y, S[std::size_t(i)], Xn[std::size_t(c)]);
                caxpy(y, HS[std::size_t(i)], HXn[std::size_t(c)]);
            }

        // Conjugate directions: the part of the update outside the old block.
        std::vector<CVec> Pn;
        for (int c = 0; c < keep; ++c) {
            CVec p = Xn[std::size_t(c)];
            for (std::size_t j = 0; j < X.size(); ++j) caxpy(-cdot(X[j], Xn[std::size_t(c)]), X[j], p);
            const double pn = cnorm(p);
            if (pn > 1e-12) {
                cscale(1.0 / pn, p);
                Pn.push_back(std::move(p));
            }
            if (int(Pn.size()) >= keep) break;
        }

        X = std::move(Xn);
        HX = std::move(HXn);
        P = std::move(Pn);
    }

    // Not converged: report the best Rayleigh quotients found.
    out.values.resize(X.size());
    out.residuals.resize(X.size());
    for (std::size_t j = 0; j < X.size(); ++j) {
        out.values[j] = std::real(cdot(X[j], HX[j]));
        CVec r = HX[j];
        caxpy(-out.values[j], X[j], r);
        out.residuals[j] = cnorm(r);
    }
    out.vectors = X;
    return out;
}

}  // namespace capbound::detail
