#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace capbound::detail {

struct CgResult {
    int iterations = 0;
    double residual = 0.0;  // relative to ||b||
    bool converged = false;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Plain conjugate gradient for a symmetric positive (semi-)definite
/// matrix-free operator. `apply(in, out)` must be linear; x holds the
/// initial guess on entry and the solution on exit.
template <typename Apply>
CgResult conjugate_gradient(Apply&& apply, const std::vector<double>& b,
                            std::vector<double>& x, double tol_rel, std::int64_t max_iter) {
    const std::size_t n = b.size();
    std::vector<double> r(n), p(n), ap(n);

    apply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    p = r;

    const double bnorm = std::sqrt(dot(b, b));
    const double stop = tol_rel * (bnorm > 0.0 ? bnorm : 1.0);

    double rr = dot(r, r);
    CgResult res;
    res.residual = std::sqrt(rr) / (bnorm > 0.0 ? bnorm : 1.0);
    if (std::sqrt(rr) <= stop) {
        res.converged = true;
        return res;
    }

    for (std::int64_t it = 0; it < max_iter; ++it) {
        apply(p, ap);
        const double pap = dot(p, ap);
        if (pap <= 0.0) break;  // kernel direction or loss of positivity
        const double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        res.iterations = int(it + 1);
        if (std::sqrt(rr_new) <= stop) {
            res.residual = std::sqrt(rr_new) / (bnorm > 0.0 ? bnorm : 1.0);
            res.converged = true;
            return res;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    res.residual = std::sqrt(rr) / (bnorm > 0.0 ? bnorm : 1.0);
    return res;
}

}  // namespace capbound::detail
