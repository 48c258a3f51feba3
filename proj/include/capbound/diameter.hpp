#pragma once

// Capacitary interior diameter D: the largest cube edge d for which some
// swept cube Q_d admits a negligible carving with effective-potential
// integral at most d^(n-2). Also the exterior restrictions D_R, the limit
// D_infty and the positivity scan of the associated kappa.
//
// Cubes are swept at stride d/2 (or within one declared period for
// translation-invariant problems). Most non-qualifying cubes are discarded
// by a sound lower bound on the integral (the carving can remove at most a
// capacity-budget worth of nodes, and the effective potential dominates V),
// so full joint minimizations run only where the answer is in doubt.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "capbound/carving.hpp"
#include "capbound/grid.hpp"

namespace capbound {

struct SweepProblem {
    Lattice lattice;
    NodeMask omega;
    VectorField a;
    ScalarField V;
    IndexBox domainBox;                      // index region the sweep covers
    std::array<int, 3> sweepPeriod{0, 0, 0}; // >0: restrict positions to one period (node units)
};

struct DiameterOptions {
    double gamma = 0.5;
    std::vector<double> dGrid;   // empty: auto dyadic 2h, 4h, ... up to the box
    int refineLevels = 3;        // bisection refinements around the bracket
    double thresholdExponent = std::numeric_limits<double>::quiet_NaN();  // default dim-2
    CarvingOptions carving{};
    int jobs = 1;
};

struct DiameterResult {
    double D = 0.0;                       // +inf sentinel when not bracketed, 0 when nothing qualifies
    bool notBracketed = false;
    bool nothingQualified = false;
    std::optional<CubeWindow> achievingCube;
    CarvingResult witness;
    std::vector<double> dGridTested;
    double strideRule = 0.5;              // stride = strideRule * d

    struct Row {
        double d = 0.0;
        bool qualified = false;
        double bestIntegral = kInf;       // over evaluated cubes at this d
        double threshold = 0.0;
        Idx3 cubeLo{0, 0, 0};
        std::int64_t evaluated = 0;       // full joint minimizations
        std::int64_t pruned = 0;
    };
    std::vector<Row> table;
};

struct PositivityCertificate {
    double d = 0.0;
    double kappa = 0.0;
    CubeWindow worstCube;
    CarvingResult worstWitness;
};

namespace detail {

/// Inclusion-exclusion prefix sums of V restricted to Omega.
struct PrefixSum {
    Idx3 shape{1, 1, 1};
    std::vector<double> s;  // size (nx+1)(ny+1)(nz+1)

    explicit PrefixSum(const Lattice& lat, const ScalarField& V, const NodeMask& omega) {
        shape = lat.shape;
        const int nx = shape[0], ny = shape[1], nz = shape[2];
        s.assign(std::size_t(nx + 1) * (ny + 1) * (nz + 1), 0.0);
        auto S = [&](int i, int j, int k) -> double& {
            return s[(std::size_t(k) * (ny + 1) + j) * (nx + 1) + i];
        };
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const std::int64_t f = lat.flat({i, j, k});
                    const double v = omega[std::size_t(f)] ? V[f] : 0.0;
                    S(i + 1, j + 1, k + 1) = v + S(i, j + 1, k + 1) + S(i + 1, j, k + 1) +
                                             S(i + 1, j + 1, k) - S(i, j, k + 1) - S(i, j + 1, k) -
                                             S(i + 1, j, k) + S(i, j, k);
                }
    }

    double box_sum(const IndexBox& b) const {
        const int ny = shape[1];
        auto S = [&](int i, int j, int k) {
            return s[(std::size_t(k) * (ny + 1) + j) * (shape[0] + 1) + i];
        };
        const int x0 = b.lo[0], y0 = b.lo[1], z0 = b.lo[2];
        const int x1 = b.hi[0] + 1, y1 = b.hi[1] + 1, z1 = b.hi[2] + 1;
        return S(x1, y1, z1) - S(x0, y1, z1) - S(x1, y0, z1) - S(x1, y1, z0) + S(x0, y0, z1) +
               S(x0, y1, z0) + S(x1, y0, z0) - S(x0, y0, z0);
    }
};

/// Largest number of nodes a negligible set can cover, estimated from
/// centered balls (isocapacitary: balls minimize capacity at fixed volume)
/// plus a safety margin. Used only to prune, never to qualify.
inline std::int64_t max_carveable_nodes(const Lattice& lat, double d, double gamma,
                                        const CapacityOptions& capOpts) {
    const int span = int(std::llround(d / lat.h));
    Idx3 shape{span + 1, 1, 1};
    for (int ax = 1; ax < lat.dim; ++ax) shape[ax] = span + 1;
    Lattice cubeLat(lat.dim, shape, lat.h, {0, 0, 0});
    CubeWindow cube = cube_at(cubeLat, {0, 0, 0}, d);
    const double budget = gamma * cap_of_cube(cubeLat, cube, capOpts);

    const Vec3 c = cube.center;
    auto ball_nodes = [&](double r) {
        NodeMask m(cubeLat.node_count(), 0);
        std::int64_t cnt = 0;
        for_each_node(cubeLat, [&](const Idx3& idx, std::int64_t f) {
            const Vec3 p = cubeLat.coord(idx);
            double r2 = 0.0;
            for (int ax = 0; ax < lat.dim; ++ax) r2 += (p[ax] - c[ax]) * (p[ax] - c[ax]);
            if (r2 <= r * r) {
                m[std::size_t(f)] = 1;
                ++cnt;
            }
        });
        return std::pair<NodeMask, std::int64_t>(std::move(m), cnt);
    };

    double lo = 0.0, hi = 0.5 * d;
    std::int64_t best = 0;
    for (int step = 0; step < 12; ++step) {
        const double r = 0.5 * (lo + hi);
        auto [mask, cnt] = ball_nodes(r);
        if (cnt == 0) {
            lo = r;
            continue;
        }
        CompactSet F;
        F.lattice = cubeLat;
        F.member = std::move(mask);
        F.boundingCube = cube;
        if (cap(F, cube, capOpts) <= budget) {
            lo = r;
            best = std::max(best, cnt);
        } else {
            hi = r;
        }
    }
    return best + best / 3 + 16;
}

struct CubeJob {
    Idx3 lo;
    double proxy;  // sum of V over the cube (Omega-masked)
};

inline std::vector<CubeJob> sweep_positions(const SweepProblem& prob, int span,
                                            const PrefixSum& prefix) {
    const IndexBox& box = prob.domainBox;
    std::vector<std::vector<int>> axisPos(3, std::vector<int>{0});
    for (int ax = 0; ax < prob.lattice.dim; ++ax) {
        std::vector<int> pos;
        const int stride = std::max(1, span / 2);
        const int last = box.hi[ax] - span;
        if (last < box.lo[ax]) return {};
        int limit = last;
        if (prob.sweepPeriod[ax] > 0)
            limit = std::min(last, box.lo[ax] + prob.sweepPeriod[ax] - 1);
        for (int p = box.lo[ax]; p <= limit; p += stride) pos.push_back(p);
        if (pos.back() != limit && prob.sweepPeriod[ax] == 0) pos.push_back(last);
        axisPos[ax] = std::move(pos);
    }
    std::vector<CubeJob> jobs;
    for (const int z : axisPos[2])
        for (const int y : axisPos[1])
            for (const int x : axisPos[0]) {
                CubeJob j;
                j.lo = {x, y, z};
                IndexBox b;
                b.lo = j.lo;
                b.hi = j.lo;
                for (int ax = 0; ax < prob.lattice.dim; ++ax) b.hi[ax] = j.lo[ax] + span;
                j.proxy = prefix.box_sum(b);
                jobs.push_back(j);
            }
    std::stable_sort(jobs.begin(), jobs.end(), [](const CubeJob& a, const CubeJob& b) {
        if (a.proxy != b.proxy) return a.proxy < b.proxy;
        if (a.lo[2] != b.lo[2]) return a.lo[2] < b.lo[2];
        if (a.lo[1] != b.lo[1]) return a.lo[1] < b.lo[1];
        return a.lo[0] < b.lo[0];
    });
    return jobs;
}

/// Evaluate one swept cube: window restriction plus joint minimization.
/// The carving seed is mixed with the cube position for determinism under
/// any evaluation order.
inline CarvingResult evaluate_cube(const SweepProblem& prob, const Idx3& lo, double d,
                                   const CarvingOptions& carveOpts) {
    CubeWindow globalCube = cube_at(prob.lattice, lo, d);
    const IndexBox& box = globalCube.nodeRange;
    Lattice wlat = window_lattice(prob.lattice, box);
    CubeWindow cube = cube_at(wlat, {0, 0, 0}, d);
    NodeMask omega = restrict_mask(prob.omega, prob.lattice, box);
    VectorField a = restrict_field(prob.a, box);
    ScalarField V = restrict_field(prob.V, box);
    CarvingOptions opts = carveOpts;
    opts.seed = carveOpts.seed ^ (std::uint64_t(lo[0]) * 0x9e3779b97f4a7c15ULL) ^
                (std::uint64_t(lo[1]) * 0xc2b2ae3d27d4eb4fULL) ^
                (std::uint64_t(lo[2]) * 0x165667b19e3779f9ULL);
    return joint_min(wlat, cube, omega, a, V, opts);
}

/// Per-d sweep. `needMin` = true evaluates every unpruned cube (positivity
/// scan); false stops at the first qualifying cube.
struct SweepOutcome {
    bool qualified = false;
    Idx3 bestLo{0, 0, 0};
    double bestIntegral = kInf;
    CarvingResult bestWitness;
    std::int64_t evaluated = 0;
    std::int64_t pruned = 0;
};

inline SweepOutcome sweep_at_d(const SweepProblem& prob, double d, double threshold,
                               const DiameterOptions& opts, const PrefixSum& prefix,
                               bool needMin) {
    const int span = int(std::llround(d / prob.lattice.h));
    SweepOutcome out;
    auto jobs = sweep_positions(prob, span, prefix);
    if (jobs.empty()) return out;

    const Lattice& lat = prob.lattice;
    const double hn = std::pow(lat.h, lat.dim);

    // Pruning bound: the trapezoid integral over the cube minus what the
    // carving could possibly remove (the top-kmax values; kmax from the
    // isocapacitary ball estimate). Computed up front when any cube carries
    // potential mass, since the workers query it concurrently.
    std::int64_t kmax = 0;
    {
        IndexBox whole;
        whole.lo = prob.domainBox.lo;
        whole.hi = prob.domainBox.hi;
        if (prefix.box_sum(whole) > 0.0)
            kmax = max_carveable_nodes(lat, d, opts.gamma, opts.carving.capacity);
    }

    auto face_sum = [&](const Idx3& lo) {
        // V-mass of the window faces, halved by the trapezoid weights.
        double acc = 0.0;
        for (int ax = 0; ax < lat.dim; ++ax)
            for (int side = 0; side < 2; ++side) {
                IndexBox b;
                b.lo = lo;
                b.hi = lo;
                for (int bx = 0; bx < lat.dim; ++bx) b.hi[bx] = lo[bx] + span;
                const int plane = side == 0 ? lo[ax] : lo[ax] + span;
                b.lo[ax] = b.hi[ax] = plane;
                acc += prefix.box_sum(b);
            }
        // Edges and corners get over-subtracted, which only weakens the
        // bound; soundness is unaffected.
        return 0.5 * acc;
    };

    auto lower_bound = [&](const CubeJob& job) {
        double lb = hn * (job.proxy - face_sum(job.lo));
        if (lb <= 0.0) return 0.0;
        if (kmax == 0) return lb;
        // Subtract the exact top-kmax mass of V over the cube.
        std::vector<double> vals;
        vals.reserve(std::size_t(span + 1) * (span + 1));
        IndexBox b;
        b.lo = job.lo;
        b.hi = job.lo;
        for (int ax = 0; ax < lat.dim; ++ax) b.hi[ax] = job.lo[ax] + span;
        for_each_node(lat, b, [&](const Idx3&, std::int64_t f) {
            if (prob.omega[std::size_t(f)] && prob.V[f] > 0.0) vals.push_back(prob.V[f]);
        });
        const std::size_t k = std::min<std::size_t>(std::size_t(kmax), vals.size());
        if (k > 0) {
            std::nth_element(vals.begin(), vals.begin() + std::ptrdiff_t(k - 1), vals.end(),
                             std::greater<double>());
            double top = 0.0;
            for (std::size_t i = 0; i < k; ++i) top += vals[i];
            lb -= hn * top;
        }
        return std::max(lb, 0.0);
    };

    // Cube evaluations are the unit of parallelism: fixed chunks of
    // positions run on worker threads, results reduce in position order,
    // and the early exit fires between chunks. The chunk size is a
    // constant so the set of evaluated cubes does not depend on the
    // thread count.
    double pruneLevel = needMin ? kInf : threshold;
    constexpr std::size_t chunk = 16;
    for (std::size_t base = 0; base < jobs.size(); base += chunk) {
        const std::size_t end = std::min(jobs.size(), base + chunk);
        std::vector<CarvingResult> results(end - base);
        std::vector<std::uint8_t> ran(end - base, 0);

        auto work = [&](std::size_t k) {
            const auto& job = jobs[base + k];
            if (hn * job.proxy > pruneLevel && lower_bound(job) > pruneLevel) return;
            results[k] = evaluate_cube(prob, job.lo, d, opts.carving);
            ran[k] = 1;
        };
        if (opts.jobs > 1 && end - base > 1) {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            const std::size_t workers =
                std::min<std::size_t>(std::size_t(opts.jobs), end - base);
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (std::size_t k = next++; k < end - base; k = next++) work(k);
                });
            for (auto& t : pool) t.join();
        } else {
            for (std::size_t k = 0; k < end - base; ++k) work(k);
        }

        for (std::size_t k = 0; k < end - base && !out.qualified; ++k) {
            if (!ran[k]) {
                ++out.pruned;
                continue;
            }
            ++out.evaluated;
            if (results[k].integral < out.bestIntegral) {
                out.bestIntegral = results[k].integral;
                out.bestLo = jobs[base + k].lo;
                out.bestWitness = std::move(results[k]);
                if (needMin) pruneLevel = out.bestIntegral;
            }
            // The exists-scan reports the first qualifying cube in position
            // order, independent of the chunking.
            if (!needMin && out.bestIntegral <= threshold) out.qualified = true;
        }
        if (needMin && out.bestIntegral <= threshold) out.qualified = true;
        if (out.qualified && !needMin) break;
    }
    return out;
}

}  // namespace detail

/// Capacitary interior diameter by dyadic sweep plus bisection refinement.
inline DiameterResult diameter(const SweepProblem& prob, const DiameterOptions& opts = {}) {
    const Lattice& lat = prob.lattice;
    const double h = lat.h;
    const double expo = std::isnan(opts.thresholdExponent) ? double(lat.dim - 2)
                                                           : opts.thresholdExponent;

    std::vector<double> grid = opts.dGrid;
    if (grid.empty()) {
        int maxSpan = lat.shape[0];
        for (int ax = 0; ax < lat.dim; ++ax)
            maxSpan = std::min(maxSpan, prob.domainBox.hi[ax] - prob.domainBox.lo[ax]);
        int span = 2;
        for (; span <= maxSpan; span *= 2) grid.push_back(span * h);
        if (span / 2 < maxSpan) grid.push_back(maxSpan * h);  // largest fitting cube
    }
    if (grid.empty()) throw Error("diameter: empty d grid");
    std::sort(grid.begin(), grid.end());

    detail::PrefixSum prefix(lat, prob.V, prob.omega);

    DiameterResult res;
    auto run_level = [&](double d) {
        const double threshold = std::pow(d, expo);
        auto sw = detail::sweep_at_d(prob, d, threshold, opts, prefix, false);
        DiameterResult::Row row;
        row.d = d;
        row.threshold = threshold;
        row.qualified = sw.qualified;
        row.bestIntegral = sw.bestIntegral;
        row.cubeLo = sw.bestLo;
        row.evaluated = sw.evaluated;
        row.pruned = sw.pruned;
        res.table.push_back(row);
        res.dGridTested.push_back(d);
        if (sw.qualified && (!res.achievingCube || d > res.D)) {
            res.D = d;
            res.achievingCube = cube_at(lat, sw.bestLo, d);
            res.witness = sw.bestWitness;
        }
        return sw.qualified;
    };

    for (const double d : grid) run_level(d);

    if (!res.achievingCube) {
        res.D = 0.0;
        res.nothingQualified = true;
        std::sort(res.dGridTested.begin(), res.dGridTested.end());
        return res;
    }
    if (res.D >= grid.back()) {
        res.D = kInf;
        res.notBracketed = true;
        std::sort(res.dGridTested.begin(), res.dGridTested.end());
        return res;
    }

    // Bisection refinement inside the bracket [qualifying, failing).
    double lo = res.D;
    double hi = kInf;
    for (const auto& row : res.table)
        if (!row.qualified && row.d > lo) hi = std::min(hi, row.d);
    for (int level = 0; level < opts.refineLevels && std::isfinite(hi); ++level) {
        double mid = 0.5 * (lo + hi);
        mid = std::round(mid / h) * h;
        if (mid <= lo + 0.5 * h || mid >= hi - 0.5 * h) break;
        if (run_level(mid))
            lo = mid;
        else
            hi = mid;
        lo = res.D;  // run_level updates the witness on success
    }
    std::sort(res.dGridTested.begin(), res.dGridTested.end());
    return res;
}

/// D with Omega replaced by Omega minus the closed ball of radius R.
inline DiameterResult diameter_exterior(const SweepProblem& prob, double R,
                                        const DiameterOptions& opts = {}) {
    SweepProblem cut = prob;
    for_each_node(prob.lattice, [&](const Idx3& idx, std::int64_t f) {
        const Vec3 p = prob.lattice.coord(idx);
        double r2 = 0.0;
        for (int ax = 0; ax < prob.lattice.dim; ++ax) r2 += p[ax] * p[ax];
        if (r2 <= R * R) cut.omega[std::size_t(f)] = 0;
    });
    // A carved-out ball breaks translation invariance.
    cut.sweepPeriod = {0, 0, 0};
    return diameter(cut, opts);
}

struct DiameterLimitResult {
    std::vector<double> radii;
    std::vector<double> values;
    double DInf = 0.0;
};

/// D_R for ascending radii; asserts monotone non-increase and returns the
/// last value as the D_infty estimate.
inline DiameterLimitResult diameter_limit(const SweepProblem& prob, const std::vector<double>& Rs,
                                          const DiameterOptions& opts = {}) {
    DiameterLimitResult out;
    for (const double R : Rs) {
        const auto r = diameter_exterior(prob, R, opts);
        out.radii.push_back(R);
        out.values.push_back(r.D);
    }
    for (std::size_t k = 1; k < out.values.size(); ++k)
        if (out.values[k] > out.values[k - 1] + 1e-12)
            throw Error("diameter_limit: D_R increased at R = " + std::to_string(out.radii[k]));
    out.DInf = out.values.empty() ? kInf : out.values.back();
    return out;
}

/// kappa = min over swept cubes of d^-n * joint integral, with the worst cube.
inline PositivityCertificate positivity_scan(const SweepProblem& prob, double d,
                                             const DiameterOptions& opts = {}) {
    detail::PrefixSum prefix(prob.lattice, prob.V, prob.omega);
    auto sw = detail::sweep_at_d(prob, d, -kInf, opts, prefix, true);
    PositivityCertificate cert;
    cert.d = d;
    if (sw.evaluated == 0) throw Error("positivity_scan: no cube fits the domain box");
    cert.kappa = sw.bestIntegral * std::pow(d, -prob.lattice.dim);
    cert.worstCube = cube_at(prob.lattice, sw.bestLo, d);
    cert.worstWitness = sw.bestWitness;
    return cert;
}

}  // namespace capbound
