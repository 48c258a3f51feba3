#pragma once

// End-to-end verification of the two-sided bounds: per-preset lambda and D
// (or lambda_inf and D_inf), the fitted comparability interval [1/C, C] for
// the products lambda * D^2, the constant-potential dilation family check,
// and the positivity link between the kappa scan and the spectral bottom.
//
// The absolute constants of the bounds are not specified by the theory, so
// the harness fits them empirically and asserts family-wide consistency:
// every finite ratio must fall in a single interval with C <= 100, and the
// degenerate pairs (lambda at the zero floor, D unbounded) must degenerate
// together.

#include <chrono>
#include <thread>
#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include "capbound/diameter.hpp"
#include "capbound/fibered.hpp"
#include "capbound/io.hpp"
#include "capbound/presets.hpp"
#include "capbound/spectrum.hpp"

namespace capbound {

struct HarnessOptions {
    double gamma = 0.5;          // overrides preset gamma when positive
    std::uint64_t seed = 1;
    int jobs = 1;
    bool positivityLink = true;  // run the kappa cross-check on cheap presets
};

struct VerifyOutcome {
    Json report;                       // deterministic JSON document
    bool pass = false;
    double CFit = 0.0;
    std::vector<std::string> failures;
};

namespace detail {

inline double zero_floor(const MagneticOperator& op) {
    double maxV = 0.0;
    for (const double v : op.V.values) maxV = std::max(maxV, v);
    const double scale = 4.0 * op.lattice.dim / (op.lattice.h * op.lattice.h) + maxV;
    return 1e-5 * scale;
}

inline Json finite_or(const double v) { return std::isinf(v) ? Json("inf") : Json(v); }

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

/// Run fn(i) for i in [0, n) on up to `jobs` threads; results land in
/// caller-indexed slots, so the output order is schedule-independent.
template <typename Fn>
void parallel_over(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(std::size_t(jobs), n);
    std::vector<std::exception_ptr> errors{workers};
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Bottom-of-spectrum verification over the preset list: lambda from the
/// spectral solve against D from the swept-cube diameter, with
/// family-consistent ratios.
inline VerifyOutcome verify_two_sided(const std::vector<Preset>& presets,
                                      const HarnessOptions& opts = {}) {
    VerifyOutcome out;
    std::vector<double> finiteRatios;
    std::vector<double> constFamily;

    struct LinkSample {
        std::string preset;
        double lambda, kappa, d, gamma;
    };
    std::vector<LinkSample> link;

    struct RowOut {
        Json row;
        double lambda = 0.0, D = 0.0;
        bool lambdaAtFloor = false;
        std::vector<LinkSample> link;
    };
    std::vector<RowOut> results(presets.size());

    detail::parallel_over(presets.size(), opts.jobs, [&](std::size_t pi) {
        const Preset& preset = presets[pi];
        RowOut& slot = results[pi];
        const double gamma = opts.gamma > 0.0 ? opts.gamma : preset.gamma;
        detail::Stopwatch watch;
        Json row;
        row["preset"] = preset.name;
        row["gamma"] = gamma;
        if (!preset.oracles.empty()) row["oracles"] = preset.oracles;

        double lambda = 0.0, D = 0.0;
        bool lambdaAtFloor = false;

        if (preset.fiberedKind) {
            const FiberedProblem fp = preset.fiberedProblem();
            const auto curve = infimum_over_fibers(fp, preset.fiberedEigen);
            lambda = curve.lambda;
            const auto fd = fibered_diameter(fp, gamma);
            D = fd.DTilde;
            row["lambda"] = lambda;
            row["D"] = detail::finite_or(D);
            row["minimizer_mu"] = curve.minimizerMu;
            row["grid"] = lattice_to_json(fp.aFiber.lattice);
        } else {
            MagneticOperator op = preset.spectral(0.0);
            const auto ground = bottom(op, preset.spectralEigen);
            lambda = ground.lambda;
            lambdaAtFloor = lambda <= detail::zero_floor(op);

            SweepProblem sweep = preset.sweep();
            DiameterOptions dopts;
            dopts.gamma = gamma;
            dopts.carving.gamma = gamma;
            dopts.carving.seed = opts.seed;
            const auto dia = diameter(sweep, dopts);
            D = dia.D;

            row["lambda"] = lambda;
            row["lambda_residual"] = ground.residual;
            row["D"] = detail::finite_or(D);
            row["diameter"] = diameter_to_json(dia);
            row["grid"] = lattice_to_json(op.lattice);

            if (opts.positivityLink && std::isfinite(D) && D > 0.0 && !lambdaAtFloor) {
                // kappa at half the measured diameter, snapped to the sweep grid.
                const double h = sweep.lattice.h;
                double d = std::max(2.0 * h, std::round(0.5 * D / h) * h);
                const auto cert = positivity_scan(sweep, d, dopts);
                row["kappa"] = {{"d", d}, {"value", detail::finite_or(cert.kappa)}};
                if (std::isfinite(cert.kappa))
                    slot.link.push_back({preset.name, lambda, cert.kappa, d, gamma});
            }
        }

        row["runtime_sec"] = watch.seconds();
        slot.row = std::move(row);
        slot.lambda = lambda;
        slot.D = D;
        slot.lambdaAtFloor = lambdaAtFloor;
    });

    Json rows = Json::array();
    for (std::size_t pi = 0; pi < presets.size(); ++pi) {
        const Preset& preset = presets[pi];
        RowOut& slot = results[pi];
        Json& row = slot.row;
        const bool degenerate = slot.lambdaAtFloor && std::isinf(slot.D);
        row["degenerate_pair"] = degenerate;
        if (degenerate) {
            row["ratio"] = "degenerate";
        } else if (std::isinf(slot.D)) {
            out.failures.push_back(preset.name + ": D unbounded while lambda stays positive");
            row["ratio"] = "inconsistent";
        } else if (slot.lambdaAtFloor) {
            out.failures.push_back(preset.name + ": lambda at the zero floor while D is finite");
            row["ratio"] = "inconsistent";
        } else if (slot.D == 0.0) {
            out.failures.push_back(preset.name + ": no qualifying cube at any tested d");
            row["ratio"] = "inconsistent";
        } else {
            const double ratio = slot.lambda * slot.D * slot.D;
            row["ratio"] = ratio;
            finiteRatios.push_back(ratio);
            if (preset.name.rfind("const-", 0) == 0) constFamily.push_back(ratio);
        }
        for (auto& l : slot.link) link.push_back(l);
        rows.push_back(row);
    }

    // Fitted comparability constant over all finite ratios.
    double C = 1.0;
    for (const double r : finiteRatios) C = std::max(C, std::max(r, 1.0 / r));
    out.CFit = C;
    if (C > 100.0)
        out.failures.push_back("fitted constant C = " + std::to_string(C) + " exceeds 100");

    // Dilation family: pairwise agreement within 30%.
    for (std::size_t i = 0; i < constFamily.size(); ++i)
        for (std::size_t j = i + 1; j < constFamily.size(); ++j) {
            const double rel = std::abs(constFamily[i] / constFamily[j] - 1.0);
            if (rel > 0.30)
                out.failures.push_back("constant-V ratios disagree by " + std::to_string(rel));
        }

    // Positivity link: lambda >= eps_fit * min(gamma d^-2, kappa/4) with one
    // eps over the family; report the fitted value, require positivity.
    Json linkJson = Json::array();
    double epsFit = kInf;
    for (const auto& s : link) {
        const double floor = std::min(s.gamma / (s.d * s.d), s.kappa / 4.0);
        if (floor > 0.0) epsFit = std::min(epsFit, s.lambda / floor);
        linkJson.push_back({{"preset", s.preset},
                            {"lambda", s.lambda},
                            {"kappa", s.kappa},
                            {"d", s.d},
                            {"floor", floor}});
    }
    if (!link.empty()) {
        if (!(epsFit > 0.0) || std::isinf(epsFit))
            out.failures.push_back("positivity link: no positive eps fits the family");
    }

    out.report = Json{{"schema", kSchema},
                      {"kind", "two-sided"},
                      {"rows", rows},
                      {"C_fit", C},
                      {"positivity_link", linkJson},
                      {"eps_fit", link.empty() ? Json() : detail::finite_or(epsFit)},
                      {"failures", out.failures}};
    out.pass = out.failures.empty();
    return out;
}

/// Essential-spectrum verification: lambda_inf from the Persson limit
/// against D_inf from the exterior diameters, plus the discreteness
/// correspondence.
inline VerifyOutcome verify_essential(const std::vector<Preset>& presets,
                                      const HarnessOptions& opts = {}) {
    VerifyOutcome out;
    std::vector<double> finiteRatios;

    std::vector<const Preset*> todo;
    for (const Preset& preset : presets) {
        if (preset.fiberedKind || preset.perssonRadii.empty()) continue;
        // Both-degenerate presets (free Laplacian) are covered by the
        // two-sided suite; on a finite box their exterior bottoms carry a
        // pure truncation offset at capacity scale, so pairing them against
        // D_inf = inf would report a spurious inconsistency.
        if (preset.degeneratePair) continue;
        todo.push_back(&preset);
    }

    struct RowOut {
        Json row;
        std::vector<std::string> fails;
        double ratio = std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<RowOut> results(todo.size());

    detail::parallel_over(todo.size(), opts.jobs, [&](std::size_t pi) {
        const Preset& preset = *todo[pi];
        RowOut& slot = results[pi];
        const double gamma = opts.gamma > 0.0 ? opts.gamma : preset.gamma;
        detail::Stopwatch watch;
        Json row;
        row["preset"] = preset.name;

        MagneticOperator op = preset.perssonOp ? preset.perssonOp(0.0) : preset.spectral(0.0);
        const auto pr = persson_limit(op, preset.perssonRadii, preset.perssonEigen);
        const double lambdaInf = pr.lambdaInf;
        const bool lambdaAtFloor =
            std::isfinite(lambdaInf) && lambdaInf <= detail::zero_floor(op);
        row["persson"] = persson_to_json(pr);

        SweepProblem sweep = preset.sweep();
        DiameterOptions dopts;
        dopts.gamma = gamma;
        dopts.carving.gamma = gamma;
        dopts.carving.seed = opts.seed;
        const auto dl = diameter_limit(sweep, preset.perssonRadii, dopts);
        const double DInf = dl.DInf;
        Json dvals = Json::array();
        for (const double v : dl.values) dvals.push_back(detail::finite_or(v));
        row["D_R"] = dvals;
        row["D_inf"] = detail::finite_or(DInf);

        // Discreteness correspondence: when D_R collapses to the zero
        // sentinel the exterior bottoms must be leaving every finite scale
        // at the tested radii (diverging sequence, no plateau).
        bool escaping = std::isinf(lambdaInf);
        if (!escaping && pr.values.size() >= 2 && std::isfinite(pr.values.front()) &&
            pr.values.front() > 0.0)
            escaping = !pr.plateaued && pr.values.back() >= 5.0 * pr.values.front();
        if (DInf == 0.0 && !escaping)
            slot.fails.push_back(preset.name +
                                 ": D_R hit 0 but the exterior bottoms plateaued at a finite value");
        if (std::isinf(lambdaInf) && DInf > 0.0 && std::isfinite(DInf))
            slot.fails.push_back(preset.name + ": lambda_inf diverged but D_inf is positive");

        const bool degenerate =
            (lambdaAtFloor && std::isinf(DInf)) || (DInf == 0.0 && escaping);
        row["degenerate_pair"] = degenerate;
        if (!degenerate && std::isfinite(lambdaInf) && !lambdaAtFloor && std::isfinite(DInf) &&
            DInf > 0.0) {
            const double ratio = lambdaInf * DInf * DInf;
            row["ratio"] = ratio;
            slot.ratio = ratio;
        } else if (!degenerate && (std::isinf(DInf) != lambdaAtFloor)) {
            row["ratio"] = "inconsistent";
            slot.fails.push_back(preset.name + ": essential pair degenerates on one side only");
        } else {
            row["ratio"] = "degenerate";
        }
        row["runtime_sec"] = watch.seconds();
        slot.row = std::move(row);
    });

    Json rows = Json::array();
    for (auto& slot : results) {
        rows.push_back(slot.row);
        for (auto& f : slot.fails) out.failures.push_back(f);
        if (!std::isnan(slot.ratio)) finiteRatios.push_back(slot.ratio);
    }

    double C = 1.0;
    for (const double r : finiteRatios) C = std::max(C, std::max(r, 1.0 / r));
    out.CFit = C;
    if (C > 100.0)
        out.failures.push_back("fitted essential constant C = " + std::to_string(C) +
                               " exceeds 100");

    out.report = Json{{"schema", kSchema},
                      {"kind", "essential"},
                      {"rows", rows},
                      {"C_fit", C},
                      {"failures", out.failures}};
    out.pass = out.failures.empty();
    return out;
}

}  // namespace capbound
