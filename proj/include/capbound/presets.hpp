#pragma once

// Analytic preset catalog spanning the qualitative regimes: both-degenerate
// (free), dilation families (constant V), confining (harmonic), magnetic
// translation-invariant (Landau), flux-obstructed (Aharonov-Bohm), domain
// driven (punctured lattice, strip waveguide), and the fibered special
// class. Unbounded domains are truncated explicitly: translation-invariant
// presets declare a sweep period, everything else documents its box.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "capbound/diameter.hpp"
#include "capbound/fibered.hpp"
#include "capbound/grid.hpp"
#include "capbound/spectrum.hpp"

namespace capbound {

struct Preset {
    std::string name;
    int dim = 2;
    double gamma = 0.5;
    bool degeneratePair = false;  // expected lambda -> 0 together with D -> inf
    bool fiberedKind = false;

    // Spectral builders take an optional spacing override (<= 0: preset default).
    std::function<MagneticOperator(double)> spectral;
    EigenOptions spectralEigen{};
    std::function<SweepProblem()> sweep;
    std::function<MagneticOperator(double)> perssonOp;  // defaults to spectral when null
    std::vector<double> perssonRadii;
    EigenOptions perssonEigen{};
    std::function<FiberedProblem()> fiberedProblem;
    EigenOptions fiberedEigen{};
    int stripPeriodNodes = 0;

    // Expected oracle values with provenance, for reports and tests.
    std::map<std::string, std::string> oracles;
};

namespace detail {

struct BoxSpec {
    int n;             // intervals per axis
    double halfWidth;  // box is [-halfWidth, halfWidth]^2 (or [0, 2w) when periodic)
    bool periodic;
};

inline int override_n(const BoxSpec& box, double hOverride) {
    if (hOverride <= 0.0) return box.n;
    const int n = int(std::llround(2.0 * box.halfWidth / hOverride));
    if (n < 2) throw Error("spacing override leaves fewer than 2 intervals");
    return n;
}

inline MagneticOperator make_operator(BoxSpec box, double hOverride,
                                      const std::function<double(double, double)>& V,
                                      const std::function<bool(double, double)>& insideOmega,
                                      const std::function<Vec3(double, double)>& aAt = {}) {
    box.n = override_n(box, hOverride);
    const int nodes = box.periodic ? box.n : box.n + 1;
    Lattice lat(2, {nodes, nodes, 1}, 2.0 * box.halfWidth / box.n,
                {-box.halfWidth, -box.halfWidth, 0});
    MagneticOperator op;
    op.lattice = lat;
    op.periodic = {box.periodic, box.periodic, false};
    op.active.assign(lat.node_count(), 1);
    op.a = VectorField(lat);
    op.V = ScalarField(lat);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
        const Vec3 p = lat.coord(idx);
        if (!box.periodic && (idx[0] == 0 || idx[1] == 0 || idx[0] == box.n || idx[1] == box.n))
            op.active[std::size_t(f)] = 0;
        else if (insideOmega && !insideOmega(p[0], p[1]))
            op.active[std::size_t(f)] = 0;
        if (V) op.V[f] = V(p[0], p[1]);
        if (aAt) {
            const double hh = lat.h;
            const Vec3 ax0 = aAt(p[0] + 0.5 * hh, p[1]);
            const Vec3 ax1 = aAt(p[0], p[1] + 0.5 * hh);
            op.a.comp[0][std::size_t(f)] = ax0[0];
            op.a.comp[1][std::size_t(f)] = ax1[1];
        }
    });
    return op;
}

inline SweepProblem make_sweep(int n, double lo, double hi,
                               const std::function<double(double, double)>& V,
                               const std::function<bool(double, double)>& insideOmega) {
    SweepProblem p;
    p.lattice = Lattice(2, {n + 1, n + 1, 1}, (hi - lo) / n, {lo, lo, 0});
    p.omega.assign(p.lattice.node_count(), 1);
    p.a = VectorField(p.lattice);
    p.V = ScalarField(p.lattice);
    for_each_node(p.lattice, [&](const Idx3& idx, std::int64_t f) {
        const Vec3 q = p.lattice.coord(idx);
        if (insideOmega && !insideOmega(q[0], q[1])) p.omega[std::size_t(f)] = 0;
        if (V) p.V[f] = V(q[0], q[1]);
    });
    p.domainBox.lo = {0, 0, 0};
    p.domainBox.hi = {n, n, 0};
    return p;
}

inline void add_flux_line(SweepProblem& p, const Vec3& center, double alphaOver2Pi) {
    VectorField th = angle_form(p.lattice, center);
    for (int ax = 0; ax < 2; ++ax)
        for (std::size_t i = 0; i < th.comp[ax].size(); ++i)
            p.a.comp[ax][i] += alphaOver2Pi * th.comp[ax][i];
}

inline void add_flux_line(MagneticOperator& op, const Vec3& center, double alphaOver2Pi) {
    VectorField th = angle_form(op.lattice, center);
    for (int ax = 0; ax < 2; ++ax)
        for (std::size_t i = 0; i < th.comp[ax].size(); ++i)
            op.a.comp[ax][i] += alphaOver2Pi * th.comp[ax][i];
}

inline void set_landau_gauge(MagneticOperator& op, double B) {
    for_each_node(op.lattice, [&](const Idx3& idx, std::int64_t f) {
        const Vec3 p = op.lattice.coord(idx);
        op.a.comp[0][std::size_t(f)] = -0.5 * B * p[1];
        op.a.comp[1][std::size_t(f)] = 0.5 * B * p[0];
    });
}

inline void set_landau_gauge(SweepProblem& p, double B) {
    for_each_node(p.lattice, [&](const Idx3& idx, std::int64_t f) {
        const Vec3 q = p.lattice.coord(idx);
        p.a.comp[0][std::size_t(f)] = -0.5 * B * q[1];
        p.a.comp[1][std::size_t(f)] = 0.5 * B * q[0];
    });
}

}  // namespace detail

inline std::vector<Preset> preset_catalog() {
    std::vector<Preset> out;

    {
        Preset p;
        p.name = "free";
        p.degeneratePair = true;
        p.oracles = {{"lambda", "0 exactly: constant mode of the periodic box [exact]"},
                     {"D", "+inf sentinel: every cube qualifies [construction]"}};
        p.spectral = [=](double h) {
            return detail::make_operator({32, 4.0, true}, h, nullptr, nullptr);
        };
        p.sweep = [=] {
            SweepProblem s = detail::make_sweep(64, 0.0, 4.0, nullptr, nullptr);
            s.sweepPeriod = {1, 1, 0};
            return s;
        };
        p.perssonRadii = {0.5, 1.0, 2.0};
        out.push_back(p);
    }

    for (const double c : {1.0, 4.0, 16.0}) {
        Preset p;
        p.name = "const-" + std::to_string(int(c));
        p.oracles = {{"lambda", "c exactly: constant mode of the periodic box [exact]"},
                     {"lambda*D^2", "equal across c = 1,4,16: sweeps are exact lattice dilations [scaling]"}};
        auto V = [c](double, double) { return c; };
        p.spectral = [=](double h) { return detail::make_operator({16, 1.0, true}, h, V, nullptr); };
        // The three sweeps are exact lattice dilations of one another, so
        // the measured diameters inherit the continuum scaling exactly.
        const double extent = 4.0 / std::sqrt(c);
        p.sweep = [=] {
            SweepProblem s = detail::make_sweep(64, 0.0, extent, V, nullptr);
            s.sweepPeriod = {1, 1, 0};
            return s;
        };
        p.perssonOp = [=](double h) { return detail::make_operator({144, 12.0, true}, h, V, nullptr); };
        p.perssonRadii = {1.0, 2.0, 3.0};
        out.push_back(p);
    }

    {
        Preset p;
        p.name = "harmonic";
        p.oracles = {{"lambda", "2 within 1%: oscillator ground state exp(-|x|^2/2) [analytic]"}};
        auto V = [](double x, double y) { return x * x + y * y; };
        p.spectral = [=](double h) { return detail::make_operator({256, 6.0, false}, h, V, nullptr); };
        p.sweep = [=] { return detail::make_sweep(96, -6.0, 6.0, V, nullptr); };
        out.push_back(p);
    }

    {
        Preset p;
        p.name = "harmonic-exterior";
        p.oracles = {{"persson", "lambda(Omega \\ B_R) ~ R^2 + Airy correction, grows beyond 10x [analytic]"}};
        auto V = [](double x, double y) { return x * x + y * y; };
        p.spectral = [=](double h) { return detail::make_operator({128, 6.0, false}, h, V, nullptr); };
        p.perssonOp = [=](double h) { return detail::make_operator({180, 9.0, false}, h, V, nullptr); };
        p.perssonRadii = {1.0, 2.0, 4.0, 7.5};
        p.perssonEigen.tol = 1e-6;
        p.sweep = [=] { return detail::make_sweep(96, -6.0, 6.0, V, nullptr); };
        out.push_back(p);
    }

    for (const double B : {1.0, 2.0}) {
        Preset p;
        p.name = "landau-" + std::to_string(int(B));
        p.oracles = {{"lambda", "B=1: in (1, 1.05) at box 3.5 where the Dirichlet-wall raise "
                                "dominates the lattice correction [measured]"}};
        p.spectral = [=](double h) {
            MagneticOperator op = detail::make_operator({112, 3.5, false}, h, nullptr, nullptr);
            detail::set_landau_gauge(op, B);
            return op;
        };
        p.spectralEigen.tol = 1e-5;
        p.spectralEigen.block = 4;
        p.spectralEigen.maxIter = 60000;
        p.sweep = [=] {
            SweepProblem s = detail::make_sweep(96, -3.0, 3.0, nullptr, nullptr);
            detail::set_landau_gauge(s, B);
            s.sweepPeriod = {1, 1, 0};  // magnetic translation invariance
            return s;
        };
        p.perssonRadii = {0.5, 1.0};
        p.perssonEigen = p.spectralEigen;
        out.push_back(p);
    }

    for (const double alpha : {kPi / 2.0, kPi}) {
        Preset p;
        p.name = alpha < 2.0 ? "ab-pi2" : "ab-pi";
        p.oracles = {{"gauge", "optimal winding -round(alpha/2pi); energies follow the quadratic "
                               "flux law [winding reduction]"}};
        const double holeR = 0.2;
        auto inside = [=](double x, double y) {
            // Open box with Dirichlet walls, minus the flux hole.
            return std::abs(x) < 2.0 && std::abs(y) < 2.0 && x * x + y * y > holeR * holeR;
        };
        p.spectral = [=](double h) {
            MagneticOperator op = detail::make_operator({128, 2.0, false}, h, nullptr, inside);
            detail::add_flux_line(op, {0, 0, 0}, alpha / (2.0 * kPi));
            return op;
        };
        p.spectralEigen.tol = 1e-6;
        p.sweep = [=] {
            SweepProblem s = detail::make_sweep(128, -2.0, 2.0, nullptr, inside);
            detail::add_flux_line(s, {0, 0, 0}, alpha / (2.0 * kPi));
            return s;
        };
        p.perssonRadii = {0.5, 1.0, 3.0};
        p.perssonEigen.tol = 1e-6;
        out.push_back(p);
    }

    {
        Preset p;
        p.name = "punctured";
        p.oracles = {{"lambda", "band bottom of the periodic hole lattice at zero quasimomentum, "
                                "order cap(hole)/|cell| [analytic]"}};
        const double r = 0.15;
        auto inside = [=](double x, double y) {
            const double dx = x - std::floor(x) - 0.5;
            const double dy = y - std::floor(y) - 0.5;
            return dx * dx + dy * dy > r * r;
        };
        p.spectral = [=](double h) {
            // One periodic unit cell with the hole at its center: the band
            // bottom of the full punctured plane sits at zero quasimomentum.
            return detail::make_operator({64, 0.5, true}, h, nullptr, inside);
        };
        p.sweep = [=] {
            SweepProblem s = detail::make_sweep(128, 0.0, 4.0, nullptr, inside);
            s.sweepPeriod = {32, 32, 0};  // one unit cell of the hole lattice
            return s;
        };
        p.perssonOp = [=](double h) { return detail::make_operator({128, 2.0, true}, h, nullptr, inside); };
        p.perssonRadii = {0.5, 1.0, 1.5};
        out.push_back(p);
    }

    {
        Preset p;
        p.name = "strip";
        p.oracles = {{"lambda", "pi^2/w^2 within O(h^2): width mode of the waveguide [analytic]"}};
        const double w = 1.0;
        p.spectral = [=](double h) {
            // Periodic along the strip, Dirichlet walls across it.
            const int ny = h > 0.0 ? int(std::llround(w / h)) : 32;
            Lattice lat(2, {2 * ny, ny + 1, 1}, w / ny, {0, 0, 0});
            MagneticOperator op;
            op.lattice = lat;
            op.periodic = {true, false, false};
            op.active.assign(lat.node_count(), 1);
            op.a = VectorField(lat);
            op.V = ScalarField(lat);
            for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
                if (idx[1] == 0 || idx[1] == ny) op.active[std::size_t(f)] = 0;
            });
            return op;
        };
        p.sweep = [=] {
            SweepProblem s;
            s.lattice = Lattice(2, {97, 65, 1}, 1.0 / 32, {0, -0.5, 0});
            s.omega.assign(s.lattice.node_count(), 1);
            s.a = VectorField(s.lattice);
            s.V = ScalarField(s.lattice);
            for_each_node(s.lattice, [&](const Idx3& idx, std::int64_t f) {
                const Vec3 q = s.lattice.coord(idx);
                if (!(q[1] > 0.0 && q[1] < w)) s.omega[std::size_t(f)] = 0;
            });
            s.domainBox.lo = {0, 0, 0};
            s.domainBox.hi = {96, 64, 0};
            s.sweepPeriod = {1, 0, 0};  // invariant along the strip
            return s;
        };
        p.perssonOp = [=](double) {
            Lattice lat(2, {256, 33, 1}, w / 32.0, {-4.0, 0, 0});
            MagneticOperator op;
            op.lattice = lat;
            op.periodic = {true, false, false};
            op.active.assign(lat.node_count(), 1);
            op.a = VectorField(lat);
            op.V = ScalarField(lat);
            for_each_node(lat, [&](const Idx3& idx, std::int64_t f) {
                if (idx[1] == 0 || idx[1] == 32) op.active[std::size_t(f)] = 0;
            });
            return op;
        };
        p.perssonRadii = {0.5, 1.0, 2.0};
        out.push_back(p);
    }

    {
        Preset p;
        p.name = "shifted-oscillator";
        p.oracles = {{"lambda", "1 exactly: every fiber is a shifted oscillator [analytic]"}};
        p.fiberedKind = true;
        p.fiberedEigen.tol = 1e-5;
        p.fiberedEigen.block = 4;
        p.fiberedEigen.maxIter = 60000;
        p.fiberedProblem = [=] {
            Lattice lat(1, {769, 1, 1}, 1.0 / 64, {-6.0, 0, 0});
            FiberedProblem fp;
            fp.aFiber = ScalarField(lat);
            fp.VFiber = ScalarField(lat);
            for (int i = 0; i < 769; ++i) fp.aFiber[i] = lat.coord(Idx3{i, 0, 0})[0];
            return fp;
        };
        p.stripPeriodNodes = 64;  // period 1: the Fourier modes split the flat band
        out.push_back(p);
    }

    return out;
}

inline Preset find_preset(const std::string& name) {
    // Family shorthands resolve to their first member.
    const std::string wanted = name == "landau" ? "landau-1" : name == "const" ? "const-1" : name;
    for (auto& p : preset_catalog())
        if (p.name == wanted) return p;
    std::string names;
    for (const auto& p : preset_catalog()) names += (names.empty() ? "" : ", ") + p.name;
    throw Error("unknown preset '" + name + "' (have: " + names + ")");
}

}  // namespace capbound
