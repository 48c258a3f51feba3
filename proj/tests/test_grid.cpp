#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "capbound/grid.hpp"

using namespace capbound;

namespace {

Lattice unit_square(int n) { return Lattice(2, {n + 1, n + 1, 1}, 1.0 / n, {0.0, 0.0, 0.0}); }

ScalarField sample(const Lattice& lat, double (*fn)(double, double)) {
    ScalarField f(lat);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t g) {
        const Vec3 p = lat.coord(idx);
        f[g] = fn(p[0], p[1]);
    });
    return f;
}

}  // namespace

TEST_CASE("gradient of a constant vanishes") {
    const Lattice lat = unit_square(16);
    ScalarField f(lat, 3.25);
    const VectorField g = gradient(f);
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t) {
        REQUIRE(g.comp[ax][std::size_t(lo)] == 0.0);
    });
}

TEST_CASE("forward differences are exact on linear functions") {
    Lattice lat(2, {9, 9, 1}, 0.5, {0.0, 0.0, 0.0});
    const ScalarField f = sample(lat, [](double x, double) { return x; });
    const VectorField g = gradient(f);
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t) {
        REQUIRE(g.comp[ax][std::size_t(lo)] == Approx(ax == 0 ? 1.0 : 0.0).margin(1e-14));
    });
}

TEST_CASE("gradient of x*y vs analytic on h=1/64") {
    const Lattice lat = unit_square(64);
    const ScalarField f = sample(lat, [](double x, double y) { return x * y; });
    const VectorField g = gradient(f);
    double maxErr = 0.0;
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t) {
        if (ax != 0) return;
        const Vec3 p = lat.coord(lo);
        maxErr = std::max(maxErr, std::abs(g.comp[0][std::size_t(lo)] - p[1]));
    });
    REQUIRE(maxErr <= lat.h);
}

TEST_CASE("gradient propagates infinity sentinels") {
    Lattice lat(2, {4, 4, 1}, 1.0);
    ScalarField f(lat, 1.0);
    f[lat.flat({1, 1, 0})] = kInf;
    const VectorField g = gradient(f);
    REQUIRE(std::isinf(g.comp[0][std::size_t(lat.flat({0, 1, 0}))]));
    REQUIRE(std::isinf(g.comp[0][std::size_t(lat.flat({1, 1, 0}))]));
    REQUIRE(g.comp[0][std::size_t(lat.flat({0, 0, 0}))] == 0.0);
}

TEST_CASE("dirichlet energy of constants is zero, empty region is zero") {
    const Lattice lat = unit_square(8);
    ScalarField f(lat, 7.0);
    REQUIRE(dirichlet_energy(f) == 0.0);
    NodeMask empty(lat.node_count(), 0);
    REQUIRE(dirichlet_energy(f, empty) == 0.0);
}

TEST_CASE("dirichlet energy of x on the unit square is 1 up to 2h") {
    const Lattice lat = unit_square(64);
    const ScalarField f = sample(lat, [](double x, double) { return x; });
    const double e = dirichlet_energy(f);
    REQUIRE(e == Approx(1.0).margin(2.0 * lat.h));
}

TEST_CASE("slab interpolation reproduces the 1-d capacitor formula") {
    // f ramps 0 -> 1 across a slab of width w inside the unit square; the
    // continuum energy is area/w = 1/w.
    const int n = 64;
    const Lattice lat = unit_square(n);
    const double w = 0.25;
    ScalarField f(lat);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t g) {
        const double x = lat.coord(idx)[0];
        f[g] = std::clamp((x - 0.25) / w, 0.0, 1.0);
    });
    REQUIRE(dirichlet_energy(f) == Approx(1.0 / w).epsilon(3.0 * lat.h));
}

TEST_CASE("gradient is linear") {
    const Lattice lat = unit_square(24);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    ScalarField f(lat), g(lat);
    for (auto& v : f.values) v = uni(rng);
    for (auto& v : g.values) v = uni(rng);
    const double alpha = 0.37, beta = -1.25;
    ScalarField lin(lat);
    for (std::int64_t i = 0; i < lat.node_count(); ++i) lin[i] = alpha * f[i] + beta * g[i];
    const VectorField gl = gradient(lin), gf = gradient(f), gg = gradient(g);
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t) {
        const double want = alpha * gf.comp[ax][std::size_t(lo)] + beta * gg.comp[ax][std::size_t(lo)];
        REQUIRE(gl.comp[ax][std::size_t(lo)] == Approx(want).margin(1e-12));
    });
}

TEST_CASE("energy vanishes only for per-component constants") {
    // Two disconnected regions; f constant on each with different values.
    Lattice lat(2, {8, 3, 1}, 0.5);
    NodeMask region(lat.node_count(), 0);
    ScalarField f(lat);
    for_each_node(lat, [&](const Idx3& idx, std::int64_t g) {
        if (idx[0] <= 2) {
            region[std::size_t(g)] = 1;
            f[g] = 1.0;
        } else if (idx[0] >= 5) {
            region[std::size_t(g)] = 1;
            f[g] = -2.0;
        }
    });
    REQUIRE(dirichlet_energy(f, region) == 0.0);
    f[lat.flat({0, 0, 0})] += 0.5;
    REQUIRE(dirichlet_energy(f, region) > 0.0);
}

TEST_CASE("refinement consistency: observed order >= 1 for smooth f") {
    auto energy_at = [](int n) {
        const Lattice lat = unit_square(n);
        ScalarField f(lat);
        for_each_node(lat, [&](const Idx3& idx, std::int64_t g) {
            const Vec3 p = lat.coord(idx);
            f[g] = std::sin(kPi * p[0]) * std::sin(kPi * p[1]);
        });
        return dirichlet_energy(f);
    };
    // Exact continuum value: pi^2 / 2 for sin(pi x) sin(pi y) on the unit square.
    const double exact = kPi * kPi / 2.0;
    const double e1 = std::abs(energy_at(16) - exact);
    const double e2 = std::abs(energy_at(32) - exact);
    const double e4 = std::abs(energy_at(64) - exact);
    const double order12 = std::log2(e1 / e2);
    const double order24 = std::log2(e2 / e4);
    REQUIRE(order12 >= 1.0);
    REQUIRE(order24 >= 1.0);
}

TEST_CASE("cube windows snap to the lattice") {
    const Lattice lat = unit_square(16);
    const CubeWindow q = cube_at(lat, {4, 4, 0}, 0.25);
    REQUIRE(q.nodeRange.extent()[0] == 5);
    REQUIRE(q.center[0] == Approx(0.25 + 0.125));
    REQUIRE_THROWS_AS(cube_at(lat, {0, 0, 0}, 0.3), Error);
    REQUIRE_THROWS_AS(cube_at(lat, {14, 14, 0}, 0.25), Error);
}
