#include <catch2/catch.hpp>

#include <cstdio>
#include <random>

#include "capbound/io.hpp"

using namespace capbound;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("/tmp/capbound_test_" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("lattice sidecar round trip") {
    Lattice lat(3, {9, 5, 7}, 0.125, {-1.0, 0.5, 2.0});
    const Lattice back = lattice_from_json(lattice_to_json(lat));
    REQUIRE(back.same_geometry(lat));
    Json bad = lattice_to_json(lat);
    bad["schema"] = "other/9";
    REQUIRE_THROWS_AS(lattice_from_json(bad), Error);
}

TEST_CASE("raw block round trip is bit exact") {
    Lattice lat(2, {17, 13, 1}, 0.25, {0.5, -0.25, 0});
    ScalarField f(lat);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (auto& v : f.values) v = uni(rng);

    TempPath raw("field.f64"), side("field.json");
    write_field_raw(f, raw.path, side.path);
    const ScalarField back = read_field_raw(raw.path, side.path);
    REQUIRE(back.lattice.same_geometry(lat));
    REQUIRE(back.values == f.values);
}

TEST_CASE("CSV field ingestion round trip and V >= 0 enforcement") {
    Lattice lat(2, {9, 9, 1}, 0.5);
    ScalarField f(lat);
    for (std::int64_t i = 0; i < lat.node_count(); ++i) f[i] = double(i % 7) * 0.25;

    TempPath csv("field.csv");
    write_field_csv(f, csv.path);
    const ScalarField back = read_field_csv(lat, csv.path);
    REQUIRE(back.values == f.values);

    std::ofstream bad(csv.path);
    bad << "0,0,-1.0\n";
    bad.close();
    REQUIRE_THROWS_AS(read_field_csv(lat, csv.path), Error);
    REQUIRE_NOTHROW(read_field_csv(lat, csv.path, false));
}

TEST_CASE("run-length mask round trip on random masks") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::int64_t n = 1 + std::int64_t(uni(rng) * 400);
        NodeMask m(std::size_t(n), 0);
        const double density = uni(rng);
        for (auto& v : m) v = uni(rng) < density ? 1 : 0;
        REQUIRE(rle_to_mask(mask_to_rle(m), n) == m);
    }
    TempPath csv("mask.csv");
    NodeMask m(64, 0);
    for (const int i : {3, 4, 5, 20, 63}) m[std::size_t(i)] = 1;
    write_mask_rle_csv(m, csv.path);
    REQUIRE(read_mask_rle_csv(csv.path, 64) == m);
}

TEST_CASE("gauge and carving serialization carry the witness data") {
    Lattice lat(2, {17, 17, 1}, 1.0 / 16);
    const auto gauges = sample_polynomial_gauges(lat, 1, 5);
    const Json gj = gauge_to_json(gauges[0]);
    REQUIRE(gj["kind"] == "polynomial");
    REQUIRE(gj["coefficients"].size() == gauges[0].poly.terms.size());
    REQUIRE(gj.contains("frame"));

    CarvingResult r;
    r.F.assign(lat.node_count(), 0);
    r.F[5] = r.F[6] = 1;
    r.omega = GaugeCandidate::unit();
    r.integral = kInf;
    r.feasible = false;
    r.gaugeLabel = "unit";
    const Json cj = carving_to_json(r);
    REQUIRE(cj["integral"] == "inf");
    REQUIRE(cj["F_rle"].size() == 1);
    REQUIRE(cj["F_rle"][0][0] == 5);
    REQUIRE(cj["F_rle"][0][1] == 2);
}
