#pragma once

// Field ingestion and report serialization. Formats:
//   * scalar fields: CSV rows "i,j[,k],value", or a raw little-endian
//     float64 block next to a JSON sidecar carrying shape/h/origin;
//   * node sets: run-length encoded CSV over flat node indices;
//   * results: JSON documents under the schema tag "capbound/1".

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "capbound/carving.hpp"
#include "capbound/diameter.hpp"
#include "capbound/fibered.hpp"
#include "capbound/gauge.hpp"
#include "capbound/grid.hpp"
#include "capbound/spectrum.hpp"

namespace capbound {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "capbound/1";

// ---------------------------------------------------------------------------
// Lattice sidecar

inline Json lattice_to_json(const Lattice& lat) {
    return Json{{"schema", kSchema},
                {"dim", lat.dim},
                {"shape", {lat.shape[0], lat.shape[1], lat.shape[2]}},
                {"h", lat.h},
                {"origin", {lat.origin[0], lat.origin[1], lat.origin[2]}},
                {"endianness", "little"}};
}

inline Lattice lattice_from_json(const Json& j) {
    if (j.value("schema", "") != kSchema) throw Error("sidecar: unsupported schema");
    Idx3 shape{j["shape"][0], j["shape"][1], j["shape"][2]};
    Vec3 origin{j["origin"][0], j["origin"][1], j["origin"][2]};
    return Lattice(j["dim"], shape, j["h"], origin);
}

// ---------------------------------------------------------------------------
// Scalar fields: raw block + sidecar, and CSV

inline void write_field_raw(const ScalarField& f, const std::string& rawPath,
                            const std::string& sidecarPath) {
    std::ofstream raw(rawPath, std::ios::binary);
    if (!raw) throw Error("cannot open " + rawPath);
    raw.write(reinterpret_cast<const char*>(f.values.data()),
              std::streamsize(f.values.size() * sizeof(double)));
    std::ofstream side(sidecarPath);
    side << lattice_to_json(f.lattice).dump(2) << "\n";
}

inline ScalarField read_field_raw(const std::string& rawPath, const std::string& sidecarPath) {
    std::ifstream side(sidecarPath);
    if (!side) throw Error("cannot open " + sidecarPath);
    Json j;
    side >> j;
    ScalarField f(lattice_from_json(j));
    std::ifstream raw(rawPath, std::ios::binary);
    if (!raw) throw Error("cannot open " + rawPath);
    raw.read(reinterpret_cast<char*>(f.values.data()),
             std::streamsize(f.values.size() * sizeof(double)));
    if (raw.gcount() != std::streamsize(f.values.size() * sizeof(double)))
        throw Error("raw block too short for the sidecar shape");
    return f;
}

inline void write_field_csv(const ScalarField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out.precision(17);
    for_each_node(f.lattice, [&](const Idx3& idx, std::int64_t g) {
        out << idx[0];
        for (int ax = 1; ax < f.lattice.dim; ++ax) out << ',' << idx[ax];
        out << ',' << f.values[std::size_t(g)] << "\n";
    });
}

/// Read node-index/value rows into a field over the given lattice.
/// V-fields must be non-negative; negative entries are rejected at load.
inline ScalarField read_field_csv(const Lattice& lat, const std::string& path,
                                  bool requireNonNegative = true) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    ScalarField f(lat);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        Idx3 idx{0, 0, 0};
        char comma;
        for (int ax = 0; ax < lat.dim; ++ax) {
            if (!(row >> idx[ax] >> comma)) throw Error("bad CSV row: " + line);
        }
        double v;
        if (!(row >> v)) throw Error("bad CSV row: " + line);
        if (!lat.in_bounds(idx)) throw Error("CSV node out of bounds: " + line);
        if (requireNonNegative && v < 0.0) throw Error("negative V entry rejected: " + line);
        f[lat.flat(idx)] = v;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Node sets: run-length encoding over flat indices

inline std::vector<std::pair<std::int64_t, std::int64_t>> mask_to_rle(const NodeMask& m) {
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;
    std::int64_t start = -1;
    for (std::int64_t i = 0; i <= std::int64_t(m.size()); ++i) {
        const bool on = i < std::int64_t(m.size()) && m[std::size_t(i)];
        if (on && start < 0) start = i;
        if (!on && start >= 0) {
            runs.push_back({start, i - start});
            start = -1;
        }
    }
    return runs;
}

inline NodeMask rle_to_mask(const std::vector<std::pair<std::int64_t, std::int64_t>>& runs,
                            std::int64_t size) {
    NodeMask m(std::size_t(size), 0);
    for (const auto& [start, len] : runs) {
        if (start < 0 || start + len > size) throw Error("RLE run out of range");
        for (std::int64_t i = start; i < start + len; ++i) m[std::size_t(i)] = 1;
    }
    return m;
}

inline void write_mask_rle_csv(const NodeMask& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out << "# capbound/1 rle\n";
    for (const auto& [start, len] : mask_to_rle(m)) out << start << ',' << len << "\n";
}

inline NodeMask read_mask_rle_csv(const std::string& path, std::int64_t size) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::int64_t start, len;
        char comma;
        if (!(row >> start >> comma >> len)) throw Error("bad RLE row: " + line);
        runs.push_back({start, len});
    }
    return rle_to_mask(runs, size);
}

inline Json mask_to_json(const NodeMask& m) {
    Json runs = Json::array();
    for (const auto& [start, len] : mask_to_rle(m)) runs.push_back({start, len});
    return runs;
}

// ---------------------------------------------------------------------------
// Result serialization

inline Json gauge_to_json(const GaugeCandidate& g) {
    Json j;
    j["kind"] = g.kind == GaugeCandidate::Kind::OptimizedPhase ? "optimized-phase" : "polynomial";
    if (g.kind == GaugeCandidate::Kind::OptimizedPhase) {
        j["winding"] = g.winding;
        j["hole_circulation"] = g.holeCirculation;
        j["energy"] = g.energy;
    } else {
        Json terms = Json::array();
        for (const auto& t : g.poly.terms)
            terms.push_back({{"powers", {t.powers[0], t.powers[1], t.powers[2]}},
                             {"re", t.coeff.real()},
                             {"im", t.coeff.imag()}});
        j["coefficients"] = terms;
        j["frame"] = {{"center", {g.poly.center[0], g.poly.center[1], g.poly.center[2]}},
                      {"scale", g.poly.scale}};
        j["zero_cells"] = g.zeroCells;
    }
    return j;
}

inline Json carving_to_json(const CarvingResult& r) {
    return Json{{"feasible", r.feasible},
                {"integral", std::isinf(r.integral) ? Json("inf") : Json(r.integral)},
                {"cap_used", r.capUsed},
                {"gauge", gauge_to_json(r.omega)},
                {"gauge_label", r.gaugeLabel},
                {"F_rle", mask_to_json(r.F)}};
}

inline Json diameter_to_json(const DiameterResult& r) {
    Json rows = Json::array();
    for (const auto& row : r.table)
        rows.push_back({{"d", row.d},
                        {"qualified", row.qualified},
                        {"best_integral", std::isinf(row.bestIntegral) ? Json("inf") : Json(row.bestIntegral)},
                        {"threshold", row.threshold},
                        {"cube_lo", {row.cubeLo[0], row.cubeLo[1], row.cubeLo[2]}},
                        {"evaluated", row.evaluated},
                        {"pruned", row.pruned}});
    Json j{{"D", std::isinf(r.D) ? Json("inf") : Json(r.D)},
           {"not_bracketed", r.notBracketed},
           {"nothing_qualified", r.nothingQualified},
           {"d_grid_tested", r.dGridTested},
           {"table", rows}};
    if (r.achievingCube) {
        j["achieving_cube"] = {{"lo",
                                {r.achievingCube->nodeRange.lo[0], r.achievingCube->nodeRange.lo[1],
                                 r.achievingCube->nodeRange.lo[2]}},
                               {"d", r.achievingCube->d}};
        j["witness"] = carving_to_json(r.witness);
    }
    return j;
}

inline void write_diameter_csv(const DiameterResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out << "d,qualified,best_integral,threshold,evaluated,pruned\n";
    out.precision(17);
    for (const auto& row : r.table)
        out << row.d << ',' << (row.qualified ? 1 : 0) << ',' << row.bestIntegral << ','
            << row.threshold << ',' << row.evaluated << ',' << row.pruned << "\n";
}

inline Json persson_to_json(const PerssonResult& r) {
    Json values = Json::array();
    for (const double v : r.values) values.push_back(std::isinf(v) ? Json("inf") : Json(v));
    return Json{{"radii", r.radii},
                {"values", values},
                {"lambda_inf", std::isinf(r.lambdaInf) ? Json("inf") : Json(r.lambdaInf)},
                {"plateaued", r.plateaued}};
}

inline void write_fiber_curve_csv(const FiberCurve& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out << "mu,lambda_mu\n";
    out.precision(17);
    for (const auto& [mu, lam] : c.samples) out << mu << ',' << lam << "\n";
}

}  // namespace capbound
