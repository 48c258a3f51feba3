// capbound command line: capacity | gauge-opt | carve | diameter | spectrum
// | fibered | verify. One JSON config document per run (schema "capbound/1");
// flags override config values. Exit code 0 iff all assertions pass.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "capbound/harness.hpp"
#include "capbound/io.hpp"

using namespace capbound;

namespace {

double parse_length(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return std::stod(text);
    const double num = std::stod(text.substr(0, slash));
    const double den = std::stod(text.substr(slash + 1));
    if (den == 0.0) throw Error("bad fraction: " + text);
    return num / den;
}

struct GlobalOpts {
    std::string configPath;
    std::string hText;
    double gamma = -1.0;  // <= 0: preset default
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string outPath;
    Json config;  // loaded from --config when present

    void load_config() {
        if (configPath.empty()) return;
        std::ifstream in(configPath);
        if (!in) throw Error("cannot open config " + configPath);
        in >> config;
        if (config.value("schema", "") != kSchema)
            throw Error("config schema must be '" + std::string(kSchema) + "'");
        if (hText.empty()) hText = config.value("h", "");
        if (gamma <= 0.0 && config.contains("gamma")) gamma = config["gamma"].get<double>();
        if (config.contains("seed")) seed = config["seed"].get<std::uint64_t>();
        if (config.contains("jobs") && jobs == 1) jobs = config["jobs"].get<int>();
        if (outPath.empty()) outPath = config.value("out", "");
    }

    double h() const { return hText.empty() ? 0.0 : parse_length(hText); }

    Json effective(const std::string& command) const {
        Json j{{"schema", kSchema}, {"command", command}, {"seed", seed}, {"jobs", jobs}};
        if (!hText.empty()) j["h"] = hText;
        if (gamma > 0.0) j["gamma"] = gamma;
        return j;
    }
};

void emit(const Json& doc, const std::string& outPath) {
    if (outPath.empty()) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ofstream out(outPath);
        if (!out) throw Error("cannot open " + outPath);
        out << doc.dump(2) << "\n";
        std::cout << "wrote " << outPath << "\n";
    }
}

Json with_header(const GlobalOpts& g, const std::string& command, Json body) {
    body["schema"] = kSchema;
    body["config"] = g.effective(command);
    body["timestamp"] = std::time(nullptr);
    return body;
}

/// Cube window of edge d centered at (cx, cy) on the preset's sweep lattice.
struct WindowTask {
    Lattice lat;
    CubeWindow cube;
    NodeMask omega;
    VectorField a;
    ScalarField V;
};

WindowTask cut_window(const SweepProblem& prob, double cx, double cy, double d) {
    const Lattice& lat = prob.lattice;
    Idx3 lo{0, 0, 0};
    for (int ax = 0; ax < lat.dim; ++ax) {
        const double c = ax == 0 ? cx : cy;
        lo[ax] = int(std::llround((c - 0.5 * d - lat.origin[ax]) / lat.h));
    }
    CubeWindow cube = cube_at(lat, lo, d);
    WindowTask t;
    t.lat = window_lattice(lat, cube.nodeRange);
    t.cube = cube_at(t.lat, {0, 0, 0}, d);
    t.omega = restrict_mask(prob.omega, lat, cube.nodeRange);
    t.a = restrict_field(prob.a, cube.nodeRange);
    t.V = restrict_field(prob.V, cube.nodeRange);
    return t;
}

std::vector<Preset> select_presets(const std::string& filter) {
    if (filter.empty() || filter == "all") return preset_catalog();
    std::vector<Preset> out;
    std::string rest = filter;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string name = rest.substr(0, comma);
        out.push_back(find_preset(name));
        if (comma == std::string::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capbound: capacity-based two-sided bounds for magnetic Schrodinger operators"};
    app.set_help_flag("--help", "print help");  // frees -h for the spacing flag
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.configPath, "JSON config document (schema capbound/1)");
    app.add_option("--h", g.hText, "lattice spacing, e.g. 1/128");
    app.add_option("--gamma", g.gamma, "negligibility fraction in (0,1)");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--jobs", g.jobs, "worker threads for preset-level parallelism");
    app.add_option("--out", g.outPath, "output path (default: stdout)");

    // capacity
    auto* capCmd = app.add_subcommand("capacity", "Wiener capacity of a compact node set");
    std::string setPath, gridPath, demo;
    double cubeD = 1.0, truncT = 8.0;
    std::vector<double> cubeCenter{0.0, 0.0};
    capCmd->add_option("--set", setPath, "RLE CSV of the set (with --grid sidecar)");
    capCmd->add_option("--grid", gridPath, "JSON lattice sidecar for --set");
    capCmd->add_option("--demo", demo, "analytic demo set: ball3d | disk2d");
    capCmd->add_option("--d", cubeD, "context cube edge");
    capCmd->add_option("--center", cubeCenter, "context cube center")->expected(2, 3);
    capCmd->add_option("--truncation", truncT, "n=3 truncation box multiplier T");

    // gauge-opt
    auto* gaugeCmd = app.add_subcommand("gauge-opt", "optimize the gauge on one cube");
    std::string gaugePreset = "ab-pi", phasePath;
    double gaugeD = 1.0;
    std::vector<double> gaugeCenter{0.0, 0.0};
    gaugeCmd->add_option("--preset", gaugePreset, "preset name");
    gaugeCmd->add_option("--d", gaugeD, "cube edge");
    gaugeCmd->add_option("--center", gaugeCenter, "cube center")->expected(2);
    gaugeCmd->add_option("--phase-out", phasePath, "dump the phase gradient components as raw fields");

    // carve
    auto* carveCmd = app.add_subcommand("carve", "joint (F, gauge) minimization on one cube");
    std::string carvePreset = "ab-pi";
    double carveD = 1.0;
    std::vector<double> carveCenter{0.0, 0.0};
    int carveRounds = 2, carveBudget = 2;
    carveCmd->add_option("--preset", carvePreset, "preset name");
    carveCmd->add_option("--d", carveD, "cube edge");
    carveCmd->add_option("--center", carveCenter, "cube center")->expected(2);
    carveCmd->add_option("--rounds", carveRounds, "alternating minimization rounds");
    carveCmd->add_option("--gauge-budget", carveBudget, "sampled polynomial gauges");

    // diameter
    auto* diaCmd = app.add_subcommand("diameter", "capacitary interior diameter");
    std::string diaPreset = "harmonic", dGridText = "auto", csvPath;
    diaCmd->add_option("--preset", diaPreset, "preset name");
    diaCmd->add_option("--d-grid", dGridText, "auto or comma list of edges");
    diaCmd->add_option("--csv", csvPath, "per-d qualification table CSV path");

    // spectrum
    auto* specCmd = app.add_subcommand("spectrum", "bottom of the Dirichlet spectrum");
    std::string specPreset = "harmonic", eigvecPath;
    std::vector<double> perssonRs;
    specCmd->add_option("--preset", specPreset, "preset name");
    specCmd->add_option("--eigvec-out", eigvecPath, "dump |eigenvector| raw block + sidecar");
    specCmd->add_option("--persson", perssonRs, "also run the Persson limit over these radii");

    // fibered
    auto* fibCmd = app.add_subcommand("fibered", "fiber decomposition bottom curve");
    std::string fibPreset = "shifted-oscillator";
    double muMax = 0.0;
    fibCmd->add_option("--preset", fibPreset, "preset name");
    fibCmd->add_option("--mu-max", muMax, "mu grid half width (0: automatic)");

    // verify
    auto* verCmd = app.add_subcommand("verify", "two-sided bound verification harness");
    std::string suite = "all", presetFilter;
    verCmd->add_option("--suite", suite, "two-sided | essential | all");
    verCmd->add_option("--presets", presetFilter, "comma list of presets (default: catalog)");

    for (auto* sub : {capCmd, gaugeCmd, carveCmd, diaCmd, specCmd, fibCmd, verCmd}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        g.load_config();

        if (capCmd->parsed()) {
            CompactSet F;
            if (demo == "ball3d") {
                const double h = g.hText.empty() ? 1.0 / 24 : g.h();
                const int span = int(std::llround(cubeD / h));
                F.lattice = Lattice(3, {span + 1, span + 1, span + 1}, h,
                                    {-cubeD / 2, -cubeD / 2, -cubeD / 2});
                F.boundingCube = cube_at(F.lattice, {0, 0, 0}, cubeD);
                F.member.assign(F.lattice.node_count(), 0);
                const double r = cubeD / 2;
                for_each_node(F.lattice, [&](const Idx3& idx, std::int64_t f) {
                    const Vec3 p = F.lattice.coord(idx);
                    if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= r * r)
                        F.member[std::size_t(f)] = 1;
                });
            } else if (demo == "disk2d") {
                const double h = g.hText.empty() ? cubeD / 128 : g.h();
                const int span = int(std::llround(cubeD / h));
                F.lattice = Lattice(2, {span + 1, span + 1, 1}, h, {-cubeD / 2, -cubeD / 2, 0});
                F.boundingCube = cube_at(F.lattice, {0, 0, 0}, cubeD);
                F.member.assign(F.lattice.node_count(), 0);
                const double r = cubeD / 8;
                for_each_node(F.lattice, [&](const Idx3& idx, std::int64_t f) {
                    const Vec3 p = F.lattice.coord(idx);
                    if (p[0] * p[0] + p[1] * p[1] <= r * r) F.member[std::size_t(f)] = 1;
                });
            } else if (!setPath.empty()) {
                std::ifstream side(gridPath);
                if (!side) throw Error("capacity: --grid sidecar required with --set");
                Json sj;
                side >> sj;
                F.lattice = lattice_from_json(sj);
                F.member = read_mask_rle_csv(setPath, F.lattice.node_count());
                Idx3 lo{0, 0, 0};
                for (int ax = 0; ax < F.lattice.dim; ++ax) {
                    const double c =
                        std::size_t(ax) < cubeCenter.size() ? cubeCenter[std::size_t(ax)] : 0.0;
                    lo[ax] = int(std::llround((c - 0.5 * cubeD - F.lattice.origin[ax]) / F.lattice.h));
                }
                F.boundingCube = cube_at(F.lattice, lo, cubeD);
            } else {
                throw Error("capacity: give --set/--grid or --demo");
            }
            CapacityOptions copts;
            copts.truncationT = truncT;
            const double value = cap(F, F.boundingCube, copts);
            const double capQ = cap_of_cube(F.lattice, F.boundingCube, copts);
            Json body{{"cap", value},
                      {"cap_cube", capQ},
                      {"negligible_at", value / capQ},
                      {"grid", lattice_to_json(F.lattice)}};
            emit(with_header(g, "capacity", body), g.outPath);
            return 0;
        }

        if (gaugeCmd->parsed()) {
            const Preset preset = find_preset(gaugePreset);
            const WindowTask t = cut_window(preset.sweep(), gaugeCenter[0], gaugeCenter[1], gaugeD);
            NodeMask F(t.lat.node_count(), 0);
            for (std::size_t i = 0; i < F.size(); ++i) F[i] = t.omega[i] ? 0 : 1;
            const auto omega = optimize_gauge(t.lat, t.a, F);
            Json body{{"preset", gaugePreset},
                      {"cube", {{"center", {gaugeCenter[0], gaugeCenter[1]}}, {"d", gaugeD}}},
                      {"gauge", gauge_to_json(omega)},
                      {"energy", omega.energy}};
            if (!phasePath.empty()) {
                for (int ax = 0; ax < t.lat.dim; ++ax) {
                    ScalarField comp(t.lat);
                    comp.values = omega.phaseGradient.comp[ax];
                    const std::string path = phasePath + ".c" + std::to_string(ax);
                    write_field_raw(comp, path, path + ".json");
                }
            }
            emit(with_header(g, "gauge-opt", body), g.outPath);
            return 0;
        }

        if (carveCmd->parsed()) {
            const Preset preset = find_preset(carvePreset);
            const double gamma = g.gamma > 0.0 ? g.gamma : preset.gamma;
            const WindowTask t = cut_window(preset.sweep(), carveCenter[0], carveCenter[1], carveD);
            CarvingOptions copts;
            copts.gamma = gamma;
            copts.rounds = carveRounds;
            copts.gaugeBudget = carveBudget;
            copts.seed = g.seed;
            const auto r = joint_min(t.lat, t.cube, t.omega, t.a, t.V, copts);
            // The two gauge families of the criteria, reported side by side:
            // smooth optimized phases vs independent polynomial gauges.
            CarvingOptions onlyOpt = copts;
            onlyOpt.gaugeBudget = 0;
            const auto rOpt = joint_min(t.lat, t.cube, t.omega, t.a, t.V, onlyOpt);
            CarvingOptions onlyPoly = copts;
            onlyPoly.optimizedBranch = false;
            const auto rPoly = joint_min(t.lat, t.cube, t.omega, t.a, t.V, onlyPoly);
            const double capQ = cap_of_cube(t.lat, t.cube, copts.capacity);
            Json body{{"preset", carvePreset},
                      {"gamma", gamma},
                      {"cube", {{"center", {carveCenter[0], carveCenter[1]}}, {"d", carveD}}},
                      {"result", carving_to_json(r)},
                      {"variants",
                       {{"optimized_phase",
                         std::isinf(rOpt.integral) ? Json("inf") : Json(rOpt.integral)},
                        {"polynomial",
                         std::isinf(rPoly.integral) ? Json("inf") : Json(rPoly.integral)}}},
                      {"capacity_audit",
                       {{"cap_F", r.capUsed}, {"cap_Q", capQ}, {"budget", gamma * capQ}}}};
            emit(with_header(g, "carve", body), g.outPath);
            return 0;
        }

        if (diaCmd->parsed()) {
            const Preset preset = find_preset(diaPreset);
            const double gamma = g.gamma > 0.0 ? g.gamma : preset.gamma;
            DiameterOptions dopts;
            dopts.gamma = gamma;
            dopts.carving.gamma = gamma;
            dopts.carving.seed = g.seed;
            dopts.jobs = g.jobs;
            if (dGridText != "auto" && !dGridText.empty()) {
                std::string rest = dGridText;
                while (!rest.empty()) {
                    const auto comma = rest.find(',');
                    dopts.dGrid.push_back(parse_length(rest.substr(0, comma)));
                    if (comma == std::string::npos) break;
                    rest = rest.substr(comma + 1);
                }
            }
            const auto r = diameter(preset.sweep(), dopts);
            Json body{{"preset", diaPreset}, {"gamma", gamma}, {"result", diameter_to_json(r)}};
            emit(with_header(g, "diameter", body), g.outPath);
            if (!csvPath.empty()) write_diameter_csv(r, csvPath);
            return 0;
        }

        if (specCmd->parsed()) {
            const Preset preset = find_preset(specPreset);
            if (preset.fiberedKind) throw Error("spectrum: use the fibered subcommand");
            MagneticOperator op = preset.spectral(g.h());
            const auto r = bottom(op, preset.spectralEigen);
            Json body{{"preset", specPreset},
                      {"lambda", r.lambda},
                      {"residual", r.residual},
                      {"iterations", r.iterations},
                      {"grid", lattice_to_json(op.lattice)}};
            if (!perssonRs.empty()) {
                MagneticOperator pop = preset.perssonOp ? preset.perssonOp(g.h()) : op;
                body["persson"] = persson_to_json(persson_limit(pop, perssonRs, preset.perssonEigen));
            }
            if (!eigvecPath.empty()) {
                ScalarField mag(op.lattice);
                for (std::int64_t i = 0; i < op.lattice.node_count(); ++i)
                    mag[i] = std::abs(r.eigvec[std::size_t(i)]);
                write_field_raw(mag, eigvecPath, eigvecPath + ".json");
            }
            emit(with_header(g, "spectrum", body), g.outPath);
            return 0;
        }

        if (fibCmd->parsed()) {
            const Preset preset = find_preset(fibPreset);
            if (!preset.fiberedKind) throw Error("fibered: preset is not of the fibered class");
            FiberedProblem fp = preset.fiberedProblem();
            if (muMax > 0.0) {
                fp.muGrid.clear();
                for (int k = 0; k < 64; ++k)
                    fp.muGrid.push_back(-muMax + 2.0 * muMax * k / 63.0);
            }
            const auto curve = infimum_over_fibers(fp);
            const double gamma = g.gamma > 0.0 ? g.gamma : preset.gamma;
            const auto fd = fibered_diameter(fp, gamma);
            Json body{{"preset", fibPreset},
                      {"lambda", curve.lambda},
                      {"minimizer_mu", curve.minimizerMu},
                      {"D_tilde", std::isinf(fd.DTilde) ? Json("inf") : Json(fd.DTilde)},
                      {"ratio", std::isinf(fd.DTilde) ? Json("inf")
                                                      : Json(curve.lambda * fd.DTilde * fd.DTilde)}};
            if (!g.outPath.empty()) {
                write_fiber_curve_csv(curve, g.outPath);
                std::cout << "wrote " << g.outPath << "\n";
                std::cout << with_header(g, "fibered", body).dump(2) << "\n";
            } else {
                emit(with_header(g, "fibered", body), "");
            }
            return 0;
        }

        if (verCmd->parsed()) {
            const auto presets = select_presets(presetFilter);
            HarnessOptions hopts;
            hopts.gamma = g.gamma;
            hopts.seed = g.seed;
            hopts.jobs = g.jobs;
            Json body;
            bool pass = true;
            if (suite == "two-sided" || suite == "all") {
                const auto r = verify_two_sided(presets, hopts);
                body["two_sided"] = r.report;
                pass = pass && r.pass;
                std::cout << "two-sided: C_fit = " << r.CFit << (r.pass ? "  PASS" : "  FAIL")
                          << "\n";
                for (const auto& f : r.failures) std::cout << "  failure: " << f << "\n";
            }
            if (suite == "essential" || suite == "all") {
                const auto r = verify_essential(presets, hopts);
                body["essential"] = r.report;
                pass = pass && r.pass;
                std::cout << "essential: C_fit = " << r.CFit << (r.pass ? "  PASS" : "  FAIL")
                          << "\n";
                for (const auto& f : r.failures) std::cout << "  failure: " << f << "\n";
            }
            emit(with_header(g, "verify", body), g.outPath);
            return pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
