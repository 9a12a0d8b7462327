#include "sres/determinant.hpp"
#include "sres/escape.hpp"
#include "sres/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

extern "C" void openblas_set_num_threads(int);

using namespace sres;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

ScenarioConfig load(const Common& c, const std::string& experiment = "") {
    ScenarioConfig cfg = experiment.empty() ? ScenarioConfig{} : preset(experiment);
    if (!c.config.empty()) {
        std::ifstream f(c.config);
        if (!f) throw Error("InvalidConfig", "cannot read " + c.config);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw Error("InvalidConfig", e.what());
        }
        if (!experiment.empty()) j["experiment"] = experiment;
        cfg = ScenarioConfig::from_json(j);
    }
    if (!c.out.empty()) cfg.out_dir = c.out;
    if (c.seed) cfg.seed = *c.seed;
    cfg.threads = c.threads;
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    return cfg;
}

Pipeline::Kind parse_kind(const std::string& s) {
    if (s == "P") return Pipeline::Kind::P;
    if (s == "P_eps") return Pipeline::Kind::P_eps;
    if (s == "P_int") return Pipeline::Kind::P_int;
    if (s == "P_ext") return Pipeline::Kind::P_ext;
    throw Error("InvalidConfig", "unknown operator " + s + " (P, P_eps, P_int, P_ext)");
}

std::string out_file(const ScenarioConfig& cfg, const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); }

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semiclassical resonance counting near a saddle"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config, "scenario configuration (JSON)");
    app.add_option("--out", common.out, "output directory");
    app.add_option("--seed", common.seed, "random seed");
    app.add_option("--threads", common.threads, "BLAS threads")->check(CLI::PositiveNumber);

    auto* potential = app.add_subcommand("potential", "normalize the potential at its saddle and classify {V < E}");
    double pot_E = -0.0125;
    potential->add_option("--energy", pot_E, "classification energy");

    auto* volume = app.add_subcommand("volume", "phase-space volume omega(E) and its derivative");
    double vol_lo = -0.05, vol_hi = 0.05;
    int vol_n = 11;
    volume->add_option("--emin", vol_lo);
    volume->add_option("--emax", vol_hi);
    volume->add_option("--points", vol_n)->check(CLI::Range(2, 100000));

    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of one operator of the family");
    std::string spec_kind = "P_int";
    double spec_theta = 0.0;
    spectrum->add_option("--operator", spec_kind, "P, P_eps, P_int or P_ext");
    spectrum->add_option("--theta", spec_theta, "dilation angle");

    auto* resonances = app.add_subcommand("resonances", "two-angle stable eigenvalues in ]-eps/2, eps/2[ + i]-delta eps, 0]");
    std::string res_kind = "P";
    resonances->add_option("--operator", res_kind, "P, P_eps or P_ext");

    auto* surgery = app.add_subcommand("surgery", "two-gap spectral surgery on the interior operator");

    auto* determinant = app.add_subcommand("determinant", "winding of det(P_eps - z)/det(P_ext - z) on a circle");
    double det_re = -0.0125, det_im = -0.0025, det_r = 0.01;
    determinant->add_option("--center-re", det_re);
    determinant->add_option("--center-im", det_im);
    determinant->add_option("--radius", det_r);

    app.add_subcommand("escape-check", "comparability checks for the escape function");

    auto* experiment = app.add_subcommand("experiment", "run a named acceptance preset");
    std::string exp_name;
    experiment->add_option("name", exp_name, "preset name")->required()->check(CLI::IsMember(experiment_names()));

    auto* cache = app.add_subcommand("cache", "cache maintenance");
    auto* gc = cache->add_subcommand("gc", "remove corrupt entries (or all with --all)");
    bool gc_all = false;
    gc->add_flag("--all", gc_all);
    cache->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        openblas_set_num_threads(common.threads);
        if (*experiment) {
            const ScenarioConfig cfg = load(common, exp_name);
            const ReportBundle b = run_scenario(cfg);
            write_bundle(b, cfg);
            print({{"experiment", b.experiment}, {"pass", b.pass}, {"summary", b.summary}, {"config_hash", b.config_hash}});
            return b.pass ? 0 : 2;
        }
        const ScenarioConfig cfg = load(common);
        Cache store((fs::path(cfg.out_dir) / "cache").string(), cfg.use_cache);
        if (*cache) {
            print({{"removed", store.gc(gc_all)}});
            return 0;
        }
        Pipeline pl(cfg, &store);
        if (*potential) {
            const auto labels = classify_sublevel(pl.spec, pot_E, pl.fill_grid());
            write_labels_csv(labels, out_file(cfg, "labels.csv"));
            print({{"saddle", pl.frame.saddle},
                   {"hessian_eigenvalues", pl.frame.hessian_eigenvalues},
                   {"kappa", pl.frame.kappa},
                   {"energy_shift", pl.spec.energy_shift},
                   {"well_cells", labels.count(Region::well)},
                   {"sea_cells", labels.count(Region::sea)},
                   {"potential", json::parse(pl.spec_json)}});
            return 0;
        }
        if (*volume) {
            std::vector<double> E;
            for (int k = 0; k < vol_n; ++k) E.push_back(vol_lo + (vol_hi - vol_lo) * k / (vol_n - 1));
            VolumeOptions vo;
            vo.cut_eps = cfg.eps;
            const auto c = volume_curve(pl.spec, &pl.frame, E, vo);
            write_volume_csv(c, out_file(cfg, "volume.csv"));
            print({{"E", c.energies}, {"omega", c.omega_values}, {"omega_prime", c.omega_prime_values}});
            return 0;
        }
        if (*spectrum) {
            const auto k = parse_kind(spec_kind);
            const auto ev = pl.spectrum(k, cfg.eps, cfg.h, spec_theta);
            write_spectrum_csv(out_file(cfg, "spectrum.csv"), ev);
            print({{"operator", spec_kind}, {"h", cfg.h}, {"theta", spec_theta}, {"count", ev.size()}});
            return 0;
        }
        if (*resonances) {
            const WindowSpec w{-0.5 * cfg.eps, 0.5 * cfg.eps, -cfg.delta * cfg.eps, 1e-3 * cfg.eps, "R_delta"};
            const auto rs = pl.resonances(parse_kind(res_kind), cfg.eps, cfg.h, w);
            write_spectrum_csv(out_file(cfg, "resonances.csv"), rs.resonances, {}, rs.stability);
            print({{"operator", res_kind}, {"h", cfg.h}, {"count", rs.resonances.size()}, {"candidates", rs.candidates}});
            return 0;
        }
        if (*surgery) {
            ScenarioConfig c = cfg;
            c.experiment = "surgery";
            const ReportBundle b = run_scenario(c, store);
            write_bundle(b, c);
            print(b.to_json()["metrics"]);
            return b.pass ? 0 : 2;
        }
        if (*determinant) {
            const Circle c{cplx(det_re, det_im), det_r};
            const double th = cfg.thetas.front();
            const auto num = pl.build(Pipeline::Kind::P_eps, cfg.eps, cfg.h, th);
            const auto den = pl.build(Pipeline::Kind::P_ext, cfg.eps, cfg.h, th);
            const auto wr = winding_count(num, den, c);
            write_contour_csv(out_file(cfg, "contour.csv"), wr.samples);
            print({{"winding", wr.winding}, {"zeros_num", wr.winding_num}, {"zeros_den", wr.winding_den},
                   {"samples", wr.samples.size()}});
            return 0;
        }
        ScenarioConfig c = cfg;
        c.experiment = "escape";
        const ReportBundle b = run_scenario(c, store);
        write_bundle(b, c);
        print(b.to_json()["constants"]);
        return b.pass ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
