#pragma once

#include "sres/escape.hpp"
#include "sres/grid.hpp"
#include "sres/potential.hpp"
#include "sres/spectra.hpp"
#include "sres/volume.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sres {

// one row of the admissibility table: for this delta, eps <= eps_max and h <= h_max
struct AdmissibilityRow {
    double delta = 0.0, eps_max = 0.0, h_max = 0.0;
};

struct ScenarioConfig {
    std::string experiment = "theorem-B";
    PotentialSpec potential = canonical_potential();  // raw spec, normalized at the saddle on load
    std::array<double, 2> saddle_guess = canonical_saddle_guess();
    double L = 4.2;
    double xi_max = 0.65;   // highest resolved momentum; fixes N from h
    double h = 0.05;
    int fill_N = 240;       // fills live on their own grid, independent of h
    double eps = 0.05, delta = 0.1, A = -0.4;
    std::optional<double> B = -0.2;
    double F = 1.0, Fp = 0.8, alpha = 0.5;
    std::vector<double> thetas{0.5, 0.6, 0.7};
    double stability = 1e-2;  // resonance threshold in units of eps
    std::vector<double> h_list{0.05, 0.035, 0.025};
    std::vector<double> delta_list{0.2, 0.1, 0.05};
    std::vector<double> eps_list{0.1, 0.05, 0.025};
    double C0 = 1.0;        // left edge of the Theorem A box in units of eps
    std::vector<AdmissibilityRow> admissibility;  // empty: eps(delta) = delta^2/4, h(delta, eps) = eps delta/20
    bool check_admissibility = false;             // the Theorem presets switch this on
    std::uint64_t seed = 7;
    std::uint64_t mc_samples = 2000000;
    std::uint64_t escape_samples = 131072;
    std::string out_dir = "sres_out";
    bool use_cache = true;
    int threads = 1;

    void validate() const;  // Error("InvalidConfig", ...) naming the violated constraint
    double eps_of(double delta) const;
    double h_of(double delta, double eps) const;
    nlohmann::json to_json() const;
    static ScenarioConfig from_json(const nlohmann::json& j);
    std::string hash() const;  // 16 hex digits of the canonical JSON
};

// names of the acceptance presets, in acceptance order
const std::vector<std::string>& experiment_names();
ScenarioConfig preset(const std::string& name);

// Content-addressed store under <out_dir>/cache.  Every entry carries its own
// length and checksum; a mismatch is reported as CorruptEntry, counted as a
// miss, and the caller recomputes.
class Cache {
public:
    Cache(std::string dir, bool enabled = true);
    std::optional<std::string> get(const std::string& key);
    void put(const std::string& key, const std::string& blob);
    std::size_t gc(bool all);  // drops corrupt entries, or everything when all is set

    std::size_t hits = 0, misses = 0;
    std::vector<std::string> warnings;
    const std::string& dir() const { return dir_; }

private:
    std::string path(const std::string& key) const;
    std::string dir_;
    bool enabled_;
};

struct ReportBundle {
    std::string experiment;
    std::string config_hash;
    bool pass = false;
    std::string summary;  // one line
    std::vector<CountReport> counts;
    std::vector<MatchReport> matches;
    std::vector<ConstantsReport> constants;
    std::vector<VolumeCurve> volumes;
    nlohmann::json metrics = nlohmann::json::object();
    std::vector<std::pair<std::string, double>> wall_times;  // kept out of to_json, see write_bundle
    std::size_t cache_hits = 0, cache_misses = 0;

    nlohmann::json to_json() const;  // deterministic for identical (config, seed)
};

// Runs the preset named in cfg.experiment.  Module errors come back wrapped
// as Error(code, "stage <name>: ...").
ReportBundle run_scenario(const ScenarioConfig& cfg);
ReportBundle run_scenario(const ScenarioConfig& cfg, Cache& cache);

// bundle.json plus timings.json under cfg.out_dir
void write_bundle(const ReportBundle& b, const ScenarioConfig& cfg);

// shared pipeline pieces, also used by the CLI subcommands
struct Pipeline {
    ScenarioConfig cfg;
    PotentialSpec spec;   // normalized
    SaddleFrame frame;
    std::string spec_json;
    Cache* cache = nullptr;

    explicit Pipeline(const ScenarioConfig& c, Cache* cache = nullptr);
    GridSpec grid_for(double h) const;
    GridSpec fill_grid() const;
    FillParams fill_params(double eps) const;
    SeaFill sea_fill(double eps);
    WellFill well_fill(double eps);

    enum class Kind { P, P_eps, P_int, P_ext };
    OperatorMatrix build(Kind k, double eps, double h, double theta);
    std::vector<cplx> spectrum(Kind k, double eps, double h, double theta);
    ResonanceSet resonances(Kind k, double eps, double h, const WindowSpec& w);
    SpectrumResult pint_eigenpairs(double eps, double h);

private:
    std::string key(const std::string& what, double eps, double h, double theta) const;
};

}  // namespace sres
