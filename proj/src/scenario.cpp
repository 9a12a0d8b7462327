#include "sres/scenario.hpp"

#include "sres/determinant.hpp"
#include "sres/quantize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace sres {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCodeVersion = "sres-1";

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json window_json(const WindowSpec& w) { return {{"a", w.a}, {"b", w.b}, {"c", w.c}, {"d", w.d}, {"role", w.role}}; }

json count_json(const CountReport& c) {
    return {{"window", window_json(c.window)}, {"count", c.count}, {"weyl", c.weyl}, {"discrepancy", c.discrepancy},
            {"h", c.h}};
}

json volume_json(const VolumeCurve& v) {
    return {{"E", v.energies}, {"omega", v.omega_values}, {"omega_prime", v.omega_prime_values},
            {"err_estimate", v.err_estimates}};
}

// -- binary payloads ---------------------------------------------------------

template <class T>
void put_pod(std::string& s, const T& v) {
    s.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get_pod(const std::string& s, std::size_t& at) {
    if (at + sizeof(T) > s.size()) throw Error("CorruptEntry", "truncated payload");
    T v;
    std::memcpy(&v, s.data() + at, sizeof v);
    at += sizeof v;
    return v;
}

std::string pack_complex(const std::vector<cplx>& v) {
    std::string s;
    put_pod(s, std::uint64_t(v.size()));
    for (const auto& z : v) put_pod(s, z);
    return s;
}

std::vector<cplx> unpack_complex(const std::string& s) {
    std::size_t at = 0;
    const auto n = get_pod<std::uint64_t>(s, at);
    if (at + n * sizeof(cplx) != s.size()) throw Error("CorruptEntry", "payload length mismatch");
    std::vector<cplx> v(n);
    for (auto& z : v) z = get_pod<cplx>(s, at);
    return v;
}

void pack_field(std::string& s, const GridField& f) {
    put_pod(s, std::int32_t(f.grid.dimension));
    put_pod(s, std::int32_t(f.grid.N));
    put_pod(s, f.grid.L);
    put_pod(s, std::uint64_t(f.values.size()));
    for (double v : f.values) put_pod(s, v);
}

GridField unpack_field(const std::string& s, std::size_t& at) {
    GridField f;
    f.grid.dimension = get_pod<std::int32_t>(s, at);
    f.grid.N = get_pod<std::int32_t>(s, at);
    f.grid.L = get_pod<double>(s, at);
    f.grid.max_size = std::size_t(-1);
    const auto n = get_pod<std::uint64_t>(s, at);
    if (n != f.grid.size()) throw Error("CorruptEntry", "field size mismatch");
    f.values.resize(n);
    for (auto& v : f.values) v = get_pod<double>(s, at);
    return f;
}

std::string pack_operator(const OperatorMatrix& op) {
    std::string s;
    put_pod(s, std::int64_t(op.side()));
    put_pod(s, std::int32_t(op.hermitian));
    put_pod(s, std::int32_t(op.provenance));
    s.append(reinterpret_cast<const char*>(op.A.data()), std::size_t(op.A.size()) * sizeof(cplx));
    return s;
}

OperatorMatrix unpack_operator(const std::string& s, const GridSpec& grid) {
    std::size_t at = 0;
    OperatorMatrix op;
    const auto n = get_pod<std::int64_t>(s, at);
    op.hermitian = get_pod<std::int32_t>(s, at) != 0;
    op.provenance = Provenance(get_pod<std::int32_t>(s, at));
    if (n != std::int64_t(grid.size()) || at + std::size_t(n * n) * sizeof(cplx) != s.size())
        throw Error("CorruptEntry", "operator payload does not fit its grid");
    op.A.resize(n, n);
    std::memcpy(op.A.data(), s.data() + at, std::size_t(n * n) * sizeof(cplx));
    op.grid = grid;
    return op;
}

CMat kron(const CMat& X, const CMat& Y) {
    CMat K(X.rows() * Y.rows(), X.cols() * Y.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) K.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
    return K;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

template <class F>
auto stage(ReportBundle& b, const std::string& name, F&& f) -> decltype(f()) {
    Stopwatch sw;
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            b.wall_times.push_back({name, sw.seconds()});
        } else {
            auto r = f();
            b.wall_times.push_back({name, sw.seconds()});
            return r;
        }
    } catch (const Error& e) {
        throw Error(e.code(), "stage " + name + ": " + e.what());
    }
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

}  // namespace

// -- configuration ---------------------------------------------------------------

void ScenarioConfig::validate() const {
    if (!(delta > 0.0 && delta <= 0.5))
        throw Error("InvalidConfig", "constraint 0<δ≤½ violated: δ = " + fmt(delta));
    for (double d : delta_list)
        if (!(d > 0.0 && d <= 0.5)) throw Error("InvalidConfig", "constraint 0<δ≤½ violated in delta_list: δ = " + fmt(d));
    if (!(eps > 0.0) || !(h > 0.0) || !(L > 0.0) || !(xi_max > 0.0))
        throw Error("InvalidConfig", "eps, h, L and xi_max must be positive");
    for (double v : h_list)
        if (!(v > 0.0)) throw Error("InvalidConfig", "h_list entries must be positive");
    for (double v : eps_list)
        if (!(v > 0.0)) throw Error("InvalidConfig", "eps_list entries must be positive");
    if (thetas.empty()) throw Error("InvalidConfig", "theta list is empty");
    if (!(stability > 0.0)) throw Error("InvalidConfig", "stability threshold must be positive");
    if (!(F > Fp)) throw Error("InvalidConfig", "need F > F'");
    if (B && !(A < *B)) throw Error("InvalidConfig", "need A < B");
    if (fill_N < 16 || fill_N % 2) throw Error("InvalidConfig", "fill_N must be even and at least 16");
    if (check_admissibility) {
        if (eps > eps_of(delta) * (1.0 + 1e-12))
            throw Error("InvalidConfig", "constraint ε ≤ ε(δ) violated: ε = " + fmt(eps) + " > " + fmt(eps_of(delta)));
        if (h > h_of(delta, eps) * (1.0 + 1e-12))
            throw Error("InvalidConfig", "constraint h ≤ h(δ,ε) violated: h = " + fmt(h) + " > " + fmt(h_of(delta, eps)));
    }
    potential.validate();
}

double ScenarioConfig::eps_of(double d) const {
    for (const auto& r : admissibility)
        if (std::abs(r.delta - d) < 1e-12) return r.eps_max;
    return d * d / 4.0;
}

double ScenarioConfig::h_of(double d, double e) const {
    for (const auto& r : admissibility)
        if (std::abs(r.delta - d) < 1e-12) return r.h_max;
    return e * d / 20.0;
}

json ScenarioConfig::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["potential"] = json::parse(potential_to_json(potential));
    j["saddle_guess"] = saddle_guess;
    j["L"] = L;
    j["xi_max"] = xi_max;
    j["h"] = h;
    j["fill_N"] = fill_N;
    j["eps"] = eps;
    j["delta"] = delta;
    j["A"] = A;
    j["B"] = B ? json(*B) : json(nullptr);
    j["F"] = F;
    j["Fp"] = Fp;
    j["alpha"] = alpha;
    j["thetas"] = thetas;
    j["stability"] = stability;
    j["h_list"] = h_list;
    j["delta_list"] = delta_list;
    j["eps_list"] = eps_list;
    j["C0"] = C0;
    j["admissibility"] = json::array();
    for (const auto& r : admissibility) j["admissibility"].push_back({r.delta, r.eps_max, r.h_max});
    j["check_admissibility"] = check_admissibility;
    j["seed"] = seed;
    j["mc_samples"] = mc_samples;
    j["escape_samples"] = escape_samples;
    j["out_dir"] = out_dir;
    j["use_cache"] = use_cache;
    j["threads"] = threads;
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    ScenarioConfig c = j.contains("experiment") ? preset(j["experiment"].get<std::string>()) : ScenarioConfig{};
    try {
        if (j.contains("potential")) {
            const auto& p = j["potential"];
            if (p.is_string()) {
                std::ifstream f(p.get<std::string>());
                if (!f) throw Error("InvalidConfig", "cannot read potential file " + p.get<std::string>());
                std::stringstream ss;
                ss << f.rdbuf();
                c.potential = potential_from_json(ss.str());
            } else {
                c.potential = potential_from_json(p.dump());
            }
        }
        auto opt = [&](const char* k, auto& v) {
            if (j.contains(k)) v = j[k].get<std::decay_t<decltype(v)>>();
        };
        opt("saddle_guess", c.saddle_guess);
        opt("L", c.L);
        opt("xi_max", c.xi_max);
        opt("h", c.h);
        opt("fill_N", c.fill_N);
        opt("eps", c.eps);
        opt("delta", c.delta);
        opt("A", c.A);
        if (j.contains("B")) c.B = j["B"].is_null() ? std::nullopt : std::optional<double>(j["B"].get<double>());
        opt("F", c.F);
        opt("Fp", c.Fp);
        opt("alpha", c.alpha);
        opt("thetas", c.thetas);
        opt("stability", c.stability);
        opt("h_list", c.h_list);
        opt("delta_list", c.delta_list);
        opt("eps_list", c.eps_list);
        opt("C0", c.C0);
        if (j.contains("admissibility")) {
            c.admissibility.clear();
            for (const auto& r : j["admissibility"]) c.admissibility.push_back({r[0], r[1], r[2]});
        }
        opt("check_admissibility", c.check_admissibility);
        opt("seed", c.seed);
        opt("mc_samples", c.mc_samples);
        opt("escape_samples", c.escape_samples);
        opt("out_dir", c.out_dir);
        opt("use_cache", c.use_cache);
        opt("threads", c.threads);
    } catch (const json::exception& e) {
        throw Error("InvalidConfig", e.what());
    }
    return c;
}

std::string ScenarioConfig::hash() const {
    json j = to_json();
    // where results go and how they are cached do not change them
    j.erase("out_dir");
    j.erase("use_cache");
    j.erase("threads");
    return hex16(fnv1a(j.dump()));
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"harmonic-validate", "dilation",        "weyl-pint", "bijection",
                                                "theorem-B",         "theorem-A",       "surgery",   "volume-sandwich",
                                                "escape",            "trace-norm",      "winding"};
    return names;
}

ScenarioConfig preset(const std::string& name) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw Error("InvalidConfig", "unknown experiment " + name);
    ScenarioConfig c;
    c.experiment = name;
    // desk-scale admissibility: eps fixed at 0.05, h shrinking with delta
    c.admissibility = {{0.2, 0.05, 0.05}, {0.1, 0.05, 0.035}, {0.05, 0.05, 0.025}};
    if (name == "theorem-B") {
        c.check_admissibility = true;
        c.delta = 0.2;
    } else if (name == "theorem-A") {
        c.check_admissibility = true;
        c.delta = 0.2;
        c.h_list = {0.05, 0.025};
    } else if (name == "trace-norm") {
        c.eps_list = {0.1, 0.05};
        c.h_list = {0.05, 0.035};
    }
    return c;
}

// -- cache -----------------------------------------------------------------------

namespace {
constexpr char kBlobMagic[8] = {'S', 'R', 'E', 'S', 'B', 'L', 'B', '1'};
}

Cache::Cache(std::string dir, bool enabled) : dir_(std::move(dir)), enabled_(enabled) {
    if (enabled_) fs::create_directories(dir_);
}

std::string Cache::path(const std::string& key) const { return (fs::path(dir_) / (key + ".bin")).string(); }

std::optional<std::string> Cache::get(const std::string& key) {
    if (!enabled_) return std::nullopt;
    std::ifstream f(path(key), std::ios::binary);
    if (!f) {
        ++misses;
        return std::nullopt;
    }
    try {
        char magic[8];
        std::uint64_t len = 0, sum = 0;
        f.read(magic, 8);
        f.read(reinterpret_cast<char*>(&len), sizeof len);
        f.read(reinterpret_cast<char*>(&sum), sizeof sum);
        if (!f || std::memcmp(magic, kBlobMagic, 8) != 0) throw Error("CorruptEntry", "bad header");
        std::string blob(len, '\0');
        f.read(blob.data(), std::streamsize(len));
        if (!f || fnv1a(blob) != sum) throw Error("CorruptEntry", "checksum mismatch");
        ++hits;
        return blob;
    } catch (const Error& e) {
        warnings.push_back("cache entry " + key + ": " + e.what() + "; recomputing");
        std::cerr << "warning: " << warnings.back() << '\n';
        ++misses;
        return std::nullopt;
    }
}

void Cache::put(const std::string& key, const std::string& blob) {
    if (!enabled_) return;
    const std::string tmp = path(key) + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw Error("IOError", "cannot write cache entry " + tmp);
        const std::uint64_t len = blob.size(), sum = fnv1a(blob);
        f.write(kBlobMagic, 8);
        f.write(reinterpret_cast<const char*>(&len), sizeof len);
        f.write(reinterpret_cast<const char*>(&sum), sizeof sum);
        f.write(blob.data(), std::streamsize(len));
    }
    fs::rename(tmp, path(key));
}

std::size_t Cache::gc(bool all) {
    if (!fs::exists(dir_)) return 0;
    std::size_t removed = 0;
    std::vector<fs::path> victims;
    for (const auto& e : fs::directory_iterator(dir_)) {
        if (!e.is_regular_file()) continue;
        const auto p = e.path();
        if (all || p.extension() == ".tmp") {
            victims.push_back(p);
            continue;
        }
        const std::size_t before = warnings.size();
        const std::size_t h0 = hits, m0 = misses;
        get(p.stem().string());
        hits = h0;
        misses = m0;
        if (warnings.size() != before) victims.push_back(p);
    }
    for (const auto& p : victims) removed += fs::remove(p) ? 1 : 0;
    return removed;
}

// -- pipeline --------------------------------------------------------------------

Pipeline::Pipeline(const ScenarioConfig& c, Cache* ca) : cfg(c), cache(ca) {
    auto [s, f] = find_saddle_and_normalize(c.potential, c.saddle_guess);
    spec = s;
    frame = f;
    spec_json = potential_to_json(spec);
}

GridSpec Pipeline::grid_for(double h) const {
    GridSpec g;
    g.dimension = spec.dimension;
    g.L = cfg.L;
    g.h = h;
    g.N = points_for(h, cfg.L, cfg.xi_max);
    // the bump of width sqrt(eps)/alpha needs at least two cells
    const int nb = int(std::ceil(4.0 * cfg.L * cfg.alpha / std::sqrt(cfg.eps))) + 1;
    g.N = std::max(g.N, nb + nb % 2);
    g.theta = 0.0;
    g.max_size = std::max<std::size_t>(g.max_size, g.size());
    return g;
}

GridSpec Pipeline::fill_grid() const {
    GridSpec g;
    g.dimension = spec.dimension;
    g.L = cfg.L;
    g.N = cfg.fill_N;
    g.max_size = std::size_t(-1);
    return g;
}

FillParams Pipeline::fill_params(double eps) const {
    FillParams p;
    p.eps = eps;
    p.F = cfg.F;
    p.Fp = cfg.Fp;
    p.alpha = cfg.alpha;
    return p;
}

std::string Pipeline::key(const std::string& what, double eps, double h, double theta) const {
    std::ostringstream o;
    o.precision(17);
    o << kCodeVersion << '|' << what << '|' << cfg.alpha << '|' << cfg.F << '|' << cfg.Fp << '|' << cfg.fill_N << '|'
      << cfg.xi_max << '|' << theta;
    GridSpec g = h > 0.0 ? grid_for(h) : fill_grid();
    g.theta = theta;
    return what + "-" + cache_key(spec_json + o.str(), g, eps, 0.0, 0.0, 0.0);
}

SeaFill Pipeline::sea_fill(double eps) {
    const std::string k = key("seafill", eps, 0.0, 0.0);
    if (cache)
        if (auto blob = cache->get(k)) {
            std::size_t at = 0;
            SeaFill s;
            try {
                s.C = get_pod<double>(*blob, at);
                s.min_ratio = get_pod<double>(*blob, at);
                s.W = unpack_field(*blob, at);
                return s;
            } catch (const Error&) {
            }
        }
    SeaFill s = build_sea_fill(spec, frame, fill_params(eps), fill_grid());
    if (cache) {
        std::string blob;
        put_pod(blob, s.C);
        put_pod(blob, s.min_ratio);
        pack_field(blob, s.W);
        cache->put(k, blob);
    }
    return s;
}

WellFill Pipeline::well_fill(double eps) {
    const std::string k = key("wellfill", eps, 0.0, 0.0);
    if (cache)
        if (auto blob = cache->get(k)) {
            std::size_t at = 0;
            WellFill w;
            try {
                w.beta_over_r2_min = get_pod<double>(*blob, at);
                w.off_sea_margin_min = get_pod<double>(*blob, at);
                w.annulus_margin_min = get_pod<double>(*blob, at);
                w.beta = unpack_field(*blob, at);
                w.chiU = unpack_field(*blob, at);
                return w;
            } catch (const Error&) {
            }
        }
    WellFill w = build_well_fill(spec, frame, fill_params(eps), fill_grid());
    if (cache) {
        std::string blob;
        put_pod(blob, w.beta_over_r2_min);
        put_pod(blob, w.off_sea_margin_min);
        put_pod(blob, w.annulus_margin_min);
        pack_field(blob, w.beta);
        pack_field(blob, w.chiU);
        cache->put(k, blob);
    }
    return w;
}

namespace {
const char* kind_name(Pipeline::Kind k) {
    switch (k) {
        case Pipeline::Kind::P: return "P";
        case Pipeline::Kind::P_eps: return "Peps";
        case Pipeline::Kind::P_int: return "Pint";
        default: return "Pext";
    }
}
}  // namespace

OperatorMatrix Pipeline::build(Kind k, double eps, double h, double theta) {
    if (k == Kind::P_int && theta != 0.0) throw Error("InvalidConfig", "the interior operator is only built undilated");
    const bool with_eps = k != Kind::P;
    const std::string kk = key(std::string("op") + kind_name(k), with_eps ? eps : 0.0, h, theta);
    GridSpec g = grid_for(h);
    g.theta = theta;
    const bool cacheable = cache && g.size() <= 2500;
    if (cacheable)
        if (auto blob = cache->get(kk)) try {
                return unpack_operator(*blob, g);
            } catch (const Error&) {
            }
    OperatorMatrix op = assemble_schrodinger(spec, g);
    if (with_eps) {
        op.A += assemble_gaussian_weyl(eps, cfg.alpha, g, frame.saddle).A;
        op.provenance = Provenance::P_eps;
    }
    if (k == Kind::P_int) {
        op.A += multiplication(sea_fill(eps).W, g);
        op.provenance = Provenance::P_int;
    }
    if (k == Kind::P_ext) {
        const WellFill w = well_fill(eps);
        op.A += assemble_well_fill_op(w.beta, w.chiU, g).A;
        op.provenance = Provenance::P_ext;
    }
    if (k == Kind::P_int) op.hermitian = true;
    if (cacheable) cache->put(kk, pack_operator(op));
    return op;
}

std::vector<cplx> Pipeline::spectrum(Kind k, double eps, double h, double theta) {
    const std::string kk = key(std::string("spec") + kind_name(k), k == Kind::P ? 0.0 : eps, h, theta);
    if (cache)
        if (auto blob = cache->get(kk)) try {
                return unpack_complex(*blob);
            } catch (const Error&) {
            }
    const OperatorMatrix op = build(k, eps, h, theta);
    EigOptions eo;
    eo.seed = cfg.seed;
    const SpectrumResult r = (k == Kind::P_int) ? eig_hermitian(op, eo) : eig_general(op, eo);
    if (cache) cache->put(kk, pack_complex(r.eigenvalues));
    return r.eigenvalues;
}

ResonanceSet Pipeline::resonances(Kind k, double eps, double h, const WindowSpec& w) {
    const double tmin = *std::min_element(cfg.thetas.begin(), cfg.thetas.end());
    w.validate();
    if (!(tmin > 0.0) || !window_covered(w, spec.asymptotic_depth, tmin))
        throw Error("WindowUncovered", "dilation angle too small for the requested window depth");
    std::vector<std::vector<cplx>> spectra;
    for (double th : cfg.thetas) spectra.push_back(spectrum(k, eps, h, th));
    return resonances_from_spectra(spectra, cfg.thetas, w, spec.asymptotic_depth, cfg.stability * cfg.eps);
}

SpectrumResult Pipeline::pint_eigenpairs(double eps, double h) {
    EigOptions eo;
    eo.vectors = true;
    eo.seed = cfg.seed;
    return eig_hermitian(build(Kind::P_int, eps, h, 0.0), eo);
}

// -- bundle ----------------------------------------------------------------------

json ReportBundle::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["config_hash"] = config_hash;
    j["pass"] = pass;
    j["summary"] = summary;
    j["counts"] = json::array();
    for (const auto& c : counts) {
        json e = count_json(c);
        e["config_hash"] = config_hash;
        j["counts"].push_back(e);
    }
    j["matches"] = json::array();
    for (const auto& m : matches) {
        json e = json::parse(m.to_json());
        e["config_hash"] = config_hash;
        j["matches"].push_back(e);
    }
    j["constants"] = json::array();
    for (const auto& c : constants) {
        json e = json::parse(c.to_json());
        e["config_hash"] = config_hash;
        j["constants"].push_back(e);
    }
    j["volumes"] = json::array();
    for (const auto& v : volumes) {
        json e = volume_json(v);
        e["config_hash"] = config_hash;
        j["volumes"].push_back(e);
    }
    j["metrics"] = metrics;
    j["metrics"]["config_hash"] = config_hash;
    j["provenance"] = {{"config_hash", config_hash}, {"version", kCodeVersion}};
    return j;
}

void write_bundle(const ReportBundle& b, const ScenarioConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream f(fs::path(cfg.out_dir) / ("bundle-" + b.experiment + ".json"));
        if (!f) throw Error("IOError", "cannot write bundle under " + cfg.out_dir);
        f << b.to_json().dump(2) << '\n';
    }
    json t = json::object();
    for (const auto& [k, v] : b.wall_times) t[k] = v;
    json meta = {{"config_hash", b.config_hash},
                 {"wall_times", t},
                 {"cache_hits", b.cache_hits},
                 {"cache_misses", b.cache_misses}};
    std::ofstream f(fs::path(cfg.out_dir) / ("timings-" + b.experiment + ".json"));
    f << meta.dump(2) << '\n';
}

// -- experiments -----------------------------------------------------------------

namespace {

using Kind = Pipeline::Kind;

double weyl_count(Pipeline& pl, double a, double b, double h, double eps) {
    VolumeOptions vo;
    vo.cut_eps = eps;
    vo.richardson = false;
    const double n = pl.spec.dimension;
    return (omega(pl.spec, &pl.frame, b, vo).value - omega(pl.spec, &pl.frame, a, vo).value) /
           std::pow(2.0 * kPi * h, n);
}

void harmonic_validate(const ScenarioConfig&, ReportBundle& b) {
    Stopwatch sw;
    GridSpec g;
    g.dimension = 1;
    g.N = 256;
    g.L = 8.0;
    g.h = 0.1;
    g.dilation = Dilation::global;
    OperatorMatrix op;
    op.grid = g;
    op.hermitian = true;
    op.A = kinetic_1d(g);
    for (int j = 0; j < g.N; ++j) op.A(j, j) += g.node(j) * g.node(j);
    const SpectrumResult r = eig_hermitian(op);
    double worst = 0.0;
    json rows = json::array();
    for (int k = 0; k < 10; ++k) {
        const double exact = g.h * (2 * k + 1);
        const double rel = std::abs(r.eigenvalues[k].real() - exact) / exact;
        worst = std::max(worst, rel);
        rows.push_back({k, r.eigenvalues[k].real(), exact, rel});
    }
    const double t = sw.seconds();
    b.metrics["levels"] = rows;
    b.metrics["max_rel_error"] = worst;
    b.metrics["max_residual"] = r.max_residual();
    b.wall_times.push_back({"solve", t});
    b.pass = worst < 1e-8 && t < 5.0;
    b.summary = "max relative error " + fmt(worst, 3) + " (< 1e-8), " + (t < 5.0 ? "within" : "over") + " 5 s";
}

void dilation(const ScenarioConfig&, ReportBundle& b) {
    Stopwatch sw;
    GridSpec g;
    g.dimension = 2;
    g.N = 24;
    g.L = 4.2;
    g.h = 0.05;
    g.theta = 0.1;
    g.dilation = Dilation::global;
    const CMat T = kinetic_1d(g);
    const CMat I = CMat::Identity(g.N, g.N);
    OperatorMatrix op;
    op.grid = g;
    op.A = kron(T, I) + kron(I, T);
    EigOptions eo;
    eo.parity = false;
    const SpectrumResult r = eig_general(op, eo);
    const double scale = op.A.cwiseAbs().maxCoeff();
    double worst = 0.0;
    std::size_t used = 0;
    for (const auto& z : r.eigenvalues) {
        if (std::abs(z) < 1e-12 * scale) continue;  // the constant mode
        worst = std::max(worst, std::abs(std::arg(z) + 2.0 * g.theta));
        ++used;
    }
    const double t = sw.seconds();
    b.metrics["max_arg_deviation"] = worst;
    b.metrics["eigenvalues_checked"] = used;
    b.wall_times.push_back({"solve", t});
    b.pass = worst < 1e-10 && used + 1 == r.eigenvalues.size() && t < 5.0;
    b.summary = "max |arg + 2θ| " + fmt(worst, 3) + " over " + std::to_string(used) + " eigenvalues (< 1e-10), " +
                (t < 5.0 ? "within" : "over") + " 5 s";
}

void weyl_pint(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    const double a = -0.4 * cfg.eps, bb = -0.1 * cfg.eps;
    std::vector<double> rel;
    json rows = json::array();
    for (double h : cfg.h_list) {
        const auto ev = stage(b, "pint h=" + fmt(h), [&] { return pl.spectrum(Kind::P_int, cfg.eps, h, 0.0); });
        CountReport c;
        c.window = {a, bb + 1e-15, -1.0, 1.0, "weyl"};
        c.h = h;
        for (const auto& z : ev)
            if (z.real() >= a && z.real() <= bb) ++c.count;
        c.weyl = weyl_count(pl, a, bb, h, cfg.eps);
        c.discrepancy = double(c.count) - c.weyl;
        b.counts.push_back(c);
        const double r = c.count ? std::abs(c.discrepancy) / double(c.count) : INFINITY;
        rel.push_back(r);
        rows.push_back({{"h", h}, {"count", c.count}, {"weyl", c.weyl}, {"rel_error", r}});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < rel.size(); ++i) decreasing = decreasing && rel[i] < rel[i - 1];
    b.metrics["sweep"] = rows;
    b.pass = decreasing && rel.back() < 0.15;
    std::string s = "relative errors";
    for (double r : rel) s += " " + fmt(r, 3);
    b.summary = s + (decreasing ? " decreasing" : " not decreasing") + ", last < 0.15 required";
}

void bijection(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    const double e = cfg.eps;
    const WindowSpec w{-0.4 * e, -0.1 * e, -0.2 * e, 0.1 * e, "bijection"};
    const WindowSpec wide{w.a - e / 10.0, w.b + e / 10.0, w.c, w.d, "bijection-wide"};
    std::vector<double> dist;
    bool clean = true;
    json rows = json::array();
    for (double h : cfg.h_list) {
        const auto ev = stage(b, "pint h=" + fmt(h), [&] { return pl.spectrum(Kind::P_int, e, h, 0.0); });
        const auto rs = stage(b, "resonances P_eps h=" + fmt(h), [&] { return pl.resonances(Kind::P_eps, e, h, wide); });
        MatchReport m = match_spectra(ev, rs.resonances, w, e);
        b.matches.push_back(m);
        dist.push_back(m.max_distance);
        const bool ok = m.unmatched_interior == 0 && m.unmatched_resonances == 0 && !m.cardinality_mismatch;
        clean = clean && ok;
        rows.push_back({{"h", h},
                        {"pairs", m.pairs.size()},
                        {"max_distance", m.max_distance},
                        {"unmatched_interior", m.unmatched_interior},
                        {"unmatched_resonances", m.unmatched_resonances}});
    }
    bool trend = true;
    for (std::size_t i = 1; i < dist.size(); ++i) trend = trend && dist[i] * 3.0 <= dist[i - 1];
    b.metrics["sweep"] = rows;
    b.pass = trend && clean;
    std::string s = "max |b(mu)-mu|";
    for (double d : dist) s += " " + fmt(d, 3);
    b.summary = s + (trend ? " (factor >= 3 per step)" : " (factor 3 per step not reached)") +
                (clean ? ", no unmatched items" : ", unmatched items present");
}

void theorem_b(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    double Cfit = 0.0;
    json rows = json::array();
    for (double d : cfg.delta_list) {
        const double e = cfg.eps_of(d), h = cfg.h_of(d, e);
        ScenarioConfig point = cfg;
        point.delta = d;
        point.eps = e;
        point.h = h;
        point.validate();
        Pipeline sub = pl;
        sub.cfg.eps = e;
        // ]a,b[ + i]-delta eps, 0]; the upper edge is lifted slightly to keep real eigenvalues
        const WindowSpec w{-0.5 * e, 0.5 * e, -d * e, 1e-3 * e, "R_delta"};
        const auto rs = stage(b, "resonances P delta=" + fmt(d), [&] { return sub.resonances(Kind::P, e, h, w); });
        std::size_t count = 0;
        for (const auto& z : rs.resonances)
            if (z.real() > w.a && z.real() < w.b && z.imag() > w.c) ++count;
        CountReport c;
        c.window = w;
        c.h = h;
        c.count = count;
        c.weyl = weyl_count(pl, w.a, w.b, h, e);
        c.discrepancy = double(count) - c.weyl;
        b.counts.push_back(c);
        const double envelope = d * std::abs(std::log(d)) * e / std::pow(h, pl.spec.dimension);
        const double C = std::abs(c.discrepancy) / envelope;
        Cfit = std::max(Cfit, C);
        rows.push_back({{"delta", d},
                        {"eps", e},
                        {"h", h},
                        {"count", count},
                        {"weyl", c.weyl},
                        {"envelope", envelope},
                        {"C", C},
                        {"candidates", rs.candidates}});
    }
    b.metrics["sweep"] = rows;
    b.metrics["C_fit"] = Cfit;
    b.pass = Cfit <= 10.0;
    b.summary = "fitted C = " + fmt(Cfit, 3) + " (<= 10)";
}

void theorem_a(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    const double e = cfg.eps, d = cfg.delta;
    std::vector<double> ratio;
    json rows = json::array();
    for (double h : cfg.h_list) {
        ScenarioConfig point = cfg;
        point.h = h;
        point.validate();
        const WindowSpec w{-cfg.C0 * e, e, -e, -d * e, "theorem-A"};
        const auto rs = stage(b, "resonances P h=" + fmt(h), [&] { return pl.resonances(Kind::P, e, h, w); });
        std::size_t count = 0;
        for (const auto& z : rs.resonances)
            if (z.real() > w.a && z.real() < w.b && z.imag() > w.c && z.imag() < w.d) ++count;
        CountReport c;
        c.window = w;
        c.h = h;
        c.count = count;
        b.counts.push_back(c);
        const double r = double(count) * std::pow(h / e, pl.spec.dimension);
        ratio.push_back(r);
        rows.push_back({{"h", h}, {"count", count}, {"ratio", r}, {"candidates", rs.candidates}});
    }
    const double hi = *std::max_element(ratio.begin(), ratio.end());
    const double lo = *std::min_element(ratio.begin(), ratio.end());
    const bool stable = hi == 0.0 || (lo > 0.0 && std::abs(ratio.back() / ratio.front() - 1.0) <= 0.5);
    b.metrics["sweep"] = rows;
    b.metrics["ratio_max"] = hi;
    b.pass = stable;
    std::string s = "count h^2/eps^2";
    for (double r : ratio) s += " " + fmt(r, 3);
    b.summary = s + (stable ? " (stable within 50%)" : " (changes by more than 50%)");
}

void surgery(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    const double e = cfg.eps, d = cfg.delta, h = cfg.h;
    const SpectrumResult pint = stage(b, "pint eigenpairs", [&] { return pl.pint_eigenpairs(e, h); });
    const OperatorMatrix target = pl.build(Kind::P_int, e, h, 0.0);
    const WellFill w = pl.well_fill(e);
    SurgeryLevels lv;
    lv.A = cfg.A;
    lv.B = cfg.B;
    const SurgeryResult s = apply_surgery(pint, target, w.chiU, e, d, lv);
    const SpectrumResult after = stage(b, "surgery spectrum", [&] { return eig_hermitian(s.op); });

    std::vector<double> levels{cfg.A};
    if (cfg.B) levels.push_back(*cfg.B);
    std::size_t in_gap = 0;
    for (const auto& z : after.eigenvalues)
        for (double L : levels)
            if (std::abs(z.real() - L * e) <= d * e / 3.0) ++in_gap;

    // expected spectrum: untouched eigenvalues plus the moved targets
    std::vector<std::pair<double, bool>> expect;  // value, untouched
    std::vector<double> moved_from;
    for (const auto& mv : s.moves) moved_from.push_back(mv.first);
    for (const auto& z : pint.eigenvalues) {
        const bool moved = std::find(moved_from.begin(), moved_from.end(), z.real()) != moved_from.end();
        if (!moved) expect.push_back({z.real(), true});
    }
    for (const auto& mv : s.moves) expect.push_back({mv.second, false});
    std::sort(expect.begin(), expect.end());
    double untouched = 0.0, moved_err = 0.0;
    for (std::size_t i = 0; i < expect.size() && i < after.eigenvalues.size(); ++i) {
        const double dv = std::abs(after.eigenvalues[i].real() - expect[i].first);
        (expect[i].second ? untouched : moved_err) = std::max(expect[i].second ? untouched : moved_err, dv);
    }
    b.metrics["moved"] = s.moved;
    b.metrics["eigenvalues_in_gaps"] = in_gap;
    b.metrics["untouched_max_move"] = untouched;
    b.metrics["untouched_max_move_over_eps"] = untouched / e;
    b.metrics["moved_max_error"] = moved_err;
    b.metrics["trace_norm_update"] = trace_norm_lowrank(s.factor, s.shifts);
    b.pass = in_gap == 0 && untouched < 1e-6 * e && !s.empty;
    b.summary = std::to_string(s.moved) + " moved, " + std::to_string(in_gap) +
                " eigenvalues in the gaps, untouched max move " + fmt(untouched / e, 3) + " eps (< 1e-6 eps)";
}

void volume_sandwich(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    bool ok = true;
    json rows = json::array();
    VolumeCurve curve;
    for (double e : cfg.eps_list) {
        VolumeOptions vo;
        vo.cut_eps = e;
        const double E = 0.0;
        const OmegaBounds bd = stage(b, "bounds eps=" + fmt(e), [&] {
            return omega_eps_bounds(pl.spec, pl.frame, e, E, cfg.alpha, vo);
        });
        const McEstimate mc = stage(b, "monte carlo eps=" + fmt(e), [&] {
            return omega_eps_mc(pl.spec, pl.frame, e, E, cfg.mc_samples, cfg.seed, cfg.alpha, vo);
        });
        const double gap = (bd.upper - bd.lower) / (e * e);
        const bool in = mc.estimate >= bd.lower - 3.0 * mc.stderr_ && mc.estimate <= bd.upper + 3.0 * mc.stderr_;
        const bool scaled = gap >= 0.0 && gap <= 10.0;
        ok = ok && in && scaled;
        rows.push_back({{"eps", e},
                        {"lower", bd.lower},
                        {"upper", bd.upper},
                        {"mc", mc.estimate},
                        {"mc_stderr", mc.stderr_},
                        {"gap_over_eps2", gap},
                        {"sandwiched", in}});
        curve.energies.push_back(e);
        curve.omega_values.push_back(mc.estimate);
        curve.omega_prime_values.push_back(0.0);
        curve.err_estimates.push_back(mc.stderr_);
    }
    b.metrics["sweep"] = rows;
    b.pass = ok;
    std::string s = "(omega - lower)/eps^2:";
    for (const auto& r : rows) s += " " + fmt(r["gap_over_eps2"].get<double>(), 3);
    b.summary = s + (ok ? "; MC inside bounds within 3 sigma" : "; sandwich or scaling violated");
}

void escape(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    EscapeConfig ec;
    ec.eps = cfg.eps;
    ec.alpha = cfg.alpha;
    ec.samples = cfg.escape_samples;
    ec.seed = cfg.seed;
    const FrameSymbol p = canonical_symbol(pl.spec, pl.frame);
    bool ok = ec.samples >= 100000;
    std::string s;
    for (Implication w : {Implication::esc1, Implication::bp1, Implication::ltg1, Implication::ltg2}) {
        const ConstantsReport r = stage(b, implication_name(w), [&] { return check_comparability(ec, w, p); });
        b.constants.push_back(r);
        ok = ok && r.pass;
        s += std::string(s.empty() ? "" : ", ") + r.which + " spread " + fmt(r.spread(), 3) + " viol " +
             std::to_string(r.violations);
    }
    const auto inv = check_escape_invariants(ec, p);
    b.metrics["invariants"] = {{"deriv_ratio_max", {inv.deriv_ratio_max[0], inv.deriv_ratio_max[1], inv.deriv_ratio_max[2]}},
                               {"cutoff_margin_min", inv.cutoff_margin_min},
                               {"cutoff_C_lower", inv.cutoff_C_lower},
                               {"cutoff_C_upper", inv.cutoff_C_upper},
                               {"bump_lower_margin_min", inv.bump_lower_margin_min},
                               {"bracket_perturbation_max", inv.bracket_perturbation_max},
                               {"support_margin_min", inv.support_margin_min}};
    EscapeConfig probe = ec;
    probe.samples = 20000;
    const auto th = bp1_alpha_threshold(probe, p, 0.125, 4.0);
    b.metrics["bp1_alpha_last_pass"] = th.first;
    b.metrics["bp1_alpha_first_fail"] = th.second;
    b.pass = ok;
    b.summary = s + " (spread <= 50, zero violations)";
}

void trace_norm_exp(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    bool ok = true;
    json rows = json::array();
    const double n = pl.spec.dimension;
    for (double e : cfg.eps_list)
        for (double h : cfg.h_list) {
            const GridSpec g = pl.grid_for(h);
            const double tb = e * trace_norm(gaussian_weyl_factor(e, cfg.alpha, g, pl.frame.saddle[0])) *
                              trace_norm(gaussian_weyl_factor(e, cfg.alpha, g, pl.frame.saddle[1]));
            const double r1 = tb / (e * std::pow(e / h, n));
            const SpectrumResult pint =
                stage(b, "pint eigenpairs eps=" + fmt(e) + " h=" + fmt(h), [&] { return pl.pint_eigenpairs(e, h); });
            const WellFill w = pl.well_fill(e);
            SurgeryLevels lv;
            lv.A = cfg.A;
            lv.B = cfg.B;
            const SurgeryResult s = apply_surgery(pint, pl.build(Kind::P_eps, e, h, 0.0), w.chiU, e, cfg.delta, lv);
            const double ts = trace_norm_lowrank(s.factor, s.shifts);
            const double r2 = ts / (std::pow(e * cfg.delta, 2) / std::pow(h, n));
            ok = ok && r1 >= 0.1 && r1 <= 10.0 && r2 >= 0.1 && r2 <= 10.0;
            rows.push_back({{"eps", e},
                            {"h", h},
                            {"bump_trace_norm", tb},
                            {"bump_ratio", r1},
                            {"moved", s.moved},
                            {"surgery_trace_norm", ts},
                            {"surgery_ratio", r2}});
        }
    b.metrics["sweep"] = rows;
    b.pass = ok;
    std::string s = "bump ratios";
    for (const auto& r : rows) s += " " + fmt(r["bump_ratio"].get<double>(), 3);
    s += "; surgery ratios";
    for (const auto& r : rows) s += " " + fmt(r["surgery_ratio"].get<double>(), 3);
    b.summary = s + " (all in [0.1, 10])";
}

// largest margin radius in [lo, hi] for a circle about c avoiding all points
double clear_radius(const std::vector<cplx>& pts, cplx c, double lo, double hi) {
    std::vector<double> d;
    for (const auto& z : pts) {
        const double r = std::abs(z - c);
        if (r > 0.5 * lo && r < 2.0 * hi) d.push_back(r);
    }
    d.push_back(lo);
    d.push_back(hi);
    std::sort(d.begin(), d.end());
    double best = lo, gap = -1.0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        const double m = 0.5 * (d[i] + d[i - 1]);
        if (m < lo || m > hi) continue;
        if (d[i] - d[i - 1] > gap) {
            gap = d[i] - d[i - 1];
            best = m;
        }
    }
    return best;
}

void winding(const ScenarioConfig& cfg, Pipeline& pl, ReportBundle& b) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::size_t agree = 0;
    json pairs = json::array();
    for (int t = 0; t < 20; ++t) {
        CMat X(6, 6), Y(6, 6);
        for (Eigen::Index i = 0; i < 36; ++i) X.data()[i] = cplx(nd(rng), nd(rng)) / std::sqrt(6.0);
        for (Eigen::Index i = 0; i < 36; ++i) Y.data()[i] = cplx(nd(rng), nd(rng)) / std::sqrt(6.0);
        const auto ex = Eigen::ComplexEigenSolver<CMat>(X, false).eigenvalues();
        const auto ey = Eigen::ComplexEigenSolver<CMat>(Y, false).eigenvalues();
        std::vector<cplx> all(ex.data(), ex.data() + 6);
        all.insert(all.end(), ey.data(), ey.data() + 6);
        Circle c{0.0, clear_radius(all, 0.0, 0.7, 1.3)};
        const auto wr = winding_count(X, Y, c);
        const long direct = count_inside({ex.data(), ex.data() + 6}, c) - count_inside({ey.data(), ey.data() + 6}, c);
        agree += wr.winding == direct;
        pairs.push_back({{"radius", c.radius}, {"winding", wr.winding}, {"direct", direct}});
    }
    b.metrics["random_pairs"] = pairs;

    const double e = cfg.eps, h = cfg.h, th = cfg.thetas.front();
    const OperatorMatrix num = pl.build(Kind::P_eps, e, h, th);
    const OperatorMatrix den = pl.build(Kind::P_ext, e, h, th);
    const auto sn = stage(b, "spectrum P_eps", [&] { return pl.spectrum(Kind::P_eps, e, h, th); });
    const auto sd = stage(b, "spectrum P_ext", [&] { return pl.spectrum(Kind::P_ext, e, h, th); });
    const cplx center(-0.25 * e, -0.05 * e);
    std::vector<cplx> all = sn;
    all.insert(all.end(), sd.begin(), sd.end());
    Circle c{center, clear_radius(all, center, 0.15 * e, 0.3 * e)};
    const WindingResult wr = stage(b, "winding", [&] { return winding_count(num, den, c); });
    const long direct = count_inside(sn, c) - count_inside(sd, c);
    write_contour_csv((fs::path(cfg.out_dir) / "winding-contour.csv").string(), wr.samples);
    b.metrics["pipeline"] = {{"center", {center.real(), center.imag()}},
                             {"radius", c.radius},
                             {"winding", wr.winding},
                             {"direct", direct},
                             {"inside_num", count_inside(sn, c)},
                             {"inside_den", count_inside(sd, c)},
                             {"contour_samples", wr.samples.size()}};
    b.pass = agree == 20 && wr.winding == direct;
    b.summary = std::to_string(agree) + "/20 random pairs agree; pipeline winding " + std::to_string(wr.winding) +
                " vs direct " + std::to_string(direct);
}

}  // namespace

ReportBundle run_scenario(const ScenarioConfig& cfg) {
    Cache cache((fs::path(cfg.out_dir) / "cache").string(), cfg.use_cache);
    return run_scenario(cfg, cache);
}

ReportBundle run_scenario(const ScenarioConfig& cfg, Cache& cache) {
    cfg.validate();
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
        throw Error("InvalidConfig", "unknown experiment " + cfg.experiment);
    fs::create_directories(cfg.out_dir);

    ReportBundle b;
    b.experiment = cfg.experiment;
    b.config_hash = cfg.hash();
    const std::size_t h0 = cache.hits, m0 = cache.misses;
    const std::string& x = cfg.experiment;
    if (x == "harmonic-validate") {
        harmonic_validate(cfg, b);
    } else if (x == "dilation") {
        dilation(cfg, b);
    } else {
        Pipeline pl = stage(b, "potential", [&] { return Pipeline(cfg, &cache); });
        if (x == "weyl-pint") weyl_pint(cfg, pl, b);
        else if (x == "bijection") bijection(cfg, pl, b);
        else if (x == "theorem-B") theorem_b(cfg, pl, b);
        else if (x == "theorem-A") theorem_a(cfg, pl, b);
        else if (x == "surgery") surgery(cfg, pl, b);
        else if (x == "volume-sandwich") volume_sandwich(cfg, pl, b);
        else if (x == "escape") escape(cfg, pl, b);
        else if (x == "trace-norm") trace_norm_exp(cfg, pl, b);
        else winding(cfg, pl, b);
    }
    b.cache_hits = cache.hits - h0;
    b.cache_misses = cache.misses - m0;
    return b;
}

}  // namespace sres
