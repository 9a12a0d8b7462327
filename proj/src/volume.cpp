#include "sres/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace sres {

double ball_volume(int n) { return n == 1 ? 2.0 : (n == 2 ? kPi : std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0)); }

namespace {

GridSpec quad_grid(const PotentialSpec& spec, const VolumeOptions& opt, int N) {
    GridSpec g;
    g.dimension = spec.dimension;
    g.L = opt.L;
    g.N = N;
    g.max_size = std::size_t(-1);
    return g;
}

double bump0(const SaddleFrame& fr, int n, double eps, double alpha, const double* x) {
    double d2 = 0.0;
    for (int k = 0; k < n; ++k) d2 += (x[k] - fr.saddle[k]) * (x[k] - fr.saddle[k]);
    return eps * std::exp(-alpha * alpha * d2 / eps);
}

// C_n sum (E - V - shift)_+^{p} over the region, times the cell volume
template <class Shift>
double region_integral(const PotentialSpec& spec, const RegionLabels& lab, double E, double power, Shift shift) {
    const int n = spec.dimension;
    const double cell = std::pow(lab.grid.dx(), n);
    double acc = 0.0;
    for (std::size_t i = 0; i < lab.labels.size(); ++i) {
        if (lab.labels[i] != Region::well) continue;
        const auto x = lab.grid.point(i);
        const double u = E - potential_real(spec, x.data()) - shift(x.data());
        if (u > 0.0) acc += power == 0.0 ? 1.0 : std::pow(u, power);
    }
    return acc * cell;
}

template <class F>
VolumeValue richardson_pair(const VolumeOptions& opt, F at) {
    VolumeValue v;
    v.value = at(opt.N);
    if (opt.richardson) v.err = std::abs(v.value - at(opt.N / 2));
    return v;
}

}  // namespace

RegionLabels volume_region(const PotentialSpec& spec, const SaddleFrame* frame, double E, const VolumeOptions& opt,
                           int N) {
    ClassifyOptions co;
    co.well_point = opt.well_point;
    if (frame) {
        co.cut_frame = frame;
        co.cut_radius = 3.0 * std::sqrt(opt.cut_eps);
    }
    try {
        return classify_sublevel(spec, E, quad_grid(spec, opt, N), co);
    } catch (const Error& e) {
        throw Error("RegionUndefined", e.what());
    }
}

VolumeValue omega(const PotentialSpec& spec, const SaddleFrame* frame, double E, const VolumeOptions& opt) {
    const int n = spec.dimension;
    return richardson_pair(opt, [&](int N) {
        const RegionLabels lab = volume_region(spec, frame, E, opt, N);
        return ball_volume(n) * region_integral(spec, lab, E, 0.5 * n, [](const double*) { return 0.0; });
    });
}

VolumeValue omega_prime(const PotentialSpec& spec, const SaddleFrame* frame, double E, const VolumeOptions& opt) {
    const int n = spec.dimension;
    const double c = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
    return richardson_pair(opt, [&](int N) {
        const RegionLabels lab = volume_region(spec, frame, E, opt, N);
        return c * region_integral(spec, lab, E, 0.5 * n - 1.0, [](const double*) { return 0.0; });
    });
}

OmegaBounds omega_eps_bounds(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double E, double alpha,
                             const VolumeOptions& opt) {
    const int n = spec.dimension;
    const RegionLabels lab = volume_region(spec, &frame, E, opt, opt.N);
    OmegaBounds b;
    b.upper = ball_volume(n) * region_integral(spec, lab, E, 0.5 * n, [](const double*) { return 0.0; });
    if (eps <= 0.0) {
        b.lower = b.upper;
        return b;
    }
    b.lower = ball_volume(n) * region_integral(spec, lab, E, 0.5 * n,
                                               [&](const double* x) { return bump0(frame, n, eps, alpha, x); });
    return b;
}

McEstimate omega_eps_mc(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double E,
                        std::uint64_t samples, std::uint64_t seed, double alpha, const VolumeOptions& opt) {
    if (samples < 10000) throw Error("InvalidConfig", "Monte Carlo needs at least 1e4 samples");
    const int n = spec.dimension;
    const RegionLabels lab = volume_region(spec, &frame, E, opt, opt.N);
    const GridSpec& g = lab.grid;
    const double dx = g.dx();
    McEstimate out;
    out.samples = samples;
    if (lab.well_empty) return out;

    // bounding box of the region cells, and the momentum box
    std::array<double, 2> lo{1e300, 1e300}, hi{-1e300, -1e300};
    double vmin = 1e300;
    for (std::size_t i = 0; i < lab.labels.size(); ++i) {
        if (lab.labels[i] != Region::well) continue;
        const auto x = g.point(i);
        for (int k = 0; k < n; ++k) {
            lo[k] = std::min(lo[k], x[k] - 0.5 * dx);
            hi[k] = std::max(hi[k], x[k] + 0.5 * dx);
        }
        vmin = std::min(vmin, potential_real(spec, x.data()));
    }
    if (E <= vmin) return out;
    const double xi_max = std::sqrt(E - vmin + 1.0);
    double box = 1.0;
    for (int k = 0; k < n; ++k) box *= (hi[k] - lo[k]) * 2.0 * xi_max;

    const std::uint64_t block = 65536;
    const std::uint64_t nblocks = (samples + block - 1) / block;
    std::uint64_t hits = 0;
    for (std::uint64_t bi = 0; bi < nblocks; ++bi) {
        std::seed_seq ss{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(bi), std::uint32_t(bi >> 32)};
        std::mt19937_64 rng(ss);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const std::uint64_t m = std::min(block, samples - bi * block);
        for (std::uint64_t s = 0; s < m; ++s) {
            double x[2] = {0.0, 0.0}, xi[2] = {0.0, 0.0};
            for (int k = 0; k < n; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * u01(rng);
            for (int k = 0; k < n; ++k) xi[k] = xi_max * (2.0 * u01(rng) - 1.0);
            int idx[2] = {0, 0};
            bool inside = true;
            for (int k = 0; k < n; ++k) {
                idx[k] = int(std::lround((x[k] + g.L) / dx));
                if (idx[k] < 0 || idx[k] >= g.N) inside = false;
            }
            if (!inside || lab.labels[g.flat(idx[0], idx[1])] != Region::well) continue;
            double k2 = 0.0, d2 = 0.0;
            for (int k = 0; k < n; ++k) {
                k2 += xi[k] * xi[k];
                d2 += (x[k] - frame.saddle[k]) * (x[k] - frame.saddle[k]);
            }
            double p = k2 + potential_real(spec, x);
            if (eps > 0.0) p += eps * std::exp(-alpha * alpha * (d2 + k2) / eps);
            if (p <= E) ++hits;
        }
    }
    const double q = double(hits) / double(samples);
    out.estimate = box * q;
    out.stderr_ = box * std::sqrt(q * (1.0 - q) / double(samples));
    return out;
}

VolumeCurve volume_curve(const PotentialSpec& spec, const SaddleFrame* frame, const std::vector<double>& energies,
                         const VolumeOptions& opt) {
    VolumeCurve c;
    c.energies = energies;
    std::sort(c.energies.begin(), c.energies.end());
    for (double E : c.energies) {
        const auto w = omega(spec, frame, E, opt);
        c.omega_values.push_back(w.value);
        c.err_estimates.push_back(w.err);
        c.omega_prime_values.push_back(omega_prime(spec, frame, E, opt).value);
    }
    return c;
}

void write_volume_csv(const VolumeCurve& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("IOError", "cannot write " + path);
    f.precision(15);
    f << "E,omega,omega_prime,err_estimate\n";
    for (std::size_t i = 0; i < c.energies.size(); ++i)
        f << c.energies[i] << ',' << c.omega_values[i] << ',' << c.omega_prime_values[i] << ',' << c.err_estimates[i]
          << '\n';
}

}  // namespace sres
