#pragma once

#include "sres/potential.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sres {

double ball_volume(int n);  // C_n

struct VolumeOptions {
    int N = 400;               // points per axis of the quadrature grid
    double L = 4.2;            // box half-width
    double cut_eps = 0.05;     // the half-space cut is applied within 3 sqrt(cut_eps) of the saddle
    bool richardson = true;    // also evaluate at N/2 and report the pair difference
    std::optional<std::array<double, 2>> well_point;
};

struct VolumeValue {
    double value = 0.0;
    double err = 0.0;  // |fine - coarse| of the Richardson pair
};

// Region used for both omega and its derivative: the well component of {V < E},
// where points with frame x_n > 0 near the saddle are removed (when frame is given).
RegionLabels volume_region(const PotentialSpec& spec, const SaddleFrame* frame, double E, const VolumeOptions& opt,
                           int N);

VolumeValue omega(const PotentialSpec& spec, const SaddleFrame* frame, double E, const VolumeOptions& opt = {});
VolumeValue omega_prime(const PotentialSpec& spec, const SaddleFrame* frame, double E, const VolumeOptions& opt = {});

struct OmegaBounds {
    double lower = 0.0;  // V replaced by V + chi_eps(x, 0)
    double upper = 0.0;  // omega(E)
};
OmegaBounds omega_eps_bounds(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double E,
                             double alpha = 0.5, const VolumeOptions& opt = {});

struct McEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::uint64_t samples = 0;
};

// Monte Carlo volume of {(x, xi): |xi|^2 + V(x) + chi_eps(x, xi) <= E, x in the region}.
// Blocks of 65536 samples each draw from their own generator seeded by (seed, block),
// so any split of the blocks over workers reproduces the serial result.
McEstimate omega_eps_mc(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double E,
                        std::uint64_t samples, std::uint64_t seed, double alpha = 0.5, const VolumeOptions& opt = {});

struct VolumeCurve {
    std::vector<double> energies;
    std::vector<double> omega_values;
    std::vector<double> omega_prime_values;
    std::vector<double> err_estimates;
};
VolumeCurve volume_curve(const PotentialSpec& spec, const SaddleFrame* frame, const std::vector<double>& energies,
                         const VolumeOptions& opt = {});
void write_volume_csv(const VolumeCurve& c, const std::string& path);

}  // namespace sres
