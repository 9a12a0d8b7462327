#pragma once

#include "sres/common.hpp"
#include "sres/grid.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sres {

// amplitude * exp(-Q / width) with
//   Q = |x - c|^2                                   (radial_flag = false)
//   Q = (|x - c|^2 - radius^2)^2 / (4 radius^2)     (radial_flag = true, a ring of radius `radius`)
// Q is a polynomial in the coordinates, so every term is entire.
struct GaussianTerm {
    double amplitude = 0.0;
    std::array<double, 2> center{0.0, 0.0};
    double width = 1.0;
    bool radial_flag = false;
    double radius = 0.0;
};

// V(x) = sum of terms - asymptotic_depth.  energy_shift records how much the
// raw term sum was lowered to put the saddle value at zero.
struct PotentialSpec {
    std::vector<GaussianTerm> terms;
    double asymptotic_depth = 1.0;
    int dimension = 2;
    double energy_shift = 0.0;

    void validate() const;
};

struct PotentialValue {
    cplx value;
    std::array<cplx, 2> grad{};
    std::array<std::array<cplx, 2>, 2> hess{};
};

PotentialValue eval_potential(const PotentialSpec& spec, const cplx* z, int order = 0);
double potential_real(const PotentialSpec& spec, const double* x);
cplx potential_complex(const PotentialSpec& spec, const cplx* z);

// ring barrier + off-centre depression + asymptotic sea + channel notch
struct CanonicalParams {
    double ring_radius = 2.6, ring_width = 0.8, ring_height = 0.35;
    double well_depth = 0.2, well_width = 4.0;
    std::array<double, 2> well_center{0.0, -0.9};
    double sea_depth = 0.25, sea_width = 6.0;
    double notch_depth = 0.15, notch_width = 1.0;
    std::array<double, 2> origin{0.0, -0.4};  // centre of the ring
};
PotentialSpec canonical_potential(const CanonicalParams& p = {});
std::array<double, 2> canonical_saddle_guess(const CanonicalParams& p = {});

struct SaddleFrame {
    int dimension = 2;
    std::array<double, 2> saddle{0.0, 0.0};
    RMat basis;                      // columns: x' direction(s) then x_n direction
    std::array<double, 2> scales{};  // per frame axis: x_phys = scale * X along the axis
    std::array<double, 2> hessian_eigenvalues{};  // of V, ordered like basis columns
    double kappa = 1.0;              // p / kappa = (xi_n^2 - x_n^2)/2 + q/2 + ...

    // the n-th frame axis is oriented so that x_n < 0 on the well side
    std::array<double, 2> to_frame(const double* x) const;
    std::array<double, 2> from_frame(const double* X) const;
    double scale() const { return scales[dimension - 1]; }
};

// Newton on the gradient of an arbitrary twice differentiable V; returns V at the
// critical point and the normalized frame.
std::pair<double, SaddleFrame> locate_saddle(const std::function<PotentialValue(const double*)>& V, int n,
                                             const std::array<double, 2>& guess,
                                             const std::optional<std::array<double, 2>>& well_point = {});

std::pair<PotentialSpec, SaddleFrame> find_saddle_and_normalize(const PotentialSpec& spec,
                                                                const std::array<double, 2>& guess,
                                                                const std::optional<std::array<double, 2>>& well_point = {});

// flood fill on {V < E}
enum class Region : unsigned char { island = 0, well = 1, sea = 2, boundary = 3 };
struct RegionLabels {
    GridSpec grid;
    double energy = 0.0;
    std::vector<Region> labels;
    bool sea_empty = true;
    bool well_empty = true;
    std::size_t count(Region r) const;
};

struct ClassifyOptions {
    std::optional<std::array<double, 2>> well_point;  // default: minimum of V over the inner half of the box
    const SaddleFrame* cut_frame = nullptr;  // if set, frame x_n > 0 is excluded within cut_radius of the saddle
    double cut_radius = 0.0;                 // in frame units
    double bump_eps = 0.0;                   // classify V_eps instead of V
    double bump_alpha = 0.5;
};

RegionLabels classify_sublevel(const PotentialSpec& spec, double E, const GridSpec& grid, const ClassifyOptions& opt = {});
void write_labels_csv(const RegionLabels& labels, const std::string& path);

struct ScaleFunctions {
    double eps;
    std::array<double, 2> origin{0.0, 0.0};
    double R(const double* x, int n) const;        // (eps + |x|^2)^{1/2}
    double r(const double* x, int n) const;        // ((eps + |x|^2)/(1 + |x|^2))^{1/2}
    double rt(const double* x, const double* xi, int n) const;
};

// V + eps * exp(-alpha^2 |x - x_s|^2 / eps); the saddle is the origin of the frame
double v_eps(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double alpha, const double* x);

double neck_gap(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double F, double alpha = 0.5,
                bool bump = true);

struct FillParams {
    double eps = 0.05;
    double F = 1.0;
    double Fp = 0.8;
    double r = 0.6;       // neighbourhood radius in units of r_eps
    double margin = 0.5;  // m in E' + m r_eps^2
    double alpha = 0.5;
    double softness = 0.005;  // smoothing scale of the soft maximum (energy units)
};

struct SeaFill {
    GridField W;
    double C = 0.0;        // recorded constant of V_eps + W >= E' + r_eps^2 / C
    double min_ratio = 0.0;
    std::size_t checked_nodes = 0;
};

struct WellFill {
    GridField beta;
    GridField chiU;
    double beta_over_r2_min = 0.0;    // min over B(U, 3r/4) of beta / r_eps^2
    double off_sea_margin_min = 0.0;          // min of V_eps + beta - E' off B(S, r)
    double annulus_margin_min = 0.0;          // min of V_eps - E' on B(U,r) minus B(U,r/2)
};

// Shared ingredients of both fills: classification at E, distances in units of
// r_eps to the well and the sea.
struct FillGeometry {
    GridSpec grid;
    RegionLabels labels;
    std::vector<double> veps;
    std::vector<double> dist_well;
    std::vector<double> dist_sea;
    std::vector<double> reps;
    double E = 0.0, Ep = 0.0;
};

FillGeometry fill_geometry(const PotentialSpec& spec, const SaddleFrame& frame, const FillParams& p, const GridSpec& grid);
SeaFill build_sea_fill(const PotentialSpec& spec, const SaddleFrame& frame, const FillParams& p, const GridSpec& grid);
WellFill build_well_fill(const PotentialSpec& spec, const SaddleFrame& frame, const FillParams& p, const GridSpec& grid);

// pointwise check of beta e^{-xi^2/(2 beta)} + xi^2/2 + V_eps >= E' on sampled (x, xi)
double check_filled_symbol(const WellFill& fill, const FillGeometry& geom, const FillParams& p, int xi_samples = 41);

// Euclidean distance transform to a node set (exact, separable)
std::vector<double> distance_to_set(const GridSpec& grid, const std::vector<char>& in_set);

std::string potential_to_json(const PotentialSpec& spec);
PotentialSpec potential_from_json(const std::string& text);

}  // namespace sres
