#pragma once

#include "sres/common.hpp"

#include <array>

namespace sres {

// How the complex contour x -> z(x) is chosen when theta > 0.
//   global:   z = e^{i theta} x everywhere
//   exterior: z = x + (e^{i theta} - 1) s(x_d) per coordinate, where s vanishes
//             on |x_d| <= scale_onset and s' ramps smoothly to 1 over scale_ramp
enum class Dilation { global, exterior };

struct ContourPoint {
    cplx z;    // z(x)
    cplx dz;   // z'(x)
    cplx d2z;  // z''(x)
};

struct GridSpec {
    int dimension = 2;
    double L = 4.2;
    int N = 48;
    double h = 0.05;
    double theta = 0.0;
    Dilation dilation = Dilation::exterior;
    double scale_onset = 3.3;
    double scale_ramp = 0.4;
    std::size_t max_size = 6000;

    double dx() const { return 2.0 * L / N; }
    double node(int j) const { return -L + dx() * j; }
    std::size_t size() const;  // N^n
    void validate() const;     // throws Error("InvalidGrid", ...)

    // contour in one coordinate at angle theta
    ContourPoint contour(double x) const;

    // index helpers for the tensor grid, x_1 is the slowest index
    std::array<int, 2> split(std::size_t idx) const;
    std::size_t flat(int i1, int i2) const { return dimension == 1 ? std::size_t(i1) : std::size_t(i1) * N + i2; }
    std::array<double, 2> point(std::size_t idx) const;
};

// same box with twice the points per axis; its even nodes are the nodes of g and
// its odd nodes the periodic midpoints
GridSpec half_grid(const GridSpec& g);

// number of points per axis resolving momenta up to xi_max at semiclassical h
int points_for(double h, double L, double xi_max);

// Scalar field sampled on the nodes of a (non-periodic) grid.  Only L, N and
// dimension of the carried GridSpec are meaningful.
struct GridField {
    GridSpec grid;
    std::vector<double> values;

    double operator[](std::size_t i) const { return values[i]; }
    double interp(const double* x) const;  // bilinear, clamped at the box edge
};

}  // namespace sres
