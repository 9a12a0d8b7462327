#include "sres/grid.hpp"

#include <algorithm>
#include <cmath>

namespace sres {

double smooth_step(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    const double t = 2.0 * (1.0 - s);  // t in (0,1), t = 1 at s = 1/2
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double smooth_step_deriv(double s) {
    if (s <= 0.5 || s >= 1.0) return 0.0;
    const double t = 2.0 * (1.0 - s);
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    const double da = a / (t * t);
    const double db = -b / ((1.0 - t) * (1.0 - t));
    const double dsigma = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
    return -2.0 * dsigma;
}

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int d = 0; d < dimension; ++d) s *= std::size_t(N);
    return s;
}

void GridSpec::validate() const {
    if (dimension != 1 && dimension != 2) throw Error("InvalidGrid", "dimension must be 1 or 2");
    if (N <= 0 || N % 2 != 0) throw Error("InvalidGrid", "points per axis must be a positive even number");
    if (!(L > 0.0)) throw Error("InvalidGrid", "box half-width must be positive");
    if (!(h > 0.0)) throw Error("InvalidGrid", "h must be positive");
    if (dilation == Dilation::global && std::abs(theta) > 0.15)
        throw Error("InvalidGrid", "global dilation requires theta <= 0.15");
    if (dilation == Dilation::exterior) {
        if (std::abs(theta) > 0.75) throw Error("InvalidGrid", "exterior scaling requires theta <= 0.75");
        if (theta != 0.0 && scale_onset + scale_ramp >= L)
            throw Error("InvalidGrid", "scaling onset plus ramp must lie inside the box");
    }
    if (size() > max_size) throw Error("InvalidGrid", "grid size " + std::to_string(size()) + " exceeds cap");
}

ContourPoint GridSpec::contour(double x) const {
    const cplx e = std::polar(1.0, theta);
    if (theta == 0.0) return {cplx(x, 0.0), 1.0, 0.0};
    if (dilation == Dilation::global) return {e * x, e, 0.0};

    // quintic smoothstep for s', its exact antiderivative for s
    const double ax = std::abs(x);
    const double sg = x < 0 ? -1.0 : 1.0;
    const double t = std::clamp((ax - scale_onset) / scale_ramp, 0.0, 1.0);
    const double sp = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    const double spp = sg * 30.0 * t * t * (1.0 - t) * (1.0 - t) / scale_ramp;
    double s;
    if (ax < scale_onset + scale_ramp)
        s = sg * scale_ramp * t * t * t * t * (2.5 + t * (-3.0 + t));
    else
        s = sg * (0.5 * scale_ramp + (ax - scale_onset - scale_ramp));
    const cplx c = e - 1.0;
    return {x + c * s, 1.0 + c * sp, c * spp};
}

std::array<int, 2> GridSpec::split(std::size_t idx) const {
    if (dimension == 1) return {int(idx), 0};
    return {int(idx / N), int(idx % N)};
}

std::array<double, 2> GridSpec::point(std::size_t idx) const {
    const auto ij = split(idx);
    return {node(ij[0]), dimension == 1 ? 0.0 : node(ij[1])};
}

GridSpec half_grid(const GridSpec& g) {
    GridSpec out = g;
    out.N = 2 * g.N;
    out.max_size = std::max(out.max_size, out.size());
    return out;
}

int points_for(double h, double L, double xi_max) {
    const int n = int(std::ceil(2.0 * L * xi_max / (kPi * h)));
    return n + (n % 2);
}

double GridField::interp(const double* x) const {
    const int N = grid.N;
    const double dx = grid.dx();
    double w[2][2];
    int i0[2] = {0, 0};
    for (int d = 0; d < grid.dimension; ++d) {
        double u = (x[d] + grid.L) / dx;
        u = std::clamp(u, 0.0, double(N - 1));
        int i = std::min(int(std::floor(u)), N - 2);
        double f = u - i;
        i0[d] = i;
        w[d][0] = 1.0 - f;
        w[d][1] = f;
    }
    if (grid.dimension == 1) return w[0][0] * values[i0[0]] + w[0][1] * values[i0[0] + 1];
    double acc = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) acc += w[0][a] * w[1][b] * values[std::size_t(i0[0] + a) * N + (i0[1] + b)];
    return acc;
}

}  // namespace sres
