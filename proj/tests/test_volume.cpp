#include "sres/volume.hpp"

#include <doctest.h>

#include <cmath>

using namespace sres;

namespace {

// V = -exp(-|x|^2): the well {V < E} is the disc of radius^2 ln(-1/E), and
//   omega(E)  = pi^2 (E R^2 + 1 + E)
//   omega'(E) = pi^2 R^2
PotentialSpec gaussian_well() {
    PotentialSpec s;
    GaussianTerm t;
    t.amplitude = -1.0;
    t.width = 1.0;
    s.terms = {t};
    s.asymptotic_depth = 0.0;
    return s;
}

double gw_omega(double E) {
    const double R2 = std::log(-1.0 / E);
    return kPi * kPi * (E * R2 + 1.0 + E);
}

// frame whose saddle sits in a corner so the half-space cut never bites
SaddleFrame remote_frame() {
    SaddleFrame f;
    f.saddle = {3.9, 3.9};
    f.basis = RMat::Identity(2, 2);
    return f;
}

struct Normalized {
    PotentialSpec spec;
    SaddleFrame frame;
};

const Normalized& canonical() {
    static const Normalized n = [] {
        auto [s, f] = find_saddle_and_normalize(canonical_potential(), canonical_saddle_guess());
        return Normalized{s, f};
    }();
    return n;
}

VolumeOptions toy_options() {
    VolumeOptions o;
    o.L = 3.0;
    o.N = 600;
    o.well_point = std::array<double, 2>{0.0, 0.0};
    return o;
}

}  // namespace

TEST_SUITE("volume") {

TEST_CASE("unit ball volumes") {
    CHECK(ball_volume(1) == 2.0);
    CHECK(ball_volume(2) == doctest::Approx(kPi));
    CHECK(ball_volume(3) == doctest::Approx(4.0 * kPi / 3.0));
}

TEST_CASE("omega of the gaussian well matches its closed form") {
    const auto o = toy_options();
    for (double E : {-0.8, -0.5, -0.2}) {
        const auto v = omega(gaussian_well(), nullptr, E, o);
        CHECK(v.value == doctest::Approx(gw_omega(E)).epsilon(2e-3));
    }
}

TEST_CASE("omega prime of the gaussian well is pi times the well area") {
    const auto o = toy_options();
    for (double E : {-0.8, -0.5, -0.2}) {
        const auto v = omega_prime(gaussian_well(), nullptr, E, o);
        CHECK(v.value == doctest::Approx(kPi * kPi * std::log(-1.0 / E)).epsilon(1e-2));
    }
}

TEST_CASE("empty sublevel set gives zero volume") {
    const auto o = toy_options();
    CHECK(omega(gaussian_well(), nullptr, -1.5, o).value == 0.0);
    CHECK(omega_prime(gaussian_well(), nullptr, -1.5, o).value == 0.0);
}

TEST_CASE("central difference of omega matches omega prime") {
    const auto& c = canonical();
    VolumeOptions o;
    o.N = 500;
    const double E = -0.1 * c.spec.asymptotic_depth, dE = 2e-3;
    const double fd = (omega(c.spec, &c.frame, E + dE, o).value - omega(c.spec, &c.frame, E - dE, o).value) / (2 * dE);
    const double op = omega_prime(c.spec, &c.frame, E, o).value;
    CHECK(std::abs(fd - op) / op < 0.01);
}

TEST_CASE("omega is increasing through the saddle energy") {
    const auto& c = canonical();
    const std::vector<double> E{-0.03, -0.01, 0.0, 0.01, 0.03};
    const auto curve = volume_curve(c.spec, &c.frame, E);
    for (std::size_t k = 1; k < E.size(); ++k) CHECK(curve.omega_values[k] > curve.omega_values[k - 1]);
    for (double w : curve.omega_prime_values) CHECK(w > 0.0);
}

TEST_CASE("bounds collapse without a bump and order with one") {
    const auto& c = canonical();
    const double E = -0.0125;
    const auto b0 = omega_eps_bounds(c.spec, c.frame, 0.0, E);
    CHECK(b0.lower == b0.upper);
    CHECK(b0.upper == doctest::Approx(omega(c.spec, &c.frame, E).value));
    const auto b = omega_eps_bounds(c.spec, c.frame, 0.05, E);
    CHECK(b.lower <= b.upper);
}

TEST_CASE("bound gap scales like eps squared") {
    const auto& c = canonical();
    const double E = -0.0125;
    for (double eps : {0.1, 0.05, 0.025}) {
        const auto b = omega_eps_bounds(c.spec, c.frame, eps, E);
        const double r = (b.upper - b.lower) / (eps * eps);
        CHECK(r >= 0.0);
        CHECK(r <= 10.0);
    }
}

TEST_CASE("monte carlo volume of the toy without bump agrees with quadrature") {
    const auto o = toy_options();
    const SaddleFrame f = remote_frame();
    const auto mc = omega_eps_mc(gaussian_well(), f, 0.0, -0.5, 400000, 99, 0.5, o);
    CHECK(std::abs(mc.estimate - gw_omega(-0.5)) <= 3.0 * mc.stderr_);
}

TEST_CASE("monte carlo estimate is sandwiched and deterministic") {
    const auto& c = canonical();
    const double eps = 0.05, E = -0.0125;
    const auto b = omega_eps_bounds(c.spec, c.frame, eps, E);
    const auto mc = omega_eps_mc(c.spec, c.frame, eps, E, 200000, 5);
    CHECK(mc.estimate >= b.lower - 3.0 * mc.stderr_);
    CHECK(mc.estimate <= b.upper + 3.0 * mc.stderr_);
    const auto again = omega_eps_mc(c.spec, c.frame, eps, E, 200000, 5);
    CHECK(again.estimate == mc.estimate);
}

TEST_CASE("monte carlo below the symbol minimum is zero") {
    const auto& c = canonical();
    const auto mc = omega_eps_mc(c.spec, c.frame, 0.05, -5.0, 20000, 1);
    CHECK(mc.estimate == 0.0);
}

}  // TEST_SUITE
