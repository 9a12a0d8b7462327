#include "sres/potential.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sres;

namespace {

PotentialSpec single_well(double amplitude, double width, double depth) {
    PotentialSpec s;
    GaussianTerm t;
    t.amplitude = amplitude;
    t.width = width;
    s.terms = {t};
    s.asymptotic_depth = depth;
    return s;
}

GridSpec box(int N, double L = 4.2) {
    GridSpec g;
    g.N = N;
    g.L = L;
    g.max_size = std::size_t(-1);
    return g;
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

FillParams fill_params(double eps) {
    FillParams p;
    p.eps = eps;
    return p;
}

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("single gaussian term peaks at its amplitude") {
    const PotentialSpec s = single_well(-1.0, 1.0, 0.0);
    const cplx z[2] = {0.0, 0.0};
    CHECK(eval_potential(s, z, 0).value.real() == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("real points give real values and derivatives") {
    const auto& c = canonical();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int k = 0; k < 50; ++k) {
        const cplx z[2] = {u(rng), u(rng)};
        const auto v = eval_potential(c.spec, z, 2);
        CHECK(v.value.imag() == 0.0);
        CHECK(v.grad[0].imag() == 0.0);
        CHECK(v.hess[0][1].imag() == 0.0);
    }
}

TEST_CASE("analytic gradient and hessian agree with central differences") {
    const auto& c = canonical();
    const double step = 1e-5;
    const std::array<std::array<double, 2>, 3> pts{{{0.3, -0.7}, {1.2, 0.4}, {-2.0, 1.5}}};
    for (const auto& p : pts) {
        const cplx z[2] = {p[0], p[1]};
        const auto v = eval_potential(c.spec, z, 2);
        for (int a = 0; a < 2; ++a) {
            cplx zp[2] = {z[0], z[1]}, zm[2] = {z[0], z[1]};
            zp[a] += step;
            zm[a] -= step;
            const auto vp = eval_potential(c.spec, zp, 1), vm = eval_potential(c.spec, zm, 1);
            CHECK(v.grad[a].real() == doctest::Approx((vp.value - vm.value).real() / (2 * step)).epsilon(1e-6));
            for (int b = 0; b < 2; ++b)
                CHECK(v.hess[a][b].real() ==
                      doctest::Approx((vp.grad[b] - vm.grad[b]).real() / (2 * step)).epsilon(1e-6));
        }
    }
}

TEST_CASE("canonical potential approaches minus the asymptotic depth far out") {
    const auto& c = canonical();
    for (double phi : {0.0, 1.0, 2.5, 4.0}) {
        const double x[2] = {10.0 * std::cos(phi), 10.0 * std::sin(phi)};
        CHECK(std::abs(potential_real(c.spec, x) + c.spec.asymptotic_depth) < 1e-3);
    }
}

TEST_CASE("quadratic saddle is found at the origin with unit kappa normalization") {
    auto V = [](const double* x) {
        PotentialValue v;
        v.value = 0.5 * x[0] * x[0] - x[1] * x[1];
        v.grad = {cplx(x[0]), cplx(-2.0 * x[1])};
        v.hess = {{{cplx(1.0), cplx(0.0)}, {cplx(0.0), cplx(-2.0)}}};
        return v;
    };
    const auto [value, frame] = locate_saddle(V, 2, {0.3, -0.2}, std::array<double, 2>{0.0, -1.0});
    CHECK(std::abs(value) < 1e-14);
    CHECK(std::abs(frame.saddle[0]) < 1e-14);
    CHECK(std::abs(frame.saddle[1]) < 1e-14);
    CHECK(frame.hessian_eigenvalues[0] == doctest::Approx(1.0));
    CHECK(frame.hessian_eigenvalues[1] == doctest::Approx(-2.0));
    CHECK(frame.kappa == doctest::Approx(2.0));
    // the well point (0, -1) lies on the x_n < 0 side
    const double w[2] = {0.0, -1.0};
    CHECK(frame.to_frame(w)[1] < 0.0);
}

TEST_CASE("a minimum is rejected with WrongSignature") {
    auto V = [](const double* x) {
        PotentialValue v;
        v.value = x[0] * x[0] + x[1] * x[1];
        v.grad = {cplx(2.0 * x[0]), cplx(2.0 * x[1])};
        v.hess = {{{cplx(2.0), cplx(0.0)}, {cplx(0.0), cplx(2.0)}}};
        return v;
    };
    try {
        locate_saddle(V, 2, {0.1, 0.1});
        FAIL("expected WrongSignature");
    } catch (const Error& e) {
        CHECK(e.code() == "WrongSignature");
    }
}

TEST_CASE("normalized canonical potential vanishes at a nondegenerate saddle") {
    const auto& c = canonical();
    const cplx z[2] = {c.frame.saddle[0], c.frame.saddle[1]};
    const auto v = eval_potential(c.spec, z, 2);
    CHECK(std::abs(v.value) < 1e-12);
    CHECK(std::hypot(std::abs(v.grad[0]), std::abs(v.grad[1])) < 1e-10);
    CHECK(c.frame.hessian_eigenvalues[0] > 0.0);
    CHECK(c.frame.hessian_eigenvalues[1] < 0.0);
    // the frame maps back and forth
    const double x[2] = {0.7, -1.1};
    const auto X = c.frame.to_frame(x);
    const auto y = c.frame.from_frame(X.data());
    CHECK(y[0] == doctest::Approx(x[0]));
    CHECK(y[1] == doctest::Approx(x[1]));
}

TEST_CASE("classification below the saddle separates a bounded well from the sea") {
    const auto& c = canonical();
    const auto lab = classify_sublevel(c.spec, -0.1 * c.spec.asymptotic_depth, box(120));
    CHECK_FALSE(lab.well_empty);
    CHECK_FALSE(lab.sea_empty);
    // the well never reaches the box edge
    for (std::size_t i = 0; i < lab.labels.size(); ++i) {
        if (lab.labels[i] != Region::well) continue;
        const auto ij = lab.grid.split(i);
        CHECK((ij[0] > 0 && ij[1] > 0 && ij[0] < lab.grid.N - 1 && ij[1] < lab.grid.N - 1));
    }
}

TEST_CASE("an energy below the minimum labels everything as island") {
    const auto& c = canonical();
    const auto lab = classify_sublevel(c.spec, -10.0, box(60));
    CHECK(lab.count(Region::island) == lab.labels.size());
}

TEST_CASE("a single well without sea is reported as such") {
    const PotentialSpec s = single_well(-1.0, 1.0, 0.0);
    RegionLabels lab;
    CHECK_NOTHROW(lab = classify_sublevel(s, -0.5, box(80)));
    CHECK(lab.sea_empty);
    CHECK_FALSE(lab.well_empty);
}

TEST_CASE("the bump lifts the saddle to eps and leaves the far field alone") {
    const auto& c = canonical();
    const double eps = 0.05, alpha = 0.5;
    CHECK(v_eps(c.spec, c.frame, eps, alpha, c.frame.saddle.data()) == doctest::Approx(eps).epsilon(1e-12));
    const double x[2] = {1.0, 1.0};
    CHECK(v_eps(c.spec, c.frame, 0.0, alpha, x) == potential_real(c.spec, x));
    const double r = 10.0 * std::sqrt(eps) / alpha;
    const double far[2] = {c.frame.saddle[0] + r, c.frame.saddle[1]};
    CHECK(v_eps(c.spec, c.frame, eps, alpha, far) - potential_real(c.spec, far) < eps * std::exp(-100.0));
}

TEST_CASE("neck gap closes at F = 0 and approaches 2 sqrt(eps F)") {
    const auto& c = canonical();
    CHECK(neck_gap(c.spec, c.frame, 0.05, 0.0, 0.5, true) == doctest::Approx(0.0));
    std::vector<double> dev;
    for (double eps : {0.1, 0.05, 0.025}) {
        const double g = neck_gap(c.spec, c.frame, eps, 1.0, 0.5, false);
        dev.push_back(std::abs(g / (2.0 * std::sqrt(eps)) - 1.0));
    }
    CHECK(dev[1] < dev[0]);
    CHECK(dev[2] < dev[1]);
}

TEST_CASE("scale functions at the origin and at infinity") {
    const ScaleFunctions sf{0.05};
    const double o[2] = {0.0, 0.0};
    CHECK(sf.r(o, 2) == doctest::Approx(std::sqrt(0.05)));
    CHECK(sf.R(o, 2) == doctest::Approx(std::sqrt(0.05)));
    const double far[2] = {1e4, 0.0};
    CHECK(sf.r(far, 2) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sf.R(far, 2) / 1e4 == doctest::Approx(1.0).epsilon(1e-6));
    const double xi[2] = {0.3, 0.4};
    const double x[2] = {0.5, -0.2};
    CHECK(sf.rt(x, xi, 2) * sf.rt(x, xi, 2) == doctest::Approx(sf.r(x, 2) * sf.r(x, 2) + 0.25));
}

TEST_CASE("distance transform agrees with brute force") {
    GridSpec g = box(23, 2.0);
    std::mt19937_64 rng(11);
    std::bernoulli_distribution coin(0.05);
    std::vector<char> in(g.size());
    for (auto& v : in) v = coin(rng);
    in[17] = 1;
    const auto d = distance_to_set(g, in);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto xi = g.point(i);
        double best = 1e300;
        for (std::size_t j = 0; j < g.size(); ++j)
            if (in[j]) {
                const auto xj = g.point(j);
                best = std::min(best, std::hypot(xi[0] - xj[0], xi[1] - xj[1]));
            }
        CHECK(d[i] == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("sea fill vanishes on the well and keeps a positive margin") {
    const auto& c = canonical();
    const GridSpec g = box(160);
    const FillParams p = fill_params(0.05);
    const SeaFill sea = build_sea_fill(c.spec, c.frame, p, g);
    const FillGeometry geom = fill_geometry(c.spec, c.frame, p, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(sea.W.values[i] >= 0.0);
        if (geom.labels.labels[i] == Region::well) CHECK(sea.W.values[i] == 0.0);
    }
    CHECK(sea.min_ratio > 0.0);
    CHECK(std::isfinite(sea.C));
}

TEST_CASE("sea fill constant is stable under grid refinement") {
    const auto& c = canonical();
    const FillParams p = fill_params(0.05);
    const double c1 = build_sea_fill(c.spec, c.frame, p, box(200)).C;
    const double c2 = build_sea_fill(c.spec, c.frame, p, box(280)).C;
    CHECK(std::abs(c1 - c2) / c2 < 0.05);
}

TEST_CASE("well fill is supported near the well with the cutoff in [0, 1]") {
    const auto& c = canonical();
    const GridSpec g = box(160);
    const FillParams p = fill_params(0.05);
    const WellFill w = build_well_fill(c.spec, c.frame, p, g);
    const FillGeometry geom = fill_geometry(c.spec, c.frame, p, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(w.beta.values[i] >= 0.0);
        CHECK(w.chiU.values[i] >= 0.0);
        CHECK(w.chiU.values[i] <= 1.0);
        if (geom.labels.labels[i] == Region::sea) CHECK(w.beta.values[i] == 0.0);
        if (geom.dist_well[i] <= 0.5 * p.r) CHECK(w.chiU.values[i] == 1.0);
        if (geom.dist_well[i] >= 0.75 * p.r) CHECK(w.chiU.values[i] == 0.0);
    }
    CHECK(w.beta_over_r2_min > 0.0);
    CHECK(w.off_sea_margin_min >= 0.0);
    CHECK(check_filled_symbol(w, geom, p) >= 0.0);
}

TEST_CASE("gaussian fill dominates its own momentum loss") {
    // beta e^{-xi^2/(2 beta)} + xi^2/2 >= beta
    const double beta = 0.3;
    for (int k = -200; k <= 200; ++k) {
        const double xi = 0.025 * k;
        CHECK(beta * std::exp(-xi * xi / (2.0 * beta)) + 0.5 * xi * xi - beta >= -1e-15);
    }
}

TEST_CASE("potential spec survives a JSON round trip") {
    const auto& c = canonical();
    const PotentialSpec back = potential_from_json(potential_to_json(c.spec));
    const double x[2] = {0.4, -1.3};
    CHECK(potential_real(back, x) == potential_real(c.spec, x));
    CHECK(back.energy_shift == c.spec.energy_shift);
}

}  // TEST_SUITE
