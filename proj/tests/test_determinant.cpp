#include "sres/determinant.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sres;

namespace {

CMat random_matrix(int n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CMat A(n, n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = scale * cplx(nd(rng), nd(rng));
    return A;
}

CMat diag(std::initializer_list<cplx> d) {
    CMat A = CMat::Zero(Eigen::Index(d.size()), Eigen::Index(d.size()));
    Eigen::Index i = 0;
    for (cplx v : d) A(i, i) = v, ++i;
    return A;
}

std::vector<cplx> spectrum(const CMat& A) {
    const auto ev = Eigen::ComplexEigenSolver<CMat>(A, false).eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

double wrap_pi(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

TEST_SUITE("determinant") {

TEST_CASE("equal matrices have a vanishing relative determinant") {
    const CMat A = random_matrix(7, 1);
    CHECK(std::abs(rel_logdet(A, A, cplx(0.3, 0.1))) < 1e-12);
}

TEST_CASE("diagonal relative determinant") {
    const cplx v = rel_logdet(diag({1.0, 2.0}), diag({1.0, 3.0}), 0.0);
    CHECK(v.real() == doctest::Approx(std::log(2.0 / 3.0)));
    CHECK(std::abs(wrap_pi(v.imag())) < 1e-14);
}

TEST_CASE("log determinant agrees with the eigenvalue product") {
    const CMat A = random_matrix(12, 3);
    const cplx z(0.2, -0.4);
    cplx acc = 0.0;
    for (cplx l : spectrum(A)) acc += std::log(l - z);
    const cplx ld = logdet_shifted(A, z);
    CHECK(ld.real() == doctest::Approx(acc.real()).epsilon(1e-10));
    CHECK(std::abs(wrap_pi(ld.imag() - acc.imag())) < 1e-9);
}

TEST_CASE("singular denominator is an error, singular numerator is minus infinity") {
    const CMat S = diag({1.0, 0.0});
    const CMat R = diag({1.0, 2.0});
    try {
        rel_logdet(R, S, 0.0);
        FAIL("expected SingularDenominator");
    } catch (const Error& e) {
        CHECK(e.code() == "SingularDenominator");
    }
    CHECK(std::isinf(rel_logdet(S, R, 0.0).real()));
    CHECK(rel_logdet(S, R, 0.0).real() < 0.0);
}

TEST_CASE("hessenberg determinant agrees with the LU determinant") {
    const CMat A = random_matrix(40, 5);
    const HessenbergDet hd(A);
    for (cplx z : {cplx(0.0, 0.0), cplx(1.5, -0.3), cplx(-2.0, 4.0)}) {
        const cplx a = hd.logdet(z), b = logdet_shifted(A, z);
        CHECK(a.real() == doctest::Approx(b.real()).epsilon(1e-10));
        CHECK(std::abs(wrap_pi(a.imag() - b.imag())) < 1e-9);
    }
}

TEST_CASE("trace norm of a rank one product") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    CVec u(9), v(9);
    for (auto& x : u) x = cplx(nd(rng), nd(rng));
    for (auto& x : v) x = cplx(nd(rng), nd(rng));
    CHECK(trace_norm(u * v.adjoint()) == doctest::Approx(u.norm() * v.norm()).epsilon(1e-12));
}

TEST_CASE("trace norm of a unitary matrix is its side") {
    const CMat A = random_matrix(15, 4);
    const CMat Q = Eigen::HouseholderQR<CMat>(A).householderQ();
    CHECK(trace_norm(Q) == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("low rank trace norm matches the dense one") {
    const CMat X = random_matrix(60, 6).leftCols(4);
    const std::vector<double> d{0.5, -0.2, 1.3, -0.01};
    const RVec w = Eigen::Map<const RVec>(d.data(), 4);
    const CMat M = X * w.cast<cplx>().asDiagonal() * X.adjoint();
    CHECK(trace_norm_lowrank(X, d) == doctest::Approx(trace_norm(M)).epsilon(1e-10));
}

TEST_CASE("winding of a single zero against a far pole") {
    const auto w = winding_count(diag({0.3}), diag({5.0}), Circle{0.0, 1.0});
    CHECK(w.winding == 1);
    CHECK(w.winding_num == 1);
    CHECK(w.winding_den == 0);
}

TEST_CASE("winding around an empty disc is zero") {
    const CMat A = random_matrix(6, 21), B = random_matrix(6, 22);
    const auto w = winding_count(A, B, Circle{cplx(40.0, 40.0), 1.0});
    CHECK(w.winding == 0);
}

TEST_CASE("winding equals the eigenvalue count difference on random pairs") {
    for (int t = 0; t < 20; ++t) {
        const CMat A = random_matrix(6, 300 + 2 * t, 1.0 / std::sqrt(6.0));
        const CMat B = random_matrix(6, 301 + 2 * t, 1.0 / std::sqrt(6.0));
        const auto ea = spectrum(A), eb = spectrum(B);
        // keep the contour clear of both spectra
        double r = 1.0;
        for (int tries = 0; tries < 50; ++tries) {
            bool clear = true;
            for (const auto* s : {&ea, &eb})
                for (cplx z : *s) clear = clear && std::abs(std::abs(z) - r) > 1e-2;
            if (clear) break;
            r += 0.013;
        }
        const Circle c{0.0, r};
        const auto w = winding_count(A, B, c);
        CHECK(w.winding == count_inside(ea, c) - count_inside(eb, c));
    }
}

TEST_CASE("an eigenvalue on the contour exhausts the refinement") {
    const CMat A = diag({1.0, 0.2});
    const CMat B = diag({5.0, 6.0});
    try {
        winding_count(A, B, Circle{cplx(1e-13, 0.0), 1.0}, 6);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK((e.code() == "RefinementCapExceeded" || e.code() == "SingularDenominator"));
    }
}

}  // TEST_SUITE
