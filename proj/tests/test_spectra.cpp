#include "sres/spectra.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace sres;

namespace {

OperatorMatrix wrap(const CMat& A, bool hermitian) {
    OperatorMatrix op;
    op.A = A;
    op.hermitian = hermitian;
    op.grid.dimension = 1;
    op.grid.N = int(A.rows());
    return op;
}

CMat random_matrix(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CMat A(n, n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = cplx(nd(rng), nd(rng));
    return A;
}

std::vector<double> sorted_real(const std::vector<cplx>& v) {
    std::vector<double> r;
    for (auto z : v) r.push_back(z.real());
    std::sort(r.begin(), r.end());
    return r;
}

}  // namespace

TEST_SUITE("spectra") {

TEST_CASE("identity and diagonal hermitian spectra") {
    const auto r = eig_hermitian(wrap(CMat::Identity(5, 5), true));
    for (auto z : r.eigenvalues) CHECK(z.real() == doctest::Approx(1.0));
    CMat D = CMat::Zero(3, 3);
    D.diagonal() << 3.0, 1.0, 2.0;
    const auto d = eig_hermitian(wrap(D, true));
    CHECK(d.eigenvalues[0].real() == doctest::Approx(1.0));
    CHECK(d.eigenvalues[1].real() == doctest::Approx(2.0));
    CHECK(d.eigenvalues[2].real() == doctest::Approx(3.0));
}

TEST_CASE("non hermitian input is refused by the hermitian solver") {
    CMat A = CMat::Zero(2, 2);
    A(0, 1) = 1.0;
    try {
        eig_hermitian(wrap(A, true));
        FAIL("expected NotHermitian");
    } catch (const Error& e) {
        CHECK(e.code() == "NotHermitian");
    }
}

TEST_CASE("hermitian eigenvalues sum to the trace and vectors are orthonormal") {
    for (int n : {20, 300}) {
        CMat A = random_matrix(n, 7 + n);
        A = (A + A.adjoint()).eval();
        EigOptions eo;
        eo.vectors = true;
        const auto r = eig_hermitian(wrap(A, true), eo);
        double s = 0.0;
        for (auto z : r.eigenvalues) s += z.real();
        CHECK(std::abs(s - A.trace().real()) <= 1e-9 * A.cwiseAbs().sum() / n);
        CHECK((r.vectors.adjoint() * r.vectors - CMat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(r.max_residual() < 1e-9 * A.norm());
    }
}

TEST_CASE("real symmetric matrices keep orthonormal eigenvectors at large size") {
    const int n = 400;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    RMat R(n, n);
    for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = nd(rng);
    const CMat A = (R + R.transpose()).cast<cplx>();
    EigOptions eo;
    eo.vectors = true;
    const auto r = eig_hermitian(wrap(A, true), eo);
    CHECK((r.vectors.adjoint() * r.vectors - CMat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::Index k = 123;
    CHECK((A * r.vectors.col(k) - r.eigenvalues[k] * r.vectors.col(k)).norm() < 1e-9 * A.norm());
}

TEST_CASE("weyl interlacing under a positive rank one update") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        CMat A = random_matrix(20, 100 + trial);
        A = (A + A.adjoint()).eval();
        CVec u(20);
        for (auto& x : u) x = cplx(nd(rng), nd(rng));
        const auto a = sorted_real(eig_hermitian(wrap(A, true)).eigenvalues);
        const auto b = sorted_real(eig_hermitian(wrap(A + u * u.adjoint(), true)).eigenvalues);
        for (int k = 0; k < 20; ++k) {
            CHECK(b[k] >= a[k] - 1e-10);
            if (k + 1 < 20) CHECK(b[k] <= a[k + 1] + 1e-10);
        }
    }
}

TEST_CASE("companion matrix of z^2 + 1") {
    CMat C(2, 2);
    C << 0.0, -1.0, 1.0, 0.0;
    auto ev = eig_general(wrap(C, false)).eigenvalues;
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); });
    CHECK(std::abs(ev[0] - cplx(0, -1)) < 1e-14);
    CHECK(std::abs(ev[1] - cplx(0, 1)) < 1e-14);
}

TEST_CASE("upper triangular matrix has its diagonal as spectrum") {
    CMat T = random_matrix(8, 3).triangularView<Eigen::Upper>();
    auto ev = eig_general(wrap(T, false)).eigenvalues;
    for (Eigen::Index i = 0; i < 8; ++i) {
        double best = 1e300;
        for (auto z : ev) best = std::min(best, std::abs(z - T(i, i)));
        CHECK(best < 1e-12);
    }
}

TEST_CASE("general eigenvalues sum to the trace") {
    const CMat A = random_matrix(6, 42);
    const auto r = eig_general(wrap(A, false));
    cplx s = 0.0;
    for (auto z : r.eigenvalues) s += z;
    CHECK(std::abs(s - A.trace()) < 1e-10);
    CHECK(!r.checked.empty());
}

TEST_CASE("general and hermitian solvers agree on hermitian input") {
    CMat A = random_matrix(30, 9);
    A = (A + A.adjoint()).eval();
    const auto h = sorted_real(eig_hermitian(wrap(A, true)).eigenvalues);
    const auto g = eig_general(wrap(A, false)).eigenvalues;
    const auto gr = sorted_real(g);
    for (int k = 0; k < 30; ++k) CHECK(std::abs(h[k] - gr[k]) < 1e-9);
    for (auto z : g) CHECK(std::abs(z.imag()) < 1e-9);
}

TEST_CASE("parity blocks reproduce the full spectrum") {
    GridSpec g;
    g.N = 12;
    PotentialSpec s;
    GaussianTerm t;
    t.amplitude = -0.5;
    t.width = 2.0;
    s.terms = {t};
    s.asymptotic_depth = 0.1;
    const auto op = assemble_schrodinger(s, g);
    EigOptions with, without;
    without.parity = false;
    const auto a = eig_hermitian(op, with);
    const auto b = eig_hermitian(op, without);
    CHECK(a.parity_split);
    for (std::size_t k = 0; k < a.eigenvalues.size(); ++k)
        CHECK(std::abs(a.eigenvalues[k] - b.eigenvalues[k]) < 1e-10);
}

TEST_CASE("window membership is half open and additive") {
    const WindowSpec w{-1.0, 1.0, -1.0, 0.0, "R"};
    CHECK(w.contains(cplx(-1.0, -1.0)));
    CHECK_FALSE(w.contains(cplx(1.0, -0.5)));
    CHECK_FALSE(w.contains(cplx(0.0, 0.0)));
    CHECK(count_in_box({}, w) == 0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<cplx> pts(500);
    for (auto& z : pts) z = cplx(u(rng), u(rng));
    const WindowSpec left{-1.0, 0.2, -1.0, 0.0, "R"}, right{0.2, 1.0, -1.0, 0.0, "R"};
    CHECK(count_in_box(pts, w) == count_in_box(pts, left) + count_in_box(pts, right));
}

TEST_CASE("stable eigenvalues are kept and drifting ones dropped") {
    const std::vector<double> thetas{0.5, 0.6, 0.7};
    const cplx fixed(-0.01, -0.001);
    std::vector<std::vector<cplx>> spectra;
    for (double th : thetas) spectra.push_back({fixed, cplx(0.02, -0.1 * th)});
    const WindowSpec w{-0.05, 0.05, -0.1, 1e-3, "R"};
    const auto rs = resonances_from_spectra(spectra, thetas, w, 0.26, 1e-4);
    REQUIRE(rs.resonances.size() == 1);
    CHECK(std::abs(rs.resonances[0] - fixed) < 1e-15);
    CHECK(rs.max_imag() <= 1e-8);
}

TEST_CASE("free operator has no resonances") {
    PotentialSpec s;
    s.terms.clear();
    s.asymptotic_depth = 0.26;
    GridSpec g;
    g.N = 40;  // resolves the momentum sqrt(0.26) of the window energies
    g.h = 0.05;
    const WindowSpec w{-0.025, 0.025, -0.005, 1e-4, "R"};
    const auto rs = extract_resonances(s, g, {0.5, 0.6}, w, 5e-4);
    CHECK(rs.resonances.empty());
}

TEST_CASE("shallow window below the rotated continuum is reported") {
    const WindowSpec deep{-0.3, 0.3, -5.0, 0.0, "R"};
    CHECK_FALSE(window_covered(deep, 0.26, 0.01));
    const WindowSpec shallow{-0.02, 0.02, -0.005, 0.0, "R"};
    CHECK(window_covered(shallow, 0.26, 0.5));
}

TEST_CASE("matching identical lists gives zero distance") {
    const std::vector<cplx> v{{-0.015, 0.0}, {-0.012, 0.0}, {-0.011, 0.0}};
    const WindowSpec w{-0.02, -0.005, -1.0, 1.0, "R"};
    const auto m = match_spectra(v, v, w, 0.05);
    CHECK(m.pairs.size() == 3);
    CHECK(m.max_distance == 0.0);
    CHECK(m.unmatched_interior == 0);
}

TEST_CASE("matching disjoint lists leaves everything unmatched") {
    const WindowSpec w{-0.02, 0.02, -1.0, 1.0, "R"};
    const auto m = match_spectra({cplx(-0.1, 0.0)}, {cplx(0.1, 0.0)}, w, 0.05);
    CHECK(m.pairs.empty());
}

TEST_CASE("surgery target rule and gap") {
    const double eps = 0.05, delta = 0.1, A = -0.4;
    CHECK(surgery_target(A * eps - 0.1 * delta * eps, A, eps, delta) == doctest::Approx(A * eps - 0.5 * delta * eps));
    CHECK(surgery_target(A * eps + 0.1 * delta * eps, A, eps, delta) == doctest::Approx(A * eps + 0.5 * delta * eps));

    // diagonal toy: the eigenvectors are unit vectors and chi_U = 1
    const int n = 9;
    CMat D = CMat::Zero(n, n);
    std::vector<double> mu{-0.03, -0.0205, -0.0201, -0.0198, -0.015, -0.0102, -0.0099, -0.005, 0.0};
    for (int i = 0; i < n; ++i) D(i, i) = mu[i];
    OperatorMatrix op = wrap(D, true);
    op.grid.N = n;
    EigOptions eo;
    eo.vectors = true;
    eo.parity = false;
    const auto pint = eig_hermitian(op, eo);
    GridField one;
    one.grid = op.grid;
    one.values.assign(n, 1.0);
    SurgeryLevels lv;
    lv.A = A;
    lv.B = -0.2;
    const auto s = apply_surgery(pint, op, one, eps, delta, lv);
    CHECK(s.moved == 5);
    const auto after = eig_hermitian(s.op).eigenvalues;
    for (double L : {A, -0.2}) {
        const WindowSpec gap{L * eps - delta * eps / 3.0, L * eps + delta * eps / 3.0, -1.0, 1.0, "gap"};
        CHECK(count_in_box(after, gap) == 0);
    }
    CHECK(s.op.hermitian_defect() < 1e-15);
}

TEST_CASE("surgery with zero delta changes nothing") {
    CMat D = CMat::Zero(3, 3);
    D.diagonal() << -0.02, -0.01, 0.0;
    OperatorMatrix op = wrap(D, true);
    EigOptions eo;
    eo.vectors = true;
    eo.parity = false;
    const auto pint = eig_hermitian(op, eo);
    GridField one;
    one.grid = op.grid;
    one.values.assign(3, 1.0);
    const auto s = apply_surgery(pint, op, one, 0.05, 0.0, SurgeryLevels{});
    CHECK(s.empty);
    CHECK(s.op.A == op.A);
}

}  // TEST_SUITE
