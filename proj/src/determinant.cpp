#include "sres/determinant.hpp"

#define lapack_complex_double std::complex<double>
#define lapack_complex_float std::complex<float>
#include <lapacke.h>

#include <cmath>
#include <fstream>
#include <limits>

namespace sres {

namespace {

constexpr double kPivotTol = 1e-14;

double max_abs(const CMat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

double wrap(double a) {
    a = std::remainder(a, 2.0 * kPi);
    return a <= -kPi ? a + 2.0 * kPi : a;
}

// returns -inf in the real part instead of throwing when allow_singular is set
cplx logdet_lu(const CMat& A, cplx z, bool allow_singular) {
    const lapack_int n = lapack_int(A.rows());
    CMat M = A;
    M.diagonal().array() -= z;
    const double scale = std::max({max_abs(A), std::abs(z), 1e-300});
    std::vector<lapack_int> piv(std::max<lapack_int>(n, 1));
    const lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, M.data(), n, piv.data());
    if (info < 0) throw Error("NoConvergence", "zgetrf rejected its arguments");
    cplx acc = 0.0;
    long swaps = 0;
    for (lapack_int i = 0; i < n; ++i) {
        const cplx u = M(i, i);
        if (std::abs(u) < kPivotTol * scale) {
            if (allow_singular) return {-std::numeric_limits<double>::infinity(), 0.0};
            throw Error("SingularDenominator", "z is numerically an eigenvalue of the denominator");
        }
        acc += std::log(u);
        if (piv[i] != i + 1) ++swaps;
    }
    return acc + cplx(0.0, kPi * double(swaps % 2));
}

}  // namespace

cplx logdet_shifted(const CMat& A, cplx z) { return logdet_lu(A, z, false); }

cplx rel_logdet(const CMat& Anum, const CMat& Aden, cplx z) {
    if (Anum.rows() != Aden.rows()) throw Error("InvalidConfig", "determinant ratio of matrices of different sides");
    const cplx den = logdet_lu(Aden, z, false);
    return logdet_lu(Anum, z, true) - den;
}

cplx rel_logdet(const OperatorMatrix& Anum, const OperatorMatrix& Aden, cplx z) {
    return rel_logdet(Anum.A, Aden.A, z);
}

HessenbergDet::HessenbergDet(const CMat& A) : n_(A.rows()) {
    CMat H = A;
    const lapack_int n = lapack_int(n_);
    if (n > 1) {
        std::vector<cplx> tau(n - 1);
        const lapack_int info = LAPACKE_zgehrd(LAPACK_COL_MAJOR, n, 1, n, H.data(), n, tau.data());
        if (info != 0) throw Error("NoConvergence", "Hessenberg reduction failed");
    }
    scale_ = std::max(max_abs(A), 1e-300);
    rows_.assign(std::size_t(n_ * n_), 0.0);
    for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index j = std::max<Eigen::Index>(0, i - 1); j < n_; ++j) rows_[std::size_t(i * n_ + j)] = H(i, j);
}

cplx HessenbergDet::logdet(cplx z) const {
    const Eigen::Index n = n_;
    const double tol = kPivotTol * std::max(scale_, std::abs(z));
    // row k of the partially eliminated matrix; only columns >= k are live
    std::vector<cplx> cur(rows_.begin(), rows_.begin() + n);
    std::vector<cplx> next(static_cast<std::size_t>(n));
    cur[0] -= z;
    cplx acc = 0.0;
    long swaps = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k + 1 < n) {
            const cplx* src = rows_.data() + (k + 1) * n;
            for (Eigen::Index j = k; j < n; ++j) next[j] = src[j];
            next[k + 1] -= z;
            if (std::abs(next[k]) > std::abs(cur[k])) {
                std::swap(cur, next);
                ++swaps;
            }
        }
        const cplx p = cur[k];
        if (std::abs(p) < tol) throw Error("SingularDenominator", "z is numerically an eigenvalue");
        acc += std::log(p);
        if (k + 1 < n) {
            const cplx l = next[k] / p;
            for (Eigen::Index j = k + 1; j < n; ++j) next[j] -= l * cur[j];
            std::swap(cur, next);
        }
    }
    return acc + cplx(0.0, kPi * double(swaps % 2));
}

double trace_norm(const CMat& A) {
    if (A.size() == 0) return 0.0;
    CMat M = A;
    const lapack_int m = lapack_int(M.rows()), n = lapack_int(M.cols());
    std::vector<double> s(std::size_t(std::min(m, n)));
    const lapack_int info =
        LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, M.data(), m, s.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw Error("NoConvergence", "singular value decomposition failed");
    double t = 0.0;
    for (double v : s) t += v;
    return t;
}

double trace_norm_lowrank(const CMat& X, const std::vector<double>& d) {
    if (X.cols() != Eigen::Index(d.size())) throw Error("InvalidConfig", "factor and weights disagree in rank");
    if (X.cols() == 0) return 0.0;
    Eigen::HouseholderQR<CMat> qr(X);
    const Eigen::Index k = std::min(X.rows(), X.cols());
    const CMat R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Eigen::Map<const RVec> w(d.data(), Eigen::Index(d.size()));
    const CMat M = R * w.cast<cplx>().asDiagonal() * R.adjoint();
    return trace_norm(M);
}

namespace {

struct Walker {
    const HessenbergDet& num;
    const HessenbergDet& den;
    Circle c;
    int cap;
    WindingResult& out;
    double sum_num = 0.0, sum_den = 0.0;

    cplx at(double phi) const { return c.center + c.radius * std::exp(cplx(0.0, phi)); }

    void segment(double pa, cplx na, cplx da, double pb, cplx nb, cplx db, int depth) {
        const double dn = wrap(nb.imag() - na.imag());
        const double dd = wrap(db.imag() - da.imag());
        if (std::abs(dn) >= 0.5 * kPi || std::abs(dd) >= 0.5 * kPi) {
            if (depth >= cap)
                throw Error("RefinementCapExceeded", "argument still jumps after the maximal refinement; "
                                                     "an eigenvalue lies close to the contour");
            const double pm = 0.5 * (pa + pb);
            const cplx zm = at(pm);
            const cplx nm = num.logdet(zm), dm = den.logdet(zm);
            segment(pa, na, da, pm, nm, dm, depth + 1);
            segment(pm, nm, dm, pb, nb, db, depth + 1);
            return;
        }
        out.max_depth = std::max(out.max_depth, depth);
        sum_num += dn;
        sum_den += dd;
        DetSample s;
        s.z = at(pb);
        s.logabs = nb.real() - db.real();
        s.arg_increment = dn - dd;
        out.samples.push_back(s);
    }
};

}  // namespace

WindingResult winding_count(const CMat& Anum, const CMat& Aden, const Circle& circle, int max_refine) {
    if (!(circle.radius > 0.0)) throw Error("InvalidConfig", "circle radius must be positive");
    const HessenbergDet num(Anum), den(Aden);
    WindingResult out;
    Walker w{num, den, circle, max_refine, out};
    const int start = 64;
    std::vector<double> phi(start + 1);
    std::vector<cplx> ln(start + 1), ld(start + 1);
    for (int k = 0; k <= start; ++k) {
        phi[k] = 2.0 * kPi * k / start;
        if (k == start) {
            ln[k] = ln[0];
            ld[k] = ld[0];
        } else {
            const cplx z = w.at(phi[k]);
            ln[k] = num.logdet(z);
            ld[k] = den.logdet(z);
        }
    }
    for (int k = 0; k < start; ++k) w.segment(phi[k], ln[k], ld[k], phi[k + 1], ln[k + 1], ld[k + 1], 0);
    out.winding_num = std::lround(w.sum_num / (2.0 * kPi));
    out.winding_den = std::lround(w.sum_den / (2.0 * kPi));
    out.winding = out.winding_num - out.winding_den;
    return out;
}

WindingResult winding_count(const OperatorMatrix& Anum, const OperatorMatrix& Aden, const Circle& circle,
                            int max_refine) {
    return winding_count(Anum.A, Aden.A, circle, max_refine);
}

long count_inside(const std::vector<cplx>& values, const Circle& circle) {
    long c = 0;
    for (const cplx& v : values)
        if (std::abs(v - circle.center) < circle.radius) ++c;
    return c;
}

void write_contour_csv(const std::string& path, const std::vector<DetSample>& samples) {
    std::ofstream f(path);
    if (!f) throw Error("IOError", "cannot write " + path);
    f.precision(15);
    f << "re_z,im_z,logabs,arg\n";
    double arg = 0.0;
    for (const auto& s : samples) {
        arg += s.arg_increment;
        f << s.z.real() << ',' << s.z.imag() << ',' << s.logabs << ',' << arg << '\n';
    }
}

}  // namespace sres
