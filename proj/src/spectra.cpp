#include "sres/spectra.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#define lapack_complex_double std::complex<double>
#define lapack_complex_float std::complex<float>
#include <lapacke.h>

namespace sres {

double SpectrumResult::max_residual() const {
    double m = 0.0;
    for (double r : residual_norms) m = std::max(m, r);
    return m;
}

double ResonanceSet::max_imag() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : resonances) m = std::max(m, z.imag());
    return m;
}

CVec ParityBlocks::lift(const CVec& w, bool even_block) const {
    CVec v = CVec::Zero(Eigen::Index(N) * inner);
    const double s = 1.0 / std::sqrt(2.0);
    const int count = even_block ? N / 2 + 1 : N / 2 - 1;
    for (int ia = 0; ia < count; ++ia) {
        const int p = even_block ? ia : ia + 1;
        const int q = (N - p) % N;
        for (int j = 0; j < inner; ++j) {
            const cplx x = w[Eigen::Index(ia) * inner + j];
            if (p == q) {
                v[Eigen::Index(p) * inner + j] = x;
            } else {
                v[Eigen::Index(p) * inner + j] = s * x;
                v[Eigen::Index(q) * inner + j] = (even_block ? s : -s) * x;
            }
        }
    }
    return v;
}

std::optional<ParityBlocks> parity_blocks(const CMat& A, const GridSpec& grid, double rel_tol) {
    const int N = grid.N;
    const int inner = grid.dimension == 2 ? N : 1;
    if (A.rows() != Eigen::Index(N) * inner || N < 4) return std::nullopt;
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    for (int p = 0; p < N; ++p) {
        const int rp = (N - p) % N;
        for (int q = 0; q < N; ++q) {
            const int rq = (N - q) % N;
            const double d = (A.block(Eigen::Index(p) * inner, Eigen::Index(q) * inner, inner, inner) -
                              A.block(Eigen::Index(rp) * inner, Eigen::Index(rq) * inner, inner, inner))
                                 .cwiseAbs()
                                 .maxCoeff();
            if (d > rel_tol * scale) return std::nullopt;
        }
    }
    ParityBlocks pb;
    pb.N = N;
    pb.inner = inner;
    const double s = 1.0 / std::sqrt(2.0);
    // members of each symmetric / antisymmetric basis vector on the reflected axis
    auto members = [&](int ia, bool even) {
        std::vector<std::pair<int, double>> m;
        const int p = even ? ia : ia + 1;
        const int q = (N - p) % N;
        if (p == q) {
            m.push_back({p, 1.0});
        } else {
            m.push_back({p, s});
            m.push_back({q, even ? s : -s});
        }
        return m;
    };
    for (int blk = 0; blk < 2; ++blk) {
        const bool even = blk == 0;
        const int count = even ? N / 2 + 1 : N / 2 - 1;
        CMat B(Eigen::Index(count) * inner, Eigen::Index(count) * inner);
        for (int ia = 0; ia < count; ++ia) {
            const auto ma = members(ia, even);
            for (int ib = 0; ib < count; ++ib) {
                const auto mb = members(ib, even);
                auto blkref = B.block(Eigen::Index(ia) * inner, Eigen::Index(ib) * inner, inner, inner);
                blkref.setZero();
                for (const auto& [p, cp] : ma)
                    for (const auto& [q, cq] : mb)
                        blkref += (cp * cq) * A.block(Eigen::Index(p) * inner, Eigen::Index(q) * inner, inner, inner);
            }
        }
        (even ? pb.even : pb.odd) = std::move(B);
    }
    return pb;
}

namespace {

struct HermSolve {
    RVec w;
    CMat V;
};

HermSolve herm_solve(const CMat& B, bool vectors) {
    const lapack_int n = lapack_int(B.rows());
    HermSolve out;
    out.w.resize(n);
    if (n == 0) return out;
    // Eigenvalues alone go through dsyevd/zheevd.  Vectors go through the
    // MRRR driver, which never calls dgemm: OpenBLAS 0.3.20 picks Cooper Lake
    // kernels on this class of CPU and their dgemm returns wrong products,
    // which spoils the divide and conquer back transformation.
    if (!vectors) {
        if (B.imag().cwiseAbs().maxCoeff() == 0.0) {
            RMat R = B.real();
            const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, R.data(), n, out.w.data());
            if (info != 0) throw Error("NoConvergence", "dsyevd failed, info " + std::to_string(info));
        } else {
            CMat C = B;
            const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, C.data(), n, out.w.data());
            if (info != 0) throw Error("NoConvergence", "zheevd failed, info " + std::to_string(info));
        }
        return out;
    }
    CMat C = B;
    out.V.resize(n, n);
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * std::size_t(n));
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n, C.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                                           out.w.data(), out.V.data(), n, support.data());
    if (info != 0 || found != n) throw Error("NoConvergence", "zheevr failed, info " + std::to_string(info));
    return out;
}

std::vector<cplx> general_solve(const CMat& B) {
    const lapack_int n = lapack_int(B.rows());
    if (n == 0) return {};
    CMat C = B;
    std::vector<cplx> w(n);
    const lapack_int info =
        LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, C.data(), n, w.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw Error("NoConvergence", "zgeev QR sweep failed, info " + std::to_string(info));
    return w;
}

// two steps of inverse iteration at a slightly perturbed shift
double inverse_iteration_residual(const CMat& B, cplx lambda, std::mt19937_64& rng) {
    const lapack_int n = lapack_int(B.rows());
    const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
    const cplx sigma = lambda + cplx(1e-13, 1e-13) * scale;
    CMat M = B;
    M.diagonal().array() -= sigma;
    std::vector<lapack_int> piv(n);
    const lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, M.data(), n, piv.data());
    if (info < 0) throw Error("NoConvergence", "zgetrf failed in residual check");
    std::normal_distribution<double> nd;
    CVec x(n);
    for (lapack_int i = 0; i < n; ++i) x[i] = cplx(nd(rng), nd(rng));
    for (int it = 0; it < 3; ++it) {
        x.normalize();
        LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, 1, M.data(), n, piv.data(), x.data(), n);
    }
    x.normalize();
    return (B * x - lambda * x).norm();
}

std::size_t sample_count(std::size_t count, Eigen::Index side, const EigOptions& opt) {
    std::size_t k = std::size_t(std::ceil(opt.sample_fraction * double(count)));
    std::size_t cap = opt.max_samples;
    if (cap == 0) cap = side <= 600 ? count : (side <= 1500 ? 8 : 2);
    return std::min(std::max<std::size_t>(k, count ? 1 : 0), std::min(cap, count));
}

struct Piece {
    const CMat* B;
    std::vector<cplx> w;
    std::vector<CVec> vec;  // lifted vectors if requested
};

}  // namespace

SpectrumResult eig_hermitian(const OperatorMatrix& op, const EigOptions& opt) {
    const double scale = std::max(1.0, op.A.cwiseAbs().maxCoeff());
    if (!op.hermitian || op.hermitian_defect() > 1e-12 * scale)
        throw Error("NotHermitian", "matrix is not Hermitian to 1e-12");
    SpectrumResult res;
    res.side = op.side();
    res.provenance = op.provenance;
    res.theta = op.grid.theta;
    res.hermitian = true;

    std::optional<ParityBlocks> pb;
    if (opt.parity) pb = parity_blocks(op.A, op.grid);
    struct Entry {
        double w;
        int blk;
        Eigen::Index col;
    };
    std::vector<Entry> all;
    std::vector<HermSolve> solves;
    std::vector<const CMat*> mats;
    if (pb) {
        res.parity_split = true;
        mats = {&pb->even, &pb->odd};
    } else {
        mats = {&op.A};
    }
    for (std::size_t b = 0; b < mats.size(); ++b) {
        solves.push_back(herm_solve(*mats[b], opt.vectors));
        for (Eigen::Index i = 0; i < solves.back().w.size(); ++i) all.push_back({solves.back().w[i], int(b), i});
    }
    std::sort(all.begin(), all.end(), [](const Entry& x, const Entry& y) { return x.w < y.w; });
    res.eigenvalues.reserve(all.size());
    for (const auto& e : all) res.eigenvalues.push_back(e.w);
    if (opt.vectors) {
        res.vectors.resize(op.side(), Eigen::Index(all.size()));
        for (std::size_t k = 0; k < all.size(); ++k) {
            const CVec w = solves[all[k].blk].V.col(all[k].col);
            res.vectors.col(Eigen::Index(k)) = pb ? pb->lift(w, all[k].blk == 0) : w;
        }
    }

    std::mt19937_64 rng(opt.seed);
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(sample_count(all.size(), res.side, opt));
    std::sort(idx.begin(), idx.end());
    for (std::size_t k : idx) {
        double r;
        if (opt.vectors) {
            const CVec v = res.vectors.col(Eigen::Index(k));
            r = (op.A * v - all[k].w * v).norm() / v.norm();
        } else {
            r = inverse_iteration_residual(*mats[all[k].blk], all[k].w, rng);
        }
        res.checked.push_back(k);
        res.residual_norms.push_back(r);
    }
    return res;
}

SpectrumResult eig_general(const OperatorMatrix& op, const EigOptions& opt) {
    SpectrumResult res;
    res.side = op.side();
    res.provenance = op.provenance;
    res.theta = op.grid.theta;
    res.hermitian = false;

    std::optional<ParityBlocks> pb;
    if (opt.parity) pb = parity_blocks(op.A, op.grid);
    std::vector<const CMat*> mats;
    if (pb) {
        res.parity_split = true;
        mats = {&pb->even, &pb->odd};
    } else {
        mats = {&op.A};
    }
    std::vector<std::pair<cplx, int>> all;
    for (std::size_t b = 0; b < mats.size(); ++b)
        for (const auto& z : general_solve(*mats[b])) all.push_back({z, int(b)});
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
        if (x.first.real() != y.first.real()) return x.first.real() < y.first.real();
        return x.first.imag() < y.first.imag();
    });
    for (const auto& e : all) res.eigenvalues.push_back(e.first);

    std::mt19937_64 rng(opt.seed);
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(sample_count(all.size(), res.side, opt));
    std::sort(idx.begin(), idx.end());
    for (std::size_t k : idx) {
        res.checked.push_back(k);
        res.residual_norms.push_back(inverse_iteration_residual(*mats[all[k].second], all[k].first, rng));
    }
    return res;
}

void WindowSpec::validate() const {
    if (!(a < b) || !(c < d)) throw Error("InvalidWindow", "window needs a < b and c < d");
}

bool window_covered(const WindowSpec& w, double E0, double theta_min) {
    // the rotated continuum is the ray -E0 + e^{-2 i theta} R_+
    const double t = std::tan(2.0 * theta_min);
    for (double re : {w.a, w.b}) {
        const double u = re + E0;
        if (u > 0.0 && !(w.c > -u * t)) return false;
    }
    return true;
}

ResonanceSet extract_resonances(const std::function<OperatorMatrix(double)>& build, const std::vector<double>& thetas,
                                const WindowSpec& window, double E0, double threshold, const EigOptions& opt) {
    window.validate();
    if (thetas.size() < 2) throw Error("InvalidConfig", "need at least two dilation angles");
    const double tmin = *std::min_element(thetas.begin(), thetas.end());
    if (!(tmin > 0.0) || !window_covered(window, E0, tmin))
        throw Error("WindowUncovered", "dilation angle too small for the requested window depth");

    std::vector<std::vector<cplx>> spectra;
    for (double th : thetas) spectra.push_back(eig_general(build(th), opt).eigenvalues);
    return resonances_from_spectra(spectra, thetas, window, E0, threshold);
}

ResonanceSet resonances_from_spectra(const std::vector<std::vector<cplx>>& spectra, const std::vector<double>& thetas,
                                     const WindowSpec& window, double E0, double threshold) {
    window.validate();
    if (thetas.size() < 2 || spectra.size() != thetas.size())
        throw Error("InvalidConfig", "need one spectrum per dilation angle, at least two");
    const double tmin = *std::min_element(thetas.begin(), thetas.end());
    if (!(tmin > 0.0) || !window_covered(window, E0, tmin))
        throw Error("WindowUncovered", "dilation angle too small for the requested window depth");
    ResonanceSet out;
    out.thetas = thetas;
    out.threshold = threshold;
    for (const auto& z0 : spectra[0]) {
        if (!window.contains(z0)) continue;
        ++out.candidates;
        cplx z = z0;
        double disp = 0.0;
        for (std::size_t k = 1; k < spectra.size(); ++k) {
            double best = std::numeric_limits<double>::max();
            cplx next = z;
            for (const auto& w : spectra[k]) {
                const double d = std::abs(w - z);
                if (d < best) {
                    best = d;
                    next = w;
                }
            }
            disp = std::max(disp, best);
            z = next;
        }
        if (disp < threshold) {
            out.resonances.push_back(z0);
            out.stability.push_back(disp);
        }
    }
    return out;
}

ResonanceSet extract_resonances(const PotentialSpec& spec, const GridSpec& grid, const std::vector<double>& thetas,
                                const WindowSpec& window, double threshold, const EigOptions& opt) {
    auto build = [&](double th) {
        GridSpec g = grid;
        g.theta = th;
        return assemble_schrodinger(spec, g);
    };
    return extract_resonances(build, thetas, window, spec.asymptotic_depth, threshold, opt);
}

MatchReport match_spectra(const std::vector<cplx>& interior, const std::vector<cplx>& resonances,
                          const WindowSpec& window, double eps) {
    MatchReport rep;
    rep.eps = eps;
    const double m = eps / 10.0;
    const WindowSpec outer{window.a - m, window.b + m, window.c, window.d, window.role};
    const WindowSpec inner = window.shrunk(m);
    std::vector<cplx> I, R;
    for (const auto& z : interior)
        if (outer.contains(z)) I.push_back(z);
    for (const auto& z : resonances)
        if (outer.contains(z)) R.push_back(z);

    struct Cand {
        double d;
        std::size_t i, r;
    };
    std::vector<Cand> c;
    for (std::size_t i = 0; i < I.size(); ++i)
        for (std::size_t r = 0; r < R.size(); ++r) c.push_back({std::abs(I[i] - R[r]), i, r});
    std::sort(c.begin(), c.end(), [](const Cand& x, const Cand& y) { return x.d < y.d; });
    std::vector<char> ui(I.size(), 0), ur(R.size(), 0);
    double sum = 0.0;
    for (const auto& k : c) {
        if (ui[k.i] || ur[k.r]) continue;
        ui[k.i] = ur[k.r] = 1;
        if (!inner.contains(I[k.i]) && !inner.contains(R[k.r])) continue;
        MatchPair p{I[k.i], R[k.r], k.d, false};
        double second = std::numeric_limits<double>::max();
        for (std::size_t r = 0; r < R.size(); ++r)
            if (r != k.r) second = std::min(second, std::abs(I[k.i] - R[r]));
        for (std::size_t i = 0; i < I.size(); ++i)
            if (i != k.i) second = std::min(second, std::abs(I[i] - R[k.r]));
        p.ambiguous = second < 3.0 * k.d;
        rep.pairs.push_back(p);
        rep.max_distance = std::max(rep.max_distance, k.d);
        sum += k.d;
    }
    if (!rep.pairs.empty()) rep.mean_distance = sum / double(rep.pairs.size());
    for (std::size_t i = 0; i < I.size(); ++i)
        if (!ui[i] && inner.contains(I[i])) ++rep.unmatched_interior;
    for (std::size_t r = 0; r < R.size(); ++r)
        if (!ur[r] && inner.contains(R[r])) ++rep.unmatched_resonances;
    rep.cardinality_mismatch = rep.unmatched_interior + rep.unmatched_resonances > 0;
    return rep;
}

std::string MatchReport::to_json() const {
    nlohmann::json j;
    j["max_distance"] = max_distance;
    j["max_distance_over_eps"] = max_distance / eps;
    j["mean_distance"] = mean_distance;
    j["unmatched_interior"] = unmatched_interior;
    j["unmatched_resonances"] = unmatched_resonances;
    j["cardinality_mismatch"] = cardinality_mismatch;
    j["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs)
        j["pairs"].push_back({{"mu_re", p.mu.real()},
                              {"mu_im", p.mu.imag()},
                              {"b_re", p.b.real()},
                              {"b_im", p.b.imag()},
                              {"distance", p.distance},
                              {"ambiguous", p.ambiguous}});
    return j.dump(2);
}

double surgery_target(double mu, double level, double eps, double delta) {
    return mu <= level * eps ? level * eps - 0.5 * delta * eps : level * eps + 0.5 * delta * eps;
}

SurgeryResult apply_surgery(const SpectrumResult& pint, const OperatorMatrix& target, const GridField& chiU, double eps,
                            double delta, const SurgeryLevels& levels) {
    if (!pint.hermitian || pint.vectors.cols() != Eigen::Index(pint.eigenvalues.size()))
        throw Error("InvalidInput", "surgery needs Hermitian eigenpairs with vectors");
    if (pint.side != target.side()) throw Error("InvalidInput", "eigendata and target sizes differ");
    std::vector<double> lv{levels.A};
    if (levels.B) lv.push_back(*levels.B);

    SurgeryResult out;
    out.op = target;
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < pint.eigenvalues.size(); ++j) {
        const double mu = pint.eigenvalues[j].real();
        for (double L : lv) {
            if (std::abs(mu - L * eps) < 0.5 * delta * eps) {
                const double mt = surgery_target(mu, L, eps, delta);
                out.moves.push_back({mu, mt});
                out.shifts.push_back(mt - mu);
                cols.push_back(Eigen::Index(j));
                break;
            }
        }
    }
    out.moved = cols.size();
    if (cols.empty()) {
        out.empty = true;
        return out;
    }
    const GridSpec& g = target.grid;
    RVec chi(target.side());
    for (Eigen::Index i = 0; i < target.side(); ++i) {
        const auto x = g.point(std::size_t(i));
        chi[i] = chiU.interp(x.data());
    }
    out.factor.resize(target.side(), Eigen::Index(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
        out.factor.col(Eigen::Index(k)) = chi.cast<cplx>().cwiseProduct(pint.vectors.col(cols[k]));
    const RVec s = Eigen::Map<const RVec>(out.shifts.data(), Eigen::Index(out.shifts.size()));
    out.op.A += out.factor * s.cast<cplx>().asDiagonal() * out.factor.adjoint();
    out.op.provenance = Provenance::P_surgery;
    if (target.hermitian) out.op.A = 0.5 * (out.op.A + out.op.A.adjoint()).eval();
    return out;
}

std::size_t count_in_box(const std::vector<cplx>& values, const WindowSpec& w) {
    return std::size_t(std::count_if(values.begin(), values.end(), [&](const cplx& z) { return w.contains(z); }));
}

void write_spectrum_csv(const std::string& path, const std::vector<cplx>& values, const std::vector<double>& residual,
                        const std::vector<double>& stability) {
    std::ofstream f(path);
    if (!f) throw Error("IOError", "cannot write " + path);
    f.precision(17);
    f << "re,im,residual,stability\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        f << values[i].real() << ',' << values[i].imag() << ',';
        if (i < residual.size()) f << residual[i];
        f << ',';
        if (i < stability.size()) f << stability[i];
        f << '\n';
    }
}

}  // namespace sres
