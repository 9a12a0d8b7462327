#include "sres/potential.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>

#include <boost/math/tools/roots.hpp>

namespace sres {

void PotentialSpec::validate() const {
    if (dimension != 1 && dimension != 2) throw Error("InvalidPotential", "dimension must be 1 or 2");
    if (!(asymptotic_depth > 0.0)) throw Error("InvalidPotential", "asymptotic depth must be positive");
    for (const auto& t : terms) {
        if (!(t.width > 0.0)) throw Error("InvalidPotential", "term width must be positive");
        if (t.radial_flag && t.radius < 0.0) throw Error("InvalidPotential", "ring radius must be nonnegative");
    }
}

PotentialValue eval_potential(const PotentialSpec& spec, const cplx* z, int order) {
    const int n = spec.dimension;
    PotentialValue out;
    out.value = -spec.asymptotic_depth;
    for (const auto& t : spec.terms) {
        cplx d[2] = {0.0, 0.0};
        cplx r2 = 0.0;
        for (int k = 0; k < n; ++k) {
            d[k] = z[k] - t.center[k];
            r2 += d[k] * d[k];
        }
        cplx Q, dQ[2] = {0.0, 0.0}, d2Q[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        if (t.radial_flag && t.radius > 0.0) {
            const double rho2 = t.radius * t.radius;
            const cplx u = r2 - rho2;
            Q = u * u / (4.0 * rho2);
            for (int a = 0; a < n; ++a) {
                dQ[a] = u * d[a] / rho2;
                for (int b = 0; b < n; ++b) d2Q[a][b] = (2.0 * d[a] * d[b] + (a == b ? u : cplx(0.0))) / rho2;
            }
        } else {
            Q = r2;
            for (int a = 0; a < n; ++a) {
                dQ[a] = 2.0 * d[a];
                d2Q[a][a] = 2.0;
            }
        }
        const cplx f = t.amplitude * std::exp(-Q / t.width);
        out.value += f;
        if (order >= 1)
            for (int a = 0; a < n; ++a) out.grad[a] += -f * dQ[a] / t.width;
        if (order >= 2)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    out.hess[a][b] += f * (dQ[a] * dQ[b] / (t.width * t.width) - d2Q[a][b] / t.width);
    }
    return out;
}

double potential_real(const PotentialSpec& spec, const double* x) {
    cplx z[2] = {x[0], spec.dimension > 1 ? x[1] : 0.0};
    return eval_potential(spec, z, 0).value.real();
}

cplx potential_complex(const PotentialSpec& spec, const cplx* z) { return eval_potential(spec, z, 0).value; }

PotentialSpec canonical_potential(const CanonicalParams& p) {
    PotentialSpec s;
    s.dimension = 2;
    s.asymptotic_depth = p.sea_depth;
    const auto& o = p.origin;
    s.terms.push_back({p.ring_height, o, p.ring_width, true, p.ring_radius});
    s.terms.push_back({-p.well_depth, p.well_center, p.well_width, false, 0.0});
    s.terms.push_back({p.sea_depth, o, p.sea_width, false, 0.0});
    s.terms.push_back({-p.notch_depth, {o[0], o[1] + p.ring_radius}, p.notch_width, false, 0.0});
    return s;
}

std::array<double, 2> canonical_saddle_guess(const CanonicalParams& p) {
    return {p.origin[0], p.origin[1] + p.ring_radius};
}

std::array<double, 2> SaddleFrame::to_frame(const double* x) const {
    std::array<double, 2> X{0.0, 0.0};
    for (int a = 0; a < dimension; ++a) {
        double acc = 0.0;
        for (int k = 0; k < dimension; ++k) acc += basis(k, a) * (x[k] - saddle[k]);
        X[a] = acc / scales[a];
    }
    return X;
}

std::array<double, 2> SaddleFrame::from_frame(const double* X) const {
    std::array<double, 2> x = saddle;
    for (int k = 0; k < dimension; ++k)
        for (int a = 0; a < dimension; ++a) x[k] += basis(k, a) * scales[a] * X[a];
    return x;
}

std::pair<double, SaddleFrame> locate_saddle(const std::function<PotentialValue(const double*)>& V, int n,
                                             const std::array<double, 2>& guess,
                                             const std::optional<std::array<double, 2>>& well_point) {
    std::array<double, 2> x = guess;
    auto grad_norm = [&](const PotentialValue& v) {
        double r = 0.0;
        for (int a = 0; a < n; ++a) r += std::norm(v.grad[a]);
        return std::sqrt(r);
    };
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const auto v = V(x.data());
        RVec g(n);
        RMat H(n, n);
        for (int a = 0; a < n; ++a) {
            g[a] = v.grad[a].real();
            for (int b = 0; b < n; ++b) H(a, b) = v.hess[a][b].real();
        }
        if (g.norm() < 1e-13) {
            converged = true;
            break;
        }
        const RVec step = H.fullPivLu().solve(g);
        for (int a = 0; a < n; ++a) x[a] -= step[a];
    }
    const auto v = V(x.data());
    const double res = grad_norm(v);
    if (!converged && !(res <= 1e-10))
        throw Error("NoConvergence", "Newton residual " + std::to_string(res) + " after 100 iterations");

    RMat H(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) H(a, b) = v.hess[a][b].real();
    Eigen::SelfAdjointEigenSolver<RMat> es(H);
    const RVec lam = es.eigenvalues();  // ascending
    int neg = 0, zero = 0;
    for (int a = 0; a < n; ++a) {
        neg += lam[a] < 0.0;
        zero += std::abs(lam[a]) < 1e-12;
    }
    if (neg != 1 || zero > 0) throw Error("WrongSignature", "Hessian signature is not (n-1,1)");

    SaddleFrame fr;
    fr.dimension = n;
    fr.saddle = {x[0], n > 1 ? x[1] : 0.0};
    fr.basis = RMat(n, n);
    // columns: positive directions first, the negative direction last
    for (int a = 1; a < n; ++a) {
        fr.basis.col(a - 1) = es.eigenvectors().col(a);
        fr.hessian_eigenvalues[a - 1] = lam[a];
    }
    RVec en = es.eigenvectors().col(0);
    const std::array<double, 2> wp = well_point.value_or(std::array<double, 2>{0.0, 0.0});
    double side = 0.0;
    for (int k = 0; k < n; ++k) side += en[k] * (wp[k] - x[k]);
    if (side > 0.0) en = -en;  // well on the x_n < 0 side
    fr.basis.col(n - 1) = en;
    fr.hessian_eigenvalues[n - 1] = lam[0];
    if (n == 2 && fr.basis.determinant() < 0.0) fr.basis.col(0) = -fr.basis.col(0);
    for (int a = 0; a < n; ++a) fr.scales[a] = std::pow(2.0 / std::abs(fr.hessian_eigenvalues[a]), 0.25);
    fr.kappa = std::sqrt(2.0 * std::abs(lam[0]));
    return {v.value.real(), fr};
}

std::pair<PotentialSpec, SaddleFrame> find_saddle_and_normalize(const PotentialSpec& spec0,
                                                                const std::array<double, 2>& guess,
                                                                const std::optional<std::array<double, 2>>& well_point) {
    spec0.validate();
    auto V = [&](const double* x) {
        cplx z[2] = {x[0], spec0.dimension > 1 ? x[1] : 0.0};
        return eval_potential(spec0, z, 2);
    };
    auto [vs, fr] = locate_saddle(V, spec0.dimension, guess, well_point);
    PotentialSpec out = spec0;
    out.energy_shift += vs;
    out.asymptotic_depth += vs;
    return {out, fr};
}

std::size_t RegionLabels::count(Region r) const { return std::size_t(std::count(labels.begin(), labels.end(), r)); }

namespace {

double v_eps_at(const PotentialSpec& spec, const SaddleFrame* fr, double eps, double alpha, const double* x) {
    double v = potential_real(spec, x);
    if (eps > 0.0 && fr) {
        double d2 = 0.0;
        for (int k = 0; k < spec.dimension; ++k) d2 += (x[k] - fr->saddle[k]) * (x[k] - fr->saddle[k]);
        v += eps * std::exp(-alpha * alpha * d2 / eps);
    }
    return v;
}

}  // namespace

double v_eps(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double alpha, const double* x) {
    return v_eps_at(spec, &frame, eps, alpha, x);
}

RegionLabels classify_sublevel(const PotentialSpec& spec, double E, const GridSpec& grid, const ClassifyOptions& opt) {
    const int n = spec.dimension;
    const int N = grid.N;
    const std::size_t M = grid.size();
    RegionLabels out;
    out.grid = grid;
    out.energy = E;
    out.labels.assign(M, Region::island);

    std::vector<double> V(M);
    std::vector<char> below(M, 0);
    for (std::size_t i = 0; i < M; ++i) {
        const auto x = grid.point(i);
        V[i] = v_eps_at(spec, opt.cut_frame, opt.bump_eps, opt.bump_alpha, x.data());
        bool in = V[i] < E;
        if (in && opt.cut_frame && opt.cut_radius > 0.0) {
            const auto X = opt.cut_frame->to_frame(x.data());
            double r2 = 0.0;
            for (int k = 0; k < n; ++k) r2 += X[k] * X[k];
            if (r2 <= opt.cut_radius * opt.cut_radius && X[n - 1] > 0.0) in = false;
        }
        below[i] = in;
    }

    // connected components, 4-neighbour connectivity
    std::vector<int> comp(M, -1);
    std::vector<char> touches;
    int ncomp = 0;
    for (std::size_t s = 0; s < M; ++s) {
        if (!below[s] || comp[s] >= 0) continue;
        std::deque<std::size_t> q{s};
        comp[s] = ncomp;
        bool edge = false;
        while (!q.empty()) {
            const std::size_t c = q.front();
            q.pop_front();
            const auto ij = grid.split(c);
            for (int d = 0; d < n; ++d)
                if (ij[d] == 0 || ij[d] == N - 1) edge = true;
            for (int d = 0; d < n; ++d)
                for (int sgn = -1; sgn <= 1; sgn += 2) {
                    auto nb = ij;
                    nb[d] += sgn;
                    if (nb[d] < 0 || nb[d] >= N) continue;
                    const std::size_t k = grid.flat(nb[0], nb[1]);
                    if (below[k] && comp[k] < 0) {
                        comp[k] = ncomp;
                        q.push_back(k);
                    }
                }
        }
        touches.push_back(edge);
        ++ncomp;
    }

    // locate the well seed
    std::size_t seed = M;
    if (opt.well_point) {
        double best = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < M; ++i) {
            const auto x = grid.point(i);
            double d2 = 0.0;
            for (int k = 0; k < n; ++k) d2 += (x[k] - (*opt.well_point)[k]) * (x[k] - (*opt.well_point)[k]);
            if (d2 < best) {
                best = d2;
                seed = i;
            }
        }
    } else {
        double best = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < M; ++i) {
            const auto x = grid.point(i);
            double r2 = 0.0;
            for (int k = 0; k < n; ++k) r2 += x[k] * x[k];
            if (r2 <= 0.25 * grid.L * grid.L && V[i] < best) {
                best = V[i];
                seed = i;
            }
        }
    }
    const int well_comp = (seed < M && below[seed]) ? comp[seed] : -1;
    if (well_comp >= 0 && touches[well_comp])
        throw Error("SingleComponent", "well and sea merge at E = " + std::to_string(E));

    for (std::size_t i = 0; i < M; ++i) {
        if (!below[i]) continue;
        if (comp[i] == well_comp) {
            out.labels[i] = Region::well;
            out.well_empty = false;
        } else if (touches[comp[i]]) {
            out.labels[i] = Region::sea;
            out.sea_empty = false;
        }
    }
    // island nodes adjacent to the well or the sea
    std::vector<Region> copy = out.labels;
    for (std::size_t i = 0; i < M; ++i) {
        if (copy[i] != Region::island) continue;
        const auto ij = grid.split(i);
        bool adj = false;
        for (int d = 0; d < n && !adj; ++d)
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                auto nb = ij;
                nb[d] += sgn;
                if (nb[d] < 0 || nb[d] >= N) continue;
                const Region r = copy[grid.flat(nb[0], nb[1])];
                if (r == Region::well || r == Region::sea) adj = true;
            }
        if (adj) out.labels[i] = Region::boundary;
    }
    return out;
}

void write_labels_csv(const RegionLabels& labels, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("IOError", "cannot write " + path);
    static const char* names[] = {"island", "well", "sea", "boundary"};
    f << "x,y,label\n";
    f.precision(10);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const auto x = labels.grid.point(i);
        f << x[0] << ',' << x[1] << ',' << names[int(labels.labels[i])] << '\n';
    }
}

double ScaleFunctions::R(const double* x, int n) const {
    double r2 = 0.0;
    for (int k = 0; k < n; ++k) r2 += (x[k] - origin[k]) * (x[k] - origin[k]);
    return std::sqrt(eps + r2);
}

double ScaleFunctions::r(const double* x, int n) const {
    double r2 = 0.0;
    for (int k = 0; k < n; ++k) r2 += (x[k] - origin[k]) * (x[k] - origin[k]);
    return std::sqrt((eps + r2) / (1.0 + r2));
}

double ScaleFunctions::rt(const double* x, const double* xi, int n) const {
    const double a = r(x, n);
    double k2 = 0.0;
    for (int k = 0; k < n; ++k) k2 += xi[k] * xi[k];
    return std::sqrt(a * a + k2);
}

double neck_gap(const PotentialSpec& spec, const SaddleFrame& frame, double eps, double F, double alpha, bool bump) {
    const int n = spec.dimension;
    const double lam = std::abs(frame.hessian_eigenvalues[n - 1]);
    const double g = std::sqrt(2.0 / lam);  // physical x_n per gap unit
    const double E = bump ? eps * (1.0 - F) : -eps * F;
    const double be = bump ? eps : 0.0;
    auto f = [&](double xp, double y) {
        std::array<double, 2> x = frame.saddle;
        for (int k = 0; k < n; ++k) {
            x[k] += frame.basis(k, n - 1) * g * y;
            if (n == 2) x[k] += frame.basis(k, 0) * xp;
        }
        return v_eps_at(spec, &frame, be, alpha, x.data()) - E;
    };
    const double tol = 1e-13;
    auto root = [&](double xp, double dir) {
        // first sign change of f along y = dir * t, t > 0
        double t0 = 0.0, f0 = f(xp, 0.0);
        const double dt = 1e-3;
        for (double t = dt; t < 5.0; t += dt) {
            const double f1 = f(xp, dir * t);
            if (f1 <= 0.0) {
                std::uintmax_t it = 200;
                auto r = boost::math::tools::toms748_solve([&](double s) { return f(xp, dir * s); }, t0, t, f0, f1,
                                                           boost::math::tools::eps_tolerance<double>(50), it);
                return 0.5 * (r.first + r.second);
            }
            t0 = t;
            f0 = f1;
        }
        throw Error("NoRoot", "no level crossing along the frame x_n line");
    };
    const double c = f(0.0, 0.0);
    if (std::abs(c) <= tol) return 0.0;
    if (c < 0.0) throw Error("NoRoot", "energy above the local barrier");
    double up = std::numeric_limits<double>::max(), lo = -std::numeric_limits<double>::max();
    const int lines = n == 2 ? 41 : 1;
    const double w = 3.0 * std::sqrt(std::max(eps, 1e-6));
    for (int l = 0; l < lines; ++l) {
        const double xp = n == 2 ? -w + 2.0 * w * l / (lines - 1) : 0.0;
        if (f(xp, 0.0) <= 0.0) continue;
        up = std::min(up, root(xp, 1.0));
        lo = std::max(lo, -root(xp, -1.0));
    }
    return up - lo;
}

std::vector<double> distance_to_set(const GridSpec& grid, const std::vector<char>& in_set) {
    const int N = grid.N;
    const int n = grid.dimension;
    const double INF = 1e30;
    std::vector<double> d2(grid.size());
    for (std::size_t i = 0; i < d2.size(); ++i) d2[i] = in_set[i] ? 0.0 : INF;

    // 1D squared distance transform of Felzenszwalb and Huttenlocher, unit spacing
    auto pass = [&](std::vector<double>& f) {
        std::vector<double> out(N), z(N + 1);
        std::vector<int> v(N);
        int k = 0;
        v[0] = 0;
        z[0] = -INF;
        z[1] = INF;
        auto meet = [&](int q, int p) { return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p); };
        for (int q = 1; q < N; ++q) {
            double s = meet(q, v[k]);
            while (s <= z[k]) {
                --k;
                s = meet(q, v[k]);
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = INF;
        }
        k = 0;
        for (int q = 0; q < N; ++q) {
            while (z[k + 1] < q) ++k;
            const double dq = q - v[k];
            out[q] = dq * dq + f[v[k]];
        }
        f = out;
    };
    std::vector<double> line(N);
    if (n == 1) {
        line = d2;
        pass(line);
        d2 = line;
    } else {
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) line[j] = d2[std::size_t(i) * N + j];
            pass(line);
            for (int j = 0; j < N; ++j) d2[std::size_t(i) * N + j] = line[j];
        }
        for (int j = 0; j < N; ++j) {
            for (int i = 0; i < N; ++i) line[i] = d2[std::size_t(i) * N + j];
            pass(line);
            for (int i = 0; i < N; ++i) d2[std::size_t(i) * N + j] = line[i];
        }
    }
    const double dx = grid.dx();
    std::vector<double> out(d2.size());
    for (std::size_t i = 0; i < d2.size(); ++i) out[i] = d2[i] >= 0.5 * INF ? INF : std::sqrt(d2[i]) * dx;
    return out;
}

namespace {

double soft_max0(double u, double tau) { return 0.5 * (u + std::sqrt(u * u + tau * tau)); }

}  // namespace

FillGeometry fill_geometry(const PotentialSpec& spec, const SaddleFrame& frame, const FillParams& p, const GridSpec& grid) {
    FillGeometry g;
    g.grid = grid;
    g.E = p.eps * (1.0 - p.F);
    g.Ep = p.eps * (1.0 - p.Fp);
    ClassifyOptions co;
    co.cut_frame = &frame;
    co.bump_eps = p.eps;
    co.bump_alpha = p.alpha;
    g.labels = classify_sublevel(spec, g.E, grid, co);
    if (g.labels.well_empty) throw Error("FillInfeasible", "empty well at the fill energy");
    const std::size_t M = grid.size();
    std::vector<char> inU(M), inS(M);
    for (std::size_t i = 0; i < M; ++i) {
        inU[i] = g.labels.labels[i] == Region::well;
        inS[i] = g.labels.labels[i] == Region::sea;
    }
    const auto dU = distance_to_set(grid, inU);
    const auto dS = distance_to_set(grid, inS);
    ScaleFunctions sc{p.eps, frame.saddle};
    g.veps.resize(M);
    g.dist_well.resize(M);
    g.dist_sea.resize(M);
    g.reps.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        const auto x = grid.point(i);
        g.veps[i] = v_eps(spec, frame, p.eps, p.alpha, x.data());
        g.reps[i] = sc.r(x.data(), spec.dimension);
        g.dist_well[i] = dU[i] / g.reps[i];
        g.dist_sea[i] = dS[i] / g.reps[i];
    }
    return g;
}

SeaFill build_sea_fill(const PotentialSpec& spec, const SaddleFrame& frame, const FillParams& p, const GridSpec& grid) {
    const FillGeometry g = fill_geometry(spec, frame, p, grid);
    const std::size_t M = grid.size();
    SeaFill out;
    out.W.grid = grid;
    out.W.values.assign(M, 0.0);
    double mn = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < M; ++i) {
        const double r2 = g.reps[i] * g.reps[i];
        const double cut = smooth_step(g.dist_sea[i] / p.r);
        if (cut > 0.0) out.W.values[i] = cut * soft_max0(g.Ep + p.margin * r2 - g.veps[i], p.softness);
        if (g.dist_well[i] > p.r) {
            mn = std::min(mn, (g.veps[i] + out.W.values[i] - g.Ep) / r2);
            ++out.checked_nodes;
        }
    }
    out.min_ratio = mn;
    if (!(mn > 0.0)) throw Error("FillInfeasible", "sea fill misses the margin, min ratio " + std::to_string(mn));
    out.C = 1.0 / mn;
    return out;
}

WellFill build_well_fill(const PotentialSpec& spec, const SaddleFrame& frame, const FillParams& p, const GridSpec& grid) {
    const FillGeometry g = fill_geometry(spec, frame, p, grid);
    const std::size_t M = grid.size();
    WellFill out;
    out.beta.grid = grid;
    out.chiU.grid = grid;
    out.beta.values.assign(M, 0.0);
    out.chiU.values.assign(M, 0.0);
    double b_min = std::numeric_limits<double>::max();
    double c_off = std::numeric_limits<double>::max();
    double c_ann = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < M; ++i) {
        const double r2 = g.reps[i] * g.reps[i];
        const double du = g.dist_well[i] / p.r;
        const double cut = smooth_step(du);
        if (cut > 0.0)
            out.beta.values[i] = cut * (soft_max0(g.Ep + p.margin * r2 - g.veps[i], p.softness) + p.margin * r2);
        out.chiU.values[i] = smooth_step(2.0 * du - 0.5);
        if (du <= 0.75) b_min = std::min(b_min, out.beta.values[i] / r2);
        if (g.dist_sea[i] > p.r) c_off = std::min(c_off, g.veps[i] + out.beta.values[i] - g.Ep);
        if (du > 0.5 && du <= 1.0) c_ann = std::min(c_ann, g.veps[i] - g.Ep);
    }
    out.beta_over_r2_min = b_min;
    out.off_sea_margin_min = c_off;
    out.annulus_margin_min = c_ann;
    if (!(c_off >= 0.0)) throw Error("FillInfeasible", "well fill misses V_eps + beta >= E' by " + std::to_string(c_off));
    return out;
}

double check_filled_symbol(const WellFill& fill, const FillGeometry& g, const FillParams& p, int xi_samples) {
    double mn = std::numeric_limits<double>::max();
    const double xmax = 3.0;
    for (std::size_t i = 0; i < fill.beta.values.size(); ++i) {
        if (g.dist_sea[i] <= p.r) continue;
        const double b = fill.beta.values[i];
        for (int k = 0; k < xi_samples; ++k) {
            const double xi = -xmax + 2.0 * xmax * k / (xi_samples - 1);
            const double fillv = b > 0.0 ? b * std::exp(-xi * xi / (2.0 * b)) : 0.0;
            mn = std::min(mn, fillv + 0.5 * xi * xi + g.veps[i] - g.Ep);
        }
    }
    return mn;
}

std::string potential_to_json(const PotentialSpec& spec) {
    nlohmann::json j;
    j["dimension"] = spec.dimension;
    j["asymptotic_depth"] = spec.asymptotic_depth;
    j["energy_shift"] = spec.energy_shift;
    j["terms"] = nlohmann::json::array();
    for (const auto& t : spec.terms) {
        nlohmann::json a;
        a["amplitude"] = t.amplitude;
        a["center"] = std::vector<double>(t.center.begin(), t.center.begin() + spec.dimension);
        a["width"] = t.width;
        a["radial_flag"] = t.radial_flag;
        a["radius"] = t.radius;
        j["terms"].push_back(a);
    }
    return j.dump(2);
}

PotentialSpec potential_from_json(const std::string& text) {
    PotentialSpec s;
    try {
        const auto j = nlohmann::json::parse(text);
        s.dimension = j.at("dimension").get<int>();
        s.asymptotic_depth = j.at("asymptotic_depth").get<double>();
        s.energy_shift = j.value("energy_shift", 0.0);
        for (const auto& a : j.at("terms")) {
            GaussianTerm t;
            t.amplitude = a.at("amplitude").get<double>();
            const auto c = a.at("center").get<std::vector<double>>();
            for (std::size_t k = 0; k < c.size() && k < 2; ++k) t.center[k] = c[k];
            t.width = a.at("width").get<double>();
            t.radial_flag = a.value("radial_flag", false);
            t.radius = a.value("radius", 0.0);
            s.terms.push_back(t);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidPotential", std::string("malformed potential JSON: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace sres
