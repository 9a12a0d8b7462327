#include "sres/quantize.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace sres {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::P: return "P";
        case Provenance::P_eps: return "P_eps";
        case Provenance::P_int: return "P_int";
        case Provenance::P_ext: return "P_ext";
        case Provenance::P_surgery: return "P_surgery";
        default: return "other";
    }
}

double OperatorMatrix::hermitian_defect() const { return (A - A.adjoint()).cwiseAbs().maxCoeff(); }

RMat fourier_second(int N, double L) {
    const double hs = 2.0 * kPi / N;
    const double c2 = (kPi / L) * (kPi / L);
    RMat K(N, N);
    for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
            const int k = j - l;
            double d2;
            if (k == 0) {
                d2 = -kPi * kPi / (3.0 * hs * hs) - 1.0 / 6.0;
            } else {
                const double s = std::sin(0.5 * k * hs);
                d2 = -((k % 2 == 0) ? 1.0 : -1.0) / (2.0 * s * s);
            }
            K(j, l) = -c2 * d2;
        }
    return K;
}

RMat fourier_first(int N, double L) {
    const double hs = 2.0 * kPi / N;
    RMat D = RMat::Zero(N, N);
    for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
            const int k = j - l;
            if (k == 0) continue;
            D(j, l) = (kPi / L) * 0.5 * ((k % 2 == 0) ? 1.0 : -1.0) / std::tan(0.5 * k * hs);
        }
    return D;
}

CMat kinetic_1d(const GridSpec& grid) {
    const int N = grid.N;
    const double h2 = grid.h * grid.h;
    const RMat K = fourier_second(N, grid.L);
    if (grid.theta == 0.0) return (h2 * K).cast<cplx>();
    if (grid.dilation == Dilation::global) return (h2 * std::polar(1.0, -2.0 * grid.theta)) * K.cast<cplx>();

    // d^2/dz^2 = z'^{-2} d^2/dx^2 - z'' z'^{-3} d/dx
    const RMat D = fourier_first(N, grid.L);
    CMat T(N, N);
    for (int j = 0; j < N; ++j) {
        const ContourPoint c = grid.contour(grid.node(j));
        const cplx a = 1.0 / (c.dz * c.dz);
        const cplx b = c.d2z / (c.dz * c.dz * c.dz);
        for (int l = 0; l < N; ++l) T(j, l) = h2 * (a * K(j, l) + b * D(j, l));
    }
    return T;
}

namespace {

void check_resolution(double length, const GridSpec& grid, const char* what) {
    if (length < 2.0 * grid.dx())
        throw Error("GridTooCoarse", std::string(what) + " width " + std::to_string(length) + " below two cells");
}

// wrapped node difference in ]-N/2, N/2]
int wrap_diff(int d, int N) {
    if (d > N / 2) d -= N;
    if (d <= -N / 2) d += N;
    return d;
}

// momenta of the dual lattice, Nyquist once
std::vector<double> dual_momenta(const GridSpec& grid) {
    std::vector<double> k(grid.N);
    for (int q = 0; q < grid.N; ++q) k[q] = (q <= grid.N / 2 ? q : q - grid.N) * kPi / grid.L;
    return k;
}

}  // namespace

OperatorMatrix assemble_schrodinger(const PotentialSpec& spec, const GridSpec& grid) {
    grid.validate();
    if (grid.dimension != spec.dimension) throw Error("InvalidGrid", "grid and potential dimensions differ");
    for (const auto& t : spec.terms) check_resolution(std::sqrt(t.width), grid, "potential term");

    const int N = grid.N;
    const CMat T = kinetic_1d(grid);
    std::vector<cplx> z(N);
    for (int j = 0; j < N; ++j) z[j] = grid.contour(grid.node(j)).z;

    OperatorMatrix op;
    op.grid = grid;
    op.provenance = Provenance::P;
    op.hermitian = grid.theta == 0.0;
    if (grid.dimension == 1) {
        op.A = T;
        for (int j = 0; j < N; ++j) op.A(j, j) += potential_complex(spec, &z[j]);
        return op;
    }
    const Eigen::Index M = Eigen::Index(N) * N;
    op.A = CMat::Zero(M, M);
    for (int i1 = 0; i1 < N; ++i1)
        for (int i2 = 0; i2 < N; ++i2) {
            const Eigen::Index r = Eigen::Index(i1) * N + i2;
            for (int l = 0; l < N; ++l) {
                op.A(r, Eigen::Index(l) * N + i2) += T(i1, l);
                op.A(r, Eigen::Index(i1) * N + l) += T(i2, l);
            }
            const cplx zz[2] = {z[i1], z[i2]};
            op.A(r, r) += potential_complex(spec, zz);
        }
    return op;
}

CMat gaussian_weyl_factor(double eps, double alpha, const GridSpec& grid, double center) {
    const int N = grid.N;
    const double dx = grid.dx();
    const bool rotate = grid.dilation == Dilation::global && grid.theta != 0.0;
    const cplx e = rotate ? std::polar(1.0, grid.theta) : cplx(1.0);
    const cplx b = alpha * alpha * grid.h * grid.h / (eps * e * e);
    const auto k = dual_momenta(grid);

    std::vector<cplx> g(N);
    for (int d = 0; d < N; ++d) {
        const double s = wrap_diff(d, N) * dx;
        cplx acc = 0.0;
        for (int q = 0; q < N; ++q) acc += std::cos(k[q] * s) * std::exp(-b * k[q] * k[q]);
        g[d] = acc / double(N);
    }
    CMat G(N, N);
    for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
            const int d = wrap_diff(j - l, N);
            const double m = grid.node(l) + 0.5 * d * dx;
            const cplx u = e * m - center;
            G(j, l) = g[(d + N) % N] * std::exp(-alpha * alpha * u * u / eps);
        }
    return 0.5 * (G + G.transpose());
}

OperatorMatrix assemble_gaussian_weyl(double eps, double alpha, const GridSpec& grid,
                                      const std::array<double, 2>& center) {
    grid.validate();
    OperatorMatrix op;
    op.grid = grid;
    op.hermitian = grid.theta == 0.0 || grid.dilation == Dilation::exterior;
    if (eps <= 0.0) {
        op.A = CMat::Zero(grid.size(), grid.size());
        return op;
    }
    check_resolution(std::sqrt(eps) / alpha, grid, "bump");
    const CMat G1 = gaussian_weyl_factor(eps, alpha, grid, center[0]);
    if (grid.dimension == 1) {
        op.A = eps * G1;
        return op;
    }
    const CMat G2 = gaussian_weyl_factor(eps, alpha, grid, center[1]);
    const int N = grid.N;
    op.A.resize(Eigen::Index(N) * N, Eigen::Index(N) * N);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) op.A.block(Eigen::Index(a) * N, Eigen::Index(b) * N, N, N) = (eps * G1(a, b)) * G2;
    return op;
}

OperatorMatrix assemble_well_fill_op(const GridField& beta, const GridField& chiU, const GridSpec& grid) {
    grid.validate();
    const int n = grid.dimension;
    const int N = grid.N;
    const std::size_t M = grid.size();
    const GridSpec hg = half_grid(grid);
    const std::size_t HM = hg.size();
    const double dx = grid.dx();
    const double h2 = grid.h * grid.h;
    const auto k = dual_momenta(grid);

    std::vector<double> chi(M);
    for (std::size_t i = 0; i < M; ++i) {
        const auto x = grid.point(i);
        chi[i] = chiU.interp(x.data());
    }
    std::vector<double> b(HM);
    double bmax = 0.0;
    for (std::size_t q = 0; q < HM; ++q) {
        const auto x = hg.point(q);
        b[q] = std::max(0.0, beta.interp(x.data()));
        bmax = std::max(bmax, b[q]);
    }
    // the assembly is band limited, so the Gaussian symbol has to be resolved
    // on the dual lattice, whose spacing in xi is h pi / L
    if (bmax > 0.0 && std::sqrt(bmax) < 2.0 * grid.h * kPi / grid.L)
        throw Error("GridTooCoarse", "well fill symbol width " + std::to_string(std::sqrt(bmax)) +
                                         " below two momentum cells");

    // cos(k s) for every wrapped difference, then g_m(s) per midpoint with beta > 0
    RMat C(N, N);
    for (int d = 0; d < N; ++d)
        for (int q = 0; q < N; ++q) C(d, q) = std::cos(k[q] * wrap_diff(d, N) * dx);
    std::vector<int> slot(HM, -1);
    std::vector<double> table;
    for (std::size_t q = 0; q < HM; ++q) {
        if (b[q] <= 0.0) continue;
        RVec w(N);
        for (int p = 0; p < N; ++p) w[p] = std::exp(-h2 * k[p] * k[p] / (2.0 * b[q])) / N;
        const RVec g = C * w;
        slot[q] = int(table.size() / N);
        table.insert(table.end(), g.data(), g.data() + N);
    }

    OperatorMatrix op;
    op.grid = grid;
    op.provenance = Provenance::other;
    op.hermitian = true;
    op.A = CMat::Zero(M, M);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < M; ++i)
        if (chi[i] > 0.0) active.push_back(i);
    for (std::size_t r : active) {
        const auto jr = grid.split(r);
        for (std::size_t c : active) {
            const auto lc = grid.split(c);
            int dd[2] = {0, 0}, mq[2] = {0, 0};
            for (int a = 0; a < n; ++a) {
                dd[a] = wrap_diff(jr[a] - lc[a], N);
                mq[a] = ((2 * lc[a] + dd[a]) % (2 * N) + 2 * N) % (2 * N);
            }
            const std::size_t q = hg.flat(mq[0], mq[1]);
            if (slot[q] < 0) continue;
            const double* g = &table[std::size_t(slot[q]) * N];
            double v = b[q] * g[(dd[0] + N) % N];
            if (n == 2) v *= g[(dd[1] + N) % N];
            op.A(r, c) = chi[r] * v * chi[c];
        }
    }
    op.A = 0.5 * (op.A + op.A.transpose()).eval();
    return op;
}

CMat multiplication(const GridField& f, const GridSpec& grid) {
    const std::size_t M = grid.size();
    CMat D = CMat::Zero(M, M);
    for (std::size_t i = 0; i < M; ++i) {
        const auto x = grid.point(i);
        D(i, i) = f.interp(x.data());
    }
    return D;
}

OperatorFamily assemble_family(const PotentialSpec& spec, const SaddleFrame& frame, const GridSpec& grid,
                               const FamilyConfig& cfg) {
    GridSpec g0 = grid;
    g0.theta = 0.0;
    OperatorFamily fam;
    fam.P = assemble_schrodinger(spec, g0);
    const OperatorMatrix bump = assemble_gaussian_weyl(cfg.eps, cfg.alpha, g0, frame.saddle);
    fam.P_eps = fam.P;
    fam.P_eps.A += bump.A;
    fam.P_eps.provenance = Provenance::P_eps;

    fam.P_int = fam.P_eps;
    fam.P_int.provenance = Provenance::P_int;
    if (cfg.sea) fam.P_int.A += multiplication(cfg.sea->W, g0);

    std::optional<OperatorMatrix> fill;
    if (cfg.well) fill = assemble_well_fill_op(cfg.well->beta, cfg.well->chiU, g0);
    fam.P_ext = fam.P_eps;
    fam.P_ext.provenance = Provenance::P_ext;
    if (fill) fam.P_ext.A += fill->A;

    if (cfg.dilated && grid.theta != 0.0) {
        fam.P_dil = assemble_schrodinger(spec, grid);
        fam.P_eps_dil = *fam.P_dil;
        fam.P_eps_dil->A += assemble_gaussian_weyl(cfg.eps, cfg.alpha, grid, frame.saddle).A;
        fam.P_eps_dil->provenance = Provenance::P_eps;
        fam.P_ext_dil = *fam.P_eps_dil;
        fam.P_ext_dil->provenance = Provenance::P_ext;
        if (fill) fam.P_ext_dil->A += fill->A;
    }
    return fam;
}

namespace {

constexpr char kMagic[8] = {'S', 'R', 'E', 'S', 'O', 'P', '0', '1'};

struct Header {
    std::int32_t n, N, provenance, hermitian, dilation, pad;
    double L, h, theta, onset, ramp;
    std::int64_t side;
};

}  // namespace

void write_operator(const OperatorMatrix& op, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("IOError", "cannot write " + path);
    Header hd{op.grid.dimension, op.grid.N, int(op.provenance), op.hermitian ? 1 : 0,
              int(op.grid.dilation), 0, op.grid.L, op.grid.h, op.grid.theta, op.grid.scale_onset,
              op.grid.scale_ramp, std::int64_t(op.side())};
    f.write(kMagic, sizeof kMagic);
    f.write(reinterpret_cast<const char*>(&hd), sizeof hd);
    std::vector<cplx> row(op.side());
    for (Eigen::Index r = 0; r < op.side(); ++r) {
        for (Eigen::Index c = 0; c < op.side(); ++c) row[c] = op.A(r, c);
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size() * sizeof(cplx)));
    }
    if (!f) throw Error("IOError", "short write to " + path);
}

OperatorMatrix read_operator(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("IOError", "cannot read " + path);
    char magic[8];
    Header hd{};
    f.read(magic, sizeof magic);
    f.read(reinterpret_cast<char*>(&hd), sizeof hd);
    if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error("CorruptEntry", "bad operator header in " + path);
    OperatorMatrix op;
    op.grid.dimension = hd.n;
    op.grid.N = hd.N;
    op.grid.L = hd.L;
    op.grid.h = hd.h;
    op.grid.theta = hd.theta;
    op.grid.dilation = Dilation(hd.dilation);
    op.grid.scale_onset = hd.onset;
    op.grid.scale_ramp = hd.ramp;
    op.provenance = Provenance(hd.provenance);
    op.hermitian = hd.hermitian != 0;
    if (hd.side <= 0 || std::size_t(hd.side) != op.grid.size()) throw Error("CorruptEntry", "side mismatch in " + path);
    op.A.resize(hd.side, hd.side);
    std::vector<cplx> row(hd.side);
    for (Eigen::Index r = 0; r < hd.side; ++r) {
        f.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * sizeof(cplx)));
        if (!f) throw Error("CorruptEntry", "truncated operator data in " + path);
        for (Eigen::Index c = 0; c < hd.side; ++c) op.A(r, c) = row[c];
    }
    return op;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hsh = 1469598103934665603ull;
    for (unsigned char ch : text) {
        hsh ^= ch;
        hsh *= 1099511628211ull;
    }
    return hsh;
}

std::string cache_key(const std::string& spec_json, const GridSpec& grid, double eps, double delta, double A, double B) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "|%d|%d|%.17g|%.17g|%.17g|%d|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g", grid.dimension,
                  grid.N, grid.L, grid.h, grid.theta, int(grid.dilation), grid.scale_onset, grid.scale_ramp, eps, delta,
                  A, B);
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(fnv1a(spec_json + buf)));
    return out;
}

}  // namespace sres
