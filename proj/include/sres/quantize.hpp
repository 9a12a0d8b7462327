#pragma once

#include "sres/common.hpp"
#include "sres/grid.hpp"
#include "sres/potential.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace sres {

enum class Provenance : int { P = 0, P_eps = 1, P_int = 2, P_ext = 3, P_surgery = 4, other = 5 };
const char* provenance_name(Provenance p);

struct OperatorMatrix {
    CMat A;
    bool hermitian = false;
    Provenance provenance = Provenance::other;
    GridSpec grid;

    Eigen::Index side() const { return A.rows(); }
    double hermitian_defect() const;  // max |A - A^*| entry
};

// 1D Fourier collocation pieces on N periodic nodes of spacing 2L/N
RMat fourier_second(int N, double L);  // matrix of -d^2/dx^2, eigenvalues k^2
RMat fourier_first(int N, double L);   // matrix of d/dx with the Nyquist mode removed

// -h^2 d^2/dz^2 along one axis, written in the real coordinate of the contour
CMat kinetic_1d(const GridSpec& grid);

// -h^2 Laplacian + V on the contour.  Throws GridTooCoarse when the narrowest
// potential term is resolved by fewer than two cells.
OperatorMatrix assemble_schrodinger(const PotentialSpec& spec, const GridSpec& grid);

// Weyl quantization of eps * exp(-alpha^2 (|x - c|^2 + |xi|^2) / eps), built
// from the closed form of the momentum integral on the grid's dual lattice.
// Under global dilation the symbol is evaluated at (e^{i theta} x, e^{-i theta} xi);
// under exterior scaling it is left as is (its support lies inside the unscaled region).
OperatorMatrix assemble_gaussian_weyl(double eps, double alpha, const GridSpec& grid,
                                      const std::array<double, 2>& center = {0.0, 0.0});

// one axis factor of the bump: eps * kron(G_1, G_2) is the full matrix
CMat gaussian_weyl_factor(double eps, double alpha, const GridSpec& grid, double center);

// chi_U Op_h(beta e^{-xi^2/(2 beta)}) chi_U.  beta is sampled at periodic
// midpoints (exact on the half grid), chi_U at the nodes.
OperatorMatrix assemble_well_fill_op(const GridField& beta, const GridField& chiU, const GridSpec& grid);

// multiplication by a real field sampled at the nodes
CMat multiplication(const GridField& f, const GridSpec& grid);

struct FamilyConfig {
    double eps = 0.05;
    double alpha = 0.5;
    const SeaFill* sea = nullptr;    // W for P_int
    const WellFill* well = nullptr;  // beta, chi_U for P_ext
    bool dilated = true;             // also build dilated P, P_eps, P_ext at grid.theta
};

// P, P_eps = P + bump, P_int = P_eps + W (always at theta = 0), P_ext = P_eps + well fill
struct OperatorFamily {
    OperatorMatrix P, P_eps, P_int, P_ext;
    std::optional<OperatorMatrix> P_dil, P_eps_dil, P_ext_dil;
};
OperatorFamily assemble_family(const PotentialSpec& spec, const SaddleFrame& frame, const GridSpec& grid,
                               const FamilyConfig& cfg);

// binary layout: magic, n, N, L, h, theta, provenance, hermitian, row-major complex doubles
void write_operator(const OperatorMatrix& op, const std::string& path);
OperatorMatrix read_operator(const std::string& path);

std::uint64_t fnv1a(const std::string& text);
std::string cache_key(const std::string& spec_json, const GridSpec& grid, double eps, double delta, double A, double B);

}  // namespace sres
