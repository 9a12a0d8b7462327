#pragma once

#include "sres/common.hpp"
#include "sres/quantize.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sres {

struct SpectrumResult {
    std::vector<cplx> eigenvalues;          // ascending real parts for Hermitian input
    std::vector<std::size_t> checked;       // indices whose residual was computed
    std::vector<double> residual_norms;     // |A v - lambda v| / |v| for the checked indices
    CMat vectors;                           // columns, only when requested (Hermitian solver)
    Eigen::Index side = 0;
    Provenance provenance = Provenance::other;
    double theta = 0.0;
    bool hermitian = false;
    bool parity_split = false;

    double max_residual() const;
};

struct EigOptions {
    bool vectors = false;     // Hermitian solver only
    bool parity = true;       // use the x_1 reflection symmetry when the matrix has it
    double sample_fraction = 0.1;
    std::size_t max_samples = 0;  // 0: chosen from the matrix side
    std::uint64_t seed = 12345;
};

SpectrumResult eig_hermitian(const OperatorMatrix& op, const EigOptions& opt = {});
SpectrumResult eig_general(const OperatorMatrix& op, const EigOptions& opt = {});

// Block form of an operator that commutes with x_1 -> -x_1 on the periodic grid.
// even/odd are the compressions to the symmetric and antisymmetric subspaces.
struct ParityBlocks {
    CMat even, odd;
    int N = 0, inner = 1;  // points on the reflected axis, product of the remaining axes
    CVec lift(const CVec& w, bool even_block) const;
};
std::optional<ParityBlocks> parity_blocks(const CMat& A, const GridSpec& grid, double rel_tol = 1e-13);

// ]a,b[ + i]c,d[ in the energy plane; membership is half open, [a,b) x [c,d)
struct WindowSpec {
    double a = -1.0, b = 1.0, c = -1.0, d = 1.0;
    std::string role = "R";

    void validate() const;
    bool contains(cplx z) const { return z.real() >= a && z.real() < b && z.imag() >= c && z.imag() < d; }
    WindowSpec shrunk(double m) const { return {a + m, b - m, c, d, role}; }
};

struct ResonanceSet {
    std::vector<cplx> resonances;
    std::vector<double> stability;  // max displacement over consecutive angles
    std::vector<double> thetas;
    double threshold = 0.0;
    std::size_t candidates = 0;     // eigenvalues in the window before filtering
    double max_imag() const;
};

// Eigenvalues of build(theta) in the window that stay put (within threshold)
// when theta runs through the list.  The window must lie above the rotated
// continuum -E0 + e^{-2 i theta} R_+, otherwise WindowUncovered.
ResonanceSet extract_resonances(const std::function<OperatorMatrix(double)>& build, const std::vector<double>& thetas,
                                const WindowSpec& window, double E0, double threshold, const EigOptions& opt = {});
ResonanceSet extract_resonances(const PotentialSpec& spec, const GridSpec& grid, const std::vector<double>& thetas,
                                const WindowSpec& window, double threshold, const EigOptions& opt = {});
// same filtering on spectra computed elsewhere, one per angle in thetas
ResonanceSet resonances_from_spectra(const std::vector<std::vector<cplx>>& spectra, const std::vector<double>& thetas,
                                     const WindowSpec& window, double E0, double threshold);
bool window_covered(const WindowSpec& w, double E0, double theta_min);

struct MatchPair {
    cplx mu;  // eigenvalue of the interior operator
    cplx b;   // its resonance partner
    double distance = 0.0;
    bool ambiguous = false;  // second best candidate within 3x
};

struct MatchReport {
    std::vector<MatchPair> pairs;
    double max_distance = 0.0;
    double mean_distance = 0.0;
    double eps = 1.0;
    std::size_t unmatched_interior = 0;
    std::size_t unmatched_resonances = 0;
    bool cardinality_mismatch = false;

    std::string to_json() const;
};

// greedy nearest pairs; items within eps/10 of the vertical window sides only
// count when their partner is inside
MatchReport match_spectra(const std::vector<cplx>& interior, const std::vector<cplx>& resonances,
                          const WindowSpec& window, double eps);

struct SurgeryLevels {
    double A = -0.4;
    std::optional<double> B;
};

struct SurgeryResult {
    OperatorMatrix op;
    std::size_t moved = 0;
    bool empty = false;
    std::vector<std::pair<double, double>> moves;  // (mu, mu tilde)
    CMat factor;                                    // chi_U e_j for the moved j
    std::vector<double> shifts;                     // mu tilde - mu
};

double surgery_target(double mu, double level, double eps, double delta);

// P_target + chi_U sum (mu~_j - mu_j) e_j e_j^* chi_U over eigenpairs in the delta windows
SurgeryResult apply_surgery(const SpectrumResult& pint, const OperatorMatrix& target, const GridField& chiU, double eps,
                            double delta, const SurgeryLevels& levels);

std::size_t count_in_box(const std::vector<cplx>& values, const WindowSpec& w);

struct CountReport {
    WindowSpec window;
    std::size_t count = 0;
    double weyl = 0.0;
    double discrepancy = 0.0;  // count - weyl
    double h = 0.0;
};

void write_spectrum_csv(const std::string& path, const std::vector<cplx>& values, const std::vector<double>& residual = {},
                        const std::vector<double>& stability = {});

}  // namespace sres
