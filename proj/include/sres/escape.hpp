#pragma once

#include "sres/common.hpp"
#include "sres/potential.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sres {

// rho = (x_1..x_n, xi_1..xi_n) in saddle-frame coordinates, n <= 2
using Phase = std::array<double, 4>;
using CPhase = std::array<cplx, 4>;

// An analytic phase-space symbol near the saddle.
struct FrameSymbol {
    int n = 2;
    std::function<cplx(const CPhase&)> value;
    std::function<Phase(const Phase&)> gradient;  // real gradient at real points

    double real(const Phase& r) const;
};

// 1/2 (xi_n^2 - x_n^2) + q/2 (|x'|^2 + |xi'|^2)
FrameSymbol quadratic_model(int n, double q = 1.0);
// (|xi|^2 + V(x)) / kappa pulled back to frame coordinates
FrameSymbol canonical_symbol(const PotentialSpec& spec, const SaddleFrame& frame);
// p + eps exp(-alpha^2 rho^2 / eps), the bump written directly in frame coordinates
FrameSymbol with_bump(const FrameSymbol& p, double eps, double alpha);

struct EscapeConfig {
    double eps = 0.05;
    double lambda = 5.0;   // 1/lambda^2 < 1/(4C)
    double alpha = 0.5;
    double t = 0.05;
    double C = 4.0;
    double Ct = 16.0;      // C tilde
    double a = 0.125;      // lower bound constant of the bump
    double r0 = 1.0;
    double b = 0.0625;     // a / 2
    double c = 0.125;      // 1 / (2C)
    double rho_max = 0.5;
    std::uint64_t samples = 131072;
    double spread_bound = 50.0;
    std::uint64_t seed = 2024;

    void validate() const;
    double eps_tilde() const { return C * eps / Ct; }
};

struct EscapeValue {
    double G = 0.0;
    Phase grad{};
};

// (1 - Psi(lambda x_n / sqrt(eps_g + |x'|^2 + |xi|^2))) x_n xi_n
EscapeValue escape_value(int n, double lambda, double eps_g, const Phase& rho, int order = 1);
Phase escape_hessian_row(int n, double lambda, double eps_g, const Phase& rho, int k, double step = 1e-6);

double hamilton_bracket(const FrameSymbol& p, int n, double lambda, double eps_g, const Phase& rho);
double hamilton_bracket(const Phase& grad_p, const Phase& grad_g, int n);

// p(rho + i t H_G(rho)) evaluated at the complex point
cplx deformed_symbol(const FrameSymbol& p, int n, double lambda, double eps_g, const Phase& rho, double t);

enum class Implication { esc1, bp1, ltg1, ltg2 };
const char* implication_name(Implication w);

struct ConstantsReport {
    std::string which;
    std::uint64_t samples = 0;
    std::uint64_t hypothesis_count = 0;
    std::uint64_t boundary_samples = 0;
    double ratio_min = 0.0, ratio_max = 0.0;
    std::uint64_t violations = 0;
    std::vector<Phase> violating;  // first few
    bool pass = false;

    double spread() const { return ratio_min > 0.0 ? ratio_max / ratio_min : INFINITY; }
    std::string to_json() const;
};

// Samples {|rho| <= rho_max, x_n >= 0} with a shifted Sobol sequence (half
// uniform in the ball, half with log-uniform radius) plus points pushed onto
// the hypothesis boundary along x_n.
ConstantsReport check_comparability(const EscapeConfig& cfg, Implication which, const FrameSymbol& p);

// largest alpha on the doubling ladder alpha0, 2 alpha0, ... that passes bp1; the
// first failing alpha is returned in the second slot (0 if none failed up to alpha_cap)
std::pair<double, double> bp1_alpha_threshold(EscapeConfig cfg, const FrameSymbol& p, double alpha0, double alpha_cap);

struct EscapeInvariants {
    double deriv_ratio_max[3] = {0.0, 0.0, 0.0};  // max |d^k G| / (eps + rho^2)^{1 - k/2}
    std::uint64_t cutoff_samples = 0;
    double cutoff_margin_min = 0.0;  // min of p - (-eps/C + rho^2/C) over cutoff samples
    double cutoff_C_lower = 0.0;     // the cutoff inequality holds for every C in [lower, upper]
    double cutoff_C_upper = INFINITY;
    double bump_lower_margin_min = 0.0;  // min of chi_eps - a (eps - rho^2/r0^2)
    double bracket_perturbation_max = 0.0;  // max |H_{p_eps} G - H_p G| / (alpha (eps + rho^2))
    double support_margin_min = 0.0;  // min of x_n^2 - (eps + |x'|^2+|xi|^2)/(4 lambda^2) where G != 0
};
EscapeInvariants check_escape_invariants(const EscapeConfig& cfg, const FrameSymbol& p, std::uint64_t samples = 20000);

}  // namespace sres
