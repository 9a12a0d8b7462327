#include "sres/escape.hpp"

#include <json.hpp>

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sres {

double FrameSymbol::real(const Phase& r) const {
    CPhase z;
    for (int i = 0; i < 4; ++i) z[i] = r[i];
    return value(z).real();
}

FrameSymbol quadratic_model(int n, double q) {
    FrameSymbol s;
    s.n = n;
    s.value = [n, q](const CPhase& r) {
        const cplx xn = r[n - 1], xin = r[2 * n - 1];
        cplx v = 0.5 * (xin * xin - xn * xn);
        for (int a = 0; a < n - 1; ++a) v += 0.5 * q * (r[a] * r[a] + r[n + a] * r[n + a]);
        return v;
    };
    s.gradient = [n, q](const Phase& r) {
        Phase g{};
        g[n - 1] = -r[n - 1];
        g[2 * n - 1] = r[2 * n - 1];
        for (int a = 0; a < n - 1; ++a) {
            g[a] = q * r[a];
            g[n + a] = q * r[n + a];
        }
        return g;
    };
    return s;
}

FrameSymbol canonical_symbol(const PotentialSpec& spec, const SaddleFrame& frame) {
    FrameSymbol s;
    const int n = frame.dimension;
    s.n = n;
    auto phys = [frame, n](const auto* X, auto* x) {
        for (int k = 0; k < n; ++k) {
            x[k] = frame.saddle[k];
            for (int a = 0; a < n; ++a) x[k] += frame.basis(k, a) * frame.scales[a] * X[a];
        }
    };
    s.value = [spec, frame, n, phys](const CPhase& r) {
        cplx x[2] = {0.0, 0.0};
        phys(r.data(), x);
        cplx k2 = 0.0;
        for (int a = 0; a < n; ++a) k2 += r[n + a] * r[n + a] / (frame.scales[a] * frame.scales[a]);
        return (k2 + eval_potential(spec, x, 0).value) / frame.kappa;
    };
    s.gradient = [spec, frame, n, phys](const Phase& r) {
        cplx x[2] = {0.0, 0.0};
        const cplx X[2] = {r[0], n > 1 ? r[1] : 0.0};
        phys(X, x);
        const auto v = eval_potential(spec, x, 1);
        Phase g{};
        for (int a = 0; a < n; ++a) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += v.grad[k].real() * frame.basis(k, a);
            g[a] = acc * frame.scales[a] / frame.kappa;
            g[n + a] = 2.0 * r[n + a] / (frame.scales[a] * frame.scales[a] * frame.kappa);
        }
        return g;
    };
    return s;
}

FrameSymbol with_bump(const FrameSymbol& p, double eps, double alpha) {
    FrameSymbol s = p;
    const int n = p.n;
    s.value = [p, n, eps, alpha](const CPhase& r) {
        cplx r2 = 0.0;
        for (int i = 0; i < 2 * n; ++i) r2 += r[i] * r[i];
        return p.value(r) + eps * std::exp(-alpha * alpha * r2 / eps);
    };
    s.gradient = [p, n, eps, alpha](const Phase& r) {
        double r2 = 0.0;
        for (int i = 0; i < 2 * n; ++i) r2 += r[i] * r[i];
        const double e = std::exp(-alpha * alpha * r2 / eps);
        Phase g = p.gradient(r);
        for (int i = 0; i < 2 * n; ++i) g[i] += -2.0 * alpha * alpha * r[i] * e;
        return g;
    };
    return s;
}

void EscapeConfig::validate() const {
    if (!(eps > 0.0)) throw Error("InvalidConfig", "eps must be positive");
    if (!(lambda >= 1.0)) throw Error("InvalidConfig", "lambda must be at least 1");
    if (!(C >= 1.0) || !(Ct >= C)) throw Error("InvalidConfig", "need C >= 1 and C tilde >= C");
    if (!(1.0 / (lambda * lambda) < 1.0 / (4.0 * C))) throw Error("InvalidConfig", "need 1/lambda^2 < 1/(4C)");
    if (!(rho_max > 0.0)) throw Error("InvalidConfig", "rho_max must be positive");
    if (t < 0.0) throw Error("InvalidConfig", "t must be nonnegative");
}

EscapeValue escape_value(int n, double lambda, double eps_g, const Phase& r, int order) {
    EscapeValue out;
    const double xn = r[n - 1], xin = r[2 * n - 1];
    if (xn <= 0.0) return out;
    double D2 = eps_g;
    for (int a = 0; a < n - 1; ++a) D2 += r[a] * r[a];
    for (int a = 0; a < n; ++a) D2 += r[n + a] * r[n + a];
    const double D = std::sqrt(D2);
    const double u = lambda * xn / D;
    const double P = 1.0 - smooth_step(u);
    const double G0 = xn * xin;
    out.G = P * G0;
    if (order < 1) return out;
    const double dP = -smooth_step_deriv(u);
    Phase du{};
    du[n - 1] = lambda / D;
    for (int a = 0; a < n - 1; ++a) du[a] = -lambda * xn * r[a] / (D2 * D);
    for (int a = 0; a < n; ++a) du[n + a] = -lambda * xn * r[n + a] / (D2 * D);
    for (int i = 0; i < 2 * n; ++i) out.grad[i] = dP * du[i] * G0;
    out.grad[n - 1] += P * xin;
    out.grad[2 * n - 1] += P * xn;
    return out;
}

Phase escape_hessian_row(int n, double lambda, double eps_g, const Phase& r, int k, double step) {
    Phase a = r, b = r;
    a[k] += step;
    b[k] -= step;
    const auto ga = escape_value(n, lambda, eps_g, a).grad;
    const auto gb = escape_value(n, lambda, eps_g, b).grad;
    Phase out{};
    for (int i = 0; i < 2 * n; ++i) out[i] = (ga[i] - gb[i]) / (2.0 * step);
    return out;
}

double hamilton_bracket(const Phase& gp, const Phase& gg, int n) {
    double h = 0.0;
    for (int a = 0; a < n; ++a) h += gp[n + a] * gg[a] - gp[a] * gg[n + a];
    return h;
}

double hamilton_bracket(const FrameSymbol& p, int n, double lambda, double eps_g, const Phase& rho) {
    return hamilton_bracket(p.gradient(rho), escape_value(n, lambda, eps_g, rho).grad, n);
}

cplx deformed_symbol(const FrameSymbol& p, int n, double lambda, double eps_g, const Phase& rho, double t) {
    const auto g = escape_value(n, lambda, eps_g, rho).grad;
    CPhase z{};
    for (int a = 0; a < n; ++a) {
        z[a] = cplx(rho[a], t * g[n + a]);
        z[n + a] = cplx(rho[n + a], -t * g[a]);
    }
    return p.value(z);
}

const char* implication_name(Implication w) {
    switch (w) {
        case Implication::esc1: return "esc1";
        case Implication::bp1: return "bp1";
        case Implication::ltg1: return "ltg1";
        default: return "ltg2";
    }
}

std::string ConstantsReport::to_json() const {
    nlohmann::json j;
    j["which"] = which;
    j["samples"] = samples;
    j["hypothesis_count"] = hypothesis_count;
    j["boundary_samples"] = boundary_samples;
    j["ratio_min"] = ratio_min;
    j["ratio_max"] = ratio_max;
    j["spread"] = ratio_min > 0.0 ? ratio_max / ratio_min : -1.0;
    j["violations"] = violations;
    j["pass"] = pass;
    j["violating"] = nlohmann::json::array();
    for (const auto& v : violating) j["violating"].push_back(std::vector<double>(v.begin(), v.end()));
    return j.dump(2);
}

namespace {

double norm2(const Phase& r, int n) {
    double s = 0.0;
    for (int i = 0; i < 2 * n; ++i) s += r[i] * r[i];
    return s;
}

// deterministic low-discrepancy points in {|rho| <= rho_max, x_n >= 0}
std::vector<Phase> phase_samples(int n, double rho_max, std::uint64_t count, std::uint64_t seed) {
    const int d = 2 * n;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> shift(d + 1);
    for (auto& s : shift) s = u01(rng);
    auto frac = [](double v) { return v - std::floor(v); };
    std::vector<Phase> out;
    out.reserve(count);

    boost::random::sobol cube(d);
    const std::uint64_t half = count / 2;
    while (out.size() < half) {
        Phase r{};
        for (int i = 0; i < d; ++i) {
            const double u = frac(double(cube()) * 0x1p-64 + shift[i]);
            r[i] = (i == n - 1) ? rho_max * u : rho_max * (2.0 * u - 1.0);
        }
        if (norm2(r, n) <= rho_max * rho_max) out.push_back(r);
    }
    boost::random::sobol radial(d + 1);
    while (out.size() < count) {
        Phase g{};
        double gn = 0.0;
        for (int i = 0; i < d; ++i) {
            const double u = std::clamp(frac(double(radial()) * 0x1p-64 + shift[i]), 1e-12, 1.0 - 1e-12);
            g[i] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
            gn += g[i] * g[i];
        }
        const double ur = frac(double(radial()) * 0x1p-64 + shift[d]);
        const double rad = rho_max * std::pow(10.0, -3.0 * (1.0 - ur));
        gn = std::sqrt(gn);
        if (gn == 0.0) continue;
        Phase r{};
        for (int i = 0; i < d; ++i) r[i] = rad * g[i] / gn;
        r[n - 1] = std::abs(r[n - 1]);
        out.push_back(r);
    }
    return out;
}

}  // namespace

ConstantsReport check_comparability(const EscapeConfig& cfg, Implication which, const FrameSymbol& p) {
    cfg.validate();
    if ((which == Implication::ltg1 || which == Implication::ltg2) && !(cfg.t > 0.0))
        throw Error("InvalidConfig", "deformation checks need t > 0");
    const int n = p.n;
    const double eps = cfg.eps;
    const double eg = which == Implication::esc1 ? eps : cfg.eps_tilde();
    const FrameSymbol pe = with_bump(p, eps, cfg.alpha);

    // hypothesis as a margin (<= 0 means satisfied) and the conclusion
    auto margin = [&](const Phase& r) {
        const double r2 = norm2(r, n);
        switch (which) {
            case Implication::esc1: return p.real(r) - (-eps / cfg.C + r2 / cfg.C) + 1e-300;
            case Implication::bp1: return pe.real(r) - (cfg.b * eps + cfg.c * r2);
            case Implication::ltg1:
                return deformed_symbol(p, n, cfg.lambda, eg, r, cfg.t).real() - (-eps / cfg.Ct + r2 / (2.0 * cfg.C));
            default:
                return deformed_symbol(pe, n, cfg.lambda, eg, r, cfg.t).real() - (cfg.b * eps + 0.5 * cfg.c * r2);
        }
    };
    auto conclusion = [&](const Phase& r, double& ratio) {
        const double r2 = norm2(r, n);
        const double scale = eps + r2;
        bool ok = true;
        switch (which) {
            case Implication::esc1: ratio = hamilton_bracket(p, n, cfg.lambda, eg, r) / scale; break;
            case Implication::bp1:
                ok = p.real(r) <= -eps / cfg.Ct + r2 / cfg.C;
                ratio = hamilton_bracket(pe, n, cfg.lambda, eg, r) / scale;
                break;
            case Implication::ltg1:
                ratio = -deformed_symbol(p, n, cfg.lambda, eg, r, cfg.t).imag() / (cfg.t * scale);
                break;
            default:
                ok = pe.real(r) <= cfg.b * eps + cfg.c * r2 && p.real(r) <= -eps / cfg.Ct + r2 / cfg.C;
                ratio = -deformed_symbol(pe, n, cfg.lambda, eg, r, cfg.t).imag() / (cfg.t * scale);
        }
        return ok && ratio > 0.0;
    };

    ConstantsReport rep;
    rep.which = implication_name(which);
    rep.ratio_min = std::numeric_limits<double>::max();
    rep.ratio_max = -std::numeric_limits<double>::max();
    auto visit = [&](const Phase& r) {
        ++rep.samples;
        if (margin(r) > 0.0) return false;
        ++rep.hypothesis_count;
        double ratio = 0.0;
        const bool ok = conclusion(r, ratio);
        rep.ratio_min = std::min(rep.ratio_min, ratio);
        rep.ratio_max = std::max(rep.ratio_max, ratio);
        if (!ok) {
            ++rep.violations;
            if (rep.violating.size() < 8) rep.violating.push_back(r);
        }
        return true;
    };

    const auto pts = phase_samples(n, cfg.rho_max, cfg.samples, cfg.seed);
    std::uint64_t failed = 0;
    for (const auto& r : pts) {
        if (visit(r)) continue;
        // every fourth outside point is pushed along x_n onto the hypothesis boundary
        if (++failed % 4 != 0) continue;
        const double rest = norm2(r, n) - r[n - 1] * r[n - 1];
        const double top = std::sqrt(std::max(0.0, cfg.rho_max * cfg.rho_max - rest));
        Phase hi = r;
        hi[n - 1] = top;
        if (margin(hi) > 0.0) continue;
        double lo_x = r[n - 1], hi_x = top;
        for (int it = 0; it < 40; ++it) {
            Phase mid = r;
            mid[n - 1] = 0.5 * (lo_x + hi_x);
            (margin(mid) > 0.0 ? lo_x : hi_x) = mid[n - 1];
        }
        Phase b = r;
        b[n - 1] = hi_x;
        ++rep.boundary_samples;
        visit(b);
    }
    if (rep.hypothesis_count == 0) throw Error("NoHypothesisSamples", std::string("empty hypothesis region for ") + rep.which);
    rep.pass = rep.violations == 0 && rep.ratio_min > 0.0 && rep.ratio_max / rep.ratio_min <= cfg.spread_bound;
    return rep;
}

std::pair<double, double> bp1_alpha_threshold(EscapeConfig cfg, const FrameSymbol& p, double alpha0, double alpha_cap) {
    double good = 0.0;
    for (double a = alpha0; a <= alpha_cap; a *= 2.0) {
        cfg.alpha = a;
        bool ok = false;
        try {
            ok = check_comparability(cfg, Implication::bp1, p).pass;
        } catch (const Error&) {
            ok = false;
        }
        if (!ok) return {good, a};
        good = a;
    }
    return {good, 0.0};
}

EscapeInvariants check_escape_invariants(const EscapeConfig& cfg, const FrameSymbol& p, std::uint64_t samples) {
    cfg.validate();
    const int n = p.n;
    const double eps = cfg.eps;
    const FrameSymbol pe = with_bump(p, eps, cfg.alpha);
    EscapeInvariants inv;
    inv.cutoff_margin_min = std::numeric_limits<double>::max();
    inv.bump_lower_margin_min = std::numeric_limits<double>::max();
    inv.support_margin_min = std::numeric_limits<double>::max();
    for (const auto& r : phase_samples(n, cfg.rho_max, samples, cfg.seed + 1)) {
        const double r2 = norm2(r, n);
        const double s = eps + r2;
        const auto ev = escape_value(n, cfg.lambda, eps, r);
        double g1 = 0.0, g2 = 0.0;
        for (int i = 0; i < 2 * n; ++i) g1 = std::max(g1, std::abs(ev.grad[i]));
        for (int k = 0; k < 2 * n; ++k)
            for (double v : escape_hessian_row(n, cfg.lambda, eps, r, k)) g2 = std::max(g2, std::abs(v));
        inv.deriv_ratio_max[0] = std::max(inv.deriv_ratio_max[0], std::abs(ev.G) / s);
        inv.deriv_ratio_max[1] = std::max(inv.deriv_ratio_max[1], g1 / std::sqrt(s));
        inv.deriv_ratio_max[2] = std::max(inv.deriv_ratio_max[2], g2);

        double D2 = eps;
        for (int a = 0; a < n - 1; ++a) D2 += r[a] * r[a];
        for (int a = 0; a < n; ++a) D2 += r[n + a] * r[n + a];
        const double xn = r[n - 1];
        if (cfg.lambda * xn < std::sqrt(D2)) {
            ++inv.cutoff_samples;
            const double pv = p.real(r);
            inv.cutoff_margin_min = std::min(inv.cutoff_margin_min, pv - (-eps / cfg.C + r2 / cfg.C));
            // C p >= r2 - eps bounds C from below where r2 > eps and from above where p < 0
            if (r2 > eps) inv.cutoff_C_lower = std::max(inv.cutoff_C_lower, pv > 0.0 ? (r2 - eps) / pv : INFINITY);
            else if (pv < 0.0) inv.cutoff_C_upper = std::min(inv.cutoff_C_upper, (eps - r2) / -pv);
        }
        if (ev.G != 0.0) inv.support_margin_min = std::min(inv.support_margin_min, xn * xn - D2 / (4.0 * cfg.lambda * cfg.lambda));
        const double chi = eps * std::exp(-cfg.alpha * cfg.alpha * r2 / eps);
        inv.bump_lower_margin_min = std::min(inv.bump_lower_margin_min, chi - cfg.a * (eps - r2 / (cfg.r0 * cfg.r0)));
        const double dh = hamilton_bracket(pe, n, cfg.lambda, eps, r) - hamilton_bracket(p, n, cfg.lambda, eps, r);
        inv.bracket_perturbation_max = std::max(inv.bracket_perturbation_max, std::abs(dh) / (cfg.alpha * s));
    }
    return inv;
}

}  // namespace sres
