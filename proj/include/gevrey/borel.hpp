#pragma once

#include "gevrey/core.hpp"
#include "gevrey/instance.hpp"
#include "gevrey/mode_space.hpp"
#include "gevrey/series.hpp"
#include "gevrey/special.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace gevrey {

/// Borel tables reuse the series layout with k1, k2 recorded; ω_{n} = U_{n} / (Γ(n1/k1) Γ(n2/k2)).
using BorelTable = SeriesTableT<double>;

namespace detail {
/// log Γ(n/k), with the n = 0 slot carrying weight 1.
template <class Real>
std::vector<Real> log_gamma_row(int N, int k) {
    std::vector<Real> v(N + 1);
    for (int n = 0; n <= N; ++n) v[n] = log_borel_gamma<Real>(n, k);
    return v;
}
} // namespace detail

template <class Real>
SeriesTableT<Real> borel_transform(const SeriesTableT<Real>& U, int k1, int k2) {
    if (k1 < 1 || k2 < 1) throw Error(ErrorKind::shape_mismatch, "Borel orders must be positive");
    SeriesTableT<Real> w = U;
    w.k1 = k1;
    w.k2 = k2;
    auto l1 = detail::log_gamma_row<Real>(U.N1, k1), l2 = detail::log_gamma_row<Real>(U.N2, k2);
    for (int n1 = 0; n1 <= U.N1; ++n1)
        for (int n2 = 0; n2 <= U.N2; ++n2) {
            Real s = std::exp(-(l1[n1] + l2[n2]));
            for (auto& v : w.at(n1, n2)) v *= s;
        }
    return w;
}

template <class Real>
SeriesTableT<Real> inverse_borel(const SeriesTableT<Real>& w) {
    if (w.k1 < 1 || w.k2 < 1) throw Error(ErrorKind::shape_mismatch, "table carries no Borel orders");
    SeriesTableT<Real> U = w;
    U.k1 = U.k2 = 0;
    auto l1 = detail::log_gamma_row<Real>(w.N1, w.k1), l2 = detail::log_gamma_row<Real>(w.N2, w.k2);
    for (int n1 = 0; n1 <= w.N1; ++n1)
        for (int n2 = 0; n2 <= w.N2; ++n2) {
            Real s = std::exp(l1[n1] + l2[n2]);
            for (auto& v : U.at(n1, n2)) v *= s;
        }
    return U;
}

/// Mode-space product used inside a Borel convolution.
struct ModeProduct {
    bool star = false;
    PolySpec left = PolySpec::constant(1), right = PolySpec::constant(1), div = PolySpec::constant(1);

    static ModeProduct pointwise() { return {}; }
    /// (2π)^{-1/2} times the star product with kernel (left, right) and divisor div.
    static ModeProduct kernel(PolySpec l, PolySpec r, PolySpec d = PolySpec::constant(1)) {
        return {true, std::move(l), std::move(r), std::move(d)};
    }
};

/// Borel image of the product of two series: entry n = Σ_{a+b=n} w(a1,b1) w(a2,b2) φ_a · ψ_b,
/// w(a,b) = Γ(a/k)Γ(b/k)/Γ((a+b)/k), which is B(a/k, b/k) when a, b >= 1.
template <class Real>
SeriesTableT<Real> beta_convolve(const SeriesTableT<Real>& phi, const SeriesTableT<Real>& psi,
                                 const ModeProduct& prod = ModeProduct::pointwise()) {
    require_same_shape(phi, psi, "beta_convolve");
    if (phi.k1 != psi.k1 || phi.k2 != psi.k2 || phi.k1 < 1)
        throw Error(ErrorKind::shape_mismatch, "beta_convolve needs Borel tables with equal orders");
    using C = std::complex<Real>;
    const int N1 = phi.N1, N2 = phi.N2, G = phi.G();
    auto l1 = detail::log_gamma_row<Real>(N1, phi.k1), l2 = detail::log_gamma_row<Real>(N2, phi.k2);
    auto ker = prod.star ? StarKernel<Real>::make(phi.grid, prod.left, prod.right, prod.div, phi.eps)
                         : StarKernel<Real>::plain(phi.grid);
    SeriesTableT<Real> lf(N1, N2, phi.grid), rg(N1, N2, phi.grid);
    std::vector<char> nzA, nzB;
    for (int a = 0; a <= N1; ++a)
        for (int b = 0; b <= N2; ++b) {
            nzA.push_back(!phi.entry_zero(a, b));
            nzB.push_back(!psi.entry_zero(a, b));
            for (int g = 0; g < G; ++g) {
                lf(a, b, g) = ker.left[g] * phi(a, b, g);
                rg(a, b, g) = ker.right[g] * psi(a, b, g);
            }
        }
    auto flat = [&](int a, int b) { return std::size_t(a) * (N2 + 1) + b; };
    SeriesTableT<Real> out(N1, N2, phi.grid, phi.eps);
    out.k1 = phi.k1;
    out.k2 = phi.k2;
    const Real inv_sqrt_2pi = 1 / std::sqrt(2 * std::numbers::pi_v<Real>);
    parallel_for(std::size_t(N1 + 1) * (N2 + 1), [&](std::size_t idx) {
        int n1 = int(idx / (N2 + 1)), n2 = int(idx % (N2 + 1));
        for (int a1 = 0; a1 <= n1; ++a1)
            for (int a2 = 0; a2 <= n2; ++a2) {
                int b1 = n1 - a1, b2 = n2 - a2;
                if (!nzA[flat(a1, a2)] || !nzB[flat(b1, b2)]) continue;
                Real w = std::exp(l1[a1] + l1[b1] - l1[n1] + l2[a2] + l2[b2] - l2[n2]);
                if (prod.star) {
                    star_accumulate<Real>(out.at(n1, n2), lf.at(a1, a2), rg.at(b1, b2), phi.grid, ker.inv_div,
                                          C(w * inv_sqrt_2pi));
                } else {
                    auto o = out.at(n1, n2);
                    auto x = phi.at(a1, a2), y = psi.at(b1, b2);
                    for (int g = 0; g < G; ++g) o[g] += w * x[g] * y[g];
                }
            }
    });
    return out;
}

/// Borel image of T1^{m1} T2^{m2} times the series: entry n+m = ω_n Γ(n/k)/Γ((n+m)/k) per axis,
/// which equals B(m/k, n/k)/Γ(m/k) for n, m >= 1. Entries pushed past the truncation are dropped.
template <class Real>
SeriesTableT<Real> borel_monomial_mult(const SeriesTableT<Real>& phi, int m1, int m2) {
    if (m1 < 0 || m2 < 0) throw Error(ErrorKind::shape_mismatch, "monomial exponents must be non-negative");
    auto l1 = detail::log_gamma_row<Real>(phi.N1 + m1, phi.k1), l2 = detail::log_gamma_row<Real>(phi.N2 + m2, phi.k2);
    SeriesTableT<Real> out(phi.N1, phi.N2, phi.grid, phi.eps);
    out.k1 = phi.k1;
    out.k2 = phi.k2;
    for (int n1 = 0; n1 + m1 <= phi.N1; ++n1)
        for (int n2 = 0; n2 + m2 <= phi.N2; ++n2) {
            Real w = std::exp(l1[n1] - l1[n1 + m1] + l2[n2] - l2[n2 + m2]);
            auto src = phi.at(n1, n2);
            auto dst = out.at(n1 + m1, n2 + m2);
            for (int g = 0; g < phi.G(); ++g) dst[g] = w * src[g];
        }
    return out;
}

/// Borel image of T^{k+1}∂_T on the chosen axis (1 or 2): entry n moves to n+k, times k.
template <class Real>
SeriesTableT<Real> euler_borel_diff(const SeriesTableT<Real>& phi, int axis) {
    if (axis != 1 && axis != 2) throw Error(ErrorKind::shape_mismatch, "axis must be 1 or 2");
    const int k = axis == 1 ? phi.k1 : phi.k2;
    SeriesTableT<Real> out(phi.N1, phi.N2, phi.grid, phi.eps);
    out.k1 = phi.k1;
    out.k2 = phi.k2;
    for (int n1 = 1 - (axis == 2); n1 <= phi.N1; ++n1)
        for (int n2 = 1 - (axis == 1); n2 <= phi.N2; ++n2) {
            int t1 = n1 + (axis == 1 ? k : 0), t2 = n2 + (axis == 2 ? k : 0);
            if (!out.in_range(t1, t2)) continue;
            auto src = phi.at(n1, n2);
            auto dst = out.at(t1, t2);
            for (int g = 0; g < phi.G(); ++g) dst[g] = Real(k) * src[g];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Weighted sup norm on Borel-plane samples

struct FNormParams {
    double nu1 = 0.5, nu2 = 0.5, beta = 1, mu = 2;
    int k1 = 1, k2 = 1;
    Complex eps{0.1};
    std::vector<Complex> tau1, tau2;
};

/// Polar samples on the closed disc: radii ρ·i/n_radii, i = 1..n_radii, times n_angles angles.
inline std::vector<Complex> disc_samples(double rho, int n_radii = 8, int n_angles = 16) {
    std::vector<Complex> v;
    for (int i = 1; i <= n_radii; ++i)
        for (int a = 0; a < n_angles; ++a)
            v.push_back(std::polar(rho * i / n_radii, 2 * std::numbers::pi * a / n_angles));
    return v;
}

/// Polar samples at radii |ε|·x for x on a log grid in [x_min, x_max], clipped to the disc ρ.
/// They follow the scale where the weight of the norm peaks, so they stay informative as ε -> 0.
inline std::vector<Complex> scaled_samples(Complex eps, double rho, int n_radii = 24, int n_angles = 16,
                                           double x_min = 0.05, double x_max = 20) {
    std::vector<Complex> v;
    for (int i = 0; i < n_radii; ++i) {
        double r = std::abs(eps) * x_min * std::pow(x_max / x_min, double(i) / (n_radii - 1));
        if (r > rho) break;
        for (int a = 0; a < n_angles; ++a) v.push_back(std::polar(r, 2 * std::numbers::pi * a / n_angles));
    }
    return v;
}

inline FNormParams fnorm_params(const ProblemInstance& inst, Complex eps, int n_radii = 8, int n_angles = 16) {
    FNormParams p;
    p.nu1 = inst.space.nu1;
    p.nu2 = inst.space.nu2;
    p.beta = inst.space.beta;
    p.mu = inst.space.mu;
    p.k1 = inst.exponents.k1;
    p.k2 = inst.exponents.k2;
    p.eps = eps;
    p.tau1 = p.tau2 = disc_samples(inst.space.rho, n_radii, n_angles);
    return p;
}

/// Weight (1+|x|^{2k})/|x| · e^{-ν|x|^k} at x = τ/ε.
inline double tau_weight(Complex tau, Complex eps, double nu, int k) {
    double x = std::abs(tau / eps);
    return (1 + std::pow(x, 2 * k)) / x * std::exp(-nu * std::pow(x, k));
}

struct FNormResult {
    double value = 0;
    Complex tau1{0}, tau2{0};
    double m = 0;
    /// The supremum only sees the sampled disc, not the unbounded sectors of the full norm.
    std::string label = "disc-restricted";
};

/// Sup over τ samples and mode nodes of the weighted modulus of the truncated series.
template <class Real>
FNormResult f_norm(const SeriesTableT<Real>& w, const FNormParams& p) {
    if (p.tau1.empty() || p.tau2.empty()) throw Error(ErrorKind::shape_mismatch, "f_norm needs a nonempty sample set");
    using C = std::complex<Real>;
    const int G = w.G();
    std::vector<double> mw(G);
    for (int g = 0; g < G; ++g) mw[g] = mode_weight(w.grid.node(g), p.beta, p.mu);
    std::vector<double> w2(p.tau2.size());
    for (std::size_t j = 0; j < p.tau2.size(); ++j) w2[j] = tau_weight(p.tau2[j], p.eps, p.nu2, p.k2);

    std::vector<FNormResult> best(p.tau1.size());
    parallel_for(p.tau1.size(), [&](std::size_t i) {
        const C t1(p.tau1[i]);
        const double w1 = tau_weight(p.tau1[i], p.eps, p.nu1, p.k1);
        // S[n2][g] = Σ_{n1} ω_{n1,n2}(m_g) τ1^{n1}
        std::vector<C> S(std::size_t(w.N2 + 1) * G, C(0));
        for (int n2 = 0; n2 <= w.N2; ++n2)
            for (int n1 = w.N1; n1 >= 0; --n1)
                for (int g = 0; g < G; ++g) S[n2 * G + g] = S[n2 * G + g] * (n1 == w.N1 ? C(0) : t1) + w(n1, n2, g);
        // Horner above leaves Σ ω τ1^{n1}; now sum over n2 per τ2 sample.
        FNormResult r;
        for (std::size_t j = 0; j < p.tau2.size(); ++j) {
            const C t2(p.tau2[j]);
            for (int g = 0; g < G; ++g) {
                C acc(0);
                for (int n2 = w.N2; n2 >= 0; --n2) acc = acc * t2 + S[n2 * G + g];
                double v = w1 * w2[j] * mw[g] * static_cast<double>(std::abs(acc));
                if (v > r.value) {
                    r.value = v;
                    r.tau1 = p.tau1[i];
                    r.tau2 = p.tau2[j];
                    r.m = w.grid.node(g);
                }
            }
        }
        best[i] = r;
    });
    FNormResult out;
    for (auto& r : best)
        if (r.value > out.value) out = r;
    return out;
}

// ---------------------------------------------------------------------------
// ε-scaling of the convolution operators

/// Finite sum Σ c_t(m) τ1^{e1} τ2^{e2} with real exponents, the closed-form image of
/// monomial inputs under the Borel-plane integral operators.
struct GenPoly {
    struct Term {
        double e1, e2;
        ModeFunction c;
    };
    std::vector<Term> terms;
    bool univariate = false; // depends on τ1 only
};

enum class OperatorId { P1, P2, P2prime, P3, P5, P6 };

inline std::string operator_name(OperatorId id) {
    switch (id) {
    case OperatorId::P1: return "P1";
    case OperatorId::P2: return "P2";
    case OperatorId::P2prime: return "P2'";
    case OperatorId::P3: return "P3";
    case OperatorId::P5: return "P5";
    case OperatorId::P6: return "P6";
    }
    return "?";
}

inline OperatorId parse_operator(const std::string& s) {
    if (s == "P1") return OperatorId::P1;
    if (s == "P2") return OperatorId::P2;
    if (s == "P2'" || s == "P2prime") return OperatorId::P2prime;
    if (s == "P3") return OperatorId::P3;
    if (s == "P5") return OperatorId::P5;
    if (s == "P6") return OperatorId::P6;
    throw Error(ErrorKind::invalid_instance, "unknown operator id " + s);
}

/// Exponents of the fractional and monomial weights in the integral operators.
struct OperatorParams {
    double gamma21 = 1, gamma22 = 1; // P1; 0 means 1/kj
    double chi1 = 0, chi2 = 0;       // P2, P2'
    int xi1 = 0, xi2 = 0;            // P2, P2'
};

struct ScalingReport {
    OperatorId op = OperatorId::P1;
    double expected_slope = 0;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN(); // log of the empirical constant
    double residual = 0;
    bool zero_input = false;
    std::vector<double> eps, ratio;
};

struct ScalingSamples {
    /// Points x = |τ/ε| on a log grid; τ = ε-modulus times x, clipped to the disc.
    int n_x = 41;
    double x_min = 1e-2, x_max = 1e2;
    int trials = 4;
    std::uint64_t seed = 12345;
};

namespace detail {

inline double genpoly_norm(const GenPoly& f, const ProblemInstance& inst, double eps_abs, const ScalingSamples& s) {
    const auto& sp = inst.space;
    const int k1 = inst.exponents.k1, k2 = inst.exponents.k2;
    std::vector<double> r1, r2;
    for (int i = 0; i < s.n_x; ++i) {
        double x = s.x_min * std::pow(s.x_max / s.x_min, double(i) / (s.n_x - 1));
        double t = eps_abs * x;
        if (t > sp.rho) break;
        r1.push_back(t);
    }
    r2 = f.univariate ? std::vector<double>{1.0} : r1;
    if (r1.empty()) return 0;
    const ModeGrid& grid = f.terms.empty() ? ModeGrid() : f.terms[0].c.grid;
    const int G = grid.n_points;
    std::vector<double> mw(G);
    for (int g = 0; g < G; ++g) mw[g] = mode_weight(grid.node(g), sp.beta, sp.mu);
    double best = 0;
    for (double t1 : r1)
        for (double t2 : r2) {
            double w = tau_weight(t1, eps_abs, sp.nu1, k1);
            if (!f.univariate) w *= tau_weight(t2, eps_abs, sp.nu2, k2);
            for (int g = 0; g < G; ++g) {
                Complex acc(0);
                for (auto& t : f.terms) acc += t.c.values[g] * std::pow(t1, t.e1) * (f.univariate ? 1.0 : std::pow(t2, t.e2));
                best = std::max(best, w * mw[g] * std::abs(acc));
            }
        }
    return best;
}

inline ModeFunction profile_function(const ProblemInstance& inst, const ModeGrid& g, Complex phase) {
    return ModeFunction::sample(g, [&](double m) { return phase * profile_base(m, inst.space); });
}

/// Random polynomial input with a few monomials of degree 1..4 per variable.
inline GenPoly random_input(const ProblemInstance& inst, const ModeGrid& g, std::mt19937_64& rng, bool univariate) {
    std::uniform_int_distribution<int> deg(1, 4);
    std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), mag(0.5, 1.5);
    GenPoly p;
    p.univariate = univariate;
    for (int t = 0; t < 3; ++t) {
        double e1 = deg(rng), e2 = univariate ? 0 : deg(rng);
        p.terms.push_back({e1, e2, profile_function(inst, g, std::polar(mag(rng), ang(rng)))});
    }
    return p;
}

inline GenPoly from_table(const BorelTable& w, bool univariate_first_axis = false) {
    GenPoly p;
    p.univariate = univariate_first_axis;
    for (int n1 = 0; n1 <= w.N1; ++n1)
        for (int n2 = 0; n2 <= w.N2; ++n2) {
            if (w.entry_zero(n1, n2)) continue;
            if (univariate_first_axis && n2 != 0) continue;
            p.terms.push_back({double(n1), double(n2), w.entry(n1, n2)});
        }
    return p;
}

/// ∫_0^{τ^k} (τ^k - s)^{a} s^{b} f(s^{1/k}) ds on a monomial τ^n: B(a+1, b+n/k+1) τ^{n + k(a+b+1)}.
inline std::pair<double, double> frac_integral(double n, int k, double a, double b) {
    return {beta_fn(a + 1, b + n / k + 1), n + k * (a + b + 1)};
}

} // namespace detail

/// Applies the operator to the inputs in closed form, monomial by monomial.
inline GenPoly apply_operator(OperatorId op, const ProblemInstance& inst, const OperatorParams& prm, const GenPoly& f,
                              const GenPoly& g, const ModeFunction& fm) {
    const int k1 = inst.exponents.k1, k2 = inst.exponents.k2;
    const auto& P = inst.polys;
    GenPoly out;
    switch (op) {
    case OperatorId::P1: {
        double g1 = prm.gamma21 > 0 ? prm.gamma21 : 1.0 / k1, g2 = prm.gamma22 > 0 ? prm.gamma22 : 1.0 / k2;
        for (auto& t : f.terms) {
            auto [c1, e1] = detail::frac_integral(t.e1, k1, g1, -1);
            auto [c2, e2] = detail::frac_integral(t.e2, k2, g2, -1);
            GenPoly::Term r{e1, e2, t.c};
            for (auto& v : r.c.values) v *= c1 * c2;
            out.terms.push_back(r);
        }
        break;
    }
    case OperatorId::P2:
    case OperatorId::P2prime: {
        bool both = op == OperatorId::P2;
        out.univariate = f.univariate;
        for (auto& t : f.terms) {
            auto [c1, e1] = detail::frac_integral(t.e1, k1, prm.chi1, prm.xi1);
            double c2 = 1, e2 = t.e2;
            if (both) std::tie(c2, e2) = detail::frac_integral(t.e2, k2, prm.chi2, prm.xi2);
            GenPoly::Term r{e1, e2, t.c};
            for (auto& v : r.c.values) v *= c1 * c2;
            out.terms.push_back(r);
        }
        break;
    }
    case OperatorId::P3:
    case OperatorId::P5: {
        // f is bivariate (P3) or depends on τ1 only (P5); g is bivariate.
        bool only1 = op == OperatorId::P5;
        auto R = P.RD1 * P.RD2;
        for (auto& a : f.terms)
            for (auto& b : g.terms) {
                double n1 = a.e1 + b.e1;
                double c = beta_fn(a.e1 / k1, b.e1 / k1) * beta_fn(1 + 1.0 / k1, n1 / k1);
                double e2;
                if (!only1) {
                    double n2 = a.e2 + b.e2;
                    c *= beta_fn(a.e2 / k2, b.e2 / k2) * beta_fn(1 + 1.0 / k2, n2 / k2);
                    e2 = n2 + 1;
                } else {
                    c *= beta_fn(1 + 1.0 / k2, b.e2 / k2);
                    e2 = b.e2 + 1;
                }
                auto m = star_product(a.c, b.c, P.P1, P.P2, R);
                for (auto& v : m.values) v *= c;
                out.terms.push_back({n1 + 1, e2, m});
            }
        break;
    }
    case OperatorId::P6: {
        auto R = P.RD1 * P.RD2;
        for (auto& b : g.terms) {
            double c = beta_fn(1 + 1.0 / k1, b.e1 / k1) * beta_fn(1 + 1.0 / k2, b.e2 / k2);
            auto m = star_product(fm, b.c, PolySpec::constant(1), P.R0, R);
            for (auto& v : m.values) v *= c;
            out.terms.push_back({b.e1 + 1, b.e2 + 1, m});
        }
        break;
    }
    }
    return out;
}

inline double expected_slope(OperatorId op, const ProblemInstance& inst, const OperatorParams& prm) {
    const int k1 = inst.exponents.k1, k2 = inst.exponents.k2;
    switch (op) {
    case OperatorId::P1: {
        double g1 = prm.gamma21 > 0 ? prm.gamma21 : 1.0 / k1, g2 = prm.gamma22 > 0 ? prm.gamma22 : 1.0 / k2;
        return k1 * g1 + k2 * g2;
    }
    case OperatorId::P2: return k1 * (1 + prm.xi1 + prm.chi1) + k2 * (1 + prm.xi2 + prm.chi2);
    case OperatorId::P2prime: return k1 * (1 + prm.xi1 + prm.chi1);
    default: return 2;
    }
}

/// Least-squares line through (x, y); returns slope, intercept and RMS residual.
inline std::tuple<double, double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double den = n * sxx - sx * sx;
    if (den == 0) throw Error(ErrorKind::degenerate_fit, "degenerate fit: abscissae coincide");
    double slope = (n * sxy - sx * sy) / den;
    double icpt = (sy - slope * sx) / n;
    double res = 0;
    for (std::size_t i = 0; i < n; ++i) res += std::pow(y[i] - icpt - slope * x[i], 2);
    return {slope, icpt, std::sqrt(res / n)};
}

/// Fits log(‖Op f‖ / ‖f‖) against log|ε|. Inputs are random polynomial data unless `data`
/// is given, in which case it feeds every operand (its τ1-only part for the univariate ones).
inline ScalingReport operator_bound_check(OperatorId op, const ProblemInstance& inst, const std::vector<double>& eps_samples,
                                          const ModeGrid& grid, const OperatorParams& prm = {},
                                          const std::optional<BorelTable>& data = std::nullopt,
                                          const ScalingSamples& samples = {}) {
    if (eps_samples.size() < 3) throw Error(ErrorKind::degenerate_fit, "degenerate fit: fewer than 3 epsilon samples");
    ScalingReport rep;
    rep.op = op;
    rep.expected_slope = expected_slope(op, inst, prm);
    std::mt19937_64 rng(samples.seed);

    struct Case {
        GenPoly f, g;
        ModeFunction fm;
    };
    std::vector<Case> cases;
    const int trials = data ? 1 : samples.trials;
    for (int t = 0; t < trials; ++t) {
        Case c;
        bool f_uni = op == OperatorId::P5;
        if (data) {
            c.g = detail::from_table(*data);
            c.f = f_uni ? detail::from_table(*data, true) : c.g;
            if (f_uni && c.f.terms.empty()) {
                // No τ1-only part: use the τ2 = 0 slice of the lowest row instead.
                for (auto& term : c.g.terms) c.f.terms.push_back({term.e1, 0, term.c});
                c.f.univariate = true;
            }
        } else {
            c.f = detail::random_input(inst, grid, rng, f_uni);
            c.g = detail::random_input(inst, grid, rng, false);
        }
        c.fm = detail::profile_function(inst, grid, 1.0);
        cases.push_back(std::move(c));
    }

    std::vector<double> lx, ly;
    for (double e : eps_samples) {
        double logsum = 0;
        bool zero = false;
        for (auto& c : cases) {
            auto out = apply_operator(op, inst, prm, c.f, c.g, c.fm);
            double num = detail::genpoly_norm(out, inst, e, samples);
            double den;
            switch (op) {
            case OperatorId::P3: den = detail::genpoly_norm(c.f, inst, e, samples) * detail::genpoly_norm(c.g, inst, e, samples); break;
            case OperatorId::P5: {
                den = detail::genpoly_norm(c.f, inst, e, samples) * detail::genpoly_norm(c.g, inst, e, samples);
                break;
            }
            case OperatorId::P6: den = weighted_norm(c.fm, inst.space.beta, inst.space.mu) * detail::genpoly_norm(c.g, inst, e, samples); break;
            default: den = detail::genpoly_norm(c.f, inst, e, samples);
            }
            if (!(num > 0) || !(den > 0)) {
                zero = true;
                break;
            }
            logsum += std::log(num / den);
        }
        rep.eps.push_back(e);
        if (zero) {
            rep.zero_input = true;
            rep.ratio.push_back(0);
            continue;
        }
        double r = std::exp(logsum / cases.size());
        rep.ratio.push_back(r);
        lx.push_back(std::log(e));
        ly.push_back(std::log(r));
    }
    if (rep.zero_input) return rep;
    std::tie(rep.slope, rep.intercept, rep.residual) = fit_line(lx, ly);
    return rep;
}

} // namespace gevrey
