#pragma once

#include "gevrey/borel.hpp"
#include "gevrey/core.hpp"
#include "gevrey/geometry.hpp"
#include "gevrey/instance.hpp"
#include "gevrey/special.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace gevrey {

struct QuadratureSpec {
    double r_cut = 0.5;
    int panels = 32; // Gauss-Legendre panels of 20 nodes on the ray
    double delta1 = 0.5;
    double tolerance = 1e-10;
};

struct LaplaceResult {
    Complex value{0};
    double tail_bound = 0;
};

namespace detail {

inline void check_quadrature(const QuadratureSpec& q) {
    if (!(q.r_cut > 0) || q.panels < 1 || !(q.delta1 > 0) || q.delta1 > 1)
        throw Error(ErrorKind::validation, "quadrature spec needs r_cut > 0, panels >= 1, delta1 in (0,1]");
}

/// Upper end of the integration range: beyond it the kernel is below e^{-60}.
inline double effective_cut(double r_cut, int k, Complex T, double delta1) {
    return std::min(r_cut, std::abs(T) * std::pow(60.0 / delta1, 1.0 / k));
}

} // namespace detail

/// k ∫_0^{r_cut} ω(r e^{iγ}) exp(-(r e^{iγ}/T)^k) dr/r by composite Gauss-Legendre quadrature.
inline LaplaceResult laplace_ray(const std::function<Complex(Complex)>& omega, int k, double gamma, Complex T,
                                 const QuadratureSpec& q) {
    detail::check_quadrature(q);
    if (T == Complex(0)) return {};
    double c = std::cos(k * (gamma - std::arg(T)));
    if (c < q.delta1) throw Error(ErrorKind::invalid_direction, "invalid Laplace direction");
    using GL = boost::math::quadrature::gauss<double, 20>;
    const Complex dir = std::polar(1.0, gamma);
    const double top = detail::effective_cut(q.r_cut, k, T, q.delta1);
    const double h = top / q.panels;
    Complex acc(0);
    for (int p = 0; p < q.panels; ++p) {
        double a = p * h, b = a + h;
        auto f = [&](double r) {
            Complex u = r * dir;
            return omega(u) * std::exp(-std::pow(u / T, k)) / r;
        };
        acc += GL::integrate(f, a, b);
    }
    return {double(k) * acc, std::exp(-q.delta1 * std::pow(q.r_cut / std::abs(T), k))};
}

/// The ray quadrature applied to u^n / m_k(n)-free monomials: entry n is laplace_ray(u ↦ u^n).
inline std::vector<Complex> laplace_weights(int N, int k, double gamma, Complex T, const QuadratureSpec& q) {
    std::vector<Complex> w(N + 1, Complex(0));
    for (int n = 1; n <= N; ++n)
        w[n] = laplace_ray([n](Complex u) { return std::pow(u, n); }, k, gamma, T, q).value;
    return w;
}

/// Direction inside [d - hw, d + hw] closest to arg T.
inline double choose_gamma(double d, double half_width, Complex T) {
    double off = wrap_angle(std::arg(T) - d);
    return d + std::clamp(off, -half_width, half_width);
}

struct EvaluationResult {
    Complex value{0};
    double tail_bound = 0;
    double gamma1 = 0, gamma2 = 0;
};

/// Iterated Laplace transform of the truncated Borel table along γ_{p1}, γ_{p2}, followed by the
/// inverse Fourier trapezoid in m, at T_j = ε t_j.
inline EvaluationResult evaluate_u(const ProblemInstance& inst, const BorelTable& w, const CoveringCell& cell,
                                   double half_width1, double half_width2, Complex t1, Complex t2, Complex z,
                                   Complex eps, const QuadratureSpec& q) {
    detail::check_quadrature(q);
    const int k1 = inst.exponents.k1, k2 = inst.exponents.k2;
    if (!(q.r_cut <= inst.space.rho)) throw Error(ErrorKind::validation, "r_cut must not exceed rho");
    const Complex T1 = eps * t1, T2 = eps * t2;
    EvaluationResult res;
    if (T1 == Complex(0) || T2 == Complex(0)) throw Error(ErrorKind::invalid_direction, "invalid Laplace direction");
    res.gamma1 = choose_gamma(cell.d1, half_width1, T1);
    res.gamma2 = choose_gamma(cell.d2, half_width2, T2);
    res.tail_bound = std::max(std::exp(-q.delta1 * std::pow(q.r_cut / std::abs(T1), k1)),
                              std::exp(-q.delta1 * std::pow(q.r_cut / std::abs(T2), k2)));
    if (res.tail_bound > q.tolerance)
        throw Error(ErrorKind::outside_certified_domain, "outside certified domain: tail bound " +
                                                              detail::fmt(res.tail_bound) + " exceeds tolerance");
    auto L1 = laplace_weights(w.N1, k1, res.gamma1, T1, q);
    auto L2 = laplace_weights(w.N2, k2, res.gamma2, T2, q);
    ModeFunction u(w.grid);
    for (int n1 = 1; n1 <= w.N1; ++n1)
        for (int n2 = 1; n2 <= w.N2; ++n2) {
            Complex c = L1[n1] * L2[n2];
            auto e = w.at(n1, n2);
            for (int g = 0; g < w.G(); ++g) u.values[g] += c * e[g];
        }
    res.value = inverse_fourier(u, z, inst.space.beta);
    return res;
}

/// Σ U_{n1,n2}(m) T1^{n1} T2^{n2} pushed through the inverse Fourier transform.
inline Complex truncated_series_value(const CoeffTable& U, Complex T1, Complex T2, Complex z, double beta) {
    ModeFunction u(U.grid);
    for (int n1 = 0; n1 <= U.N1; ++n1)
        for (int n2 = 0; n2 <= U.N2; ++n2) {
            Complex c = std::pow(T1, n1) * std::pow(T2, n2);
            auto e = U.at(n1, n2);
            for (int g = 0; g < U.G(); ++g) u.values[g] += c * e[g];
        }
    return inverse_fourier(u, z, beta);
}

// ---------------------------------------------------------------------------
// Fits

struct DecayFit {
    double k_est = 0, M = 0, K = 0, residual = 0;
    bool convergent = false;   // gevrey_fit: no factorial growth detected
    bool non_decaying = false; // decay_fit: no exponential decay detected
};

namespace detail {

/// Least squares y ≈ a + b x; returns (a, b, rms residual).
inline std::tuple<double, double, double> linear_lsq(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double den = n * sxx - sx * sx;
    double b = den != 0 ? (n * sxy - sx * sy) / den : 0.0;
    double a = (sy - b * sx) / n;
    double r = 0;
    for (std::size_t i = 0; i < x.size(); ++i) r += std::pow(y[i] - a - b * x[i], 2);
    return {a, b, std::sqrt(r / n)};
}

/// Minimizes f on [lo, hi]: coarse scan, then golden section around the best scan node.
template <class F>
double scan_golden(F&& f, double lo, double hi, int scan = 200) {
    double best = lo, fb = std::numeric_limits<double>::infinity();
    const double h = (hi - lo) / scan;
    for (int i = 0; i <= scan; ++i) {
        double x = lo + i * h, v = f(x);
        if (v < fb) {
            fb = v;
            best = x;
        }
    }
    double a = std::max(lo, best - h), b = std::min(hi, best + h);
    const double g = (std::sqrt(5.0) - 1) / 2;
    double c = b - g * (b - a), d = a + g * (b - a), fc = f(c), fd = f(d);
    for (int it = 0; it < 100; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    double x = 0.5 * (a + b);
    return f(x) <= fb ? x : best;
}

} // namespace detail

/// Fits log a_n ≈ log C + n log M + log Γ(1 + n s) over s = 1/k >= 0. K holds C.
inline DecayFit gevrey_fit(const std::vector<double>& a, double s_max = 3.0) {
    if (a.size() < 8) throw Error(ErrorKind::degenerate_fit, "gevrey_fit needs at least 8 terms");
    for (double v : a)
        if (!(v > 0)) throw Error(ErrorKind::degenerate_fit, "gevrey_fit needs positive entries");
    std::vector<double> n(a.size()), la(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        n[i] = static_cast<double>(i);
        la[i] = std::log(a[i]);
    }
    auto fit = [&](double s) {
        std::vector<double> y(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) y[i] = la[i] - std::lgamma(1 + n[i] * s);
        return detail::linear_lsq(n, y);
    };
    double s = detail::scan_golden([&](double s) { return std::get<2>(fit(s)); }, 0.0, s_max);
    auto [lc, lm, r] = fit(s);
    DecayFit out;
    out.K = std::exp(lc);
    out.M = std::exp(lm);
    out.residual = r;
    if (s < 0.02) {
        out.convergent = true;
        out.k_est = std::numeric_limits<double>::infinity();
    } else {
        out.k_est = 1 / s;
    }
    return out;
}

/// Fits log diff ≈ log K - M |ε|^{-k} over k in [k_min, k_max].
inline DecayFit decay_fit(const std::vector<std::pair<double, double>>& samples, double k_min = 0.1,
                          double k_max = 8.0) {
    if (samples.size() < 5) throw Error(ErrorKind::degenerate_fit, "decay_fit needs at least 5 samples");
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (auto [e, d] : samples) {
        if (!(e > 0) || !(d > 0)) throw Error(ErrorKind::degenerate_fit, "decay_fit needs positive samples");
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    if (hi < 10 * lo) throw Error(ErrorKind::degenerate_fit, "decay_fit needs |eps| spanning a decade");
    std::vector<double> y;
    for (auto& s : samples) y.push_back(std::log(s.second));
    auto fit = [&](double k) {
        // Regress on -x with x = (|ε|/ε_max)^{-k} to keep the columns well scaled.
        std::vector<double> x;
        for (auto& s : samples) x.push_back(-std::pow(s.first / hi, -k));
        return detail::linear_lsq(x, y);
    };
    DecayFit out;
    double k = detail::scan_golden([&](double k) { return std::get<2>(fit(k)); }, k_min, k_max, 400);
    auto [lk, m, r] = fit(k);
    double M = m * std::pow(hi, k);
    // Drop in log diff that the fit attributes to the exponential factor across the samples.
    double drop = M * (std::pow(lo, -k) - std::pow(hi, -k));
    if (!(drop > 1e-8)) {
        out.non_decaying = true;
        double mean = 0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        out.K = std::exp(mean);
        for (double v : y) out.residual += (v - mean) * (v - mean);
        out.residual = std::sqrt(out.residual / static_cast<double>(y.size()));
        return out;
    }
    out.k_est = k;
    out.M = M;
    out.K = std::exp(lk);
    out.residual = r;
    return out;
}

// ---------------------------------------------------------------------------
// Classification

enum class PairClass { U0, Uk1, Uk2 };

inline std::string class_name(PairClass c) {
    switch (c) {
    case PairClass::U0:
        return "U_0";
    case PairClass::Uk1:
        return "U_k1";
    default:
        return "U_k2";
    }
}

struct PairClassification {
    int a = 0, b = 0; // cell indices, a < b
    PairClass cls = PairClass::U0;
    bool same_d1 = false, same_d2 = false;
    bool identical = false; // both directions coincide
};

inline bool same_direction(double x, double y) { return std::abs(wrap_angle(x - y)) < 1e-9; }

inline PairClass classify_one(const CoveringCell& x, const CoveringCell& y) {
    if (!sectors_overlap(x.E, y.E)) return PairClass::U0;
    bool s1 = same_direction(x.d1, y.d1), s2 = same_direction(x.d2, y.d2);
    return (s1 && !s2) ? PairClass::Uk2 : PairClass::Uk1;
}

/// All unordered pairs of distinct cells with their class.
inline std::vector<PairClassification> classify_pairs(const GoodCovering& cov) {
    std::vector<PairClassification> out;
    const int n = static_cast<int>(cov.cells.size());
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const auto &x = cov.cells[a], &y = cov.cells[b];
            PairClassification p;
            p.a = a;
            p.b = b;
            p.same_d1 = same_direction(x.d1, y.d1);
            p.same_d2 = same_direction(x.d2, y.d2);
            p.cls = classify_one(x, y);
            p.identical = p.cls != PairClass::U0 && p.same_d1 && p.same_d2;
            out.push_back(p);
        }
    return out;
}

} // namespace gevrey
