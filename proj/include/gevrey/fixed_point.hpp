#pragma once

#include "gevrey/borel.hpp"
#include "gevrey/core.hpp"
#include "gevrey/instance.hpp"
#include "gevrey/series.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace gevrey {

/// Coefficients of T^{δ(k+1)} ∂^δ = (T^{k+1}∂)^δ + Σ_{p=1}^{δ-1} A_p T^{k(δ-p)} (T^{k+1}∂)^p.
struct OperatorExpansion {
    int delta = 1, k = 1;
    std::vector<double> A; // A[p] for 1 <= p <= δ-1; A[0] unused

    /// A_p with the convention A_δ = 1 for the leading power.
    double coeff(int p) const { return p == delta ? 1.0 : A[p]; }
};

namespace detail {
/// Polynomial (in n) coefficients of Π_{j<p} (n + c·j), lowest degree first.
inline std::vector<long long> rising_poly(int p, int c) {
    std::vector<long long> r{1};
    for (int j = 0; j < p; ++j) {
        std::vector<long long> nr(r.size() + 1, 0);
        for (std::size_t i = 0; i < r.size(); ++i) {
            nr[i + 1] += r[i];
            nr[i] += r[i] * static_cast<long long>(c) * j;
        }
        r = nr;
    }
    return r;
}
} // namespace detail

/// Both sides act diagonally on T^n up to the common shift T^{kδ}: the left side by n(n-1)...(n-δ+1),
/// (T^{k+1}∂)^p by n(n+k)...(n+(p-1)k). Matching these degree-δ polynomials in n from the top down
/// is a triangular system whose solution is exact in integers.
inline OperatorExpansion expansion_coeffs(int delta, int k) {
    if (delta < 1 || k < 1) throw Error(ErrorKind::shape_mismatch, "expansion needs delta >= 1 and k >= 1");
    OperatorExpansion e;
    e.delta = delta;
    e.k = k;
    e.A.assign(delta, 0.0);
    auto lhs = detail::rising_poly(delta, -1);
    auto lead = detail::rising_poly(delta, k);
    std::vector<long long> rem(delta + 1, 0);
    for (int i = 0; i <= delta; ++i) rem[i] = lhs[i] - lead[i];
    for (int p = delta - 1; p >= 1; --p) {
        long long a = rem[p];
        e.A[p] = static_cast<double>(a);
        auto q = detail::rising_poly(p, k);
        for (int i = 0; i <= p; ++i) rem[i] -= a * q[i];
    }
    for (auto v : rem)
        if (v != 0) throw Error(ErrorKind::internal, "operator expansion left a nonzero remainder");
    return e;
}

/// Series of 1/P_{m,j}(τ) = 1/(a - b τ^s) with a = Qj(im) kj, b = RDj(im) kj^δ, s = (δ-1) kj.
struct PmReciprocal {
    Complex a{1}, b{0};
    int s = 1;
    std::vector<Complex> coeffs; // dense in powers of τ, 0..N
};

inline PmReciprocal reciprocal_Pm(const ProblemInstance& inst, int j, double m, int N) {
    int k = inst.k(j), delta = inst.top_delta(j);
    PmReciprocal r;
    r.a = inst.Q(j).at_im(m) * double(k);
    r.b = inst.RD(j).at_im(m) * std::pow(double(k), delta);
    r.s = (delta - 1) * k;
    if (r.a == Complex(0)) throw Error(ErrorKind::kernel_singular, "reciprocal of P_m: zero constant term");
    r.coeffs.assign(N + 1, Complex(0));
    Complex term = 1.0 / r.a, ratio = r.b / r.a;
    for (int p = 0; p <= N; p += std::max(r.s, 1)) {
        r.coeffs[p] = term;
        term *= ratio;
        if (r.s == 0) break;
    }
    return r;
}

/// Individual pieces of the fixed-point operator, already divided by τ1^{k1} τ2^{k2} P_{m,1} P_{m,2}.
template <class Real>
struct HTerms {
    /// 0: top-derivative remainder pieces, 1: nonlinear, 2: linear sum, 3: C0 (both indices >= 1),
    /// 4: C0 row n2 = 0, 5: C0 column n1 = 0, 6: C_{0,0}, 7: forcing.
    std::array<SeriesTableT<Real>, 8> term;
    SeriesTableT<Real> sum() const {
        SeriesTableT<Real> s = term[0];
        for (int i = 1; i < 8; ++i) add_scaled(s, term[i]);
        return s;
    }
};

/// Data that does not change between applications of H at a fixed ε.
template <class Real>
struct HContext {
    const ProblemInstance* inst = nullptr;
    Complex eps;
    int N1 = 0, N2 = 0, k1 = 1, k2 = 1;
    ModeGrid grid;
    OperatorExpansion A1, A2;
    std::vector<std::vector<std::complex<Real>>> rec1, rec2; // [power][node]
    std::vector<char> live1, live2;                          // powers with a nonzero coefficient
    std::vector<std::complex<Real>> rd1, rd2;
    std::array<SeriesTableT<Real>, 4> c0; // φ, φ¹, φ², C_{0,0} as Borel tables
    SeriesTableT<Real> psi;

    HContext(const ProblemInstance& in, Complex e, int n1, int n2, const ModeGrid& g)
        : inst(&in), eps(e), N1(n1), N2(n2), k1(in.exponents.k1), k2(in.exponents.k2), grid(g),
          A1(expansion_coeffs(in.top_delta(1), in.exponents.k1)),
          A2(expansion_coeffs(in.top_delta(2), in.exponents.k2)) {
        const int G = g.n_points;
        rec1.assign(N1 + 1, std::vector<std::complex<Real>>(G));
        rec2.assign(N2 + 1, std::vector<std::complex<Real>>(G));
        for (int i = 0; i < G; ++i) {
            auto r1 = reciprocal_Pm(in, 1, g.node(i), N1), r2 = reciprocal_Pm(in, 2, g.node(i), N2);
            for (int p = 0; p <= N1; ++p) rec1[p][i] = r1.coeffs[p];
            for (int p = 0; p <= N2; ++p) rec2[p][i] = r2.coeffs[p];
        }
        live1.assign(N1 + 1, 0);
        live2.assign(N2 + 1, 0);
        for (int p = 0; p <= N1; ++p)
            for (int i = 0; i < G; ++i) live1[p] |= rec1[p][i] != std::complex<Real>(0);
        for (int p = 0; p <= N2; ++p)
            for (int i = 0; i < G; ++i) live2[p] |= rec2[p][i] != std::complex<Real>(0);
        rd1 = poly_on_grid<Real>(in.polys.RD1, g);
        rd2 = poly_on_grid<Real>(in.polys.RD2, g);
        auto C = borel_transform(coefficient_table<Real>(in, Series::C, N1, N2, g, e), k1, k2);
        for (auto& t : c0) {
            t = SeriesTableT<Real>(N1, N2, g, e);
            t.k1 = k1;
            t.k2 = k2;
        }
        for (int a = 0; a <= N1; ++a)
            for (int b = 0; b <= N2; ++b) {
                int piece = (a >= 1 && b >= 1) ? 0 : (a >= 1) ? 1 : (b >= 1) ? 2 : 3;
                std::copy(C.at(a, b).begin(), C.at(a, b).end(), c0[piece].at(a, b).begin());
            }
        psi = borel_transform(coefficient_table<Real>(in, Series::F, N1, N2, g, e), k1, k2);
    }
};

namespace detail {

template <class Real>
SeriesTableT<Real> padded(const SeriesTableT<Real>& w, int P1, int P2) {
    SeriesTableT<Real> out(P1, P2, w.grid, w.eps);
    out.k1 = w.k1;
    out.k2 = w.k2;
    for (int a = 0; a <= std::min(w.N1, P1); ++a)
        for (int b = 0; b <= std::min(w.N2, P2); ++b) std::copy(w.at(a, b).begin(), w.at(a, b).end(), out.at(a, b).begin());
    return out;
}

template <class Real>
void scale_modes(SeriesTableT<Real>& t, const std::vector<std::complex<Real>>& f) {
    for (int a = 0; a <= t.N1; ++a)
        for (int b = 0; b <= t.N2; ++b) {
            auto e = t.at(a, b);
            for (int g = 0; g < t.G(); ++g) e[g] *= f[g];
        }
}

/// Σ_{p=1}^{δ} A_p T^{k(δ-p)+extra} (T^{k+1}∂)^p in Borel form along one axis, plus an extra
/// monomial shift. With `remainder` set, the p = δ term is left out (that is the 𝒜 operator).
template <class Real>
SeriesTableT<Real> expanded_top(const SeriesTableT<Real>& w, int axis, const OperatorExpansion& E, int extra,
                                bool remainder) {
    SeriesTableT<Real> acc(w.N1, w.N2, w.grid, w.eps);
    acc.k1 = w.k1;
    acc.k2 = w.k2;
    SeriesTableT<Real> eul = w;
    for (int p = 1; p <= E.delta; ++p) {
        eul = euler_borel_diff(eul, axis);
        if (remainder && p == E.delta) break;
        double c = E.coeff(p);
        if (c == 0) continue;
        int shift = E.k * (E.delta - p) + extra;
        auto m = axis == 1 ? borel_monomial_mult(eul, shift, 0) : borel_monomial_mult(eul, 0, shift);
        add_scaled(acc, m, std::complex<Real>(c));
    }
    return acc;
}

} // namespace detail

/// Every term of H applied to ω (same shape as the context truncation).
template <class Real>
HTerms<Real> apply_H_terms(const HContext<Real>& ctx, const SeriesTableT<Real>& w) {
    using C = std::complex<Real>;
    if (w.N1 != ctx.N1 || w.N2 != ctx.N2 || !(w.grid == ctx.grid) || w.k1 != ctx.k1 || w.k2 != ctx.k2)
        throw Error(ErrorKind::shape_mismatch, "apply_H: table does not match the operator truncation");
    const ProblemInstance& inst = *ctx.inst;
    const int N1 = ctx.N1, N2 = ctx.N2, k1 = ctx.k1, k2 = ctx.k2, G = ctx.grid.n_points;
    const int P1 = N1 + k1, P2 = N2 + k2;
    const Complex eps = ctx.eps;
    const C inv_eps2 = C(ipow(eps, -2));

    auto wx = detail::padded(w, P1, P2);

    // Division by τ^k along the chosen axes, then by P_{m,1}, P_{m,2}; result truncated to (N1, N2).
    auto finish = [&](const SeriesTableT<Real>& num, bool ax1, bool ax2) {
        SeriesTableT<Real> shifted(N1, N2, ctx.grid, eps);
        shifted.k1 = k1;
        shifted.k2 = k2;
        const int s1 = ax1 ? k1 : 0, s2 = ax2 ? k2 : 0;
        for (int a = 0; a <= N1; ++a)
            for (int b = 0; b <= N2; ++b)
                if (num.in_range(a + s1, b + s2))
                    std::copy(num.at(a + s1, b + s2).begin(), num.at(a + s1, b + s2).end(), shifted.at(a, b).begin());
        SeriesTableT<Real> out(N1, N2, ctx.grid, eps);
        out.k1 = k1;
        out.k2 = k2;
        parallel_for(std::size_t(N1 + 1) * (N2 + 1), [&](std::size_t idx) {
            int a = int(idx / (N2 + 1)), b = int(idx % (N2 + 1));
            auto o = out.at(a, b);
            for (int p = 0; p <= (ax1 ? a : 0); ++p) {
                if (ax1 && !ctx.live1[p]) continue;
                for (int q = 0; q <= (ax2 ? b : 0); ++q) {
                    if (ax2 && !ctx.live2[q]) continue;
                    auto src = shifted.at(a - p, b - q);
                    for (int g = 0; g < G; ++g) {
                        C f = (ax1 ? ctx.rec1[p][g] : C(1)) * (ax2 ? ctx.rec2[q][g] : C(1));
                        o[g] += f * src[g];
                    }
                }
            }
        });
        return out;
    };

    HTerms<Real> H;

    // Remainder pieces of the top operators: RD2 Ãω/(τ2^{k2}P2) + RD1 𝒜ω/(τ1^{k1}P1) - RD1 RD2 𝒜Ãω/(τ^k P1 P2).
    {
        auto At2 = detail::expanded_top(wx, 2, ctx.A2, 0, true);
        auto At1 = detail::expanded_top(wx, 1, ctx.A1, 0, true);
        auto At12 = detail::expanded_top(At2, 1, ctx.A1, 0, true);
        detail::scale_modes(At2, ctx.rd2);
        detail::scale_modes(At1, ctx.rd1);
        auto both = ctx.rd1;
        for (int g = 0; g < G; ++g) both[g] *= -ctx.rd2[g];
        detail::scale_modes(At12, both);
        H.term[0] = finish(At2, false, true);
        add_scaled(H.term[0], finish(At1, true, false));
        add_scaled(H.term[0], finish(At12, true, true));
    }

    // Nonlinear term: ε^{-2} T^{k1+1} T^{k2+1} (U ⋆ U) in Borel form.
    {
        auto conv = beta_convolve(w, w, ModeProduct::kernel(inst.polys.P1, inst.polys.P2));
        auto num = borel_monomial_mult(detail::padded(conv, P1, P2), k1 + 1, k2 + 1);
        for (auto& v : num.data) v *= inv_eps2;
        H.term[1] = finish(num, true, true);
    }

    // Linear sum: each T^{δ(k+1)+d_k} ∂^δ expanded through the A coefficients, in both variables.
    {
        auto d = derived_exponents(inst);
        SeriesTableT<Real> num(P1, P2, ctx.grid, eps);
        num.k1 = k1;
        num.k2 = k2;
        const auto& e = inst.exponents;
        for (int l1 = 1; l1 < e.D1; ++l1)
            for (int l2 = 1; l2 < e.D2; ++l2) {
                auto R = inst.polys.R_at(l1, l2);
                if (R.is_zero()) continue;
                auto E1 = expansion_coeffs(e.delta[l1], k1), E2 = expansion_coeffs(e.deltat[l2], k2);
                auto t = detail::expanded_top(detail::expanded_top(wx, 2, E2, d.dt_k[l2], false), 1, E1, d.d_k[l1], false);
                auto r = poly_on_grid<Real>(R, ctx.grid, eps);
                C p = C(ipow(eps, linear_term_eps_power(inst, l1, l2)));
                for (auto& v : r) v *= p;
                detail::scale_modes(t, r);
                add_scaled(num, t);
            }
        H.term[2] = finish(num, true, true);
    }

    // C0 pieces: ε^{-2} T^{k+1} (C0 ⋆ U) with kernel R0 on U, split by which indices of C0 vanish.
    for (int piece = 0; piece < 4; ++piece) {
        if (ctx.c0[piece].is_zero()) {
            H.term[3 + piece] = SeriesTableT<Real>(N1, N2, ctx.grid, eps);
            H.term[3 + piece].k1 = k1;
            H.term[3 + piece].k2 = k2;
            continue;
        }
        auto conv = beta_convolve(ctx.c0[piece], w, ModeProduct::kernel(PolySpec::constant(1), inst.polys.R0));
        auto num = borel_monomial_mult(detail::padded(conv, P1, P2), k1 + 1, k2 + 1);
        for (auto& v : num.data) v *= inv_eps2;
        H.term[3 + piece] = finish(num, true, true);
    }

    // Forcing: ε^{-2} T^{k+1} F.
    {
        auto num = borel_monomial_mult(detail::padded(ctx.psi, P1, P2), k1 + 1, k2 + 1);
        for (auto& v : num.data) v *= inv_eps2;
        H.term[7] = finish(num, true, true);
    }
    return H;
}

template <class Real>
SeriesTableT<Real> apply_H(const HContext<Real>& ctx, const SeriesTableT<Real>& w) {
    return apply_H_terms(ctx, w).sum();
}

template <class Real = double>
SeriesTableT<Real> apply_H(const ProblemInstance& inst, Complex eps, const SeriesTableT<Real>& w) {
    check_epsilon(inst, eps);
    HContext<Real> ctx(inst, eps, w.N1, w.N2, w.grid);
    return apply_H(ctx, w);
}

template <class Real>
struct PicardResult {
    SeriesTableT<Real> omega;
    int iterations = 0;
    double contraction = 0; // max measured ‖H(ω1)-H(ω2)‖ / ‖ω1-ω2‖
};

/// Sup-ratio of H over random pairs near ω*, measured in the ε-scaled sampled norm.
template <class Real>
double contraction_estimate(const HContext<Real>& ctx, const SeriesTableT<Real>& center, int pairs = 4,
                            std::uint64_t seed = 2024) {
    const ProblemInstance& inst = *ctx.inst;
    FNormParams fp = fnorm_params(inst, ctx.eps);
    fp.tau1 = fp.tau2 = scaled_samples(ctx.eps, inst.space.rho);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), mag(0.5, 1.5);
    double cnorm = f_norm(center, fp).value;
    double radius = cnorm > 0 ? 0.1 * cnorm : 1.0;
    double best = 0;
    for (int t = 0; t < pairs; ++t) {
        std::array<SeriesTableT<Real>, 2> w{center, center};
        for (auto& x : w) {
            SeriesTableT<Real> d(center.N1, center.N2, center.grid, center.eps);
            d.k1 = center.k1;
            d.k2 = center.k2;
            for (int a = 1; a <= d.N1; ++a)
                for (int b = 1; b <= d.N2; ++b) {
                    Complex c = std::polar(mag(rng), ang(rng));
                    for (int g = 0; g < d.G(); ++g)
                        d(a, b, g) = std::complex<Real>(c * profile_base(d.grid.node(g), inst.space));
                }
            double dn = f_norm(d, fp).value;
            if (dn > 0)
                for (auto& v : d.data) v *= Real(radius / dn);
            add_scaled(x, d);
        }
        auto diff_in = w[0];
        add_scaled(diff_in, w[1], std::complex<Real>(-1));
        auto h0 = apply_H(ctx, w[0]);
        add_scaled(h0, apply_H(ctx, w[1]), std::complex<Real>(-1));
        double num = f_norm(h0, fp).value, den = f_norm(diff_in, fp).value;
        if (den > 0) best = std::max(best, num / den);
    }
    return best;
}

/// max over (n1,n2) of ‖a_n - b_n‖∞ / ‖b_n‖∞. An entry where b vanishes contributes 0 if a
/// vanishes there too and +∞ otherwise.
template <class Real>
double entrywise_relative_difference(const SeriesTableT<Real>& a, const SeriesTableT<Real>& b) {
    require_same_shape(a, b, "entrywise_relative_difference");
    double worst = 0;
    for (int n1 = 0; n1 <= a.N1; ++n1)
        for (int n2 = 0; n2 <= a.N2; ++n2) {
            double num = 0, den = 0;
            auto x = a.at(n1, n2), y = b.at(n1, n2);
            for (std::size_t g = 0; g < x.size(); ++g) {
                num = std::max(num, static_cast<double>(std::abs(x[g] - y[g])));
                den = std::max(den, static_cast<double>(std::abs(y[g])));
            }
            if (den > 0) worst = std::max(worst, num / den);
            else if (num > 0) return std::numeric_limits<double>::infinity();
        }
    return worst;
}

/// ω ← H(ω) from ω = 0 until the table repeats exactly. Each term of H raises the total order,
/// so the truncated iteration settles after at most N1 + N2 steps.
template <class Real = double>
PicardResult<Real> picard_solve(const ProblemInstance& inst, Complex eps, int N1, int N2, const ModeGrid& grid,
                                bool measure_contraction = true) {
    check_epsilon(inst, eps);
    HContext<Real> ctx(inst, eps, N1, N2, grid);
    PicardResult<Real> res;
    SeriesTableT<Real> w(N1, N2, grid, eps);
    w.k1 = inst.exponents.k1;
    w.k2 = inst.exponents.k2;
    const int limit = N1 + N2 + 2;
    for (int it = 1; it <= limit; ++it) {
        auto next = apply_H(ctx, w);
        if (next.data == w.data) {
            res.omega = std::move(next);
            res.iterations = it;
            if (measure_contraction) res.contraction = contraction_estimate(ctx, res.omega);
            return res;
        }
        w = std::move(next);
    }
    throw Error(ErrorKind::internal, "fixed-point iteration did not settle after " + std::to_string(limit) +
                                         " steps; H is not raising the order");
}

} // namespace gevrey
