#pragma once

#include "gevrey/core.hpp"
#include "gevrey/instance.hpp"
#include "gevrey/mode_space.hpp"
#include "gevrey/special.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace gevrey {

/// Truncated bivariate series Σ A_{n1,n2}(m) T1^{n1} T2^{n2} with 0 <= nj <= Nj and
/// mode-valued coefficients. When k1, k2 are set the table holds Borel coefficients.
template <class Real>
struct SeriesTableT {
    using value_type = std::complex<Real>;

    int N1 = 0, N2 = 0;
    ModeGrid grid;
    Complex eps{0};
    int k1 = 0, k2 = 0;
    std::vector<value_type> data;

    SeriesTableT() = default;
    SeriesTableT(int n1, int n2, ModeGrid g, Complex e = Complex(0))
        : N1(n1), N2(n2), grid(g), eps(e), data(static_cast<std::size_t>(n1 + 1) * (n2 + 1) * g.n_points) {
        if (n1 < 0 || n2 < 0) throw Error(ErrorKind::shape_mismatch, "truncation orders must be non-negative");
    }

    int G() const { return grid.n_points; }
    bool in_range(int n1, int n2) const { return n1 >= 0 && n2 >= 0 && n1 <= N1 && n2 <= N2; }
    std::size_t offset(int n1, int n2) const {
        return (static_cast<std::size_t>(n1) * (N2 + 1) + n2) * grid.n_points;
    }
    std::span<value_type> at(int n1, int n2) { return {data.data() + offset(n1, n2), std::size_t(G())}; }
    std::span<const value_type> at(int n1, int n2) const {
        return {data.data() + offset(n1, n2), std::size_t(G())};
    }
    value_type& operator()(int n1, int n2, int g) { return data[offset(n1, n2) + g]; }
    const value_type& operator()(int n1, int n2, int g) const { return data[offset(n1, n2) + g]; }

    bool entry_zero(int n1, int n2) const {
        for (auto v : at(n1, n2))
            if (v != value_type(0)) return false;
        return true;
    }
    bool is_zero() const {
        for (auto v : data)
            if (v != value_type(0)) return false;
        return true;
    }
    ModeFunctionT<Real> entry(int n1, int n2) const {
        ModeFunctionT<Real> f(grid);
        auto s = at(n1, n2);
        std::copy(s.begin(), s.end(), f.values.begin());
        return f;
    }
    void set(int n1, int n2, const ModeFunctionT<Real>& f) {
        if (!(f.grid == grid)) throw Error(ErrorKind::shape_mismatch, "entry grid does not match table grid");
        std::copy(f.values.begin(), f.values.end(), at(n1, n2).begin());
    }
    bool same_shape(const SeriesTableT& o) const { return N1 == o.N1 && N2 == o.N2 && grid == o.grid; }

    /// Restriction to orders (M1, M2) <= (N1, N2).
    SeriesTableT truncated(int M1, int M2) const {
        SeriesTableT out(M1, M2, grid, eps);
        out.k1 = k1;
        out.k2 = k2;
        for (int a = 0; a <= std::min(M1, N1); ++a)
            for (int b = 0; b <= std::min(M2, N2); ++b) std::copy(at(a, b).begin(), at(a, b).end(), out.at(a, b).begin());
        return out;
    }
};

using CoeffTable = SeriesTableT<double>;

template <class Real>
void require_same_shape(const SeriesTableT<Real>& a, const SeriesTableT<Real>& b, const char* what) {
    if (!a.same_shape(b)) throw Error(ErrorKind::shape_mismatch, std::string("shape mismatch in ") + what);
}

/// out += scale · in, entrywise.
template <class Real>
void add_scaled(SeriesTableT<Real>& out, const SeriesTableT<Real>& in, std::complex<Real> scale = 1) {
    require_same_shape(out, in, "add_scaled");
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += scale * in.data[i];
}

/// Table of C_{n1,n2} (indices from 0) or F_{n1,n2} (indices from 1) built from the generator.
template <class Real>
SeriesTableT<Real> coefficient_table(const ProblemInstance& inst, Series which, int N1, int N2, const ModeGrid& grid,
                                     Complex eps = Complex(0)) {
    SeriesTableT<Real> t(N1, N2, grid, eps);
    for (int a = 0; a <= N1; ++a)
        for (int b = 0; b <= N2; ++b) {
            auto f = generate_coefficients(inst, which, a, b, grid);
            for (int g = 0; g < grid.n_points; ++g) t(a, b, g) = std::complex<Real>(f.values[g]);
        }
    return t;
}

/// Values of a polynomial at X = i·m on every grid node.
template <class Real>
std::vector<std::complex<Real>> poly_on_grid(const PolySpec& p, const ModeGrid& g, Complex eps = Complex(0)) {
    std::vector<std::complex<Real>> v(g.n_points);
    for (int i = 0; i < g.n_points; ++i) v[i] = p.at_im(static_cast<Real>(g.node(i)), eps);
    return v;
}

// ---------------------------------------------------------------------------
// Table operators

/// (2π)^{-1/2} Σ_{a+b=n} A_a ⋆ B_b with kernel P1 on A, P2 on B and divisor b.
template <class Real>
SeriesTableT<Real> cauchy_star(const SeriesTableT<Real>& A, const SeriesTableT<Real>& B, const PolySpec& P1,
                               const PolySpec& P2, const PolySpec& b = PolySpec::constant(1)) {
    require_same_shape(A, B, "cauchy_star");
    using C = std::complex<Real>;
    const int G = A.G();
    auto ker = StarKernel<Real>::make(A.grid, P1, P2, b, A.eps);
    SeriesTableT<Real> lf(A.N1, A.N2, A.grid), rg(A.N1, A.N2, A.grid);
    for (int n1 = 0; n1 <= A.N1; ++n1)
        for (int n2 = 0; n2 <= A.N2; ++n2)
            for (int g = 0; g < G; ++g) {
                lf(n1, n2, g) = ker.left[g] * A(n1, n2, g);
                rg(n1, n2, g) = ker.right[g] * B(n1, n2, g);
            }
    std::vector<char> nzA, nzB;
    for (int n1 = 0; n1 <= A.N1; ++n1)
        for (int n2 = 0; n2 <= A.N2; ++n2) {
            nzA.push_back(!A.entry_zero(n1, n2));
            nzB.push_back(!B.entry_zero(n1, n2));
        }
    auto flat = [&](int a, int b) { return std::size_t(a) * (A.N2 + 1) + b; };
    SeriesTableT<Real> out(A.N1, A.N2, A.grid, A.eps);
    const C scale(1 / std::sqrt(2 * std::numbers::pi_v<Real>));
    parallel_for(std::size_t(A.N1 + 1) * (A.N2 + 1), [&](std::size_t idx) {
        int n1 = int(idx / (A.N2 + 1)), n2 = int(idx % (A.N2 + 1));
        for (int a1 = 0; a1 <= n1; ++a1)
            for (int a2 = 0; a2 <= n2; ++a2) {
                int b1 = n1 - a1, b2 = n2 - a2;
                if (!nzA[flat(a1, a2)] || !nzB[flat(b1, b2)]) continue;
                star_accumulate<Real>(out.at(n1, n2), lf.at(a1, a2), rg.at(b1, b2), A.grid, ker.inv_div, scale);
            }
    });
    return out;
}

/// T1^{d1} ∂_{T1}^{δ1} T2^{d2} ∂_{T2}^{δ2} R(im) applied to the table, times scale. Entry n
/// receives ff(s1,δ1) ff(s2,δ2) R(im) A_s with s = n - d + δ; sources out of range give 0.
template <class Real>
SeriesTableT<Real> apply_linear_term(const SeriesTableT<Real>& A, int d1, int delta1, int d2, int delta2,
                                     const PolySpec& R, Complex scale = Complex(1)) {
    auto r = poly_on_grid<Real>(R, A.grid, A.eps);
    SeriesTableT<Real> out(A.N1, A.N2, A.grid, A.eps);
    out.k1 = A.k1;
    out.k2 = A.k2;
    for (int n1 = 0; n1 <= A.N1; ++n1)
        for (int n2 = 0; n2 <= A.N2; ++n2) {
            int s1 = n1 - d1 + delta1, s2 = n2 - d2 + delta2;
            if (!A.in_range(s1, s2)) continue;
            Real w = falling_factorial<Real>(s1, delta1) * falling_factorial<Real>(s2, delta2);
            if (w == Real(0)) continue;
            std::complex<Real> c = std::complex<Real>(scale) * w;
            for (int g = 0; g < A.G(); ++g) out(n1, n2, g) = c * r[g] * A(s1, s2, g);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Recursion

/// How the monomial in front of the top derivative in each factor of the main operator is read.
/// standard: T^{(δ-1)(k+1)}, the exponent the rescaled equation and its Borel form require.
/// literal:  T^{(δ-1)(k-1)}, the exponent as printed in the displayed problem.
enum class ShiftConvention { standard, literal };

struct RecursionOptions {
    ShiftConvention convention = ShiftConvention::standard;
};

/// Exponent of T_j in front of ∂^{δ} in the j-th factor.
inline int top_monomial_exponent(const ProblemInstance& inst, int j, ShiftConvention c) {
    int k = inst.k(j), delta = inst.top_delta(j);
    return c == ShiftConvention::standard ? (delta - 1) * (k + 1) : (delta - 1) * (k - 1);
}

/// Index gap between the ∂ term and the top-derivative term of the j-th factor at a fixed
/// output power: zero means both act on the same unknown, negative means the top-derivative
/// term reaches past the unknown being solved for.
inline int top_index_gap(const ProblemInstance& inst, int j, ShiftConvention c) {
    return top_monomial_exponent(inst, j, c) - (inst.top_delta(j) - 1);
}

struct LinearTermData {
    int d1, delta1, d2, delta2;
    int eps_power;
    PolySpec R;
};

inline std::vector<LinearTermData> linear_terms(const ProblemInstance& inst) {
    const auto& e = inst.exponents;
    std::vector<LinearTermData> out;
    for (int l1 = 1; l1 < e.D1; ++l1)
        for (int l2 = 1; l2 < e.D2; ++l2) {
            auto R = inst.polys.R_at(l1, l2);
            if (R.is_zero()) continue;
            out.push_back({e.d[l1], e.delta[l1], e.dt[l2], e.deltat[l2], linear_term_eps_power(inst, l1, l2), R});
        }
    return out;
}

inline void check_epsilon(const ProblemInstance& inst, Complex eps) {
    double a = std::abs(eps);
    if (!(a > 0) || !(a < inst.space.eps0))
        throw Error(ErrorKind::invalid_instance,
                    "epsilon must satisfy 0 < |eps| < eps0 = " + detail::fmt(inst.space.eps0));
}

/// Formal solution U_{n1,n2}, 1 <= nj <= Nj, by matching the coefficient of T1^{M1} T2^{M2}
/// in the problem; that coefficient fixes U_{M1+1,M2+1}. Row and column 0 stay zero.
template <class Real>
SeriesTableT<Real> solve_recursion(const ProblemInstance& inst, Complex eps, int N1, int N2, const ModeGrid& grid,
                                   RecursionOptions opt = {}) {
    using C = std::complex<Real>;
    check_epsilon(inst, eps);
    const int G = grid.n_points;
    const int e1 = top_index_gap(inst, 1, opt.convention), e2 = top_index_gap(inst, 2, opt.convention);
    const int dl1 = inst.top_delta(1), dl2 = inst.top_delta(2);
    if ((e1 < 0 && !inst.polys.RD1.is_zero()) || (e2 < 0 && !inst.polys.RD2.is_zero()))
        throw Error(ErrorKind::ill_founded, "ill-founded recursion: the top-derivative term reaches index gap " +
                                                std::to_string(std::min(e1, e2)) + " beyond the unknown");

    SeriesTableT<Real> U(N1, N2, grid, eps);
    auto Ct = coefficient_table<Real>(inst, Series::C, N1, N2, grid, eps);
    auto Ft = coefficient_table<Real>(inst, Series::F, N1, N2, grid, eps);

    auto q1 = poly_on_grid<Real>(inst.polys.Q1, grid), q2 = poly_on_grid<Real>(inst.polys.Q2, grid);
    auto rd1 = poly_on_grid<Real>(inst.polys.RD1, grid), rd2 = poly_on_grid<Real>(inst.polys.RD2, grid);
    auto nl = StarKernel<Real>::make(grid, inst.polys.P1, inst.polys.P2, PolySpec::constant(1), eps);
    auto r0 = poly_on_grid<Real>(inst.polys.R0, grid);
    std::vector<C> one(G, C(1));

    struct Lin {
        LinearTermData t;
        std::vector<C> coef;
    };
    std::vector<Lin> lins;
    for (auto& t : linear_terms(inst)) {
        auto r = poly_on_grid<Real>(t.R, grid, eps);
        C p = C(ipow(eps, t.eps_power));
        for (auto& v : r) v *= p;
        lins.push_back({t, r});
    }

    const C inv_eps2 = C(ipow(eps, -2));
    const C conv_scale = inv_eps2 / std::sqrt(2 * std::numbers::pi_v<Real>);

    // Kernel-weighted copies of finished entries, and nonzero flags.
    SeriesTableT<Real> lfU(N1, N2, grid), rgU(N1, N2, grid), r0U(N1, N2, grid);
    std::vector<char> nzU(std::size_t(N1 + 1) * (N2 + 1), 0), nzC(nzU.size(), 0);
    auto flat = [&](int a, int b) { return std::size_t(a) * (N2 + 1) + b; };
    for (int a = 0; a <= N1; ++a)
        for (int b = 0; b <= N2; ++b) nzC[flat(a, b)] = !Ct.entry_zero(a, b);

    for (int level = 2; level <= N1 + N2; ++level) {
        int lo = std::max(1, level - N2), hi = std::min(N1, level - 1);
        if (lo > hi) continue;
        parallel_for(std::size_t(hi - lo + 1), [&](std::size_t idx) {
            const int n1 = lo + int(idx), n2 = level - n1;
            const int M1 = n1 - 1, M2 = n2 - 1;
            std::vector<C> num(G, C(0));

            for (int a1 = 1; a1 < M1; ++a1)
                for (int a2 = 1; a2 < M2; ++a2) {
                    int b1 = M1 - a1, b2 = M2 - a2;
                    if (!nzU[flat(a1, a2)] || !nzU[flat(b1, b2)]) continue;
                    star_accumulate<Real>(num, lfU.at(a1, a2), rgU.at(b1, b2), grid, nl.inv_div, conv_scale);
                }

            for (auto& L : lins) {
                int s1 = M1 - L.t.d1 + L.t.delta1, s2 = M2 - L.t.d2 + L.t.delta2;
                if (s1 < 1 || s2 < 1 || !nzU[flat(s1, s2)]) continue;
                Real w = falling_factorial<Real>(s1, L.t.delta1) * falling_factorial<Real>(s2, L.t.delta2);
                for (int g = 0; g < G; ++g) num[g] += w * L.coef[g] * U(s1, s2, g);
            }

            for (int a1 = 0; a1 <= M1; ++a1)
                for (int a2 = 0; a2 <= M2; ++a2) {
                    int b1 = M1 - a1, b2 = M2 - a2;
                    if (b1 < 1 || b2 < 1 || !nzC[flat(a1, a2)] || !nzU[flat(b1, b2)]) continue;
                    star_accumulate<Real>(num, Ct.at(a1, a2), r0U.at(b1, b2), grid, one, conv_scale);
                }

            if (M1 >= 1 && M2 >= 1)
                for (int g = 0; g < G; ++g) num[g] += inv_eps2 * Ft(M1, M2, g);

            // Factor j at output power Mj: the ∂ part acts on index Mj+1 with weight Qj (Mj+1),
            // the top-derivative part on index Mj+1-ej with weight -RDj ff(Mj+1-ej, δ).
            const int s1[2] = {n1, n1 - e1}, s2[2] = {n2, n2 - e2};
            const bool top1[2] = {true, e1 == 0}, top2[2] = {true, e2 == 0};
            const Real ff1 = s1[1] >= 0 ? falling_factorial<Real>(s1[1], dl1) : Real(0);
            const Real ff2 = s2[1] >= 0 ? falling_factorial<Real>(s2[1], dl2) : Real(0);

            auto& out = U;
            for (int g = 0; g < G; ++g) {
                const C c1[2] = {q1[g] * Real(n1), -rd1[g] * ff1};
                const C c2[2] = {q2[g] * Real(n2), -rd2[g] * ff2};
                C div(0);
                Real scale(0);
                C acc = num[g];
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) {
                        C c = c1[i] * c2[j];
                        if (c == C(0)) continue;
                        if (top1[i] && top2[j]) {
                            div += c;
                            scale += std::abs(c1[i]) * std::abs(c2[j]);
                        } else if (s1[i] >= 1 && s2[j] >= 1) {
                            acc -= c * U(s1[i], s2[j], g);
                        }
                    }
                if (!(std::abs(div) > Real(1e-12) * scale)) {
                    std::ostringstream os;
                    os << "resonant index: divisor vanishes at (n1,n2)=(" << n1 << "," << n2
                       << "), m=" << grid.node(g);
                    throw Error(ErrorKind::resonant_index, os.str());
                }
                out(n1, n2, g) = acc / div;
            }
            bool nz = !U.entry_zero(n1, n2);
            nzU[flat(n1, n2)] = nz;
            for (int g = 0; g < G; ++g) {
                lfU(n1, n2, g) = nl.left[g] * U(n1, n2, g);
                rgU(n1, n2, g) = nl.right[g] * U(n1, n2, g);
                r0U(n1, n2, g) = r0[g] * U(n1, n2, g);
            }
        });
    }
    return U;
}

// ---------------------------------------------------------------------------
// Residual of the problem on a computed table

struct ResidualReport {
    double max_relative = 0;
    int M1 = 0, M2 = 0; // power of T1, T2 where the maximum occurs
    double m = 0;
    int checked = 0;    // number of (power, node) pairs examined
};

/// Substitutes U into both sides and compares the coefficients of T1^{M1} T2^{M2} for
/// M <= min(limit, N - 1). Each entry is measured relative to the sum of term magnitudes.
template <class Real>
ResidualReport scp_residual(const ProblemInstance& inst, const SeriesTableT<Real>& U, int limit1, int limit2,
                            RecursionOptions opt = {}) {
    using C = std::complex<Real>;
    const Complex eps = U.eps;
    const auto& P = inst.polys;
    const int a1 = top_monomial_exponent(inst, 1, opt.convention);
    const int a2 = top_monomial_exponent(inst, 2, opt.convention);
    const int dl1 = inst.top_delta(1), dl2 = inst.top_delta(2);

    std::vector<std::pair<SeriesTableT<Real>, Real>> lhs, rhs; // (term, sign)
    lhs.push_back({apply_linear_term(U, 0, 1, 0, 1, P.Q1 * P.Q2), 1});
    lhs.push_back({apply_linear_term(U, 0, 1, a2, dl2, P.Q1 * P.RD2), -1});
    lhs.push_back({apply_linear_term(U, a1, dl1, 0, 1, P.RD1 * P.Q2), -1});
    lhs.push_back({apply_linear_term(U, a1, dl1, a2, dl2, P.RD1 * P.RD2), 1});

    const Complex inv_eps2 = ipow(eps, -2);
    {
        auto nl = cauchy_star(U, U, P.P1, P.P2);
        rhs.push_back({nl, 1});
        for (auto& v : rhs.back().first.data) v *= C(inv_eps2);
    }
    for (auto& t : linear_terms(inst))
        rhs.push_back({apply_linear_term(U, t.d1, t.delta1, t.d2, t.delta2, t.R, ipow(eps, t.eps_power)), 1});
    {
        auto Ct = coefficient_table<Real>(inst, Series::C, U.N1, U.N2, U.grid, eps);
        auto cu = cauchy_star(Ct, U, PolySpec::constant(1), P.R0);
        for (auto& v : cu.data) v *= C(inv_eps2);
        rhs.push_back({cu, 1});
        auto Ft = coefficient_table<Real>(inst, Series::F, U.N1, U.N2, U.grid, eps);
        for (auto& v : Ft.data) v *= C(inv_eps2);
        rhs.push_back({Ft, 1});
    }

    ResidualReport rep;
    const int L1 = std::min(limit1, U.N1 - 1), L2 = std::min(limit2, U.N2 - 1);
    for (int M1 = 0; M1 <= L1; ++M1)
        for (int M2 = 0; M2 <= L2; ++M2)
            for (int g = 0; g < U.G(); ++g) {
                C diff(0);
                Real mag(0);
                for (auto& [t, s] : lhs) {
                    diff += s * t(M1, M2, g);
                    mag += std::abs(t(M1, M2, g));
                }
                for (auto& [t, s] : rhs) {
                    diff -= s * t(M1, M2, g);
                    mag += std::abs(t(M1, M2, g));
                }
                ++rep.checked;
                if (mag == Real(0)) continue;
                double rel = static_cast<double>(std::abs(diff) / mag);
                if (rel > rep.max_relative) {
                    rep.max_relative = rel;
                    rep.M1 = M1;
                    rep.M2 = M2;
                    rep.m = U.grid.node(g);
                }
            }
    return rep;
}

// ---------------------------------------------------------------------------
// CSV

/// Rows "n1,n2,m,re,im" for 1 <= nj <= Nj (row/column 0 of a coefficient table is empty).
/// Borel tables are preceded by a "# k1=..,k2=.." line.
template <class Real>
void write_table_csv(std::ostream& os, const SeriesTableT<Real>& t, int first_index = 1) {
    if (t.k1 > 0) os << "# k1=" << t.k1 << ",k2=" << t.k2 << '\n';
    os << "n1,n2,m,re,im\n" << std::setprecision(17);
    for (int n1 = first_index; n1 <= t.N1; ++n1)
        for (int n2 = first_index; n2 <= t.N2; ++n2)
            for (int g = 0; g < t.G(); ++g)
                os << n1 << ',' << n2 << ',' << t.grid.node(g) << ',' << static_cast<double>(t(n1, n2, g).real())
                   << ',' << static_cast<double>(t(n1, n2, g).imag()) << '\n';
}

/// Reads a table written by write_table_csv. The grid is recovered from the m column.
inline CoeffTable read_table_csv(std::istream& is) {
    std::string line;
    int k1 = 0, k2 = 0;
    struct Row {
        int n1, n2;
        double m, re, im;
    };
    std::vector<Row> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::sscanf(line.c_str(), "# k1=%d,k2=%d", &k1, &k2);
            continue;
        }
        if (line.rfind("n1", 0) == 0) continue;
        Row r{};
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        if (!(ls >> r.n1 >> r.n2 >> r.m >> r.re >> r.im))
            throw Error(ErrorKind::shape_mismatch, "malformed table row: " + line);
        rows.push_back(r);
    }
    if (rows.empty()) throw Error(ErrorKind::shape_mismatch, "empty table file");
    std::map<double, int> ms;
    int N1 = 0, N2 = 0;
    for (auto& r : rows) {
        ms[r.m] = 0;
        N1 = std::max(N1, r.n1);
        N2 = std::max(N2, r.n2);
    }
    int G = static_cast<int>(ms.size());
    ModeGrid grid(ms.rbegin()->first, G);
    int i = 0;
    for (auto& [m, idx] : ms) idx = i++;
    CoeffTable t(N1, N2, grid);
    t.k1 = k1;
    t.k2 = k2;
    for (auto& r : rows) t(r.n1, r.n2, ms[r.m]) = Complex(r.re, r.im);
    return t;
}

} // namespace gevrey
