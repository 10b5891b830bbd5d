#pragma once

#include "gevrey/core.hpp"
#include "gevrey/polynomial.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace gevrey {

/// Uniform grid on [-m_max, m_max] with an odd number of nodes, so m = 0 is a node.
struct ModeGrid {
    double m_max = 1.0;
    int n_points = 257;

    ModeGrid() = default;
    ModeGrid(double mmax, int n) : m_max(mmax), n_points(n) {
        if (!(mmax > 0) || n < 3 || n % 2 == 0)
            throw Error(ErrorKind::shape_mismatch, "mode grid needs m_max > 0 and an odd node count >= 3");
    }

    /// Grid whose half-width puts the (β,μ) decay profile below 1e-10 at the edge.
    static ModeGrid for_decay(double beta, double mu, int n_points = 257, double floor = 1e-10) {
        auto profile = [&](double m) { return std::exp(-beta * m) * std::pow(1 + m, -mu); };
        double lo = 0, hi = 1;
        while (profile(hi) >= floor) hi *= 2;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (profile(mid) < floor ? hi : lo) = mid;
        }
        return ModeGrid(hi, n_points);
    }

    int center() const { return n_points / 2; }
    double spacing() const { return 2 * m_max / (n_points - 1); }
    double node(int i) const { return (i - center()) * spacing(); }
    /// Trapezoid weight of node i.
    double weight(int i) const { return (i == 0 || i == n_points - 1) ? 0.5 * spacing() : spacing(); }
    std::vector<double> nodes() const {
        std::vector<double> v(n_points);
        for (int i = 0; i < n_points; ++i) v[i] = node(i);
        return v;
    }
    bool operator==(const ModeGrid& o) const { return m_max == o.m_max && n_points == o.n_points; }
};

template <class Real>
struct ModeFunctionT {
    ModeGrid grid;
    std::vector<std::complex<Real>> values;

    ModeFunctionT() = default;
    explicit ModeFunctionT(ModeGrid g) : grid(g), values(g.n_points) {}
    template <class F>
    static ModeFunctionT sample(ModeGrid g, F&& f) {
        ModeFunctionT out(g);
        for (int i = 0; i < g.n_points; ++i) out.values[i] = f(static_cast<Real>(g.node(i)));
        return out;
    }
};
using ModeFunction = ModeFunctionT<double>;

/// (1+|m|)^μ e^{β|m|}, the weight of the E_(β,μ) norm.
inline double mode_weight(double m, double beta, double mu) {
    return std::pow(1 + std::abs(m), mu) * std::exp(beta * std::abs(m));
}

template <class Real>
Real weighted_norm(std::span<const std::complex<Real>> values, const ModeGrid& g, double beta, double mu) {
    Real best(0);
    for (int i = 0; i < g.n_points; ++i) {
        Real v = static_cast<Real>(mode_weight(g.node(i), beta, mu)) * std::abs(values[i]);
        if (v > best) best = v;
    }
    return best;
}

template <class Real>
Real weighted_norm(const ModeFunctionT<Real>& f, double beta, double mu) {
    return weighted_norm<Real>(std::span<const std::complex<Real>>(f.values), f.grid, beta, mu);
}

/// Kernel of a star product, already evaluated on the grid: left[i] = Q1(i m_i),
/// right[i] = Q2(i m_i), inv_div[i] = 1 / R(i m_i).
template <class Real>
struct StarKernel {
    std::vector<std::complex<Real>> left, right, inv_div;

    static StarKernel make(const ModeGrid& g, const PolySpec& q1, const PolySpec& q2, const PolySpec& r,
                           Complex eps = Complex(0)) {
        StarKernel k;
        k.left.resize(g.n_points);
        k.right.resize(g.n_points);
        k.inv_div.resize(g.n_points);
        for (int i = 0; i < g.n_points; ++i) {
            Real m = static_cast<Real>(g.node(i));
            k.left[i] = q1.at_im(m, eps);
            k.right[i] = q2.at_im(m, eps);
            auto d = r.at_im(m, eps);
            if (std::abs(d) == Real(0))
                throw Error(ErrorKind::kernel_singular,
                            "kernel singular: divisor vanishes at m = " + std::to_string(g.node(i)));
            k.inv_div[i] = std::complex<Real>(1) / d;
        }
        return k;
    }
    static StarKernel plain(const ModeGrid& g) {
        return make(g, PolySpec::constant(1), PolySpec::constant(1), PolySpec::constant(1));
    }
};

/// out[i] += scale · inv_div[i] · Σ_j w_j (left·f)[i-j+c] (right·g)[j], with f and g already
/// multiplied by their kernel factors. Nodes that fall off the grid contribute zero.
template <class Real>
void star_accumulate(std::span<std::complex<Real>> out, std::span<const std::complex<Real>> lf,
                     std::span<const std::complex<Real>> rg, const ModeGrid& grid,
                     std::span<const std::complex<Real>> inv_div, std::complex<Real> scale) {
    const int n = grid.n_points, c = grid.center();
    const Real h = static_cast<Real>(grid.spacing());
    for (int i = 0; i < n; ++i) {
        // m_i - m_j lands on node i - j + c.
        int jlo = std::max(0, i + c - (n - 1)), jhi = std::min(n - 1, i + c);
        std::complex<Real> acc(0);
        for (int j = jlo; j <= jhi; ++j) {
            Real w = (j == 0 || j == n - 1) ? h / 2 : h;
            acc += w * lf[i - j + c] * rg[j];
        }
        out[i] += scale * inv_div[i] * acc;
    }
}

/// (f⋆g)(m) = (1/R(im)) ∫ Q1(i(m-m1)) f(m-m1) Q2(i m1) g(m1) dm1 by the trapezoid rule.
template <class Real>
ModeFunctionT<Real> star_product(const ModeFunctionT<Real>& f, const ModeFunctionT<Real>& g, const PolySpec& q1,
                                 const PolySpec& q2, const PolySpec& r, Complex eps = Complex(0)) {
    if (!(f.grid == g.grid)) throw Error(ErrorKind::shape_mismatch, "star product needs a shared grid");
    auto k = StarKernel<Real>::make(f.grid, q1, q2, r, eps);
    const int n = f.grid.n_points;
    std::vector<std::complex<Real>> lf(n), rg(n);
    for (int i = 0; i < n; ++i) {
        lf[i] = k.left[i] * f.values[i];
        rg[i] = k.right[i] * g.values[i];
    }
    ModeFunctionT<Real> out(f.grid);
    star_accumulate<Real>(out.values, lf, rg, f.grid, k.inv_div, std::complex<Real>(1));
    return out;
}

/// (2π)^{-1/2} ∫ f(m) e^{izm} dm by the trapezoid rule, for |Im z| < β.
template <class Real>
std::complex<Real> inverse_fourier(const ModeFunctionT<Real>& f, std::complex<Real> z, double beta) {
    if (std::abs(z.imag()) >= beta) throw Error(ErrorKind::outside_strip, "outside strip H_beta");
    std::complex<Real> acc(0);
    const std::complex<Real> I(0, 1);
    for (int i = 0; i < f.grid.n_points; ++i) {
        Real m = static_cast<Real>(f.grid.node(i));
        acc += static_cast<Real>(f.grid.weight(i)) * f.values[i] * std::exp(I * z * m);
    }
    return acc / std::sqrt(Real(2) * std::numbers::pi_v<Real>);
}

/// Writes "m,re,im" rows with 17 significant digits.
template <class Real>
void write_mode_csv(std::ostream& os, const ModeFunctionT<Real>& f) {
    os << "m,re,im\n" << std::setprecision(17);
    for (int i = 0; i < f.grid.n_points; ++i)
        os << f.grid.node(i) << ',' << static_cast<double>(f.values[i].real()) << ','
           << static_cast<double>(f.values[i].imag()) << '\n';
}

} // namespace gevrey
