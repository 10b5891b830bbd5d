#pragma once

#include "gevrey/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

namespace gevrey {

/// Polynomial in X whose coefficients may themselves be polynomials in ε.
/// coeffs[j][p] multiplies X^j ε^p; the lowest degree comes first in both indices.
struct PolySpec {
    std::vector<std::vector<Complex>> coeffs;

    PolySpec() = default;
    /// Polynomial with ε-independent coefficients, lowest degree first.
    static PolySpec from(std::vector<Complex> c) {
        PolySpec p;
        for (auto v : c) p.coeffs.push_back({v});
        return p;
    }
    static PolySpec constant(Complex c) { return from({c}); }

    /// Degree in X after stripping trailing zero coefficients; -1 for the zero polynomial.
    int degree() const {
        for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j)
            for (auto v : coeffs[j])
                if (v != Complex(0)) return j;
        return -1;
    }
    bool is_zero() const { return degree() < 0; }
    bool depends_on_eps() const {
        for (auto& c : coeffs)
            for (std::size_t p = 1; p < c.size(); ++p)
                if (c[p] != Complex(0)) return true;
        return false;
    }

    /// Coefficients in X once ε is fixed.
    std::vector<Complex> at_eps(Complex eps) const {
        std::vector<Complex> out(coeffs.size());
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            Complex acc(0);
            for (std::size_t p = coeffs[j].size(); p-- > 0;) acc = acc * eps + coeffs[j][p];
            out[j] = acc;
        }
        return out;
    }

    template <class Real>
    std::complex<Real> operator()(std::complex<Real> x, Complex eps = Complex(0)) const {
        auto c = at_eps(eps);
        std::complex<Real> acc(0);
        for (std::size_t j = c.size(); j-- > 0;) acc = acc * x + std::complex<Real>(c[j]);
        return acc;
    }

    /// Value at X = i·m.
    template <class Real>
    std::complex<Real> at_im(Real m, Complex eps = Complex(0)) const {
        return (*this)(std::complex<Real>(0, m), eps);
    }

    bool operator==(const PolySpec& o) const {
        int d = degree();
        if (d != o.degree()) return false;
        for (int j = 0; j <= d; ++j) {
            std::size_t n = std::max(coeffs[j].size(), o.coeffs[j].size());
            for (std::size_t p = 0; p < n; ++p) {
                Complex a = p < coeffs[j].size() ? coeffs[j][p] : Complex(0);
                Complex b = p < o.coeffs[j].size() ? o.coeffs[j][p] : Complex(0);
                if (a != b) return false;
            }
        }
        return true;
    }
};

inline PolySpec operator*(const PolySpec& a, const PolySpec& b) {
    PolySpec r;
    if (a.coeffs.empty() || b.coeffs.empty()) return r;
    r.coeffs.assign(a.coeffs.size() + b.coeffs.size() - 1, {});
    for (std::size_t i = 0; i < a.coeffs.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs.size(); ++j) {
            auto& dst = r.coeffs[i + j];
            const auto& x = a.coeffs[i];
            const auto& y = b.coeffs[j];
            if (dst.size() < x.size() + y.size() - 1) dst.resize(x.size() + y.size() - 1);
            for (std::size_t p = 0; p < x.size(); ++p)
                for (std::size_t q = 0; q < y.size(); ++q) dst[p + q] += x[p] * y[q];
        }
    return r;
}

/// Roots of Σ c_j x^j via the eigenvalues of the companion matrix.
inline std::vector<Complex> polynomial_roots(const std::vector<Complex>& c) {
    int d = static_cast<int>(c.size()) - 1;
    while (d > 0 && c[d] == Complex(0)) --d;
    if (d <= 0) return {};
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    std::vector<Complex> out(d);
    for (int i = 0; i < d; ++i) out[i] = es.eigenvalues()[i];
    return out;
}

/// Real m where p(i·m) vanishes. Candidates come from the companion eigenvalues and are
/// accepted when |p(i·m)| is below tol relative to the size of its terms.
inline std::vector<double> real_zeros_on_imaginary_axis(const PolySpec& p, Complex eps = Complex(0),
                                                        double tol = 1e-12) {
    auto c = p.at_eps(eps);
    std::vector<Complex> q(c.size());
    Complex ij(1);
    for (std::size_t j = 0; j < c.size(); ++j) {
        q[j] = c[j] * ij;
        ij *= Complex(0, 1);
    }
    std::vector<double> out;
    for (auto r : polynomial_roots(q)) {
        if (std::abs(r.imag()) > 1e-6 * std::max(1.0, std::abs(r))) continue;
        double m = r.real();
        double mag = 0, mp = 1;
        for (auto cj : c) {
            mag += std::abs(cj) * mp;
            mp *= std::abs(m);
        }
        if (std::abs(p.at_im(m, eps)) <= tol * mag) out.push_back(m);
    }
    return out;
}

} // namespace gevrey
