#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace gevrey {

/// log Γ(x) for x > 0. Every Gamma and Beta value in the library goes through here.
template <class Real>
Real log_gamma(Real x) {
    return boost::math::lgamma(x);
}

template <class Real>
Real gamma_fn(Real x) {
    return std::exp(log_gamma(x));
}

/// Euler Beta function B(x, y) for x, y > 0, evaluated in the log domain.
template <class Real>
Real beta_fn(Real x, Real y) {
    return std::exp(log_gamma(x) + log_gamma(y) - log_gamma(x + y));
}

/// Γ(a) / Γ(b) for a, b > 0.
template <class Real>
Real gamma_ratio(Real a, Real b) {
    return std::exp(log_gamma(a) - log_gamma(b));
}

/// n (n-1) ... (n-d+1); zero when 0 <= n < d.
template <class Real>
Real falling_factorial(long n, long d) {
    Real r(1);
    for (long j = 0; j < d; ++j) r *= static_cast<Real>(n - j);
    return r;
}

/// Γ(n/k) for n >= 1 and 1 for n = 0. Borel coefficients are U_n divided by this,
/// so constant terms are carried through unscaled.
template <class Real>
Real borel_gamma(int n, int k) {
    if (n == 0) return Real(1);
    return gamma_fn(static_cast<Real>(n) / static_cast<Real>(k));
}

template <class Real>
Real log_borel_gamma(int n, int k) {
    if (n == 0) return Real(0);
    return log_gamma(static_cast<Real>(n) / static_cast<Real>(k));
}

} // namespace gevrey
