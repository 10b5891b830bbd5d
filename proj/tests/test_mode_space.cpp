#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace gevrey;
using Catch::Approx;

namespace {
const double pi = std::numbers::pi;
}

TEST_CASE("mode grid layout") {
    ModeGrid g(2.0, 5);
    CHECK(g.node(0) == -2.0);
    CHECK(g.node(g.center()) == 0.0);
    CHECK(g.spacing() == 1.0);
    CHECK(g.weight(0) == 0.5);
    CHECK(g.weight(2) == 1.0);
    CHECK_THROWS_AS(ModeGrid(1.0, 4), Error);
    auto d = ModeGrid::for_decay(1, 2);
    CHECK(std::exp(-d.m_max) * std::pow(1 + d.m_max, -2) < 1e-10);
    CHECK(std::exp(-0.99 * d.m_max) * std::pow(1 + 0.99 * d.m_max, -2) >= 1e-10);
}

TEST_CASE("weighted norm examples") {
    ModeGrid g(8.0, 161); // spacing 0.1, m = 1 is a node
    auto prof = ModeFunction::sample(g, [](double m) { return Complex(std::exp(-std::abs(m)) / std::pow(1 + std::abs(m), 2)); });
    CHECK(weighted_norm(prof, 1, 2) == Approx(1.0).epsilon(1e-14));
    CHECK(weighted_norm(ModeFunction(g), 1, 2) == 0.0);
    auto f = ModeFunction::sample(g, [](double m) { return Complex(std::exp(-2 * std::abs(m))); });
    // Oracle: dense maximization of (1+m)² e^{-m} on [0, 8].
    double best = 0;
    for (int i = 0; i <= 800000; ++i) {
        double m = 8.0 * i / 800000;
        best = std::max(best, (1 + m) * (1 + m) * std::exp(-m));
    }
    CHECK(weighted_norm(f, 1, 2) == Approx(best).epsilon(1e-10));
    CHECK(best == Approx(4 / std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("weighted norm homogeneity and pointwise bound") {
    ModeGrid g(6.0, 61);
    auto f = ModeFunction::sample(g, [](double m) { return Complex(std::cos(m), 0.3) * std::exp(-std::abs(m) * 1.5); });
    Complex c(2.0, -1.5);
    ModeFunction cf(g), af(g);
    double amax = 0;
    for (int i = 0; i < g.n_points; ++i) {
        cf.values[i] = c * f.values[i];
        Complex a = Complex(1 + 0.1 * g.node(i) * g.node(i), 0.2);
        amax = std::max(amax, std::abs(a));
        af.values[i] = a * f.values[i];
    }
    CHECK(weighted_norm(cf, 1, 2) == Approx(std::abs(c) * weighted_norm(f, 1, 2)).epsilon(1e-15));
    CHECK(weighted_norm(af, 1, 2) <= amax * weighted_norm(f, 1, 2) * (1 + 1e-15));
}

TEST_CASE("star product of Gaussians") {
    ModeGrid g(10.0, 401);
    auto f = ModeFunction::sample(g, [](double m) { return Complex(std::exp(-m * m)); });
    auto one = PolySpec::constant(1);
    auto s = star_product(f, f, one, one, one);
    for (int i = 0; i < g.n_points; i += 20) {
        double m = g.node(i);
        if (std::abs(m) > 6) continue; // the truncated convolution loses support near the edges
        CHECK(std::abs(s.values[i] - Complex(std::sqrt(pi / 2) * std::exp(-m * m / 2))) < 1e-10);
    }
    CHECK(s.values[g.center()].real() == Approx(1.2533141373155001).epsilon(1e-12));
    auto odd = star_product(f, f, PolySpec::from({0, 1}), one, one);
    CHECK(std::abs(odd.values[g.center()]) < 1e-14);
    auto f2 = ModeFunction::sample(g, [](double m) { return Complex(std::exp(-2 * m * m), m * std::exp(-m * m)); });
    auto ab = star_product(f, f2, PolySpec::from({1, 1}), PolySpec::from({1, 1}), one);
    auto ba = star_product(f2, f, PolySpec::from({1, 1}), PolySpec::from({1, 1}), one);
    for (int i = 0; i < g.n_points; ++i) CHECK(std::abs(ab.values[i] - ba.values[i]) < 1e-12);
    CHECK_THROWS_AS(star_product(f, f, one, one, PolySpec::from({1, 0, 1})), Error); // 1 - m² vanishes at m = ±1
}

TEST_CASE("inverse Fourier transform") {
    ModeGrid g(12.0, 481);
    auto f = ModeFunction::sample(g, [](double m) { return Complex(std::exp(-m * m / 2)); });
    CHECK(std::abs(inverse_fourier(f, Complex(0.3), 1.0) - Complex(std::exp(-0.045))) < 1e-12);
    CHECK(std::abs(inverse_fourier(ModeFunction(g), Complex(0.3), 1.0)) == 0.0);
    CHECK_THROWS_AS(inverse_fourier(f, Complex(0, 1.0), 1.0), Error);

    // Derivative property against a centered difference.
    auto imf = ModeFunction::sample(g, [](double m) { return Complex(0, m) * std::exp(-m * m / 2); });
    Complex z(0.4, 0.2);
    double h = 1e-5;
    Complex fd = (inverse_fourier(f, z + h, 1.0) - inverse_fourier(f, z - h, 1.0)) / (2 * h);
    CHECK(std::abs(inverse_fourier(imf, z, 1.0) - fd) < 1e-6);
}

TEST_CASE("inverse Fourier turns convolution into a product") {
    ModeGrid g(14.0, 561);
    auto f = ModeFunction::sample(g, [](double m) { return Complex(std::exp(-m * m), 0); });
    auto h = ModeFunction::sample(g, [](double m) { return Complex(std::exp(-(m - 0.5) * (m - 0.5) / 2), 0.1 * m) * std::exp(-m * m / 8); });
    auto one = PolySpec::constant(1);
    auto conv = star_product(f, h, one, one, one);
    for (auto& v : conv.values) v /= std::sqrt(2 * pi);
    for (double x : {0.0, 0.7, -1.3}) {
        Complex z(x, 0.1);
        Complex lhs = inverse_fourier(f, z, 1.0) * inverse_fourier(h, z, 1.0);
        CHECK(std::abs(lhs - inverse_fourier(conv, z, 1.0)) < 1e-8);
    }
}

TEST_CASE("star product bound constant is stable under refinement") {
    const double beta = 1, mu = 2, mmax = 20;
    auto measure = [&](int n) {
        ModeGrid g(mmax, n);
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(-1, 1);
        double c5 = 0;
        for (int t = 0; t < 12; ++t) {
            double a1 = u(rng), a2 = u(rng), b1 = u(rng), b2 = u(rng);
            auto prof = [&](double m, double a, double b) {
                return Complex(1 + 0.5 * a * std::cos(m), 0.5 * b * std::sin(2 * m)) * std::exp(-beta * std::abs(m)) *
                       std::pow(1 + std::abs(m), -mu);
            };
            auto f = ModeFunction::sample(g, [&](double m) { return prof(m, a1, b1); });
            auto h = ModeFunction::sample(g, [&](double m) { return prof(m, a2, b2); });
            auto s = star_product(f, h, PolySpec::constant(1), PolySpec::constant(1), PolySpec::from({2, 0, -1}));
            c5 = std::max(c5, weighted_norm(s, beta, mu) / (weighted_norm(f, beta, mu) * weighted_norm(h, beta, mu)));
        }
        return c5;
    };
    double coarse = measure(201), fine = measure(401);
    CHECK(std::isfinite(coarse));
    CHECK(std::abs(coarse - fine) <= 0.2 * fine);
}

TEST_CASE("mode CSV output") {
    ModeGrid g(1.0, 3);
    auto f = ModeFunction::sample(g, [](double m) { return Complex(m, 1.0 / 3); });
    std::ostringstream os;
    write_mode_csv(os, f);
    CHECK(os.str() == "m,re,im\n-1,-1,0.33333333333333331\n0,0,0.33333333333333331\n1,1,0.33333333333333331\n");
}
