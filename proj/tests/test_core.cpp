#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <atomic>
#include <random>

using namespace gevrey;
using Catch::Approx;

TEST_CASE("gamma and beta agree with direct quadrature") {
    boost::math::quadrature::tanh_sinh<double> ts;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 4.0);
    for (int i = 0; i < 20; ++i) {
        double x = u(rng), y = u(rng);
        // B(x,y) = ∫_0^∞ s^{x-1} (1+s)^{-x-y} ds, which is kinder to tanh-sinh for small x, y.
        double q = ts.integrate(
            [&](double s) {
                if (!(s > 0) || !std::isfinite(s)) return 0.0;
                return std::exp((x - 1) * std::log(s) - (x + y) * std::log1p(s));
            },
            0.0,
                                std::numeric_limits<double>::infinity());
        CHECK(beta_fn(x, y) == Approx(q).epsilon(1e-10));
    }
    CHECK(gamma_fn(0.5) == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-15));
    CHECK(beta_fn(0.5, 0.5) == Approx(std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("Borel gamma convention") {
    CHECK(borel_gamma<double>(0, 2) == 1.0);
    CHECK(borel_gamma<double>(2, 2) == Approx(1.0));
    CHECK(borel_gamma<double>(1, 2) == Approx(1.7724538509055159));
    CHECK(log_borel_gamma<double>(64, 1) == Approx(std::lgamma(64.0)));
}

TEST_CASE("falling factorial") {
    CHECK(falling_factorial<double>(5, 0) == 1);
    CHECK(falling_factorial<double>(5, 2) == 20);
    CHECK(falling_factorial<double>(1, 2) == 0);
    CHECK(falling_factorial<double>(0, 1) == 0);
}

TEST_CASE("polynomial evaluation and roots") {
    auto p = PolySpec::from({2, 0, -1}); // 2 - X²
    CHECK(p.degree() == 2);
    CHECK(std::abs(p.at_im(0.0) - Complex(2)) < 1e-15);
    CHECK(std::abs(p.at_im(1.0) - Complex(3)) < 1e-15); // 2 - (i)² = 3
    auto q = PolySpec::from({1, 0, 1});                 // 1 + X² vanishes at X = ±i
    auto z = real_zeros_on_imaginary_axis(q);
    REQUIRE(z.size() == 2);
    std::sort(z.begin(), z.end());
    CHECK(z[0] == Approx(-1).margin(1e-12));
    CHECK(z[1] == Approx(1).margin(1e-12));
    CHECK(real_zeros_on_imaginary_axis(p).empty());
    auto r = polynomial_roots({Complex(-6), Complex(11), Complex(-6), Complex(1)});
    std::vector<double> re;
    for (auto x : r) re.push_back(x.real());
    std::sort(re.begin(), re.end());
    CHECK(re[0] == Approx(1));
    CHECK(re[1] == Approx(2));
    CHECK(re[2] == Approx(3));
    auto prod = PolySpec::from({1, 1}) * PolySpec::from({1, -1});
    CHECK(prod == PolySpec::from({1, 0, -1}));
}

TEST_CASE("epsilon-dependent coefficients") {
    PolySpec p;
    p.coeffs = {{Complex(1), Complex(2)}}; // 1 + 2ε
    CHECK(p.depends_on_eps());
    CHECK(std::abs(p.at_im(0.0, Complex(0.5)) - Complex(2)) < 1e-15);
}

TEST_CASE("parallel_for covers every index once and rethrows") {
    std::size_t saved = thread_count();
    set_thread_count(3);
    std::vector<std::atomic<int>> hits(101);
    parallel_for(101, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) throw Error(ErrorKind::internal, "boom");
                    }),
                    Error);
    set_thread_count(saved);
}

TEST_CASE("integer powers") {
    CHECK(std::abs(ipow(Complex(0, 1), 2) - Complex(-1)) < 1e-15);
    CHECK(std::abs(ipow(Complex(2), -2) - Complex(0.25)) < 1e-15);
    CHECK(ipow(Complex(3), 0) == Complex(1));
}

TEST_CASE("numeric failure classification") {
    CHECK(is_numeric_failure(ErrorKind::outside_certified_domain));
    CHECK(is_numeric_failure(ErrorKind::resonant_index));
    CHECK_FALSE(is_numeric_failure(ErrorKind::validation));
    CHECK_FALSE(is_numeric_failure(ErrorKind::invalid_instance));
}
