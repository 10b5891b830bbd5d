#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace gevrey;
using Catch::Approx;

namespace {

ProblemInstance without_data(ProblemInstance inst) {
    inst.gen.C = inst.gen.F = SeriesGenerator{};
    inst.gen.C.all = inst.gen.F.all = false;
    return inst;
}

} // namespace

TEST_CASE("operator expansion coefficients") {
    for (int k = 1; k <= 4; ++k) CHECK(expansion_coeffs(2, k).A[1] == -(k + 1));
    auto e = expansion_coeffs(3, 2);
    CHECK(e.A[2] == -9);
    CHECK(e.A[1] == 12);
    CHECK(e.coeff(3) == 1);
    CHECK(expansion_coeffs(1, 3).A.size() == 1);
    CHECK_THROWS_AS(expansion_coeffs(0, 1), Error);
}

TEST_CASE("operator expansion reproduces the falling factorial on monomials") {
    // On T^n both sides are T^{n + kδ} times a polynomial in n; compare at many n.
    for (int delta = 1; delta <= 6; ++delta)
        for (int k = 1; k <= 4; ++k) {
            auto e = expansion_coeffs(delta, k);
            for (int n = 0; n <= 12; ++n) {
                double lhs = 1, rhs = 0;
                for (int j = 0; j < delta; ++j) lhs *= n - j;
                for (int p = 1; p <= delta; ++p) {
                    double r = 1;
                    for (int j = 0; j < p; ++j) r *= n + j * k;
                    rhs += e.coeff(p) * r;
                }
                CHECK(rhs == lhs);
            }
        }
}

TEST_CASE("reciprocal of P_m") {
    auto inst = testing::inst_a();
    auto r = reciprocal_Pm(inst, 1, 0.0, 6);
    CHECK(r.a == Complex(4));
    CHECK(r.s == 2);
    for (int p = 0; p <= 6; ++p) CHECK(r.coeffs[p] == (p % 2 == 0 ? Complex(0.25) : Complex(0)));
    // (a - b τ^s) Σ c_p τ^p = 1 up to the truncation order.
    for (int j = 1; j <= 2; ++j)
        for (double m : {0.0, 0.7, -3.0}) {
            const int N = 15;
            auto q = reciprocal_Pm(inst, j, m, N);
            for (int n = 0; n <= N; ++n) {
                Complex prod = q.a * q.coeffs[n] - (n >= q.s ? q.b * q.coeffs[n - q.s] : Complex(0));
                CHECK(std::abs(prod - Complex(n == 0 ? 1 : 0)) < 1e-15);
            }
        }
}

TEST_CASE("H raises the total order") {
    auto inst = testing::inst_a();
    auto g = testing::small_grid(inst, 17);
    const Complex eps(0.1);
    HContext<double> ctx(inst, eps, 6, 6, g);
    auto w = borel_transform(solve_recursion<double>(inst, eps, 6, 6, g), 2, 3);
    auto base = apply_H(ctx, w);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int n0 = 2; n0 <= 10; ++n0) {
        auto p = w;
        for (int a = 1; a <= 6; ++a)
            if (int b = n0 - a; b >= 1 && b <= 6)
                for (int i = 0; i < g.n_points; ++i) p(a, b, i) += Complex(u(rng), u(rng));
        auto h = apply_H(ctx, p);
        for (int a = 0; a <= 6; ++a)
            for (int b = 0; b <= 6; ++b)
                if (a + b <= n0)
                    for (int i = 0; i < g.n_points; ++i) CHECK(h(a, b, i) == base(a, b, i));
    }
}

TEST_CASE("H splits into its terms") {
    auto inst = testing::inst_a();
    auto g = testing::small_grid(inst, 9);
    HContext<double> ctx(inst, Complex(0.1), 4, 4, g);
    auto w = borel_transform(solve_recursion<double>(inst, Complex(0.1), 4, 4, g), 2, 3);
    auto parts = apply_H_terms(ctx, w);
    CHECK(testing::table_rel_diff(parts.sum(), apply_H(ctx, w)) == 0.0);
    CHECK_FALSE(parts.term[7].is_zero());
    auto a0 = testing::inst_a0(); // no C data at all
    HContext<double> c0(a0, Complex(0.1), 4, 4, g);
    auto p0 = apply_H_terms(c0, w);
    for (int t = 3; t <= 6; ++t) CHECK(p0.term[t].is_zero());
}

TEST_CASE("Picard iteration reproduces the Borel transform of the recursion") {
    for (auto inst : {testing::inst_a(), testing::inst_a0()}) {
        auto g = testing::small_grid(inst, 17);
        for (Complex eps : {Complex(0.1), Complex(0.03, 0.02)}) {
            INFO(inst.name << " eps " << eps);
            auto P = picard_solve<double>(inst, eps, 6, 6, g, false);
            auto w = borel_transform(solve_recursion<double>(inst, eps, 6, 6, g), 2, 3);
            CHECK(P.iterations <= 6 + 6 + 2);
            CHECK(testing::table_rel_diff(P.omega, w) <= 1e-12);
            HContext<double> ctx(inst, eps, 6, 6, g);
            CHECK(testing::table_rel_diff(apply_H(ctx, w), w) <= 1e-12);
        }
    }
}

TEST_CASE("Picard iteration with no data stays at zero") {
    auto inst = without_data(testing::inst_a());
    auto g = testing::small_grid(inst, 9);
    auto P = picard_solve<double>(inst, Complex(0.1), 4, 4, g, false);
    CHECK(P.omega.is_zero());
    CHECK(P.iterations == 1);
    CHECK_THROWS_AS(picard_solve<double>(inst, Complex(0.3), 4, 4, g), Error);
}

TEST_CASE("contraction constant decreases with epsilon") {
    auto inst = testing::inst_a0();
    auto g = testing::small_grid(inst, 33);
    std::vector<double> c;
    for (double e : {0.1, 0.05, 0.02}) {
        auto P = picard_solve<double>(inst, Complex(e), 6, 6, g, true);
        c.push_back(P.contraction);
    }
    INFO(c[0] << " " << c[1] << " " << c[2]);
    CHECK(c[0] < 1);
    CHECK(c[1] < c[0]);
    CHECK(c[2] < c[1]);
}
