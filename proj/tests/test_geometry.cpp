#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>

using namespace gevrey;
using Catch::Approx;

namespace {

double angle_gap(double a, double b) { return std::abs(wrap_angle(a - b)); }

/// M1 by direct sampling of the ray and the disc boundary.
double brute_M1(const ProblemInstance& inst, int j, double d, double rho, const ModeGrid& g) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n_points; ++i)
        for (auto q : pm_roots(inst, j, g.node(i))) {
            for (int s = 0; s <= 20000; ++s) {
                double r = 1e-3 * s; // ray up to 20
                Complex t = std::polar(r, d);
                best = std::min(best, std::abs(t - q) / (1 + r));
            }
            for (int s = 0; s < 3600; ++s) {
                Complex t = std::polar(rho, 2 * kPi * s / 3600);
                best = std::min(best, std::abs(t - q) / (1 + rho));
            }
        }
    return best;
}

GoodCovering inst_a_covering(int s1, int s2) {
    static auto inst = testing::inst_a();
    return build_good_covering(inst, s1, s2, inst.space.eps0, rad(70));
}

} // namespace

TEST_CASE("sector membership is half-open") {
    Sector s{0, rad(60), 1};
    CHECK(s.contains_arg(rad(30)));
    CHECK_FALSE(s.contains_arg(rad(-30)));
    CHECK(s.contains_arg(rad(-29.9)));
    CHECK(s.contains(Complex(0.5, 0.1)));
    CHECK_FALSE(s.contains(Complex(1.5, 0)));
    CHECK_FALSE(s.contains(Complex(0)));
    CHECK(sectors_overlap(s, Sector{rad(40), rad(30)}));
    CHECK_FALSE(sectors_overlap(s, Sector{rad(45), rad(30)}));
    CHECK(wrap_angle(rad(190)) == Approx(rad(-170)));
}

TEST_CASE("roots of P_m") {
    auto inst = testing::inst_a();
    auto r1 = pm_roots(inst, 1, 0.0);
    REQUIRE(r1.size() == 2);
    std::vector<double> re{r1[0].real(), r1[1].real()};
    std::sort(re.begin(), re.end());
    CHECK(re[0] == Approx(-1));
    CHECK(re[1] == Approx(1));
    CHECK(std::abs(r1[0].imag()) < 1e-15);

    // τ³ = 3·3 / (1·3²) = 1
    auto r2 = pm_roots(inst, 2, 0.0);
    REQUIRE(r2.size() == 3);
    std::vector<double> args;
    for (auto q : r2) {
        CHECK(std::abs(q) == Approx(1.0).epsilon(1e-15));
        args.push_back(std::arg(q));
    }
    std::sort(args.begin(), args.end());
    CHECK(args[0] == Approx(-2 * kPi / 3));
    CHECK(args[1] == Approx(0).margin(1e-15));
    CHECK(args[2] == Approx(2 * kPi / 3));

    auto flat = inst;
    flat.polys.RD1 = PolySpec::from({0, 1}); // vanishes at m = 0
    CHECK_THROWS_AS(pm_roots(flat, 1, 0.0), Error);
}

TEST_CASE("root moduli match a companion-matrix solver on every node") {
    auto inst = testing::inst_a();
    auto g = inst.default_grid();
    for (int j = 1; j <= 2; ++j) {
        const int k = inst.k(j), delta = inst.top_delta(j), s = (delta - 1) * k;
        for (int i = 0; i < g.n_points; ++i) {
            double m = g.node(i);
            auto roots = pm_roots(inst, j, m);
            CHECK(roots.size() == std::size_t(s));
            std::vector<Complex> c(s + 1, Complex(0));
            c[0] = inst.Q(j).at_im(m) * double(k);
            c[s] = -inst.RD(j).at_im(m) * std::pow(double(k), delta);
            auto ref = polynomial_roots(c);
            double formula = std::pow(std::abs(inst.Q(j).at_im(m) / (inst.RD(j).at_im(m) * std::pow(double(k), delta - 1))),
                                      1.0 / s);
            for (auto q : roots) CHECK(std::abs(std::abs(q) - formula) <= 1e-12 * formula);
            for (auto q : ref) CHECK(std::abs(std::abs(q) - formula) <= 1e-12 * formula);
            for (auto q : roots) CHECK(std::abs(c[0] + c[s] * ipow(q, s)) <= 1e-12 * std::abs(c[0]));
        }
    }
}

TEST_CASE("direction reports") {
    auto inst = testing::inst_a();
    auto g = inst.default_grid();
    auto up = direction_report(inst, 1, kPi / 2, 0.5, g);
    CHECK(up.pass);
    // Closest root approach is |q| = 1 seen from the disc boundary: (1 - 0.5)/(1 + 0.5).
    CHECK(up.M1 == Approx(1.0 / 3).epsilon(1e-12));
    CHECK(up.M2 == Approx(0.5).epsilon(1e-12));
    CHECK(up.C_P > 1e-6);
    auto coarse = ModeGrid(g.m_max, 21);
    CHECK(direction_report(inst, 1, 1.2, 0.5, coarse).M1 == Approx(brute_M1(inst, 1, 1.2, 0.5, coarse)).epsilon(1e-4));

    auto on_root = direction_report(inst, 1, 0.0, 0.5, g);
    CHECK_FALSE(on_root.pass);
    CHECK(on_root.M1 < 1e-12);
    CHECK_FALSE(direction_report(inst, 1, kPi / 2, 2.0, g).pass);
}

TEST_CASE("direction reports are monotone in rho") {
    auto inst = testing::inst_a();
    auto g = ModeGrid(inst.default_grid().m_max, 41);
    for (int j = 1; j <= 2; ++j)
        for (double d : {kPi / 2, kPi / 3, 2.5}) {
            DirectionReport prev = direction_report(inst, j, d, 0.05, g);
            for (double rho : {0.1, 0.3, 0.5, 0.8, 0.99}) {
                auto r = direction_report(inst, j, d, rho, g);
                CHECK(r.M1 <= prev.M1);
                CHECK(r.M2 <= prev.M2);
                CHECK(r.C_P <= prev.C_P);
                prev = r;
            }
        }
}

TEST_CASE("admissible directions avoid the root arguments") {
    auto inst = testing::inst_a();
    auto g = inst.default_grid();
    auto c1 = admissible_components(inst, 1, 0.5, g);
    REQUIRE(c1.size() == 2);
    for (auto& c : c1) {
        CHECK(std::abs(std::abs(c.center) - kPi / 2) < 1e-9);
        CHECK(c.half_width <= kPi / 2 + 1e-9);
        CHECK(c.half_width >= rad(85));
    }
    auto c2 = admissible_components(inst, 2, 0.5, g);
    REQUIRE(c2.size() == 3);
    for (auto& c : c2) {
        double nearest = std::min({angle_gap(c.center, rad(60)), angle_gap(c.center, rad(180)), angle_gap(c.center, rad(-60))});
        CHECK(nearest < 1e-9);
        CHECK(c.half_width <= kPi / 3 + 1e-9);
    }
    CHECK(component_for(c1, rad(100)) == component_for(c1, rad(80)));
    CHECK(component_for(c1, rad(100)) != component_for(c1, rad(-80)));
}

TEST_CASE("good covering of INST-A") {
    auto cov = inst_a_covering(2, 3);
    REQUIRE(cov.cells.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        auto& a = cov.cells[i];
        auto& b = cov.cells[(i + 1) % 6];
        CHECK(angle_gap(b.E.direction, a.E.direction) == Approx(rad(60)));
        // overlap of two 70° sectors 60° apart
        CHECK(a.E.opening - angle_gap(b.E.direction, a.E.direction) == Approx(rad(10)));
        CHECK(a.E.radius == 0.2);
        CHECK(a.p1 == int(i) / 3);
        CHECK(a.p2 == int(i) % 3);
        CHECK(a.d1_pass);
        CHECK(a.d2_pass);
    }
    CHECK(cov.theta1 > kPi / 2);
    CHECK(cov.theta2 > kPi / 3);
    auto rep = covering_check(cov, rad(0.1));
    CHECK(rep.pass());
    CHECK(rep.min_cover == 1);
    CHECK(rep.max_cover == 2);
    CHECK(rep.problems.empty());
    auto inst = testing::inst_a();
    try {
        build_good_covering(inst, 2, 3, 0.2, rad(50));
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
    }
}

TEST_CASE("generated coverings certify") {
    for (auto [s1, s2] : {std::pair{2, 3}, std::pair{3, 3}}) {
        auto cov = inst_a_covering(s1, s2);
        INFO(s1 << "," << s2);
        CHECK(covering_check(cov, rad(0.1)).pass());
        const int S = int(cov.cells.size());
        CHECK(S == s1 * s2);
        for (int a = 0; a < S; ++a)
            for (int b = a + 1; b < S; ++b) {
                bool adjacent = b == a + 1 || (a == 0 && b == S - 1);
                CHECK(sectors_overlap(cov.cells[a].E, cov.cells[b].E) == adjacent);
            }
    }
}

TEST_CASE("covering check catches broken coverings") {
    auto cov = inst_a_covering(2, 3);
    auto triple = cov;
    triple.cells[1].E.direction = triple.cells[2].E.direction = triple.cells[0].E.direction;
    auto t = covering_check(triple, rad(0.1));
    CHECK_FALSE(t.no_triple);
    CHECK_FALSE(t.pass());

    auto gap = cov;
    gap.cells[3].E.direction += rad(15); // 10° overlap becomes a 5° gap
    auto g = covering_check(gap, rad(0.1));
    CHECK_FALSE(g.coverage);
    CHECK(g.min_cover == 0);

    auto narrow = cov;
    narrow.theta1 = kPi / 2;
    CHECK_FALSE(covering_check(narrow, rad(0.1)).association);

    auto far = cov;
    far.cells[0].d1 += rad(40);
    CHECK_FALSE(covering_check(far, rad(0.1)).association);
}

TEST_CASE("covering JSON round trip") {
    auto cov = inst_a_covering(2, 3);
    auto back = covering_from_json(covering_to_json(cov));
    CHECK(covering_to_json(back) == covering_to_json(cov));
    REQUIRE(back.cells.size() == cov.cells.size());
    for (std::size_t i = 0; i < cov.cells.size(); ++i) {
        CHECK(back.cells[i].E.direction == cov.cells[i].E.direction);
        CHECK(back.cells[i].d2 == cov.cells[i].d2);
    }
    CHECK(back.theta1 == cov.theta1);
    CHECK(covering_check(back, rad(0.1)).pass());
}
