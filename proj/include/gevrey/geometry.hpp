#pragma once

#include "gevrey/core.hpp"
#include "gevrey/instance.hpp"
#include "gevrey/mode_space.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace gevrey {

inline constexpr double kPi = std::numbers::pi;

/// Angle reduced to (-π, π].
inline double wrap_angle(double a) {
    double r = std::remainder(a, 2 * kPi);
    return r <= -kPi ? r + 2 * kPi : r;
}

constexpr double deg(double radians) { return radians * 180 / kPi; }
constexpr double rad(double degrees) { return degrees * kPi / 180; }

struct Sector {
    double direction = 0;
    double opening = 0;
    double radius = std::numeric_limits<double>::infinity();

    /// Half-open in angle: the counterclockwise edge belongs to the sector, the clockwise one does not.
    bool contains_arg(double a) const {
        if (opening >= 2 * kPi) return true;
        double d = wrap_angle(a - direction);
        return d > -opening / 2 && d <= opening / 2;
    }
    bool contains(Complex z) const { return std::abs(z) < radius && std::abs(z) > 0 && contains_arg(std::arg(z)); }
};

/// True when the angular spans of two sectors share an arc of positive length.
inline bool sectors_overlap(const Sector& a, const Sector& b) {
    if (a.opening >= 2 * kPi || b.opening >= 2 * kPi) return true;
    double d = std::abs(wrap_angle(a.direction - b.direction));
    return d < (a.opening + b.opening) / 2;
}

// ---------------------------------------------------------------------------
// Roots of P_{m,j}

/// The (δ-1)kj roots of Qj(im) kj - RDj(im) kj^δ τ^{(δ-1)kj}, from the polar form of a/b.
inline std::vector<Complex> pm_roots(const ProblemInstance& inst, int j, double m) {
    int k = inst.k(j), delta = inst.top_delta(j), s = (delta - 1) * k;
    Complex a = inst.Q(j).at_im(m) * double(k);
    Complex b = inst.RD(j).at_im(m) * std::pow(double(k), delta);
    if (b == Complex(0) || s <= 0) throw Error(ErrorKind::kernel_singular, "degenerate: no roots");
    Complex z = a / b;
    double r = std::pow(std::abs(z), 1.0 / s), phi = std::arg(z);
    std::vector<Complex> out;
    for (int l = 0; l < s; ++l) out.push_back(std::polar(r, (phi + 2 * kPi * l) / s));
    return out;
}

// ---------------------------------------------------------------------------
// Direction report

struct DirectionReport {
    int j = 1;
    double d = 0, rho = 0;
    double M1 = 0, M2 = 0, C_P = 0;
    bool pass = false;
};

namespace detail {

/// min over r >= 0 of |r e^{id} - q| / (1 + r).
inline double ray_ratio_min(Complex q, double d) {
    double aq = std::abs(q);
    double c = aq * std::cos(std::arg(q) - d);
    auto f = [&](double r) { return std::sqrt(std::max(0.0, r * r - 2 * r * c + aq * aq)) / (1 + r); };
    double best = std::min(aq, 1.0); // r = 0 and r -> ∞
    if (c > -1) {
        double rs = (c + aq * aq) / (1 + c);
        if (rs >= 0) best = std::min(best, f(rs));
    }
    return best;
}

/// Distance from q to the ray of direction d, relative to |q|.
inline double ray_distance_rel(Complex q, double d) {
    double phi = wrap_angle(std::arg(q) - d);
    return std::cos(phi) > 0 ? std::abs(std::sin(phi)) : 1.0;
}

inline std::vector<double> report_modes(const ModeGrid& g) {
    auto v = g.nodes();
    for (double m : far_nodes(g)) v.push_back(m);
    return v;
}

/// Radii used for the ray part of the lower bound on |P_{m,j}|.
inline std::vector<double> ray_radii() {
    std::vector<double> r{0.0};
    for (int i = 0; i <= 80; ++i) r.push_back(std::pow(10.0, -4 + 8.0 * i / 80));
    return r;
}

/// r_{Q,R}: the smallest modulus of Qj(im)/RDj(im) over the grid and far nodes.
inline double quotient_radius(const ProblemInstance& inst, int j, const ModeGrid& g) {
    double r = std::numeric_limits<double>::infinity();
    for (double m : report_modes(g)) r = std::min(r, std::abs(inst.Q(j).at_im(m) / inst.RD(j).at_im(m)));
    return r;
}

} // namespace detail

/// Lower bounds for the distance to the roots of P_{m,j} along τ ∈ S_d ∪ D̄(0,ρ), and for |P_{m,j}|.
inline DirectionReport direction_report(const ProblemInstance& inst, int j, double d, double rho, const ModeGrid& g) {
    DirectionReport rep;
    rep.j = j;
    rep.d = d;
    rep.rho = rho;
    const int k = inst.k(j), delta = inst.top_delta(j), s = (delta - 1) * k;
    const double rq = detail::quotient_radius(inst, j, g);
    const double expo = (delta - 1) - 1.0 / k;
    double M1 = std::numeric_limits<double>::infinity(), M2 = M1, CP = M1;
    static const auto radii = detail::ray_radii();
    for (double m : detail::report_modes(g)) {
        auto roots = pm_roots(inst, j, m);
        double best_root = 0;
        for (auto q : roots) {
            double aq = std::abs(q);
            double disc1 = aq > rho ? (aq - rho) / (1 + rho) : 0.0;
            M1 = std::min({M1, detail::ray_ratio_min(q, d), disc1});
            double disc2 = aq > rho ? (aq - rho) / aq : 0.0;
            best_root = std::max(best_root, std::min(detail::ray_distance_rel(q, d), disc2));
        }
        M2 = std::min(M2, best_root);

        Complex a = inst.Q(j).at_im(m) * double(k);
        Complex b = inst.RD(j).at_im(m) * std::pow(double(k), delta);
        double rd = std::abs(inst.RD(j).at_im(m));
        double root_r = std::pow(std::abs(a / b), 1.0 / s);
        auto denom = [&](double r) { return rd * std::pow(1 + std::pow(r, k), expo); };
        // Disc: |a - b τ^s| >= |a| - |b| ρ^s with equality at the worst angle.
        double disc = rho < root_r ? (std::abs(a) - std::abs(b) * std::pow(rho, s)) / denom(rho) : 0.0;
        CP = std::min(CP, disc);
        auto ray_val = [&](double r) {
            return std::abs(a - b * std::polar(std::pow(r, s), s * d)) / denom(r);
        };
        for (double r : radii) CP = std::min(CP, ray_val(r));
        CP = std::min(CP, ray_val(root_r));
    }
    rep.M1 = M1;
    rep.M2 = M2;
    rep.C_P = CP / std::pow(rq, 1.0 / s);
    rep.pass = rep.M1 > 1e-6 && rep.M2 > 1e-6 && rep.C_P > 1e-6;
    return rep;
}

// ---------------------------------------------------------------------------
// Admissible directions

/// A maximal arc of directions that pass direction_report.
struct DirectionComponent {
    double center = 0;     // bisector
    double half_width = 0; // radians
};

/// Scans directions at the given step and groups passing ones into cyclic arcs.
inline std::vector<DirectionComponent> admissible_components(const ProblemInstance& inst, int j, double rho,
                                                             const ModeGrid& g, double step = rad(0.5)) {
    const int n = static_cast<int>(std::lround(2 * kPi / step));
    std::vector<char> ok(n);
    parallel_for(n, [&](std::size_t i) { ok[i] = direction_report(inst, j, i * 2 * kPi / n, rho, g).pass; });
    std::vector<DirectionComponent> out;
    int first_fail = -1;
    for (int i = 0; i < n; ++i)
        if (!ok[i]) {
            first_fail = i;
            break;
        }
    if (first_fail < 0) return {{0.0, kPi}};
    const double h = 2 * kPi / n;
    for (int t = 1; t <= n; ++t) {
        int i = (first_fail + t) % n;
        if (!ok[i]) continue;
        int len = 0;
        while (ok[(i + len) % n]) ++len;
        // The arc runs from the last failing node to the next failing node.
        double lo = (i - 1) * h, hi = (i + len) * h;
        out.push_back({wrap_angle(0.5 * (lo + hi)), 0.5 * (hi - lo)});
        t += len;
    }
    return out;
}

/// Component containing direction a, or the nearest one; index into comps.
inline int component_for(const std::vector<DirectionComponent>& comps, double a) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        double off = std::abs(wrap_angle(a - comps[i].center));
        double gap = std::max(0.0, off - comps[i].half_width);
        if (gap < bd || (gap == bd && off < std::abs(wrap_angle(a - comps[best].center)))) {
            bd = gap;
            best = static_cast<int>(i);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Good coverings

struct CoveringCell {
    int p1 = 0, p2 = 0; // pair label of the angular slot
    Sector E;
    double d1 = 0, d2 = 0; // Laplace directions 𝔡_{p1}, 𝔡̃_{p2}
    bool d1_pass = false, d2_pass = false;
};

struct GoodCovering {
    int sigma1 = 0, sigma2 = 0;
    double eps0 = 0;
    std::vector<CoveringCell> cells; // cyclic angular order
    Sector T1, T2;
    double theta1 = 0, theta2 = 0;           // openings of the Borel-plane sectors around 𝔡, 𝔡̃
    double half_width1 = 0, half_width2 = 0; // smallest admissible arc half-width in use
    int k1 = 1, k2 = 1;
};

namespace detail {
inline constexpr double covering_margin = rad(1.0);
}

inline GoodCovering build_good_covering(const ProblemInstance& inst, int sigma1, int sigma2, double eps0, double opening,
                                        Sector T1 = {0, rad(10), 1}, Sector T2 = {0, rad(10), 1},
                                        const ModeGrid* grid = nullptr) {
    const int k1 = inst.exponents.k1, k2 = inst.exponents.k2;
    if (!(opening > kPi / k2)) throw Error(ErrorKind::validation, "opening must exceed pi/k2");
    if (sigma1 < 1 || sigma2 < 1 || sigma1 * sigma2 < 2) throw Error(ErrorKind::validation, "sigma1*sigma2 must be >= 2");
    const int S = sigma1 * sigma2;
    const double spacing = 2 * kPi / S;
    if (!(opening > spacing)) throw Error(ErrorKind::no_admissible_covering, "no admissible covering: sectors leave gaps");
    if (S >= 3 && !(opening < 2 * spacing))
        throw Error(ErrorKind::no_admissible_covering, "no admissible covering: opening forces triple overlaps");
    ModeGrid g = grid ? *grid : inst.default_grid();
    const double rho = inst.space.rho;
    auto comps1 = admissible_components(inst, 1, rho, g), comps2 = admissible_components(inst, 2, rho, g);
    if (comps1.empty() || comps2.empty())
        throw Error(ErrorKind::no_admissible_covering, "no admissible covering: every direction meets a root");

    GoodCovering best;
    double best_slack = -std::numeric_limits<double>::infinity();
    const double m = detail::covering_margin;
    const int n_off = static_cast<int>(std::lround(deg(spacing) / 0.5));
    for (int o = 0; o < n_off; ++o) {
        double offset = rad(0.5 * o);
        GoodCovering cov;
        cov.sigma1 = sigma1;
        cov.sigma2 = sigma2;
        cov.eps0 = eps0;
        cov.T1 = T1;
        cov.T2 = T2;
        cov.k1 = k1;
        cov.k2 = k2;
        double need1 = 0, need2 = 0, hw1 = kPi, hw2 = kPi;
        for (int i = 0; i < S; ++i) {
            CoveringCell c;
            c.p1 = i / sigma2;
            c.p2 = i % sigma2;
            c.E = {wrap_angle(offset + i * spacing), opening, eps0};
            const auto& a = comps1[component_for(comps1, c.E.direction + T1.direction)];
            const auto& b = comps2[component_for(comps2, c.E.direction + T2.direction)];
            c.d1 = a.center;
            c.d2 = b.center;
            hw1 = std::min(hw1, a.half_width);
            hw2 = std::min(hw2, b.half_width);
            need1 = std::max(need1, 2 * std::abs(wrap_angle(c.E.direction + T1.direction - c.d1)) + opening + T1.opening);
            need2 = std::max(need2, 2 * std::abs(wrap_angle(c.E.direction + T2.direction - c.d2)) + opening + T2.opening);
            cov.cells.push_back(c);
        }
        cov.theta1 = std::max(need1 + m, kPi / k1 + m);
        cov.theta2 = std::max(need2 + m, kPi / k2 + m);
        cov.half_width1 = hw1;
        cov.half_width2 = hw2;
        double slack = std::min(kPi / k1 + 2 * hw1 - cov.theta1, kPi / k2 + 2 * hw2 - cov.theta2);
        if (slack > best_slack) {
            best_slack = slack;
            best = cov;
        }
    }
    if (!(best_slack > 0))
        throw Error(ErrorKind::no_admissible_covering,
                    "no admissible covering: root arguments leave no room for the time sectors");
    for (auto& c : best.cells) {
        c.d1_pass = direction_report(inst, 1, c.d1, rho, g).pass;
        c.d2_pass = direction_report(inst, 2, c.d2, rho, g).pass;
    }
    return best;
}

struct CoveringCheck {
    bool coverage = true, no_triple = true, opening = true, association = true;
    int min_cover = 0, max_cover = 0;
    std::vector<std::string> problems;
    bool pass() const { return coverage && no_triple && opening && association; }
};

/// Samples angles at the given step and checks coverage multiplicity, openings and that
/// ε·t_j stays in the sector of opening θ_j around the assigned direction for every cell.
inline CoveringCheck covering_check(const GoodCovering& cov, double angular_step) {
    CoveringCheck rep;
    const int n = static_cast<int>(std::ceil(2 * kPi / angular_step));
    rep.min_cover = std::numeric_limits<int>::max();
    for (int i = 0; i < n; ++i) {
        double a = -kPi + (i + 0.5) * 2 * kPi / n;
        int c = 0;
        for (auto& cell : cov.cells) c += cell.E.contains_arg(a);
        rep.min_cover = std::min(rep.min_cover, c);
        rep.max_cover = std::max(rep.max_cover, c);
    }
    if (rep.min_cover < 1) {
        rep.coverage = false;
        rep.problems.push_back("uncovered directions");
    }
    if (rep.max_cover > 2) {
        rep.no_triple = false;
        rep.problems.push_back("three sectors overlap");
    }
    for (auto& cell : cov.cells)
        if (!(cell.E.opening > kPi / cov.k2)) {
            rep.opening = false;
            rep.problems.push_back("sector opening not above pi/k2");
            break;
        }
    if (!(cov.theta1 > kPi / cov.k1) || !(cov.theta2 > kPi / cov.k2)) {
        rep.association = false;
        rep.problems.push_back("Borel-plane sector opening not above pi/kj");
    }
    // Corners (and midpoints) of E × T_j, pulled just inside the half-open edges.
    const double inset = 1e-9;
    for (auto& cell : cov.cells) {
        if (!cell.d1_pass || !cell.d2_pass) {
            rep.association = false;
            rep.problems.push_back("assigned direction fails the root-distance report");
        }
        for (int j = 1; j <= 2; ++j) {
            const Sector& T = j == 1 ? cov.T1 : cov.T2;
            Sector target{j == 1 ? cell.d1 : cell.d2, j == 1 ? cov.theta1 : cov.theta2, cov.eps0 * T.radius};
            for (double se : {-0.5, 0.0, 0.5})
                for (double st : {-0.5, 0.0, 0.5}) {
                    double ae = cell.E.direction + se * (cell.E.opening - inset);
                    double at = T.direction + st * (T.opening - inset);
                    if (!target.contains_arg(ae + at)) {
                        rep.association = false;
                        rep.problems.push_back("eps*t leaves the sector around the assigned direction");
                    }
                }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json sector_to_json(const Sector& s) {
    nlohmann::json j{{"direction", s.direction}, {"opening", s.opening}};
    if (std::isfinite(s.radius)) j["radius"] = s.radius;
    return j;
}
inline Sector sector_from_json(const nlohmann::json& j) {
    Sector s;
    s.direction = j.at("direction").get<double>();
    s.opening = j.at("opening").get<double>();
    s.radius = j.contains("radius") ? j["radius"].get<double>() : std::numeric_limits<double>::infinity();
    return s;
}

inline nlohmann::json covering_to_json(const GoodCovering& c) {
    nlohmann::json cells = nlohmann::json::array();
    for (auto& x : c.cells)
        cells.push_back({{"p1", x.p1},
                         {"p2", x.p2},
                         {"sector", sector_to_json(x.E)},
                         {"d1", x.d1},
                         {"d2", x.d2},
                         {"d1_pass", x.d1_pass},
                         {"d2_pass", x.d2_pass}});
    return {{"sigma1", c.sigma1},     {"sigma2", c.sigma2},           {"eps0", c.eps0},
            {"k1", c.k1},             {"k2", c.k2},                   {"theta1", c.theta1},
            {"theta2", c.theta2},     {"half_width1", c.half_width1}, {"half_width2", c.half_width2},
            {"T1", sector_to_json(c.T1)}, {"T2", sector_to_json(c.T2)}, {"cells", cells}};
}

inline GoodCovering covering_from_json(const nlohmann::json& j) {
    try {
        GoodCovering c;
        c.sigma1 = j.at("sigma1").get<int>();
        c.sigma2 = j.at("sigma2").get<int>();
        c.eps0 = j.at("eps0").get<double>();
        c.k1 = j.at("k1").get<int>();
        c.k2 = j.at("k2").get<int>();
        c.theta1 = j.at("theta1").get<double>();
        c.theta2 = j.at("theta2").get<double>();
        c.half_width1 = j.value("half_width1", 0.0);
        c.half_width2 = j.value("half_width2", 0.0);
        c.T1 = sector_from_json(j.at("T1"));
        c.T2 = sector_from_json(j.at("T2"));
        for (auto& x : j.at("cells")) {
            CoveringCell cell;
            cell.p1 = x.at("p1").get<int>();
            cell.p2 = x.at("p2").get<int>();
            cell.E = sector_from_json(x.at("sector"));
            cell.d1 = x.at("d1").get<double>();
            cell.d2 = x.at("d2").get<double>();
            cell.d1_pass = x.value("d1_pass", true);
            cell.d2_pass = x.value("d2_pass", true);
            c.cells.push_back(cell);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::invalid_instance, std::string("invalid covering file: ") + e.what());
    }
}

} // namespace gevrey
