#pragma once

#include "gevrey/core.hpp"
#include "gevrey/mode_space.hpp"
#include "gevrey/polynomial.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace gevrey {

using nlohmann::json;

/// Integer exponent data. Arrays are stored 1-indexed; slot 0 is unused.
struct ExponentTables {
    int k1 = 1, k2 = 2;
    int D1 = 2, D2 = 2;
    std::vector<int> d, delta;   // size D1 + 1
    std::vector<int> dt, deltat; // size D2 + 1
    /// Delta[l1][l2] for 1 <= l1 <= D1-1, 1 <= l2 <= D2-1.
    std::vector<std::vector<int>> Delta;
    /// Optional stated values of the top exponents; checked against the derived ones.
    std::map<std::string, int> stated_top;
};

struct SpaceParams {
    double beta = 1, mu = 2, nu1 = 0.5, nu2 = 0.5, rho = 0.5, eps0 = 0.2;
};

/// Built-in mode profiles. Each has unit (β,μ)-norm, attained at m = 0.
enum class Profile { weighted_unit, oscillating, phase };

struct SeriesGenerator {
    Profile profile = Profile::weighted_unit;
    bool all = true;                            // every index in range is nonzero
    std::vector<std::pair<int, int>> indices;   // used when all == false
    bool active(int n1, int n2) const {
        if (all) return true;
        for (auto& [a, b] : indices)
            if (a == n1 && b == n2) return true;
        return false;
    }
};

struct GeneratorSpec {
    double K0 = 1, T0 = 2;
    SeriesGenerator C, F;
};

struct Polys {
    PolySpec Q1, Q2, R0, RD1, RD2, P1, P2;
    /// R[l1][l2] for inner indices; outer entries, if present in a file, must vanish.
    std::map<std::pair<int, int>, PolySpec> R;
    PolySpec R_top() const { return RD1 * RD2; }
    PolySpec R_at(int l1, int l2) const {
        auto it = R.find({l1, l2});
        return it == R.end() ? PolySpec() : it->second;
    }
};

struct ProblemInstance {
    std::string name;
    ExponentTables exponents;
    Polys polys;
    SpaceParams space;
    GeneratorSpec gen;
    /// Optional grid stored with the instance; zero n_points means "derive from space".
    ModeGrid grid{1.0, 3};
    bool has_grid = false;

    ModeGrid default_grid(int n_points = 257) const {
        if (has_grid) return grid;
        return ModeGrid::for_decay(space.beta, space.mu, n_points);
    }
    int k(int j) const { return j == 1 ? exponents.k1 : exponents.k2; }
    int top_delta(int j) const {
        return j == 1 ? exponents.delta[exponents.D1] : exponents.deltat[exponents.D2];
    }
    const PolySpec& Q(int j) const { return j == 1 ? polys.Q1 : polys.Q2; }
    const PolySpec& RD(int j) const { return j == 1 ? polys.RD1 : polys.RD2; }
};

// ---------------------------------------------------------------------------
// Derived exponents

struct DerivedExponents {
    int Delta_top = 0;     // Delta[D1][D2]
    int Delta_D1_0 = 0;    // Delta[D1][0]
    int Delta_0_D2 = 0;    // Delta[0][D2]
    std::vector<int> d_k;  // d_{l1,k1}, 1-indexed
    std::vector<int> dt_k; // dt_{l2,k2}, 1-indexed
};

inline DerivedExponents derived_exponents(const ProblemInstance& inst) {
    const auto& e = inst.exponents;
    DerivedExponents r;
    r.Delta_top = e.d[e.D1] + e.dt[e.D2] - e.delta[e.D1] - e.deltat[e.D2] + 2;
    r.Delta_D1_0 = e.d[e.D1] - e.delta[e.D1] + 1;
    r.Delta_0_D2 = e.dt[e.D2] - e.deltat[e.D2] + 1;
    r.d_k.assign(e.D1 + 1, 0);
    r.dt_k.assign(e.D2 + 1, 0);
    for (int l = 1; l <= e.D1; ++l) {
        r.d_k[l] = e.d[l] + e.k1 + 1 - e.delta[l] * (e.k1 + 1);
        if (r.d_k[l] < 0)
            throw Error(ErrorKind::inconsistent_exponents,
                        "inconsistent exponent tables: d_{" + std::to_string(l) + ",k1} < 0");
    }
    for (int l = 1; l <= e.D2; ++l) {
        r.dt_k[l] = e.dt[l] + e.k2 + 1 - e.deltat[l] * (e.k2 + 1);
        if (r.dt_k[l] < 0)
            throw Error(ErrorKind::inconsistent_exponents,
                        "inconsistent exponent tables: dt_{" + std::to_string(l) + ",k2} < 0");
    }
    return r;
}

/// Power of ε multiplying the (l1,l2) linear term of the rescaled equation.
inline int linear_term_eps_power(const ProblemInstance& inst, int l1, int l2) {
    const auto& e = inst.exponents;
    return e.Delta[l1][l2] - e.d[l1] - e.dt[l2] + e.delta[l1] + e.deltat[l2] - 2;
}

// ---------------------------------------------------------------------------
// Roots of the binomial P_{m,j}(τ) = Qj(im) kj - RDj(im) kj^δ τ^{(δ-1)kj}

/// Modulus shared by all roots of P_{m,j}; +inf when RDj(im) = 0.
inline double pm_root_modulus(const ProblemInstance& inst, int j, double m) {
    int k = inst.k(j), delta = inst.top_delta(j);
    Complex a = inst.Q(j).at_im(m) * double(k);
    Complex b = inst.RD(j).at_im(m) * std::pow(double(k), delta);
    if (std::abs(b) == 0) return std::numeric_limits<double>::infinity();
    return std::pow(std::abs(a / b), 1.0 / ((delta - 1) * k));
}

/// Far nodes standing in for the |m| -> ∞ limit in "for all m" checks.
inline std::vector<double> far_nodes(const ModeGrid& g) {
    std::vector<double> v;
    for (double s : {10.0, 100.0, 1000.0, 1e5}) {
        v.push_back(s * g.m_max);
        v.push_back(-s * g.m_max);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Validation

struct Condition {
    std::string id;
    std::string description;
    bool pass = true;
    std::string detail;
};

struct SectorWitness {
    int j = 1;
    double direction = 0, aperture = 0, radius = 0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<Condition> conditions;
    std::vector<Condition> warnings;
    SectorWitness sector[2];
    double min_root_radius[2] = {0, 0};

    bool pass() const {
        for (auto& c : conditions)
            if (!c.pass) return false;
        return true;
    }
    const Condition* find(const std::string& id) const {
        for (auto& c : conditions)
            if (c.id == id) return &c;
        return nullptr;
    }
    std::vector<std::string> failed() const {
        std::vector<std::string> out;
        for (auto& c : conditions)
            if (!c.pass) out.push_back(c.id);
        return out;
    }
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

/// Witness sector for the values z(m) = Q(im)/R(im) over the grid and the |m| -> ∞ limit.
inline SectorWitness sector_witness(const PolySpec& q, const PolySpec& r, const ModeGrid& g, int j) {
    SectorWitness w;
    w.j = j;
    auto ratio = [&](double m) { return q.at_im(m) / r.at_im(m); };
    // Unwrapped arguments along m >= 0 and m <= 0, then the far nodes and the limit.
    std::vector<double> pos, neg;
    for (int i = g.center(); i < g.n_points; ++i) pos.push_back(g.node(i));
    for (int i = g.center(); i >= 0; --i) neg.push_back(g.node(i));
    for (double s : {10.0, 100.0, 1000.0, 1e5}) {
        pos.push_back(s * g.m_max);
        neg.push_back(-s * g.m_max);
    }
    double a0 = std::arg(ratio(0.0));
    double lo = a0, hi = a0, rmin = std::abs(ratio(0.0));
    for (auto* path : {&pos, &neg}) {
        double prev = a0;
        for (double m : *path) {
            Complex z = ratio(m);
            if (!std::isfinite(std::abs(z)) || std::abs(z) == 0) return w;
            double a = std::arg(z);
            while (a - prev > std::numbers::pi) a -= 2 * std::numbers::pi;
            while (a - prev < -std::numbers::pi) a += 2 * std::numbers::pi;
            prev = a;
            lo = std::min(lo, a);
            hi = std::max(hi, a);
            if (std::abs(m) <= g.m_max) rmin = std::min(rmin, std::abs(z));
        }
        // Exact limit direction from the leading coefficients.
        int dq = q.degree(), dr = r.degree();
        Complex lead = q.at_eps(0)[dq] / r.at_eps(0)[dr];
        double sign = path == &pos ? 1.0 : -1.0;
        double a = std::arg(lead) + (dq - dr) * sign * std::numbers::pi / 2;
        while (a - prev > std::numbers::pi) a -= 2 * std::numbers::pi;
        while (a - prev < -std::numbers::pi) a += 2 * std::numbers::pi;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        if (dq == dr) rmin = std::min(rmin, std::abs(lead));
    }
    w.direction = std::remainder(0.5 * (lo + hi), 2 * std::numbers::pi);
    w.aperture = 0.5 * (hi - lo) + 1e-6;
    w.radius = rmin;
    w.pass = (hi - lo) < 2 * std::numbers::pi - 1e-9 && rmin > 0;
    return w;
}

/// Reasons the polynomial vanishes somewhere on the imaginary axis, or empty.
inline std::string vanishing_detail(const PolySpec& p, const std::string& name, const ModeGrid& g) {
    auto zeros = real_zeros_on_imaginary_axis(p);
    std::string out;
    if (!zeros.empty()) {
        std::vector<double> sorted = zeros;
        std::sort(sorted.begin(), sorted.end());
        bool symmetric = sorted.size() == 2 && std::abs(sorted[0] + sorted[1]) < 1e-9;
        out = name + "(im)=0 at m=";
        if (symmetric)
            out += "±" + fmt(std::abs(sorted[1]));
        else
            for (std::size_t i = 0; i < sorted.size(); ++i) out += (i ? "," : "") + fmt(sorted[i]);
        return out;
    }
    for (int i = 0; i < g.n_points; ++i)
        if (std::abs(p.at_im(g.node(i))) <= 1e-12) return name + "(im)=0 at grid node m=" + fmt(g.node(i));
    return out;
}

} // namespace detail

inline ValidationReport validate_instance(const ProblemInstance& inst, const ModeGrid& grid) {
    const auto& e = inst.exponents;
    const auto& P = inst.polys;
    if (P.Q1.is_zero() || P.Q2.is_zero() || P.RD1.is_zero() || P.RD2.is_zero())
        throw Error(ErrorKind::invalid_instance, "invalid instance: degenerate polynomial");
    if (static_cast<int>(e.d.size()) != e.D1 + 1 || static_cast<int>(e.delta.size()) != e.D1 + 1 ||
        static_cast<int>(e.dt.size()) != e.D2 + 1 || static_cast<int>(e.deltat.size()) != e.D2 + 1)
        throw Error(ErrorKind::invalid_instance, "invalid instance: exponent arrays do not match D1, D2");

    ValidationReport rep;
    auto add = [&](std::string id, std::string desc, bool ok, std::string detail = "") {
        rep.conditions.push_back({std::move(id), std::move(desc), ok, std::move(detail)});
    };

    const auto& s = inst.space;
    add("space_positive", "beta, mu, nu1, nu2, rho, eps0 are positive",
        s.beta > 0 && s.mu > 0 && s.nu1 > 0 && s.nu2 > 0 && s.rho > 0 && s.eps0 > 0);
    add("k_order", "1 <= k1 < k2", e.k1 >= 1 && e.k1 < e.k2);
    add("top_orders", "D1 >= 2 and D2 >= 2", e.D1 >= 2 && e.D2 >= 2);

    auto increasing = [](const std::vector<int>& v, int D) {
        if (v[1] != 1) return false;
        for (int l = 2; l <= D; ++l)
            if (v[l] <= v[l - 1]) return false;
        return true;
    };
    add("delta_increasing_1", "delta[1] = 1 and delta strictly increasing", increasing(e.delta, e.D1));
    add("delta_increasing_2", "deltat[1] = 1 and deltat strictly increasing", increasing(e.deltat, e.D2));

    auto d_relation = [](const std::vector<int>& d, const std::vector<int>& dl, int D, int k, std::string& why) {
        bool ok = true;
        if (d[D] != (dl[D] - 1) * (k + 1)) {
            ok = false;
            why += "top exponent must equal " + std::to_string((dl[D] - 1) * (k + 1)) + "; ";
        }
        for (int l = 1; l < D; ++l)
            if (!(d[l] > (dl[l] - 1) * (k + 1))) {
                ok = false;
                why += "index " + std::to_string(l) + " must exceed " + std::to_string((dl[l] - 1) * (k + 1)) + "; ";
            }
        return ok;
    };
    {
        std::string why;
        bool ok = d_relation(e.d, e.delta, e.D1, e.k1, why);
        add("d_relation_1", "d[D1] = (delta[D1]-1)(k1+1) and d[l] > (delta[l]-1)(k1+1) below", ok, why);
    }
    {
        std::string why;
        bool ok = d_relation(e.dt, e.deltat, e.D2, e.k2, why);
        add("d_relation_2", "dt[D2] = (deltat[D2]-1)(k2+1) and dt[l] > (deltat[l]-1)(k2+1) below", ok, why);
    }

    int top = e.d[e.D1] + e.dt[e.D2] - e.delta[e.D1] - e.deltat[e.D2] + 2;
    int top1 = e.d[e.D1] - e.delta[e.D1] + 1;
    int top2 = e.dt[e.D2] - e.deltat[e.D2] + 1;
    {
        std::string why;
        auto chk = [&](const char* key, int v) {
            auto it = e.stated_top.find(key);
            if (it != e.stated_top.end() && it->second != v)
                why += std::string(key) + " stated " + std::to_string(it->second) + ", derived " + std::to_string(v) + "; ";
        };
        chk("D1,D2", top);
        chk("D1,0", top1);
        chk("0,D2", top2);
        add("top_exponents", "stated Delta[D1][D2], Delta[D1][0], Delta[0][D2] match the derived values", why.empty(), why);
    }

    bool nonneg = top >= 0 && top1 >= 0 && top2 >= 0;
    for (int l1 = 1; l1 < e.D1; ++l1)
        for (int l2 = 1; l2 < e.D2; ++l2) nonneg = nonneg && e.Delta[l1][l2] >= 0;
    add("Delta_nonnegative", "every Delta entry is non-negative", nonneg);

    {
        bool ok = true;
        for (int l = 1; l < e.D1; ++l) ok = ok && e.k1 * e.delta[e.D1] >= e.k1 * e.delta[l] + 2;
        add("top_delta_gap_1", "delta[D1] >= delta[l1] + 2/k1 for l1 < D1", ok,
            ok ? "" : "needs delta[D1] >= delta[l1] + " + detail::fmt(2.0 / e.k1));
    }
    {
        bool ok = true;
        for (int l = 1; l < e.D2; ++l) ok = ok && e.k2 * e.deltat[e.D2] >= e.k2 * e.deltat[l] + 2;
        add("top_delta_gap_2", "deltat[D2] >= deltat[l2] + 2/k2 for l2 < D2", ok,
            ok ? "" : "needs deltat[D2] >= deltat[l2] + " + detail::fmt(2.0 / e.k2));
    }
    {
        bool ok = true;
        std::string why;
        for (int l1 = 1; l1 < e.D1; ++l1)
            for (int l2 = 1; l2 < e.D2; ++l2) {
                int v = e.Delta[l1][l2] + e.k1 * (1 - e.delta[e.D1]) + e.k2 * (1 - e.deltat[e.D2]) + 2;
                if (v < 0) {
                    ok = false;
                    why += "(" + std::to_string(l1) + "," + std::to_string(l2) + ") short by " + std::to_string(-v) + "; ";
                }
            }
        add("Delta_budget", "Delta[l1][l2] + k1(1-delta[D1]) + k2(1-deltat[D2]) + 2 >= 0", ok, why);
    }

    {
        bool ok = true;
        std::string why;
        for (auto& [key, p] : P.R) {
            bool inner = key.first >= 1 && key.first < e.D1 && key.second >= 1 && key.second < e.D2;
            if (!inner && !p.is_zero()) {
                ok = false;
                why += "R[" + std::to_string(key.first) + "][" + std::to_string(key.second) + "] must vanish; ";
            }
        }
        add("R_outer_zero", "R[D1][l2] = R[l1][D2] = 0; the top entry is RD1*RD2", ok, why);
    }

    add("degree_Q_R_1", "deg Q1 >= deg RD1", P.Q1.degree() >= P.RD1.degree());
    add("degree_Q_R_2", "deg Q2 >= deg RD2", P.Q2.degree() >= P.RD2.degree());
    {
        int dtop = P.R_top().degree();
        bool ok = dtop >= P.P1.degree() && dtop >= P.P2.degree();
        for (auto& [key, p] : P.R) ok = ok && dtop >= p.degree();
        add("degree_top_R", "deg(RD1*RD2) >= deg R[l1][l2], deg P1, deg P2", ok);
    }

    for (auto [id, poly, name] : {std::tuple{"Q1_nonvanishing", &P.Q1, "Q1"}, std::tuple{"Q2_nonvanishing", &P.Q2, "Q2"}}) {
        auto why = detail::vanishing_detail(*poly, name, grid);
        add(id, std::string(name) + "(im) != 0 for all real m", why.empty(), why);
    }
    {
        auto why = detail::vanishing_detail(P.R_top(), "RD1*RD2", grid);
        add("top_R_nonvanishing", "RD1(im)*RD2(im) != 0 for all real m", why.empty(), why);
    }

    {
        int dp = std::max(P.P1.degree(), P.P2.degree());
        add("mu_threshold", "mu > max(deg P1, deg P2) + 1", s.mu > dp + 1,
            s.mu > dp + 1 ? "" : "needs mu > " + std::to_string(dp + 1));
        int dq = std::max(P.Q1.degree(), P.Q2.degree());
        if (!(s.mu > dq + 1))
            rep.warnings.push_back({"mu_kernel_threshold", "mu > max(deg Q1, deg Q2) + 1", false,
                                    "needs mu > " + std::to_string(dq + 1)});
    }

    bool roots_ok = rep.find("top_R_nonvanishing")->pass && rep.find("Q1_nonvanishing")->pass &&
                    rep.find("Q2_nonvanishing")->pass && e.D1 >= 2 && e.D2 >= 2 &&
                    e.delta[e.D1] >= 2 && e.deltat[e.D2] >= 2;
    for (int j = 1; j <= 2; ++j) {
        auto w = roots_ok ? detail::sector_witness(inst.Q(j), inst.RD(j), grid, j) : SectorWitness{};
        w.j = j;
        rep.sector[j - 1] = w;
        add("sector_" + std::to_string(j),
            "Q" + std::to_string(j) + "(im)/RD" + std::to_string(j) + "(im) lies in a proper sector bounded away from 0",
            w.pass,
            "direction " + detail::fmt(w.direction) + ", aperture " + detail::fmt(w.aperture) + ", radius " +
                detail::fmt(w.radius));
    }
    {
        bool ok = roots_ok;
        std::string why;
        if (roots_ok)
            for (int j = 1; j <= 2; ++j) {
                double rmin = std::numeric_limits<double>::infinity();
                for (int i = 0; i < grid.n_points; ++i) rmin = std::min(rmin, pm_root_modulus(inst, j, grid.node(i)));
                for (double m : far_nodes(grid)) rmin = std::min(rmin, pm_root_modulus(inst, j, m));
                rep.min_root_radius[j - 1] = rmin;
                if (!(s.rho < rmin)) {
                    ok = false;
                    why += "rho must stay below " + detail::fmt(rmin) + " (axis " + std::to_string(j) + "); ";
                }
            }
        add("rho_below_roots", "rho is below every root modulus of P_{m,1}, P_{m,2}", ok, why);
    }
    add("generator_bound", "K0 > 0 and T0 > 0 so generated data obey the geometric norm bound",
        inst.gen.K0 > 0 && inst.gen.T0 > 0);
    return rep;
}

// ---------------------------------------------------------------------------
// Coefficient generation

inline double profile_base(double m, const SpaceParams& s) {
    return std::exp(-s.beta * std::abs(m)) * std::pow(1 + std::abs(m), -s.mu);
}

enum class Series { C, F };

/// C_{n1,n2} or F_{n1,n2} on the grid: K0 T0^{-(n1+n2)} times a unit-norm profile.
inline ModeFunction generate_coefficients(const ProblemInstance& inst, Series which, int n1, int n2,
                                          const ModeGrid& grid) {
    const auto& g = which == Series::C ? inst.gen.C : inst.gen.F;
    ModeFunction out(grid);
    bool in_range = which == Series::C ? (n1 >= 0 && n2 >= 0) : (n1 >= 1 && n2 >= 1);
    if (!in_range || !g.active(n1, n2)) return out;
    double amp = inst.gen.K0 * std::pow(inst.gen.T0, -(n1 + n2));
    for (int i = 0; i < grid.n_points; ++i) {
        double m = grid.node(i);
        Complex shape(1);
        if (g.profile == Profile::oscillating) shape = std::cos(m);
        if (g.profile == Profile::phase) shape = std::polar(1.0, m);
        out.values[i] = amp * profile_base(m, inst.space) * shape;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Complex complex_from(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw Error(ErrorKind::invalid_instance, "invalid instance: complex numbers are [re, im] pairs");
}
inline json complex_to(Complex c) { return json::array({c.real(), c.imag()}); }

inline PolySpec poly_from(const json& j) {
    PolySpec p;
    if (!j.is_array()) throw Error(ErrorKind::invalid_instance, "invalid instance: polynomial must be an array");
    for (auto& c : j) {
        // Either [re, im] or a list of such pairs giving the ε-expansion of the coefficient.
        if (c.is_array() && !c.empty() && c[0].is_array()) {
            std::vector<Complex> series;
            for (auto& t : c) series.push_back(complex_from(t));
            p.coeffs.push_back(series);
        } else {
            p.coeffs.push_back({complex_from(c)});
        }
    }
    return p;
}
inline json poly_to(const PolySpec& p) {
    json arr = json::array();
    for (auto& c : p.coeffs) {
        if (c.size() <= 1) {
            arr.push_back(complex_to(c.empty() ? Complex(0) : c[0]));
        } else {
            json s = json::array();
            for (auto v : c) s.push_back(complex_to(v));
            arr.push_back(s);
        }
    }
    return arr;
}

inline std::vector<int> indexed_from(const json& j, int D, const char* name) {
    std::vector<int> v(D + 1, 0);
    if (j.is_array()) {
        if (static_cast<int>(j.size()) != D)
            throw Error(ErrorKind::invalid_instance, std::string("invalid instance: ") + name + " needs " +
                                                         std::to_string(D) + " entries");
        for (int l = 1; l <= D; ++l) v[l] = j[l - 1].get<int>();
        return v;
    }
    for (int l = 1; l <= D; ++l) {
        auto key = std::to_string(l);
        if (!j.contains(key))
            throw Error(ErrorKind::invalid_instance, std::string("invalid instance: missing ") + name + "[" + key + "]");
        v[l] = j.at(key).get<int>();
    }
    return v;
}
inline json indexed_to(const std::vector<int>& v) {
    json o = json::object();
    for (std::size_t l = 1; l < v.size(); ++l) o[std::to_string(l)] = v[l];
    return o;
}

inline std::pair<int, int> pair_key(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::invalid_instance, "invalid instance: bad index key " + s);
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

inline SeriesGenerator generator_from(const json& j) {
    SeriesGenerator g;
    auto prof = j.value("profile", std::string("weighted_unit"));
    if (prof == "weighted_unit") g.profile = Profile::weighted_unit;
    else if (prof == "oscillating") g.profile = Profile::oscillating;
    else if (prof == "phase") g.profile = Profile::phase;
    else throw Error(ErrorKind::invalid_instance, "invalid instance: unknown profile " + prof);
    const json& mask = j.contains("mask") ? j.at("mask") : json("all");
    if (mask.is_string()) {
        auto m = mask.get<std::string>();
        if (m == "all") g.all = true;
        else if (m == "none") g.all = false;
        else throw Error(ErrorKind::invalid_instance, "invalid instance: unknown mask " + m);
    } else {
        g.all = false;
        for (auto& p : mask) g.indices.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    }
    return g;
}
inline json generator_to(const SeriesGenerator& g) {
    json j;
    j["profile"] = g.profile == Profile::weighted_unit ? "weighted_unit"
                   : g.profile == Profile::oscillating ? "oscillating"
                                                       : "phase";
    if (g.all) {
        j["mask"] = "all";
    } else if (g.indices.empty()) {
        j["mask"] = "none";
    } else {
        json m = json::array();
        for (auto& [a, b] : g.indices) m.push_back({a, b});
        j["mask"] = m;
    }
    return j;
}

} // namespace detail

inline ProblemInstance instance_from_json(const json& j) {
    try {
        ProblemInstance inst;
        inst.name = j.value("name", std::string());
        const auto& ex = j.at("exponents");
        auto& e = inst.exponents;
        e.k1 = ex.at("k1").get<int>();
        e.k2 = ex.at("k2").get<int>();
        e.D1 = ex.at("D1").get<int>();
        e.D2 = ex.at("D2").get<int>();
        if (e.D1 < 1 || e.D2 < 1) throw Error(ErrorKind::invalid_instance, "invalid instance: D1, D2 must be positive");
        e.d = detail::indexed_from(ex.at("d"), e.D1, "d");
        e.delta = detail::indexed_from(ex.at("delta"), e.D1, "delta");
        e.dt = detail::indexed_from(ex.at("dt"), e.D2, "dt");
        e.deltat = detail::indexed_from(ex.at("deltat"), e.D2, "deltat");
        e.Delta.assign(e.D1 + 1, std::vector<int>(e.D2 + 1, 0));
        for (auto& [key, val] : ex.at("Delta").items()) {
            auto [a, b] = detail::pair_key(key);
            bool inner = a >= 1 && a < e.D1 && b >= 1 && b < e.D2;
            if (inner) {
                e.Delta[a][b] = val.get<int>();
            } else if ((a == e.D1 && b == e.D2) || (a == e.D1 && b == 0) || (a == 0 && b == e.D2)) {
                std::string tag = a == 0 ? "0,D2" : b == 0 ? "D1,0" : "D1,D2";
                e.stated_top[tag] = val.get<int>();
            } else {
                throw Error(ErrorKind::invalid_instance, "invalid instance: Delta index out of range " + key);
            }
        }
        for (int l1 = 1; l1 < e.D1; ++l1)
            for (int l2 = 1; l2 < e.D2; ++l2)
                if (!ex.at("Delta").contains(std::to_string(l1) + "," + std::to_string(l2)))
                    throw Error(ErrorKind::invalid_instance, "invalid instance: missing Delta entry");

        const auto& po = j.at("polys");
        auto& P = inst.polys;
        P.Q1 = detail::poly_from(po.at("Q1"));
        P.Q2 = detail::poly_from(po.at("Q2"));
        P.R0 = detail::poly_from(po.at("R0"));
        P.RD1 = detail::poly_from(po.at("RD1"));
        P.RD2 = detail::poly_from(po.at("RD2"));
        P.P1 = detail::poly_from(po.at("P1"));
        P.P2 = detail::poly_from(po.at("P2"));
        if (po.contains("R"))
            for (auto& [key, val] : po.at("R").items()) P.R[detail::pair_key(key)] = detail::poly_from(val);

        const auto& sp = j.at("space");
        auto& s = inst.space;
        s.beta = sp.at("beta").get<double>();
        s.mu = sp.at("mu").get<double>();
        s.nu1 = sp.at("nu1").get<double>();
        s.nu2 = sp.at("nu2").get<double>();
        s.rho = sp.at("rho").get<double>();
        s.eps0 = sp.at("eps0").get<double>();

        const auto& ge = j.at("gen");
        inst.gen.K0 = ge.at("K0").get<double>();
        inst.gen.T0 = ge.at("T0").get<double>();
        inst.gen.C = detail::generator_from(ge.at("C"));
        inst.gen.F = detail::generator_from(ge.at("F"));

        if (j.contains("grid")) {
            inst.grid = ModeGrid(j["grid"].at("m_max").get<double>(), j["grid"].at("n_points").get<int>());
            inst.has_grid = true;
        }
        return inst;
    } catch (const json::exception& ex) {
        throw Error(ErrorKind::invalid_instance, std::string("invalid instance: ") + ex.what());
    }
}

inline json instance_to_json(const ProblemInstance& inst) {
    json j;
    if (!inst.name.empty()) j["name"] = inst.name;
    const auto& e = inst.exponents;
    json ex;
    ex["k1"] = e.k1;
    ex["k2"] = e.k2;
    ex["D1"] = e.D1;
    ex["D2"] = e.D2;
    ex["d"] = detail::indexed_to(e.d);
    ex["delta"] = detail::indexed_to(e.delta);
    ex["dt"] = detail::indexed_to(e.dt);
    ex["deltat"] = detail::indexed_to(e.deltat);
    json D = json::object();
    for (int l1 = 1; l1 < e.D1; ++l1)
        for (int l2 = 1; l2 < e.D2; ++l2) D[std::to_string(l1) + "," + std::to_string(l2)] = e.Delta[l1][l2];
    for (auto& [tag, v] : e.stated_top) {
        std::string key = tag == "D1,D2" ? std::to_string(e.D1) + "," + std::to_string(e.D2)
                          : tag == "D1,0" ? std::to_string(e.D1) + ",0"
                                          : "0," + std::to_string(e.D2);
        D[key] = v;
    }
    ex["Delta"] = D;
    j["exponents"] = ex;

    const auto& P = inst.polys;
    json po;
    po["Q1"] = detail::poly_to(P.Q1);
    po["Q2"] = detail::poly_to(P.Q2);
    po["R0"] = detail::poly_to(P.R0);
    po["RD1"] = detail::poly_to(P.RD1);
    po["RD2"] = detail::poly_to(P.RD2);
    po["P1"] = detail::poly_to(P.P1);
    po["P2"] = detail::poly_to(P.P2);
    json R = json::object();
    for (auto& [key, p] : P.R) R[std::to_string(key.first) + "," + std::to_string(key.second)] = detail::poly_to(p);
    po["R"] = R;
    j["polys"] = po;

    const auto& s = inst.space;
    j["space"] = {{"beta", s.beta}, {"mu", s.mu}, {"nu1", s.nu1}, {"nu2", s.nu2}, {"rho", s.rho}, {"eps0", s.eps0}};
    j["gen"] = {{"K0", inst.gen.K0},
                {"T0", inst.gen.T0},
                {"C", detail::generator_to(inst.gen.C)},
                {"F", detail::generator_to(inst.gen.F)}};
    if (inst.has_grid) j["grid"] = {{"m_max", inst.grid.m_max}, {"n_points", inst.grid.n_points}};
    return j;
}

inline ProblemInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::invalid_instance, "invalid instance: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw Error(ErrorKind::invalid_instance, std::string("invalid instance: ") + ex.what());
    }
    return instance_from_json(j);
}

inline json report_to_json(const ValidationReport& r) {
    json j;
    j["pass"] = r.pass();
    json conds = json::array();
    for (auto& c : r.conditions)
        conds.push_back({{"id", c.id}, {"description", c.description}, {"pass", c.pass}, {"detail", c.detail}});
    j["conditions"] = conds;
    json warns = json::array();
    for (auto& c : r.warnings) warns.push_back({{"id", c.id}, {"description", c.description}, {"detail", c.detail}});
    j["warnings"] = warns;
    json sec = json::array();
    for (auto& w : r.sector)
        sec.push_back({{"axis", w.j}, {"direction", w.direction}, {"aperture", w.aperture}, {"radius", w.radius},
                       {"pass", w.pass}});
    j["sectors"] = sec;
    j["min_root_radius"] = {r.min_root_radius[0], r.min_root_radius[1]};
    return j;
}

} // namespace gevrey
