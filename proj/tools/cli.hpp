#pragma once

#include "gevrey/gevrey.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace gevrey::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numeric = 3;
inline constexpr int exit_usage = 64;

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"validate", "solve",    "borel",      "fixedpoint", "covering",
                                                "sum",      "classify", "fit-gevrey", "fit-decay"};
    return names;
}

inline std::string usage() {
    std::ostringstream os;
    os << "usage: gevrey [--threads N] [--precision double|extended] <subcommand> [options]\n"
       << "subcommands:";
    for (auto& s : subcommands()) os << ' ' << s;
    os << "\nrun 'gevrey <subcommand> --help' for the options of one subcommand\n";
    return os.str();
}

inline Complex parse_complex(const std::string& s) {
    auto comma = s.find(',');
    try {
        std::size_t used = 0;
        if (comma == std::string::npos) {
            double re = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return {re, 0};
        }
        std::string a = s.substr(0, comma), b = s.substr(comma + 1);
        double re = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(s);
        double im = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(s);
        return {re, im};
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::validation, "expected RE,IM but got '" + s + "'");
    }
}

inline std::pair<int, int> parse_pair(const std::string& s) {
    auto comma = s.find(',');
    try {
        if (comma == std::string::npos) throw std::invalid_argument(s);
        return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::validation, "expected A,B but got '" + s + "'");
    }
}

/// "70deg" in degrees, "1.2rad" or a bare number in radians.
inline double parse_angle(const std::string& s) {
    auto ends = [&](const std::string& suf) {
        return s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    try {
        if (ends("deg")) return rad(std::stod(s.substr(0, s.size() - 3)));
        if (ends("rad")) return std::stod(s.substr(0, s.size() - 3));
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::validation, "expected an angle like 70deg but got '" + s + "'");
    }
}

inline nlohmann::json complex_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

/// Writes to the file at path, or to out when path is empty.
inline void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) {
        body(out);
        return;
    }
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::validation, "cannot write " + path);
    body(f);
}

inline void emit_json(const std::string& path, std::ostream& out, const nlohmann::json& j) {
    emit(path, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

/// Two-column numeric CSV; a header line is skipped when it does not parse.
inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::validation, "cannot read " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        bool ok = true;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::logic_error&) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            if (first) {
                first = false;
                continue;
            }
            throw Error(ErrorKind::validation, "non-numeric row in " + path + ": " + line);
        }
        first = false;
        rows.push_back(row);
    }
    return rows;
}

struct Options {
    std::string instance, out, in, cov;
    std::string eps = "0.1", order = "10,10", convention = "standard";
    int grid = 129;
    // fixedpoint
    std::string check_against;
    double fp_tolerance = 1e-9;
    bool contraction = false;
    // covering
    int s1 = 2, s2 = 3;
    std::string opening = "70deg", t1_dir = "0", t2_dir = "0", t_opening = "10deg";
    double eps0 = 0, t_radius = 1;
    // sum
    std::string cell = "0,0", t1 = "1,0", t2 = "1,0", z = "0,0";
    double r_cut = 0, tolerance = 1e-10, delta1 = 0.5;
    // fits
    std::string csv;
};

inline ModeGrid cli_grid(const ProblemInstance& inst, int n) {
    if (n < 3 || n % 2 == 0) throw Error(ErrorKind::validation, "--grid needs an odd node count >= 3");
    return ModeGrid(inst.default_grid().m_max, n);
}

inline RecursionOptions cli_convention(const std::string& c) {
    if (c == "standard") return {ShiftConvention::standard};
    if (c == "literal") return {ShiftConvention::literal};
    throw Error(ErrorKind::validation, "--convention must be standard or literal");
}

template <class Real>
SeriesTableT<Real> cli_coefficients(const ProblemInstance& inst, const Options& o) {
    auto [n1, n2] = parse_pair(o.order);
    return solve_recursion<Real>(inst, parse_complex(o.eps), n1, n2, cli_grid(inst, o.grid), cli_convention(o.convention));
}

template <class Real>
int run_solve(const Options& o, std::ostream& out) {
    auto inst = load_instance(o.instance);
    auto U = cli_coefficients<Real>(inst, o);
    emit(o.out, out, [&](std::ostream& os) { write_table_csv(os, U); });
    return exit_ok;
}

template <class Real>
int run_borel(const Options& o, std::ostream& out) {
    auto inst = load_instance(o.instance);
    SeriesTableT<Real> U;
    if (!o.in.empty()) {
        std::ifstream f(o.in);
        if (!f) throw Error(ErrorKind::validation, "cannot read " + o.in);
        auto t = read_table_csv(f);
        U = SeriesTableT<Real>(t.N1, t.N2, t.grid, t.eps);
        for (std::size_t i = 0; i < t.data.size(); ++i) U.data[i] = std::complex<Real>(t.data[i]);
    } else {
        U = cli_coefficients<Real>(inst, o);
    }
    auto w = borel_transform(U, inst.exponents.k1, inst.exponents.k2);
    emit(o.out, out, [&](std::ostream& os) { write_table_csv(os, w); });
    return exit_ok;
}

template <class Real>
int run_fixedpoint(const Options& o, std::ostream& out) {
    auto inst = load_instance(o.instance);
    auto [n1, n2] = parse_pair(o.order);
    Complex eps = parse_complex(o.eps);
    auto g = cli_grid(inst, o.grid);
    auto P = picard_solve<Real>(inst, eps, n1, n2, g, o.contraction);
    nlohmann::json rep{{"iterations", P.iterations}};
    if (o.contraction) rep["contraction"] = P.contraction;
    int code = exit_ok;
    if (!o.check_against.empty()) {
        if (o.check_against != "recursion") throw Error(ErrorKind::validation, "--check-against accepts only recursion");
        auto w = borel_transform(solve_recursion<Real>(inst, eps, n1, n2, g), inst.exponents.k1, inst.exponents.k2);
        double diff = entrywise_relative_difference(P.omega, w);
        bool pass = diff <= o.fp_tolerance;
        rep["check"] = {{"against", "recursion"},
                        {"entrywise_relative_difference", diff},
                        {"tolerance", o.fp_tolerance},
                        {"pass", pass}};
        if (!pass) code = exit_numeric;
    }
    if (!o.out.empty()) emit(o.out, out, [&](std::ostream& os) { write_table_csv(os, P.omega); });
    out << rep.dump(2) << '\n';
    return code;
}

inline int run_validate(const Options& o, std::ostream& out) {
    auto inst = load_instance(o.instance);
    auto rep = validate_instance(inst, cli_grid(inst, o.grid));
    emit_json(o.out, out, report_to_json(rep));
    return rep.pass() ? exit_ok : exit_validation;
}

inline int run_covering(const Options& o, std::ostream& out) {
    auto inst = load_instance(o.instance);
    double eps0 = o.eps0 > 0 ? o.eps0 : inst.space.eps0;
    Sector T1{parse_angle(o.t1_dir), parse_angle(o.t_opening), o.t_radius};
    Sector T2{parse_angle(o.t2_dir), parse_angle(o.t_opening), o.t_radius};
    auto g = cli_grid(inst, o.grid);
    auto cov = build_good_covering(inst, o.s1, o.s2, eps0, parse_angle(o.opening), T1, T2, &g);
    auto chk = covering_check(cov, rad(0.1));
    auto j = covering_to_json(cov);
    j["check"] = {{"coverage", chk.coverage},   {"no_triple", chk.no_triple},
                  {"opening", chk.opening},     {"association", chk.association},
                  {"min_cover", chk.min_cover}, {"max_cover", chk.max_cover},
                  {"problems", chk.problems},   {"pass", chk.pass()}};
    emit_json(o.out, out, j);
    return chk.pass() ? exit_ok : exit_numeric;
}

inline GoodCovering load_covering(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::validation, "cannot read " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::invalid_instance, std::string("invalid covering file: ") + e.what());
    }
    return covering_from_json(j);
}

inline int run_sum(const Options& o, std::ostream& out) {
    auto inst = load_instance(o.instance);
    auto cov = load_covering(o.cov);
    auto [p1, p2] = parse_pair(o.cell);
    const CoveringCell* cell = nullptr;
    for (auto& c : cov.cells)
        if (c.p1 == p1 && c.p2 == p2) cell = &c;
    if (!cell) throw Error(ErrorKind::validation, "no covering cell " + o.cell);
    Complex eps = parse_complex(o.eps);
    auto U = cli_coefficients<double>(inst, o);
    auto w = borel_transform(U, inst.exponents.k1, inst.exponents.k2);
    QuadratureSpec q;
    q.r_cut = o.r_cut > 0 ? o.r_cut : inst.space.rho;
    q.tolerance = o.tolerance;
    q.delta1 = o.delta1;
    auto r = evaluate_u(inst, w, *cell, cov.half_width1, cov.half_width2, parse_complex(o.t1), parse_complex(o.t2),
                        parse_complex(o.z), eps, q);
    nlohmann::json j{{"value", complex_json(r.value)},
                     {"tail_bound", r.tail_bound},
                     {"gamma1", r.gamma1},
                     {"gamma2", r.gamma2}};
    emit_json(o.out, out, j);
    return exit_ok;
}

inline int run_classify(const Options& o, std::ostream& out) {
    auto cov = load_covering(o.cov);
    auto pairs = classify_pairs(cov);
    emit(o.out, out, [&](std::ostream& os) {
        os << "a,b,p1a,p2a,p1b,p2b,class,same_d1,same_d2,identical\n";
        for (auto& p : pairs) {
            auto &x = cov.cells[p.a], &y = cov.cells[p.b];
            os << p.a << ',' << p.b << ',' << x.p1 << ',' << x.p2 << ',' << y.p1 << ',' << y.p2 << ','
               << class_name(p.cls) << ',' << p.same_d1 << ',' << p.same_d2 << ',' << p.identical << '\n';
        }
    });
    return exit_ok;
}

inline nlohmann::json fit_json(const DecayFit& f) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"k_est", num(f.k_est)}, {"M", num(f.M)},           {"K", num(f.K)},
            {"residual", num(f.residual)}, {"convergent", f.convergent}, {"non_decaying", f.non_decaying}};
}

inline int run_fit_gevrey(const Options& o, std::ostream& out) {
    std::vector<double> a;
    for (auto& r : read_numeric_csv(o.csv)) {
        if (r.empty()) continue;
        a.push_back(r.back()); // "a" or "n,a"
    }
    emit_json(o.out, out, fit_json(gevrey_fit(a)));
    return exit_ok;
}

inline int run_fit_decay(const Options& o, std::ostream& out) {
    std::vector<std::pair<double, double>> s;
    for (auto& r : read_numeric_csv(o.csv)) {
        if (r.size() < 2) throw Error(ErrorKind::validation, "fit-decay needs rows eps,diff");
        s.push_back({r[0], r[1]});
    }
    emit_json(o.out, out, fit_json(decay_fit(s)));
    return exit_ok;
}

/// Index of the subcommand token, skipping global options; -1 when there is none.
inline int find_subcommand(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--threads" || a == "--precision") {
            ++i;
            continue;
        }
        if (a.rfind("--threads=", 0) == 0 || a.rfind("--precision=", 0) == 0) continue;
        if (a == "-h" || a == "--help") return -2;
        return i;
    }
    return -1;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    int at = find_subcommand(argc, argv);
    if (at == -2) {
        out << usage();
        return exit_ok;
    }
    if (at < 0 || std::find(subcommands().begin(), subcommands().end(), argv[at]) == subcommands().end()) {
        if (at >= 0) err << "unknown subcommand '" << argv[at] << "'\n";
        err << usage();
        return exit_usage;
    }

    CLI::App app{"Gevrey series, Borel-Laplace summation and sector geometry", "gevrey"};
    app.require_subcommand(1);
    int threads = 0;
    std::string precision = "double";
    app.add_option("--threads", threads, "worker threads (default GEVREY_THREADS or 1)")->check(CLI::PositiveNumber);
    app.add_option("--precision", precision, "double or extended")->check(CLI::IsMember({"double", "extended"}));

    Options o;
    auto instance = [&](CLI::App* s) { s->add_option("--instance", o.instance, "instance JSON")->required(); };
    auto out_opt = [&](CLI::App* s) { s->add_option("--out", o.out, "output file (default stdout)"); };
    auto grid = [&](CLI::App* s) { s->add_option("--grid", o.grid, "mode grid nodes (odd)")->capture_default_str(); };
    auto series = [&](CLI::App* s) {
        s->add_option("--eps", o.eps, "epsilon as RE,IM")->capture_default_str();
        s->add_option("--order", o.order, "truncation N1,N2")->capture_default_str();
        s->add_option("--convention", o.convention, "standard or literal")->capture_default_str();
    };

    auto* validate = app.add_subcommand("validate", "check the instance hypotheses");
    instance(validate);
    out_opt(validate);
    grid(validate);

    auto* solve = app.add_subcommand("solve", "coefficients by the recursion, CSV");
    instance(solve);
    series(solve);
    grid(solve);
    out_opt(solve);

    auto* borel = app.add_subcommand("borel", "Borel transform of a coefficient table, CSV");
    instance(borel);
    series(borel);
    grid(borel);
    out_opt(borel);
    borel->add_option("--in", o.in, "coefficient CSV (default: solve first)");

    auto* fixedpoint = app.add_subcommand("fixedpoint", "Picard iteration in the Borel plane");
    instance(fixedpoint);
    series(fixedpoint);
    grid(fixedpoint);
    out_opt(fixedpoint);
    fixedpoint->add_option("--check-against", o.check_against, "recursion");
    fixedpoint->add_option("--tolerance", o.fp_tolerance, "entrywise relative tolerance")->capture_default_str();
    fixedpoint->add_flag("--contraction", o.contraction, "estimate the contraction constant");

    auto* covering = app.add_subcommand("covering", "good covering with associated directions, JSON");
    instance(covering);
    grid(covering);
    out_opt(covering);
    covering->add_option("--s1", o.s1)->capture_default_str();
    covering->add_option("--s2", o.s2)->capture_default_str();
    covering->add_option("--opening", o.opening, "sector opening, e.g. 70deg")->capture_default_str();
    covering->add_option("--eps0", o.eps0, "sector radius (default from instance)");
    covering->add_option("--t1-dir", o.t1_dir)->capture_default_str();
    covering->add_option("--t2-dir", o.t2_dir)->capture_default_str();
    covering->add_option("--t-opening", o.t_opening)->capture_default_str();
    covering->add_option("--t-radius", o.t_radius)->capture_default_str();

    auto* sum = app.add_subcommand("sum", "evaluate the solution on one covering cell, JSON");
    instance(sum);
    series(sum);
    grid(sum);
    out_opt(sum);
    sum->add_option("--cov", o.cov, "covering JSON")->required();
    sum->add_option("--cell", o.cell, "p1,p2")->capture_default_str();
    sum->add_option("--t1", o.t1)->capture_default_str();
    sum->add_option("--t2", o.t2)->capture_default_str();
    sum->add_option("--z", o.z)->capture_default_str();
    sum->add_option("--r-cut", o.r_cut, "ray cut (default rho)");
    sum->add_option("--tail-tolerance", o.tolerance)->capture_default_str();
    sum->add_option("--delta1", o.delta1)->capture_default_str();

    auto* classify = app.add_subcommand("classify", "pair classes of a covering, CSV");
    classify->add_option("--cov", o.cov, "covering JSON")->required();
    out_opt(classify);

    auto* fit_gevrey = app.add_subcommand("fit-gevrey", "Gevrey order of a norm sequence, JSON");
    fit_gevrey->add_option("--csv", o.csv, "rows a or n,a")->required();
    out_opt(fit_gevrey);

    auto* fit_decay = app.add_subcommand("fit-decay", "exponential decay level, JSON");
    fit_decay->add_option("--csv", o.csv, "rows eps,diff")->required();
    out_opt(fit_decay);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_validation;
    }

    std::size_t saved = thread_count();
    if (threads > 0) set_thread_count(static_cast<std::size_t>(threads));
    const bool ext = precision == "extended";
    int code = exit_ok;
    try {
        if (*validate) code = run_validate(o, out);
        else if (*solve) code = ext ? run_solve<long double>(o, out) : run_solve<double>(o, out);
        else if (*borel) code = ext ? run_borel<long double>(o, out) : run_borel<double>(o, out);
        else if (*fixedpoint) code = ext ? run_fixedpoint<long double>(o, out) : run_fixedpoint<double>(o, out);
        else if (*covering) code = run_covering(o, out);
        else if (*sum) code = run_sum(o, out);
        else if (*classify) code = run_classify(o, out);
        else if (*fit_gevrey) code = run_fit_gevrey(o, out);
        else if (*fit_decay) code = run_fit_decay(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        code = is_numeric_failure(e.kind()) ? exit_numeric : exit_validation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        code = exit_numeric;
    }
    set_thread_count(saved);
    return code;
}

} // namespace gevrey::cli
