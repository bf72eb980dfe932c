#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dual.hpp"
#include "numerics.hpp"

namespace plastsym {

template <class T>
using Vec6 = std::array<T, 6>;
using Point6 = Vec6<double>;

enum Coord : int { X = 0, Y = 1, SIG = 2, TH = 3, U = 4, V = 5 };

struct Generator {
    std::string name;
    std::function<Vec6<double>(const Vec6<double>&)> f0;
    std::function<Vec6<D1>(const Vec6<D1>&)> f1;
    std::function<Vec6<D2>(const Vec6<D2>&)> f2;

    Vec6<double> operator()(const Point6& p) const { return f0(p); }
    Vec6<D1> operator()(const Vec6<D1>& p) const { return f1(p); }
    Vec6<D2> operator()(const Vec6<D2>& p) const {
        if (!f2) throw std::logic_error("generator " + name + ": no second-order evaluation");
        return f2(p);
    }
};

// Wraps a generic lambda `auto(const auto& p) -> Vec6<scalar>` for every scalar level.
template <class F>
Generator make_generator(std::string name, F fn) {
    return Generator{std::move(name), fn, fn, fn};
}

namespace detail {
template <class S>
Vec6<S> zeros6() {
    return {S(0.0), S(0.0), S(0.0), S(0.0), S(0.0), S(0.0)};
}

// The printed coefficient of d/dx in K is +x cos(2 theta)/2; `sign_kx` = +1
// reproduces that, -1 gives the symmetry actually admitted by the system.
template <class S>
Vec6<S> k_field(const Vec6<S>& p, double sign_kx) {
    using std::sin, std::cos;
    const S& x = p[X]; const S& y = p[Y]; const S& s = p[SIG]; const S& t = p[TH];
    const S& u = p[U]; const S& v = p[V];
    S c2 = cos(2.0 * t), s2 = sin(2.0 * t);
    return {sign_kx * 0.5 * x * c2 - y * (s + 0.5 * s2),
            (s - 0.5 * s2) * x + 0.5 * y * c2,
            t,
            s,
            0.5 * u * c2 + v * (0.5 * s2 - s),
            (s + 0.5 * s2) * u - 0.5 * v * c2};
}
}  // namespace detail

inline const std::vector<std::string>& generator_names() {
    static const std::vector<std::string> n = {"P1", "P2", "P3", "P4", "P5", "D1", "D2", "L",
                                               "B1", "B2", "B3", "B4", "B5", "B6", "K"};
    return n;
}

inline const std::map<std::string, Generator>& generator_table() {
    static const std::map<std::string, Generator> table = [] {
        std::map<std::string, Generator> m;
        auto add = [&](const std::string& n, auto fn) { m.emplace(n, make_generator(n, fn)); };
        add("P1", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; auto r = detail::zeros6<S>(); r[X] = S(1.0); return r; });
        add("P2", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; auto r = detail::zeros6<S>(); r[Y] = S(1.0); return r; });
        add("P3", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; auto r = detail::zeros6<S>(); r[U] = S(1.0); return r; });
        add("P4", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; auto r = detail::zeros6<S>(); r[V] = S(1.0); return r; });
        add("P5", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; auto r = detail::zeros6<S>(); r[SIG] = S(1.0); return r; });
        add("D1", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; return Vec6<S>{p[X], p[Y], S(0.0), S(0.0), p[U], p[V]}; });
        add("D2", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; return Vec6<S>{p[X], p[Y], S(0.0), S(0.0), -p[U], -p[V]}; });
        add("L", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; return Vec6<S>{-p[Y], p[X], S(0.0), S(1.0), -p[V], p[U]}; });
        add("B1", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; return Vec6<S>{-p[V], p[U], S(0.0), S(0.0), S(0.0), S(0.0)}; });
        add("B2", [](const auto& p) { using S = std::decay_t<decltype(p[0])>; return Vec6<S>{S(0.0), S(0.0), S(0.0), S(0.0), p[Y], -p[X]}; });
        add("B3", [](const auto& p) {
            using S = std::decay_t<decltype(p[0])>; using std::sin, std::cos;
            return Vec6<S>{p[SIG] + 0.5 * sin(2.0 * p[TH]), -0.5 * cos(2.0 * p[TH]), S(0.0), S(0.0), S(0.0), S(0.0)};
        });
        add("B4", [](const auto& p) {
            using S = std::decay_t<decltype(p[0])>; using std::sin, std::cos;
            return Vec6<S>{-0.5 * cos(2.0 * p[TH]), p[SIG] - 0.5 * sin(2.0 * p[TH]), S(0.0), S(0.0), S(0.0), S(0.0)};
        });
        add("B5", [](const auto& p) {
            using S = std::decay_t<decltype(p[0])>; using std::sin, std::cos;
            return Vec6<S>{S(0.0), S(0.0), S(0.0), S(0.0), p[SIG] - 0.5 * sin(2.0 * p[TH]), 0.5 * cos(2.0 * p[TH])};
        });
        add("B6", [](const auto& p) {
            using S = std::decay_t<decltype(p[0])>; using std::sin, std::cos;
            return Vec6<S>{S(0.0), S(0.0), S(0.0), S(0.0), 0.5 * cos(2.0 * p[TH]), p[SIG] + 0.5 * sin(2.0 * p[TH])};
        });
        add("K", [](const auto& p) { return detail::k_field(p, -1.0); });
        add("K_as_printed", [](const auto& p) { return detail::k_field(p, +1.0); });
        return m;
    }();
    return table;
}

inline const Generator& generator(const std::string& name) {
    const auto& t = generator_table();
    auto it = t.find(name);
    if (it == t.end()) throw std::invalid_argument("unknown generator: " + name);
    return it->second;
}

inline Point6 eval_generator(const Generator& g, const Point6& p) { return g(p); }

// Constant-coefficient linear combination.
inline Generator combine(const std::vector<std::pair<double, Generator>>& terms, std::string name = "combo") {
    auto parts = terms;
    auto fn = [parts](const auto& p) {
        using S = std::decay_t<decltype(p[0])>;
        auto r = detail::zeros6<S>();
        for (const auto& [c, g] : parts) {
            if (c == 0.0) continue;
            auto v = g(p);
            for (int i = 0; i < 6; ++i) r[i] += c * v[i];
        }
        return r;
    };
    return Generator{std::move(name), fn, fn, fn};
}

// (g1.grad) g2 - (g2.grad) g1 at p.
inline Point6 lie_bracket(const Generator& g1, const Generator& g2, const Point6& p) {
    auto a = g1(p), b = g2(p);
    Vec6<D1> pa, pb;
    for (int i = 0; i < 6; ++i) {
        pa[i] = D1{p[i], a[i]};
        pb[i] = D1{p[i], b[i]};
    }
    auto db = g2(pa), da = g1(pb);
    Point6 r;
    for (int i = 0; i < 6; ++i) r[i] = db[i].d - da[i].d;
    return r;
}

// Bracket as a vector field, evaluable at double and first-order dual points.
inline Generator bracket_field(const Generator& g1, const Generator& g2) {
    Generator out;
    out.name = "[" + g1.name + "," + g2.name + "]";
    out.f0 = [g1, g2](const Point6& p) { return lie_bracket(g1, g2, p); };
    out.f1 = [g1, g2](const Vec6<D1>& q) {
        auto a = g1(q), b = g2(q);
        Vec6<D2> ra, rb;
        for (int i = 0; i < 6; ++i) {
            ra[i] = D2{q[i], a[i]};
            rb[i] = D2{q[i], b[i]};
        }
        auto db = g2(ra), da = g1(rb);
        Vec6<D1> r;
        for (int i = 0; i < 6; ++i) r[i] = db[i].d - da[i].d;
        return r;
    };
    return out;
}

// ---------------------------------------------------------------- sampling

// Quasi-random points in [-2,2]^6 away from u = v = 0 (where B1 degenerates).
inline std::vector<Point6> sample_points(int n, std::uint64_t seed) {
    QuasiRandom qr(6, seed);
    std::vector<Point6> pts;
    while (static_cast<int>(pts.size()) < n) {
        auto q = qr.next_in(std::vector<double>(6, -2.0), std::vector<double>(6, 2.0));
        if (std::abs(q[U]) + std::abs(q[V]) < 0.1) continue;
        pts.push_back({q[0], q[1], q[2], q[3], q[4], q[5]});
    }
    return pts;
}

struct ConditioningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Expansion {
    std::vector<double> coefficients;
    double residual = 0.0;
};

// Least-squares constant coefficients c with v_k ~ sum c_i basis_i(p_k).
inline Expansion expand_in_basis(const std::vector<std::pair<Point6, Point6>>& samples,
                                 const std::vector<Generator>& basis) {
    const int n = static_cast<int>(basis.size());
    const int m = static_cast<int>(samples.size());
    if (m * 6 < 2 * n) throw ConditioningError("expand_in_basis: too few samples");
    Eigen::MatrixXd A(6 * m, n);
    Eigen::VectorXd b(6 * m);
    for (int k = 0; k < m; ++k) {
        for (int i = 0; i < n; ++i) {
            auto g = basis[i](samples[k].first);
            for (int r = 0; r < 6; ++r) A(6 * k + r, i) = g[r];
        }
        for (int r = 0; r < 6; ++r) b(6 * k + r) = samples[k].second[r];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < n) throw ConditioningError("expand_in_basis: rank-deficient design matrix");
    Eigen::VectorXd c = qr.solve(b);
    Eigen::VectorXd mis = A * c - b;
    Expansion e;
    e.coefficients.assign(c.data(), c.data() + n);
    for (int k = 0; k < m; ++k) e.residual = std::max(e.residual, mis.segment(6 * k, 6).norm());
    return e;
}

// ---------------------------------------------------------------- structure tables

// Integer combination of basis names, keyed by canonical generator name.
using IntCombo = std::map<std::string, long long>;

inline IntCombo add_scaled(IntCombo a, const IntCombo& b, long long s) {
    for (const auto& [k, v] : b) {
        a[k] += s * v;
        if (a[k] == 0) a.erase(k);
    }
    return a;
}

// Symbol aliases found in the printed tables: P_x, P_y, P_u, P_v.
inline const std::map<std::string, std::string>& symbol_aliases() {
    static const std::map<std::string, std::string> m = {{"Px", "P1"}, {"Py", "P2"}, {"Pu", "P3"}, {"Pv", "P4"}};
    return m;
}

struct ParsedSymbol {
    std::string name;
    bool aliased = false;
};

inline ParsedSymbol canonical_symbol(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
    auto it = symbol_aliases().find(s);
    if (it != symbol_aliases().end()) return {it->second, true};
    const auto& n = generator_names();
    if (std::find(n.begin(), n.end(), s) == n.end()) throw std::invalid_argument("unknown generator symbol: " + s);
    return {s, false};
}

struct StructureTable {
    std::string name;
    std::vector<std::string> basis;
    std::vector<std::vector<IntCombo>> c;
    std::vector<std::string> aliased_cells;  // "row,col: symbol" for alias hits

    int index(const std::string& g) const {
        auto it = std::find(basis.begin(), basis.end(), g);
        if (it == basis.end()) throw std::invalid_argument("not in table basis: " + g);
        return static_cast<int>(it - basis.begin());
    }
};

// Cell grammar: "0" or signed terms like "2B_1", "-D_2", "-P_y".
inline IntCombo parse_cell(const std::string& cell, bool* aliased = nullptr) {
    IntCombo out;
    std::string s;
    for (char ch : cell)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s == "0" || s.empty()) return out;
    static const std::regex term(R"(([+-]?)(\d*)([A-Za-z]+_?[0-9a-z]*))");
    auto begin = std::sregex_iterator(s.begin(), s.end(), term);
    std::size_t consumed = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        if (static_cast<std::size_t>(m.position()) != consumed) throw std::invalid_argument("bad table cell: " + cell);
        consumed += m.length();
        long long coef = m[2].str().empty() ? 1 : std::stoll(m[2].str());
        if (m[1].str() == "-") coef = -coef;
        auto sym = canonical_symbol(m[3].str());
        if (sym.aliased && aliased) *aliased = true;
        out = add_scaled(out, IntCombo{{sym.name, 1}}, coef);
    }
    if (consumed != s.size()) throw std::invalid_argument("bad table cell: " + cell);
    return out;
}

inline StructureTable make_table(std::string name, const std::vector<std::string>& header,
                                 const std::vector<std::vector<std::string>>& rows) {
    StructureTable t;
    t.name = std::move(name);
    for (const auto& h : header) t.basis.push_back(canonical_symbol(h).name);
    const std::size_t n = t.basis.size();
    if (rows.size() != n) throw std::invalid_argument("table: row count mismatch");
    t.c.assign(n, std::vector<IntCombo>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw std::invalid_argument("table: column count mismatch");
        for (std::size_t j = 0; j < n; ++j) {
            bool al = false;
            t.c[i][j] = parse_cell(rows[i][j], &al);
            if (al) t.aliased_cells.push_back(t.basis[i] + "," + t.basis[j] + ": " + rows[i][j]);
        }
    }
    return t;
}

// Commutation relations as printed (rows/columns in printed order).
inline StructureTable table_L() {
    static const std::vector<std::string> h = {"B_1", "D_2", "B_2", "D_1", "L", "P_5", "B_3",
                                               "B_4", "B_5", "B_6", "P_1", "P_2", "P_3", "P_4"};
    static const std::vector<std::vector<std::string>> r = {
        {"0", "2B_1", "-D_2", "0", "0", "0", "0", "0", "-B_4", "B_3", "0", "0", "-P_2", "P_1"},
        {"-2B_1", "0", "2B_2", "0", "0", "0", "-B_3", "-B_4", "B_5", "B_6", "-P_1", "-P_y", "P_3", "P_4"},
        {"D_2", "-2B_2", "0", "0", "0", "0", "B_6", "-B_5", "0", "0", "P_4", "-P_3", "0", "0"},
        {"0", "0", "0", "0", "0", "0", "-B_3", "-B_4", "-B_5", "-B_6", "-P_1", "-P_2", "-P_3", "-P_4"},
        {"0", "0", "0", "0", "0", "0", "-B_4", "B_3", "-B_6", "B_5", "-P_2", "P_1", "-P_4", "P_3"},
        {"0", "0", "0", "0", "0", "0", "P_1", "P_2", "P_3", "P_4", "0", "0", "0", "0"},
        {"0", "B_3", "-B_6", "B_3", "B_4", "-P_1", "0", "0", "0", "0", "0", "0", "0", "0"},
        {"0", "B_4", "B_5", "B_4", "-B_3", "-P_2", "0", "0", "0", "0", "0", "0", "0", "0"},
        {"B_4", "-B_5", "0", "B_5", "B_6", "-P_3", "0", "0", "0", "0", "0", "0", "0", "0"},
        {"-B_3", "-B_6", "0", "B_6", "-B_5", "-P_4", "0", "0", "0", "0", "0", "0", "0", "0"},
        {"0", "P_1", "-P_4", "P_1", "P_2", "0", "0", "0", "0", "0", "0", "0", "0", "0"},
        {"0", "P_2", "P_3", "P_2", "-P_1", "0", "0", "0", "0", "0", "0", "0", "0", "0"},
        {"P_2", "-P_3", "0", "P_3", "P_4", "0", "0", "0", "0", "0", "0", "0", "0", "0"},
        {"-P_1", "-P_4", "0", "P_4", "-P_3", "0", "0", "0", "0", "0", "0", "0", "0", "0"},
    };
    return make_table("L", h, r);
}

inline StructureTable table_S() {
    static const std::vector<std::string> h = {"B_1", "D_2", "B_2", "K", "L", "P_5", "D_1"};
    static const std::vector<std::vector<std::string>> r = {
        {"0", "2B_1", "-D_2", "0", "0", "0", "0"},
        {"-2B_1", "0", "2B_2", "0", "0", "0", "0"},
        {"D_2", "-2B_2", "0", "0", "0", "0", "0"},
        {"0", "0", "0", "0", "-P_5", "-L", "0"},
        {"0", "0", "0", "P_5", "0", "0", "0"},
        {"0", "0", "0", "L", "0", "0", "0"},
        {"0", "0", "0", "0", "0", "0", "0"},
    };
    return make_table("S", h, r);
}

struct CellReport {
    std::string row, col;
    double coef_error = 0.0;
    double residual = 0.0;
    bool pass = false;
};

struct TableReport {
    std::string table;
    std::vector<CellReport> cells;
    int failures = 0;
    double max_coef_error = 0.0;
    double max_residual = 0.0;
    bool pass() const { return failures == 0; }
};

// `basis` generators are looked up by table basis name unless overridden
// (used to swap in K_as_printed).
inline TableReport verify_structure_table(const StructureTable& t, const std::vector<Generator>& basis, int n_points,
                                          double tol, std::uint64_t seed = 42) {
    if (basis.size() != t.basis.size()) throw std::invalid_argument("basis does not match table order");
    auto pts = sample_points(n_points, seed);
    TableReport rep;
    rep.table = t.name;
    const std::size_t n = t.basis.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<std::pair<Point6, Point6>> samples;
            samples.reserve(pts.size());
            for (const auto& p : pts) samples.push_back({p, lie_bracket(basis[i], basis[j], p)});
            CellReport cr{t.basis[i], t.basis[j]};
            auto e = expand_in_basis(samples, basis);
            for (std::size_t k = 0; k < n; ++k) {
                auto it = t.c[i][j].find(t.basis[k]);
                double expect = it == t.c[i][j].end() ? 0.0 : static_cast<double>(it->second);
                cr.coef_error = std::max(cr.coef_error, std::abs(e.coefficients[k] - expect));
            }
            cr.residual = e.residual;
            cr.pass = cr.coef_error < tol && cr.residual < tol;
            rep.max_coef_error = std::max(rep.max_coef_error, cr.coef_error);
            rep.max_residual = std::max(rep.max_residual, cr.residual);
            if (!cr.pass) ++rep.failures;
            rep.cells.push_back(cr);
        }
    }
    return rep;
}

inline std::vector<Generator> table_generators(const StructureTable& t) {
    std::vector<Generator> g;
    for (const auto& n : t.basis) g.push_back(generator(n));
    return g;
}

// Bilinear bracket of integer combinations through the table.
inline IntCombo table_bracket(const StructureTable& t, const IntCombo& a, const IntCombo& b) {
    IntCombo out;
    for (const auto& [ga, ca] : a)
        for (const auto& [gb, cb] : b) out = add_scaled(out, t.c[t.index(ga)][t.index(gb)], ca * cb);
    return out;
}

struct JacobiReport {
    int triples = 0;
    int failures = 0;
    std::vector<std::string> failed;
    bool pass() const { return failures == 0; }
};

inline JacobiReport jacobi_check(const StructureTable& t) {
    JacobiReport r;
    const std::size_t n = t.basis.size();
    auto unit = [&](std::size_t i) { return IntCombo{{t.basis[i], 1}}; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                ++r.triples;
                IntCombo s = table_bracket(t, unit(i), t.c[j][k]);
                s = add_scaled(s, table_bracket(t, unit(j), t.c[k][i]), 1);
                s = add_scaled(s, table_bracket(t, unit(k), t.c[i][j]), 1);
                if (!s.empty()) {
                    ++r.failures;
                    r.failed.push_back(t.basis[i] + "," + t.basis[j] + "," + t.basis[k]);
                }
            }
    return r;
}

// Antisymmetry of the integer table.
inline int antisymmetry_violations(const StructureTable& t) {
    int bad = 0;
    for (std::size_t i = 0; i < t.basis.size(); ++i)
        for (std::size_t j = 0; j < t.basis.size(); ++j)
            if (!add_scaled(t.c[i][j], t.c[j][i], 1).empty()) ++bad;
    return bad;
}

// ---------------------------------------------------------------- combos and automorphisms

struct Term {
    double coef = 1.0;
    std::vector<std::string> params;  // multiplied into coef after substitution
    std::string gen;
};

struct GeneratorCombo {
    std::vector<Term> terms;

    std::vector<std::pair<double, std::string>> instantiate(const std::map<std::string, double>& env) const {
        std::vector<std::pair<double, std::string>> out;
        for (const auto& t : terms) {
            double c = t.coef;
            for (const auto& p : t.params) {
                auto it = env.find(p);
                if (it == env.end()) throw std::invalid_argument("unbound parameter: " + p);
                c *= it->second;
            }
            out.push_back({c, t.gen});
        }
        return out;
    }

    Generator field(const std::map<std::string, double>& env, const std::string& name = "combo") const {
        std::vector<std::pair<double, Generator>> g;
        for (const auto& [c, n] : instantiate(env)) g.push_back({c, generator(n)});
        return combine(g, name);
    }
};

enum class Automorphism { R1, R2 };

inline int automorphism_sign(Automorphism which, const std::string& g) {
    static const std::set<std::string> r1 = {"B1", "B2", "B3", "B4", "P1", "P2"};
    static const std::set<std::string> r2 = {"B1", "B2", "B5", "B6", "P3", "P4"};
    const auto& s = which == Automorphism::R1 ? r1 : r2;
    return s.count(g) ? -1 : 1;
}

inline GeneratorCombo discrete_automorphism(Automorphism which, GeneratorCombo g) {
    for (auto& t : g.terms) t.coef *= automorphism_sign(which, t.gen);
    return g;
}

inline IntCombo discrete_automorphism(Automorphism which, IntCombo g) {
    for (auto& [n, c] : g) c *= automorphism_sign(which, n);
    return g;
}

struct AutomorphismReport {
    int cells = 0;
    int failures = 0;
    bool pass() const { return failures == 0; }
};

// R([Xi,Xj]) must equal [R Xi, R Xj] for every table cell; exact integers.
inline AutomorphismReport verify_automorphism(Automorphism which, const StructureTable& t) {
    AutomorphismReport r;
    const std::size_t n = t.basis.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            ++r.cells;
            long long si = automorphism_sign(which, t.basis[i]), sj = automorphism_sign(which, t.basis[j]);
            IntCombo lhs = discrete_automorphism(which, t.c[i][j]);
            IntCombo rhs = add_scaled({}, t.c[i][j], si * sj);
            if (lhs != rhs) ++r.failures;
        }
    return r;
}

// ---------------------------------------------------------------- infinite families

enum class Family { X1, X2 };

// Coefficient function of (sigma, theta); dual inputs give gradients.
using SigmaThetaFn = std::function<D1(const D1&, const D1&)>;

// Max residual of the two constraint PDEs over an n x n grid of (sigma, theta).
inline double verify_infinite_family(Family which, const SigmaThetaFn& f1, const SigmaThetaFn& f2, int n = 20) {
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double s = -2.0 + 4.0 * a / (n - 1);
            double t = -std::numbers::pi + 2.0 * std::numbers::pi * b / (n - 1);
            D1 ss{s, 1.0}, st{t, 0.0}, ts{s, 0.0}, tt{t, 1.0};
            double f1s = f1(ss, st).d, f1t = f1(ts, tt).d;
            double f2s = f2(ss, st).d, f2t = f2(ts, tt).d;
            double c = std::cos(2 * t), sn = std::sin(2 * t);
            double r1, r2;
            if (which == Family::X1) {
                r1 = f1s - (c * f1t + sn * f2t);
                r2 = f1t - (c * f1s + sn * f2s);
            } else {
                r1 = f1s + (c * f1t + sn * f2t);
                r2 = f1t + (c * f1s + sn * f2s);
            }
            worst = std::max({worst, std::abs(r1), std::abs(r2)});
        }
    return worst;
}

// Generator of the X1 (or X2) family from its two coefficient functions.
inline Generator make_family_generator(Family which, const SigmaThetaFn& f1, const SigmaThetaFn& f2,
                                       std::function<D2(const D2&, const D2&)> f1_2 = nullptr,
                                       std::function<D2(const D2&, const D2&)> f2_2 = nullptr) {
    const int i = which == Family::X1 ? X : U;
    Generator g;
    g.name = which == Family::X1 ? "X1" : "X2";
    g.f0 = [=](const Point6& p) {
        Point6 r{};
        r[i] = f1(D1{p[SIG], 0.0}, D1{p[TH], 0.0}).v;
        r[i + 1] = f2(D1{p[SIG], 0.0}, D1{p[TH], 0.0}).v;
        return r;
    };
    g.f1 = [=](const Vec6<D1>& p) {
        auto r = detail::zeros6<D1>();
        // chain rule through sigma and theta
        D1 a{p[SIG].v, 1.0}, b{p[TH].v, 0.0}, c{p[SIG].v, 0.0}, d{p[TH].v, 1.0};
        D1 fa = f1(a, b), fb = f1(c, d), ga = f2(a, b), gb = f2(c, d);
        r[i] = D1{fa.v, fa.d * p[SIG].d + fb.d * p[TH].d};
        r[i + 1] = D1{ga.v, ga.d * p[SIG].d + gb.d * p[TH].d};
        return r;
    };
    if (f1_2 && f2_2) {
        g.f2 = [=](const Vec6<D2>& p) {
            auto r = detail::zeros6<D2>();
            r[i] = f1_2(p[SIG], p[TH]);
            r[i + 1] = f2_2(p[SIG], p[TH]);
            return r;
        };
    }
    return g;
}

// ---------------------------------------------------------------- flows

namespace detail {
template <class S>
Vec6<S> flow_closed(const std::string& n, Vec6<S> p, double t, bool& done) {
    using std::sin, std::cos, std::exp;
    done = true;
    if (n == "P1") { p[X] += t; return p; }
    if (n == "P2") { p[Y] += t; return p; }
    if (n == "P3") { p[U] += t; return p; }
    if (n == "P4") { p[V] += t; return p; }
    if (n == "P5") { p[SIG] += t; return p; }
    if (n == "D1" || n == "D2") {
        const double e = std::exp(t), f = n == "D1" ? std::exp(t) : std::exp(-t);
        p[X] = e * p[X]; p[Y] = e * p[Y]; p[U] = f * p[U]; p[V] = f * p[V];
        return p;
    }
    if (n == "L") {
        const double c = std::cos(t), s = std::sin(t);
        S x = p[X], y = p[Y], u = p[U], v = p[V];
        p[X] = c * x - s * y; p[Y] = s * x + c * y;
        p[U] = c * u - s * v; p[V] = s * u + c * v;
        p[TH] += t;
        return p;
    }
    if (n == "B1") { S u = p[U], v = p[V]; p[X] -= t * v; p[Y] += t * u; return p; }
    if (n == "B2") { S x = p[X], y = p[Y]; p[U] += t * y; p[V] -= t * x; return p; }
    if (n == "B3" || n == "B4" || n == "B5" || n == "B6") {
        // sigma and theta are invariant, so the coefficients are constant along the orbit
        auto c = generator(n)(p);
        for (int i = 0; i < 6; ++i) p[i] += t * c[i];
        return p;
    }
    done = false;
    return p;
}
}  // namespace detail

// exp(t g) p. Closed forms where available, Dormand-Prince otherwise.
template <class S>
Vec6<S> flow_t(const Generator& g, const Vec6<S>& p, double t) {
    if (t == 0.0) return p;
    bool done = false;
    auto r = detail::flow_closed(g.name, p, t, done);
    if (done) return r;
    auto rhs = [&](const Vec6<S>& q) { return g(q); };
    return dopri5<S, 6>(rhs, p, t);
}

inline Point6 flow(const Generator& g, const Point6& p, double t) { return flow_t<double>(g, p, t); }

// d flow / d p, column by column with dual seeds.
inline Eigen::Matrix<double, 6, 6> flow_jacobian(const Generator& g, const Point6& p, double t) {
    Eigen::Matrix<double, 6, 6> J;
    for (int c = 0; c < 6; ++c) {
        Vec6<D1> q;
        for (int i = 0; i < 6; ++i) q[i] = D1{p[i], i == c ? 1.0 : 0.0};
        auto r = flow_t<D1>(g, q, t);
        for (int i = 0; i < 6; ++i) J(i, c) = r[i].d;
    }
    return J;
}

// ---------------------------------------------------------------- catalog

enum class ParamDomain { pm1, real, real_nonzero, pos };

struct CatalogParseError : std::runtime_error {
    int line;
    CatalogParseError(const std::string& what, int l)
        : std::runtime_error("line " + std::to_string(l) + ": " + what), line(l) {}
};

struct SubalgebraEntry {
    std::string id;
    std::vector<GeneratorCombo> basis;
    std::vector<std::pair<std::string, ParamDomain>> params;
    int line = 0;
    bool uses_alias = false;
};

inline ParamDomain parse_domain(const std::string& s, int line) {
    if (s == "pm1") return ParamDomain::pm1;
    if (s == "real") return ParamDomain::real;
    if (s == "real_nonzero") return ParamDomain::real_nonzero;
    if (s == "pos") return ParamDomain::pos;
    throw CatalogParseError("malformed parameter domain '" + s + "'", line);
}

inline std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline GeneratorCombo parse_combo(const std::string& text, int line, const std::set<std::string>& params,
                                  bool* aliased) {
    GeneratorCombo g;
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) throw CatalogParseError("empty combination", line);
    std::size_t i = 0;
    while (i < s.size()) {
        double sign = 1.0;
        if (s[i] == '+' || s[i] == '-') {
            if (s[i] == '-') sign = -1.0;
            ++i;
        } else if (i != 0) {
            throw CatalogParseError("expected + or - in '" + text + "'", line);
        }
        std::size_t j = i;
        while (j < s.size() && s[j] != '+' && s[j] != '-') ++j;
        std::string body = s.substr(i, j - i);
        i = j;
        std::vector<std::string> fac;
        std::stringstream ss(body);
        std::string f;
        while (std::getline(ss, f, '*')) fac.push_back(f);
        if (fac.empty() || fac.back().empty()) throw CatalogParseError("empty term in '" + text + "'", line);
        Term t;
        t.coef = sign;
        try {
            auto sym = canonical_symbol(fac.back());
            t.gen = sym.name;
            if (sym.aliased && aliased) *aliased = true;
        } catch (const std::invalid_argument&) {
            throw CatalogParseError("unknown generator symbol '" + fac.back() + "'", line);
        }
        for (std::size_t k = 0; k + 1 < fac.size(); ++k) {
            const auto& q = fac[k];
            if (!q.empty() && (std::isdigit(static_cast<unsigned char>(q[0])) || q[0] == '.')) {
                t.coef *= std::stod(q);
            } else if (params.count(q)) {
                t.params.push_back(q);
            } else {
                throw CatalogParseError("undeclared parameter '" + q + "'", line);
            }
        }
        g.terms.push_back(t);
    }
    return g;
}

inline std::vector<SubalgebraEntry> parse_catalog(const std::string& text) {
    std::vector<SubalgebraEntry> out;
    std::stringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) throw CatalogParseError("missing '='", line);
        SubalgebraEntry e;
        e.id = trim(s.substr(0, eq));
        e.line = line;
        std::string rest = s.substr(eq + 1);
        auto bar = rest.find('|');
        std::string body = trim(rest.substr(0, bar));
        std::set<std::string> names;
        if (bar != std::string::npos) {
            std::stringstream ps(rest.substr(bar + 1));
            std::string item;
            while (std::getline(ps, item, ',')) {
                item = trim(item);
                auto colon = item.find(':');
                if (colon == std::string::npos) throw CatalogParseError("malformed parameter '" + item + "'", line);
                std::string pn = trim(item.substr(0, colon));
                e.params.push_back({pn, parse_domain(trim(item.substr(colon + 1)), line)});
                names.insert(pn);
            }
        }
        if (body.size() < 2 || body.front() != '{' || body.back() != '}')
            throw CatalogParseError("basis must be enclosed in braces", line);
        body = body.substr(1, body.size() - 2);
        std::stringstream bs(body);
        std::string combo;
        while (std::getline(bs, combo, ';')) e.basis.push_back(parse_combo(combo, line, names, &e.uses_alias));
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<SubalgebraEntry> load_catalog(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open catalog " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_catalog(ss.str());
}

inline std::vector<double> domain_samples(ParamDomain d) {
    switch (d) {
        case ParamDomain::pm1: return {-1.0, 1.0};
        case ParamDomain::real_nonzero: return {-1.3, 0.7, 2.1};
        case ParamDomain::real: return {-0.9, 0.0, 1.1};
        case ParamDomain::pos: return {0.5, 2.0, 3.7};
    }
    return {};
}

// Cartesian product of the per-domain sample values (every row here has at most a few hundred).
inline std::vector<std::map<std::string, double>> parameter_draws(const SubalgebraEntry& e) {
    std::vector<std::map<std::string, double>> draws{{}};
    for (const auto& [name, dom] : e.params) {
        std::vector<std::map<std::string, double>> next;
        for (const auto& d : draws)
            for (double v : domain_samples(dom)) {
                auto m = d;
                m[name] = v;
                next.push_back(m);
            }
        draws = std::move(next);
    }
    return draws;
}

struct ClosureReport {
    std::string id;
    int draws = 0;
    int failed_draws = 0;
    double max_residual = 0.0;
    std::string first_failure;
    bool pass() const { return failed_draws == 0; }
};

inline ClosureReport verify_subalgebra_closure(const SubalgebraEntry& e, int n_points = 40, double tol = 1e-8,
                                               std::uint64_t seed = 42) {
    ClosureReport r;
    r.id = e.id;
    auto pts = sample_points(n_points, seed);
    for (const auto& env : parameter_draws(e)) {
        ++r.draws;
        std::vector<Generator> basis;
        for (const auto& c : e.basis) basis.push_back(c.field(env));
        bool ok = true;
        std::string why;
        try {
            // every pairwise bracket must stay in the span
            std::vector<std::pair<Point6, Point6>> probe;
            for (std::size_t a = 0; a < basis.size() && ok; ++a)
                for (std::size_t b = a + 1; b < basis.size() && ok; ++b) {
                    probe.clear();
                    for (const auto& p : pts) probe.push_back({p, lie_bracket(basis[a], basis[b], p)});
                    auto ex = expand_in_basis(probe, basis);
                    r.max_residual = std::max(r.max_residual, ex.residual);
                    if (!(ex.residual < tol)) {
                        ok = false;
                        why = "bracket of basis " + std::to_string(a + 1) + "," + std::to_string(b + 1) +
                              " leaves the span (residual " + std::to_string(ex.residual) + ")";
                    }
                }
            if (basis.size() == 1) {
                std::vector<std::pair<Point6, Point6>> s;
                for (const auto& p : pts) s.push_back({p, basis[0](p)});
                expand_in_basis(s, basis);  // rank check: nonzero element
            }
        } catch (const ConditioningError&) {
            ok = false;
            why = "basis is rank deficient";
        }
        if (!ok) {
            ++r.failed_draws;
            if (r.first_failure.empty()) {
                std::string pv;
                for (const auto& [k, v] : env) pv += k + "=" + std::to_string(v) + " ";
                r.first_failure = why + (pv.empty() ? "" : " at " + pv);
            }
        }
    }
    return r;
}

}  // namespace plastsym
