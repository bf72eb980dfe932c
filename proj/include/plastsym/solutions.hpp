#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <memory>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "callables.hpp"
#include "dual.hpp"
#include "fieldcore.hpp"
#include "numerics.hpp"
#include "similarity.hpp"

namespace plastsym {

// Field values (sigma, theta, u, v) at scalar level S.
template <class S>
using State4 = std::array<S, 4>;

enum class Variant { Corrected, AsPrinted };

struct SampleBox {
    double x_lo, x_hi, y_lo, y_hi;
};

struct Solution {
    std::string family;
    Variant variant = Variant::Corrected;
    std::map<std::string, double> params;
    std::map<std::string, std::string> functions;  // callable specs, for reports
    std::function<State4<double>(double, double)> f0;
    std::function<State4<D1>(const D1&, const D1&)> f1;
    std::function<State4<D2>(const D2&, const D2&)> f2;
    std::function<bool(double, double)> domain;
    std::string singular_sets;
    // Velocity-only domain (flow-line tracing); defaults to `domain`.
    std::function<bool(double, double)> velocity_domain;
    SampleBox box{-2, 2, -2, 2};
    bool quadrature_grade = false;

    double tolerance() const { return quadrature_grade ? 1e-6 : 1e-8; }

    bool contains(double x, double y) const {
        if (!std::isfinite(x) || !std::isfinite(y)) return false;
        try {
            return domain(x, y);
        } catch (const std::exception&) {
            return false;
        }
    }
    bool velocity_contains(double x, double y) const {
        if (!velocity_domain) return contains(x, y);
        if (!std::isfinite(x) || !std::isfinite(y)) return false;
        try {
            return velocity_domain(x, y);
        } catch (const std::exception&) {
            return false;
        }
    }

    PlasticState state(double x, double y) const {
        if (!contains(x, y)) throw DomainError(family + ": point outside domain");
        auto s = f0(x, y);
        return {s[0], s[1], s[2], s[3]};
    }

    // (u, v) only; usable on the velocity domain.
    std::array<double, 2> velocity(double x, double y) const {
        if (!velocity_contains(x, y)) throw DomainError(family + ": point outside velocity domain");
        auto s = f0(x, y);
        return {s[2], s[3]};
    }

    FieldJet jet(double x, double y) const {
        if (!contains(x, y)) throw DomainError(family + ": point outside domain");
        auto a = f1(D1{x, 1.0}, D1{y, 0.0});
        auto b = f1(D1{x, 0.0}, D1{y, 1.0});
        FieldJet j;
        j.state = {a[0].v, a[1].v, a[2].v, a[3].v};
        j.d_x = {a[0].d, a[1].d, a[2].d, a[3].d};
        j.d_y = {b[0].d, b[1].d, b[2].d, b[3].d};
        return j;
    }

    Field as_field() const {
        return [this](double x, double y) {
            if (!contains(x, y)) {
                const double n = std::numeric_limits<double>::quiet_NaN();
                return PlasticState{n, n, n, n};
            }
            return state(x, y);
        };
    }

    // Quasi-random interior points of the sample box that lie in the domain.
    std::vector<std::array<double, 2>> sample(int n, std::uint64_t seed = 42, double guard = 1e-3) const {
        QuasiRandom qr(2, seed);
        std::vector<std::array<double, 2>> pts;
        int tries = 0;
        while (static_cast<int>(pts.size()) < n) {
            if (++tries > 200 * n + 1000) throw DomainError(family + ": sample box misses the domain");
            auto p = qr.next_in({box.x_lo, box.y_lo}, {box.x_hi, box.y_hi});
            const double x = p[0], y = p[1];
            if (!contains(x, y)) continue;
            // keep a small guard band so numeric stencils stay inside
            if (!contains(x + guard, y) || !contains(x - guard, y) || !contains(x, y + guard) || !contains(x, y - guard))
                continue;
            pts.push_back({x, y});
        }
        return pts;
    }
};

// Mixed second derivative d^2 f_i / dx dy with the x seed outside or inside.
inline std::array<double, 4> mixed_partials(const Solution& s, double x, double y, bool x_outer) {
    if (!s.f2) throw std::logic_error(s.family + ": no second-order evaluation");
    D2 X = x_outer ? D2{D1{x, 0.0}, D1{1.0, 0.0}} : D2{D1{x, 1.0}, D1{0.0, 0.0}};
    D2 Y = x_outer ? D2{D1{y, 1.0}, D1{0.0, 0.0}} : D2{D1{y, 0.0}, D1{1.0, 0.0}};
    auto r = s.f2(X, Y);
    return {r[0].d.d, r[1].d.d, r[2].d.d, r[3].d.d};
}

template <class F>
void attach_levels(Solution& s, F fn) {
    s.f0 = [fn](double x, double y) { return fn(x, y); };
    s.f1 = [fn](const D1& x, const D1& y) { return fn(x, y); };
    s.f2 = [fn](const D2& x, const D2& y) { return fn(x, y); };
}

// ---------------------------------------------------------------- B1 implicit relations

struct B1Result {
    double u = 0.0, v = 0.0, xi = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

// u = c1 cos Tv(ux + vy), v = c1 sin Tv(ux + vy). Without a guess, the scalar
// reduction xi = c1 (x cos Tv(xi) + y sin Tv(xi)) is scanned over the domain of
// Tv and the root of smallest |xi| is polished by 2x2 Newton.
inline B1Result solve_b1_implicit(double x, double y, const Callable& Tv, double c1,
                                  const std::optional<std::array<double, 2>>& guess = std::nullopt);

namespace detail {
// Last unguessed solve per thread; domain tests and evaluations hit the same point.
struct B1Memo {
    double x = NAN, y = NAN, c1 = NAN;
    std::string fn;
    B1Result r;
};
inline B1Memo& b1_memo() {
    thread_local B1Memo m;
    return m;
}
}  // namespace detail

inline B1Result solve_b1_implicit(double x, double y, const Callable& Tv, double c1,
                                  const std::optional<std::array<double, 2>>& guess) {
    if (!guess) {
        auto& m = detail::b1_memo();
        if (m.x == x && m.y == y && m.c1 == c1 && m.fn == Tv.spec()) return m.r;
        B1Result r = solve_b1_implicit(x, y, Tv, c1, std::array<double, 2>{NAN, NAN});
        m = {x, y, c1, Tv.spec(), r};
        return r;
    }
    const bool have_guess = !std::isnan((*guess)[0]);
    auto xi_ok = [&](double xi) { return xi >= Tv.lo && xi <= Tv.hi; };
    Eigen::VectorXd z0(2);
    if (have_guess) {
        z0 << (*guess)[0], (*guess)[1];
    } else {
        const double R = std::abs(c1) * std::hypot(x, y) * (1.0 + 1e-12) + 1e-300;
        const double lo = std::max(-R, Tv.lo), hi = std::min(R, Tv.hi);
        auto h = [&](double xi) {
            const double t = Tv(xi);
            return xi - c1 * (x * std::cos(t) + y * std::sin(t));
        };
        double best = std::numeric_limits<double>::quiet_NaN();
        if (lo > hi) throw NoConvergence("solve_b1_implicit: empty search interval", 0.0);
        if (lo == hi) {
            if (std::abs(h(lo)) < 1e-12) best = lo;
        } else {
            const int N = 512;
            std::vector<double> grid(N + 1);
            for (int i = 0; i <= N; ++i) grid[i] = lo + (hi - lo) * i / N;
            std::vector<double> hv(N + 1);
            for (int i = 0; i <= N; ++i) hv[i] = h(grid[i]);
            double best_abs = std::numeric_limits<double>::infinity();
            for (int i = 0; i < N; ++i) {
                if (hv[i] == 0.0 && std::abs(grid[i]) < best_abs) {
                    best = grid[i];
                    best_abs = std::abs(grid[i]);
                }
                if ((hv[i] < 0) != (hv[i + 1] < 0) && hv[i + 1] != 0.0) {
                    double r = brent_root(h, grid[i], grid[i + 1]);
                    if (std::abs(r) < best_abs) {
                        best = r;
                        best_abs = std::abs(r);
                    }
                }
            }
            if (hv[N] == 0.0 && std::abs(grid[N]) < best_abs) best = grid[N];
        }
        if (std::isnan(best)) throw NoConvergence("solve_b1_implicit: no root of the scalar reduction", 0.0);
        const double t = Tv(best);
        z0 << c1 * std::cos(t), c1 * std::sin(t);
    }
    auto F = [&](const Eigen::VectorXd& z) {
        const double xi = z[0] * x + z[1] * y;
        const double t = Tv(xi);
        Eigen::VectorXd r(2);
        r << z[0] - c1 * std::cos(t), z[1] - c1 * std::sin(t);
        return r;
    };
    auto J = [&](const Eigen::VectorXd& z) {
        const double xi = z[0] * x + z[1] * y;
        D1 t = Tv(D1{xi, 1.0});
        const double tp = t.d;
        Eigen::MatrixXd A(2, 2);
        A << 1.0 + c1 * std::sin(t.v) * tp * x, c1 * std::sin(t.v) * tp * y,
             -c1 * std::cos(t.v) * tp * x, 1.0 - c1 * std::cos(t.v) * tp * y;
        return A;
    };
    auto adm = [&](const Eigen::VectorXd& z) { return xi_ok(z[0] * x + z[1] * y); };
    auto r = newton_solve(F, J, z0, NewtonOptions{}, adm);
    B1Result out;
    out.u = r.x[0];
    out.v = r.x[1];
    out.xi = out.u * x + out.v * y;
    out.residual = r.residual;
    out.iterations = r.iterations;
    const double t = Tv(D1{out.xi, 1.0}).v;
    const double tp = Tv(D1{out.xi, 1.0}).d;
    const double D = 1.0 + c1 * tp * (x * std::sin(t) - y * std::cos(t));
    if (!std::isfinite(D) || std::abs(D) < 1e-10) throw SingularJacobian("solve_b1_implicit: implicit Jacobian vanishes");
    return out;
}

namespace detail {
// xi(x, y) at any dual level, by implicit differentiation of the relations.
template <class S>
S b1_xi(const S& x, const S& y, const Callable& Tv, double c1) {
    if constexpr (std::is_same_v<S, double>) {
        return solve_b1_implicit(x, y, Tv, c1).xi;
    } else {
        using U = std::decay_t<decltype(x.v)>;
        U xi = b1_xi<U>(x.v, y.v, Tv, c1);
        auto t = Tv(Dual<U>{xi, U(1.0)});
        U c = cos(t.v), s = sin(t.v);
        U D = 1.0 + c1 * t.d * (x.v * s - y.v * c);
        return S{xi, (c1 * c * x.d + c1 * s * y.d) / D};
    }
}

template <class S>
S quad_lift(const std::function<double(double)>& g0, const std::function<D1(const D1&)>& g1, double a, const S& xi,
            double tol = 1e-12) {
    if constexpr (std::is_same_v<S, double>) {
        return integrate(g0, a, xi, tol, 200).value;
    } else if constexpr (std::is_same_v<S, D1>) {
        return D1{quad_lift<double>(g0, g1, a, xi.v, tol), g0(xi.v) * xi.d};
    } else {
        return S{quad_lift<D1>(g0, g1, a, xi.v, tol), g1(xi.v) * xi.d};
    }
}
}  // namespace detail

// ---------------------------------------------------------------- families

inline const std::vector<std::string>& family_names() {
    static const std::vector<std::string> n = {"RIGID",          "B1_IMPLICIT",    "K_PIS",          "SIM_C1NZ_ADD_A",
                                               "SIM_C1NZ_ADD_B", "SIM_C1Z_ADD_A",  "SIM_C1Z_ADD_B",  "SIM_C1NZ_MUL_A",
                                               "SIM_C1NZ_MUL_B", "SIM_C1Z_MUL_A",  "SIM_C1Z_MUL_B",  "SIM_C1Z_MUL_C"};
    return n;
}

struct FamilyInfo {
    std::map<std::string, double> defaults;
    std::map<std::string, std::string> function_defaults;
    std::string equations;
};

// Parameter vocabulary and defaults per family.
inline const std::map<std::string, FamilyInfo>& family_info() {
    static const std::map<std::string, FamilyInfo> m = {
        {"RIGID", {{{"b1", 1.0}, {"b2", 0.0}, {"b3", 0.0}, {"sigma0", 0.0}, {"theta0", 0.0}}, {}, "soltriv"}},
        {"B1_IMPLICIT", {{{"c1", 1.0}, {"c2", 0.0}}, {{"T", "arcsin_half"}}, "ex1:eq:6, ex1:eq:7"}},
        {"K_PIS", {{{"c1", 0.0}, {"c2", -1.0}, {"c3", -2.0}, {"c4", 4.0}, {"c5", 1.0}}, {}, "ex2:eq:4, ex2:eq:5, ex2:eq:7"}},
        {"SIM_C1NZ_ADD_A",
         {{{"c1", 0.6}, {"c2", 0.0}, {"psi0", std::numbers::pi / 4}, {"c3", 0.0}, {"c4", 0.3}, {"c5", 0.7},
           {"c6", -0.4}, {"c7", 0.1}, {"c8", -0.2}},
          {},
          "74, 75, 88"}},
        {"SIM_C1NZ_ADD_B",
         {{{"c1", 0.6}, {"c2", 0.0}, {"psi0", std::numbers::pi / 4}, {"c3", 0.0}, {"c4", 0.8}, {"c5", 0.1},
           {"c6", -0.3}},
          {},
          "74, 75, 98"}},
        {"SIM_C1NZ_MUL_A",
         {{{"c1", 0.6}, {"c2", 0.0}, {"psi0", std::numbers::pi / 4}, {"c3", 0.0}, {"c4", 0.5}, {"c5", -0.7},
           {"c6", 0.2}, {"c7", 0.4}},
          {},
          "74, 75, ms:11"}},
        {"SIM_C1NZ_MUL_B",
         {{{"c1", 0.6}, {"c2", 0.0}, {"psi0", std::numbers::pi / 4}, {"c3", 0.0}, {"c4", 0.9}, {"c5", 0.3},
           {"c6", -0.1}, {"omega1", 1.7}},
          {},
          "74, 75, ms:17"}},
        {"SIM_C1Z_ADD_A", {{{"c2", 0.3}}, {{"F", "poly(0.5,-0.3,0.2,0.1)"}}, "77, 101"}},
        {"SIM_C1Z_ADD_B", {{{"c1", 0.2}, {"c2", 0.3}}, {{"H", "exp_decay(2,0.1)"}, {"K", "poly(0.1,0.4,-0.2,0.05)"}}, "77, 109"}},
        {"SIM_C1Z_MUL_A", {{{"c2", 0.3}}, {{"P", "poly(1,0.5,-0.1)"}, {"Q", "poly(0.2,0.7,-0.3)"}}, "77, ms:22"}},
        {"SIM_C1Z_MUL_B", {{{"c2", 0.3}, {"c3", -0.4}}, {{"F", "poly(0.5,-0.3,0.2,0.1)"}}, "77, ms:22:3"}},
        {"SIM_C1Z_MUL_C", {{{"c2", 0.3}, {"c3", 0.8}, {"c4", 0.8}, {"omega2", -0.6}}, {}, "77, ms:25"}},
    };
    return m;
}

struct SolutionSpec {
    std::string family;
    std::map<std::string, double> params;
    std::map<std::string, Callable> functions;
    Variant variant = Variant::Corrected;
};

namespace detail {

inline double need(const std::map<std::string, double>& p, const std::string& k) {
    auto it = p.find(k);
    if (it == p.end()) throw std::invalid_argument("missing parameter: " + k);
    if (!std::isfinite(it->second)) throw std::invalid_argument("non-finite parameter: " + k);
    return it->second;
}

// theta and sigma for the c1 = 0 similarity families
template <class S>
std::array<S, 2> c1z_theta_sigma(const S& x, const S& y, double c2, Variant v) {
    S th = v == Variant::Corrected ? 0.5 * atan2(2.0 * x * y, x * x - y * y) : 0.5 * atan(2.0 * x * y / (x * x - y * y));
    S sg = -2.0 * k_yield * atan(y / x) + c2;
    return {th, sg};
}

inline bool c1z_domain(double x, double y) { return std::abs(x) > 1e-6 && std::isfinite(y); }

}  // namespace detail

inline Solution make_solution(const SolutionSpec& spec) {
    const auto& infos = family_info();
    auto fi = infos.find(spec.family);
    if (fi == infos.end()) throw std::invalid_argument("unknown family: " + spec.family);
    std::map<std::string, double> p = fi->second.defaults;
    for (const auto& [k, v] : spec.params) {
        if (!p.count(k)) throw std::invalid_argument("family " + spec.family + " has no parameter " + k);
        p[k] = v;
    }
    std::map<std::string, Callable> fn;
    for (const auto& [k, d] : fi->second.function_defaults) fn[k] = parse_callable(d);
    for (const auto& [k, c] : spec.functions) {
        if (!fn.count(k)) throw std::invalid_argument("family " + spec.family + " has no function " + k);
        fn[k] = c;
    }
    Solution s;
    s.family = spec.family;
    s.variant = spec.variant;
    s.params = p;
    for (const auto& [k, c] : fn) s.functions[k] = c.spec();
    const Variant var = spec.variant;
    using detail::need;
    const std::string& f = spec.family;

    if (f == "RIGID") {
        const double b1 = need(p, "b1"), b2 = need(p, "b2"), b3 = need(p, "b3"), s0 = need(p, "sigma0"),
                     t0 = need(p, "theta0");
        attach_levels(s, [=](const auto& x, const auto& y) {
            using S = std::decay_t<decltype(x)>;
            return State4<S>{S(s0), S(t0), b1 * y + b2, -b1 * x + b3};
        });
        s.domain = [](double x, double y) { return std::isfinite(x) && std::isfinite(y); };
        s.singular_sets = "none";
        return s;
    }

    if (f == "B1_IMPLICIT") {
        const double c1 = need(p, "c1"), c2 = need(p, "c2");
        if (c1 == 0.0) throw std::invalid_argument("B1_IMPLICIT: c1 must be nonzero");
        const Callable T = fn.at("T");
        // As printed, the velocity relations use xi itself in place of T(xi).
        const Callable Tv = var == Variant::Corrected ? T : callables::identity();
        attach_levels(s, [=](const auto& x, const auto& y) {
            using S = std::decay_t<decltype(x)>;
            S xi = detail::b1_xi<S>(x, y, Tv, c1);
            S tv = Tv(xi);
            S t = T(xi);
            return State4<S>{t + c2, t, c1 * cos(tv), c1 * sin(tv)};
        });
        s.domain = [=](double x, double y) {
            auto r = solve_b1_implicit(x, y, Tv, c1);
            const double g = 1e-9 * std::max(1.0, std::abs(r.xi));
            return r.xi > T.lo + g && r.xi < T.hi - g && r.xi > Tv.lo + g && r.xi < Tv.hi - g;
        };
        const double R = 0.9 / std::abs(c1);
        s.box = {-R, R, -R, R};
        s.singular_sets = "points where the scalar reduction has no root in dom(T) or 1 + c1 T'(xi)(x sin T - y cos T) = 0";
        return s;
    }

    if (f == "K_PIS") {
        const double c1 = need(p, "c1"), c2 = need(p, "c2"), c3 = need(p, "c3"), c4 = need(p, "c4"), c5 = need(p, "c5");
        attach_levels(s, [=](const auto& x, const auto& y) {
            using S = std::decay_t<decltype(x)>;
            S r2 = x * x + y * y;
            S th = var == Variant::Corrected ? -0.5 * atan2(x * x - y * y, 2.0 * x * y)
                                             : -0.5 * atan((x * x - y * y) / (x * y));
            S sg = -0.5 * log(r2) + c1;
            return State4<S>{sg, th, c2 * x / r2 + c3 * y + c4, c2 * y / r2 - c3 * x + c5};
        });
        s.domain = [=](double x, double y) {
            const double r2 = x * x + y * y;
            if (!(r2 > 1e-12)) return false;
            if (var == Variant::AsPrinted) return std::abs(x * y) > 1e-12;
            return true;
        };
        s.velocity_domain = [](double x, double y) { return x * x + y * y > 1e-12; };
        s.singular_sets = "origin; theta jumps by pi across y = -x (branch cut of atan2), harmless for the residuals";
        s.box = {-2, 2, -2, 2};
        return s;
    }

    if (f.rfind("SIM_C1NZ", 0) == 0) {
        const double c1 = need(p, "c1"), c3 = need(p, "c3");
        auto prof = std::make_shared<SimilarityProfile>(c1, need(p, "c2"), need(p, "psi0"));
        using Int = SimilarityProfile::Integral;
        auto base = [prof, c1, c3, var, f](const auto& x, const auto& y) {
            using S = std::decay_t<decltype(x)>;
            S xi = y / x;
            S J = prof->J_of<S>(xi);
            S sg;
            const bool printed_sigma = var == Variant::AsPrinted && f == "SIM_C1NZ_ADD_A";
            if (printed_sigma)
                sg = k_yield * (xi * cos(2.0 * J) - sin(2.0 * J) - 2.0 * c1 * log(x)) + c3;
            else
                sg = k_yield * (xi * cos(2.0 * J) - sin(2.0 * J) - prof->integral_of<S>(Int::CosInt, xi) -
                                2.0 * c1 * log(x)) + c3;
            return std::array<S, 3>{sg, J, xi};
        };
        if (f == "SIM_C1NZ_ADD_A") {
            const double c4 = need(p, "c4"), c5 = need(p, "c5"), c6 = need(p, "c6"), c7 = need(p, "c7"), c8 = need(p, "c8");
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto b = base(x, y);
                S c2J = cos(2.0 * b[1]);
                S Pq = prof->integral_of<S>(Int::PhiQ, b[2]);
                S Ps = prof->integral_of<S>(Int::PsiQ, b[2]);
                S u = -c5 * c2J / (2.0 * c1) + c6 * Pq / c1 + c6 * log(y) - c4 * y + c7;
                S v = c5 * log(x) + c4 * x + c5 * Ps / c1 - c6 * c2J / (2.0 * c1) + c8;
                return State4<S>{b[0], b[1], u, v};
            });
        } else if (f == "SIM_C1NZ_ADD_B") {
            const double c4 = need(p, "c4"), c5 = need(p, "c5"), c6 = need(p, "c6");
            const double vf = var == Variant::Corrected ? 0.5 : 1.0;
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto b = base(x, y);
                S Pq = prof->integral_of<S>(Int::PhiQ, b[2]);
                S u = (c1 + 1.0) * c4 * log(y) + c4 * (c1 + 1.0) * Pq / c1 + c5;
                S v = -vf * c4 * (c1 + 1.0) * cos(2.0 * b[1]) / c1 + c6;
                return State4<S>{b[0], b[1], u, v};
            });
        } else if (f == "SIM_C1NZ_MUL_A") {
            const double c4 = need(p, "c4"), c5 = need(p, "c5"), c6 = need(p, "c6"), c7 = need(p, "c7");
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto b = base(x, y);
                S Pq = prof->integral_of<S>(Int::PhiQ, b[2]);
                S u = 2.0 * c4 * Pq + c5 * y + 2.0 * c1 * c4 * log(y) + c6;
                S v = -c5 * x - c4 * cos(2.0 * b[1]) + c7;
                return State4<S>{b[0], b[1], u, v};
            });
        } else if (f == "SIM_C1NZ_MUL_B") {
            const double c4 = need(p, "c4"), c5 = need(p, "c5"), c6 = need(p, "c6"), w1 = need(p, "omega1");
            const double vc = var == Variant::Corrected ? c4 : w1;
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto b = base(x, y);
                S Pq = prof->integral_of<S>(Int::PhiQ, b[2]);
                S u = -c4 * log(y) - c4 * Pq / c1 + c5;
                S v = vc * cos(2.0 * b[1]) / (2.0 * c1) + c6;
                return State4<S>{b[0], b[1], u, v};
            });
        } else {
            throw std::invalid_argument("unknown family: " + f);
        }
        s.quadrature_grade = true;
        s.domain = [prof](double x, double y) {
            if (!(x > 1e-9 && y > 1e-9)) return false;
            const double xi = y / x;
            if (!prof->contains(xi, 1e-9 * std::max(1.0, std::abs(xi)))) return false;
            const double J = prof->J(xi);
            return std::abs(SimilarityProfile::Dn(xi, J)) > 1e-9;
        };
        // Sample over the part of the branch with xi > 0, away from its ends.
        double lo = std::max(prof->xi_min(), 0.05), hi = std::min(prof->xi_max(), 20.0);
        if (lo < hi) {
            const double a = std::atan(lo), b = std::atan(hi);
            const double pl = a + 0.1 * (b - a), ph = b - 0.1 * (b - a);
            s.box = {0.3 * std::cos(ph), 2.0 * std::cos(pl), 0.3 * std::sin(pl), 2.0 * std::sin(ph)};
        } else {
            s.box = {0.1, 2.0, 0.1, 2.0};
        }
        s.singular_sets = "x <= 0, y <= 0, xi = y/x outside the profile branch, (xi^2-1) sin2J + 2 xi cos2J = 0";
        return s;
    }

    if (f.rfind("SIM_C1Z", 0) == 0) {
        const double c2 = need(p, "c2");
        s.domain = [](double x, double y) { return detail::c1z_domain(x, y); };
        s.box = {0.2, 2.0, -2.0, 2.0};
        s.singular_sets = "x = 0";
        if (f == "SIM_C1Z_ADD_A") {
            const Callable F = fn.at("F");
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto ts = detail::c1z_theta_sigma<S>(x, y, c2, var);
                S xi = y / x;
                auto Fd = F(Dual<S>{xi, S(1.0)});
                S u = -c2 * y + Fd.d;
                S v = c2 * x + xi * Fd.d - Fd.v;
                return State4<S>{ts[1], ts[0], u, v};
            });
            // u, v need only x != 0 as well
            return s;
        }
        if (f == "SIM_C1Z_ADD_B") {
            const double c1 = need(p, "c1");
            const Callable H = fn.at("H"), K = fn.at("K");
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto ts = detail::c1z_theta_sigma<S>(x, y, c2, var);
                S xi = y / x;
                S eta = x * x + y * y;
                auto Kd = K(Dual<S>{xi, S(1.0)});
                S h = H(eta);
                S u = Kd.d - y * h + c2;
                S v = var == Variant::Corrected ? xi * Kd.d - Kd.v + x * h + c1 : -Kd.d + xi * Kd.v + x * h + c1;
                return State4<S>{ts[1], ts[0], u, v};
            });
            if (K.affine() && var == Variant::Corrected) {
                // K affine: u, v reduce to a smooth field through x = 0
                s.velocity_domain = [](double x, double y) { return std::isfinite(x) && std::isfinite(y); };
                const double k0 = K.args.size() > 0 ? K.args[0] : 0.0;
                const double k1 = K.name == "identity" ? 1.0 : (K.args.size() > 1 ? K.args[1] : 0.0);
                auto full = s.f0;
                s.f0 = [=](double x, double y) {
                    if (std::abs(x) > 1e-6) return full(x, y);
                    const double h = H(x * x + y * y);
                    const double n = std::numeric_limits<double>::quiet_NaN();
                    return State4<double>{n, n, k1 - y * h + c2, -k0 + x * h + c1};
                };
            }
            return s;
        }
        if (f == "SIM_C1Z_MUL_A") {
            const Callable P = fn.at("P"), Q = fn.at("Q");
            s.domain = [](double x, double y) { return detail::c1z_domain(x, y) && y / x > 1e-6; };
            s.box = {0.2, 2.0, 0.05, 2.0};
            s.singular_sets = "x = 0, y/x <= 0 (integral from xi = 1 through 1/xi)";
            std::function<double(double)> g0, g1d;
            std::function<D1(const D1&)> g1;
            if (var == Variant::Corrected) {
                g0 = [Q](double t) { return derivative(Q, t) / t; };
                g1 = [Q](const D1& t) { return derivative(Q, t) / t; };
            } else {
                g0 = [Q](double t) { return ((t * t + 1.0) * derivative(Q, t) + t * Q(t)) / t; };
                g1 = [Q](const D1& t) { return ((t * t + 1.0) * derivative(Q, t) + t * Q(t)) / t; };
            }
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto ts = detail::c1z_theta_sigma<S>(x, y, c2, var);
                S xi = y / x;
                S eta = x * x + y * y;
                S Pv = P(eta);
                S Iq = detail::quad_lift<S>(g0, g1, 1.0, xi);
                S u = var == Variant::Corrected ? y * Pv + Iq + c2 : y * Pv - xi * Q(xi) * Iq + c2;
                S v = Q(xi) - x * Pv;
                return State4<S>{ts[1], ts[0], u, v};
            });
            return s;
        }
        if (f == "SIM_C1Z_MUL_B") {
            const double c3 = need(p, "c3");
            const Callable F = fn.at("F");
            std::function<double(double)> g0 = [F](double t) { return t * derivative(F, t); };
            std::function<D1(const D1&)> g1 = [F](const D1& t) { return t * derivative(F, t); };
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto ts = detail::c1z_theta_sigma<S>(x, y, c2, var);
                S xi = y / x;
                S u = F(xi);
                S v = detail::quad_lift<S>(g0, g1, 1.0, xi) + c3;
                return State4<S>{ts[1], ts[0], u, v};
            });
            return s;
        }
        if (f == "SIM_C1Z_MUL_C") {
            const double c3 = need(p, "c3"), w2 = need(p, "omega2");
            const double c4 = var == Variant::Corrected ? c3 : need(p, "c4");
            attach_levels(s, [=](const auto& x, const auto& y) {
                using S = std::decay_t<decltype(x)>;
                auto ts = detail::c1z_theta_sigma<S>(x, y, c2, var);
                S m = pow(x * x + y * y, 0.5 * w2);
                return State4<S>{ts[1], ts[0], c3 * y * m, -c4 * x * m};
            });
            return s;
        }
    }
    throw std::invalid_argument("unknown family: " + f);
}

inline Solution make_solution(const std::string& family, const std::map<std::string, double>& params = {},
                              const std::map<std::string, Callable>& functions = {}, Variant v = Variant::Corrected) {
    return make_solution(SolutionSpec{family, params, functions, v});
}

// ---------------------------------------------------------------- residual gates

struct ResidualStats {
    double max_residual = 0.0;
    double max_divergence = 0.0;
    double max_jet_mismatch = 0.0;  // relative, against numeric_jet
    int points = 0;
};

inline ResidualStats residual_stats(const Solution& s, int n_points, std::uint64_t seed = 42, bool with_numeric = false) {
    ResidualStats st;
    for (const auto& p : s.sample(n_points, seed)) {
        auto j = s.jet(p[0], p[1]);
        auto r = pde_residual(j);
        st.max_residual = std::max(st.max_residual, max_abs(r));
        st.max_divergence = std::max(st.max_divergence, std::abs(r[3]));
        if (with_numeric) {
            auto n = numeric_jet(s.as_field(), p[0], p[1]);
            auto a1 = j.d_x.as_array(), a2 = j.d_y.as_array(), b1 = n.d_x.as_array(), b2 = n.d_y.as_array();
            for (int i = 0; i < 4; ++i) {
                st.max_jet_mismatch = std::max(st.max_jet_mismatch, std::abs(a1[i] - b1[i]) / std::max(1.0, std::abs(a1[i])));
                st.max_jet_mismatch = std::max(st.max_jet_mismatch, std::abs(a2[i] - b2[i]) / std::max(1.0, std::abs(a2[i])));
            }
        }
        ++st.points;
    }
    return st;
}

// ---------------------------------------------------------------- reduced equations

enum class Reduced { B1_REDUCED, K_XI_PDE, SIM_SIGMA_SYSTEM };

// Four ODE residuals of the B1 reduction with F = c1 cos T, G = c1 sin T, S = T + c2.
inline std::array<double, 4> b1_reduced_residual(const Callable& T, double c1, double c2, double xi) {
    D1 t = T(D1{xi, 1.0});
    D1 F = c1 * cos(t), G = c1 * sin(t), S = t + c2;
    const double c = std::cos(2 * t.v), s = std::sin(2 * t.v);
    return {F.v * S.d - (c * F.v + s * G.v) * t.d, G.v * S.d - (s * F.v - c * G.v) * t.d,
            (G.v * F.d + F.v * G.d) * s + (F.v * F.d - G.v * G.d) * c, F.v * F.d + G.v * G.d};
}

// PDE for the first K invariant with xi = (x^2 + eps y^2)/2 substituted.
inline double k_xi_pde_residual(double x, double y, double eps) {
    auto xi_fn = [eps](const D2& a, const D2& b) { return 0.5 * (a * a + eps * b * b); };
    // inner seed direction i, outer seed direction j
    auto second = [&](int i, int j) {
        D2 a{D1{x, i == 0 ? 1.0 : 0.0}, D1{j == 0 ? 1.0 : 0.0, 0.0}};
        D2 b{D1{y, i == 1 ? 1.0 : 0.0}, D1{j == 1 ? 1.0 : 0.0, 0.0}};
        return xi_fn(a, b).d.d;
    };
    const double xi = 0.5 * (x * x + eps * y * y);
    const double xx = second(0, 0), yy = second(1, 1), xy = second(0, 1);
    const double xi_x = xi_fn(D2{D1{x, 0.0}, D1{1.0, 0.0}}, D2{D1{y, 0.0}, D1{0.0, 0.0}}).d.v;
    const double xi_y = xi_fn(D2{D1{x, 0.0}, D1{0.0, 0.0}}, D2{D1{y, 0.0}, D1{1.0, 0.0}}).d.v;
    const double r2 = x * x + y * y;
    const double q = std::sqrt(std::max(0.0, r2 * r2 - 4 * xi * xi));
    const double d = x * y * q - (x * x - y * y) * xi;
    double term2 = 0.0;
    if (xy != 0.0) term2 = (4 * x * y * xi + (x * x - y * y) * q) / d * xy;
    return (xx - yy) * ((r2 * r2 - 4 * xi * xi) * (xi * (x * x - y * y) - x * y * q)) - term2 +
           r2 * r2 * ((x + y) * xi_x - (x - y) * xi_y) * ((x - y) * xi_x + (x + y) * xi_y) -
           4 * r2 * r2 * xi * (x * xi_x + y * xi_y - xi);
}

// (sigma_x - rhs_a, sigma_y - rhs_b, d_y rhs_a - d_x rhs_b) for the c1 != 0 profile.
// rhs are the corrected first-order relations sigma_x = (2k/x) J'(sin2J - xi cos2J),
// sigma_y = -(2k/x) J'(xi sin2J + cos2J).
inline std::array<double, 3> sim_sigma_system_residual(const Solution& s, const SimilarityProfile& prof, double x,
                                                       double y) {
    if (!s.contains(x, y)) throw DomainError("SIM_SIGMA_SYSTEM: point outside domain");
    const double c1 = prof.c1();
    auto rhs = [&](const auto& X, const auto& Y) {
        using S = std::decay_t<decltype(X)>;
        S xi = Y / X;
        S J = prof.J_of<S>(xi);
        S Jp = c1 / SimilarityProfile::Dn<S>(xi, J);
        S a = (2.0 * k_yield / X) * Jp * (sin(2.0 * J) - xi * cos(2.0 * J));
        S b = -(2.0 * k_yield / X) * Jp * (xi * sin(2.0 * J) + cos(2.0 * J));
        return std::array<S, 2>{a, b};
    };
    auto j = s.jet(x, y);
    auto r0 = rhs(x, y);
    auto ry = rhs(D1{x, 0.0}, D1{y, 1.0});
    auto rx = rhs(D1{x, 1.0}, D1{y, 0.0});
    return {j.d_x.sigma - r0[0], j.d_y.sigma - r0[1], ry[0].d - rx[1].d};
}

// Printed implicit relation for J (kept for the errata demonstration).
inline double eq74_printed(double xi, double J, double c1, double c2) {
    const double q = std::sqrt(c1 * c1 - 1.0);
    const double t = std::tan(J);
    return (t - xi) * q / ((t * xi + 1.0) * c1 - xi + t) - std::tan(q * (c2 - J) / c1);
}

}  // namespace plastsym
