#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dual.hpp"
#include "fieldcore.hpp"

namespace plastsym {

struct NoConvergence : std::runtime_error {
    double last_residual;
    NoConvergence(const std::string& what, double r) : std::runtime_error(what), last_residual(r) {}
};
struct SingularJacobian : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct QuadratureError : std::runtime_error {
    double estimate;
    double achieved;
    QuadratureError(const std::string& what, double est, double err)
        : std::runtime_error(what), estimate(est), achieved(err) {}
};
struct StepSizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- sampling

// Halton points with a random shift mod 1 (Cranley-Patterson). Deterministic per seed.
class QuasiRandom {
public:
    QuasiRandom(int dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& s : shift_) s = u(rng);
    }

    std::vector<double> next() {
        static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
        ++index_;
        std::vector<double> p(dim_);
        for (int i = 0; i < dim_; ++i) {
            double f = 1.0, r = 0.0;
            std::uint64_t n = index_;
            const int b = primes[i % 12];
            while (n > 0) {
                f /= b;
                r += f * static_cast<double>(n % b);
                n /= b;
            }
            p[i] = std::fmod(r + shift_[i], 1.0);
        }
        return p;
    }

    // Point in the box [lo, hi]^dim.
    std::vector<double> next_in(const std::vector<double>& lo, const std::vector<double>& hi) {
        auto p = next();
        for (int i = 0; i < dim_; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * p[i];
        return p;
    }

private:
    int dim_;
    std::vector<double> shift_;
    std::uint64_t index_ = 0;
};

// ---------------------------------------------------------------- Newton

struct NewtonOptions {
    double tol = 1e-12;
    int max_iter = 50;
    int max_halvings = 20;
};

struct NewtonResult {
    Eigen::VectorXd x;
    double residual = 0.0;
    int iterations = 0;
};

// Damped Newton for F(x) = 0 with user Jacobian; backtracking halves the step
// until the residual norm decreases. `admissible` rejects trial points.
inline NewtonResult newton_solve(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& J, Eigen::VectorXd x,
    const NewtonOptions& opt = {},
    const std::function<bool(const Eigen::VectorXd&)>& admissible = nullptr) {
    Eigen::VectorXd f = F(x);
    double r = f.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_iter; ++it) {
        if (r < opt.tol) return {x, r, it};
        Eigen::MatrixXd A = J(x);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-300)
            throw SingularJacobian("newton_solve: singular Jacobian");
        Eigen::VectorXd dx = lu.solve(-f);
        double lam = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, lam *= 0.5) {
            Eigen::VectorXd xt = x + lam * dx;
            if (admissible && !admissible(xt)) continue;
            Eigen::VectorXd ft = F(xt);
            if (!ft.allFinite()) continue;
            double rt = ft.lpNorm<Eigen::Infinity>();
            if (rt < r || rt < opt.tol) {
                x = xt;
                f = ft;
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Full step even though it does not decrease: lets Newton escape
            // shallow regions; bail out if it is not admissible.
            Eigen::VectorXd xt = x + dx;
            if (admissible && !admissible(xt)) throw NoConvergence("newton_solve: line search failed", r);
            Eigen::VectorXd ft = F(xt);
            if (!ft.allFinite()) throw NoConvergence("newton_solve: line search failed", r);
            x = xt;
            f = ft;
            r = ft.lpNorm<Eigen::Infinity>();
        }
    }
    if (r < opt.tol) return {x, r, opt.max_iter};
    throw NoConvergence("newton_solve: no convergence after max iterations", r);
}

// ---------------------------------------------------------------- Brent

inline double brent_root(const std::function<double(double)>& f, double a, double b, double tol = 1e-15,
                         int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if ((fa > 0) == (fb > 0)) throw std::domain_error("brent_root: interval does not bracket a root");
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2 * xm * s;
                q = 1 - s;
            } else {
                double qq = fa / fc, r = fb / fc;
                p = s * (2 * xm * qq * (qq - r) - (b - a) * (r - 1));
                q = (qq - 1) * (r - 1) * (s - 1);
            }
            if (p > 0) q = -q;
            p = std::abs(p);
            if (2 * p < std::min(3 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
    }
    return b;
}

// ---------------------------------------------------------------- quadrature

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
};

namespace detail {
// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                  0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                  0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                  0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                  0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                  0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                  0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline std::pair<double, double> gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double rk = fc * wgk[7], rg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        double dx = h * xgk[j];
        double s = f(c - dx) + f(c + dx);
        rk += wgk[j] * s;
        if (j % 2 == 1) rg += wg[j / 2] * s;
    }
    return {rk * h, std::abs((rk - rg) * h)};
}
}  // namespace detail

// Adaptive Gauss-Kronrod (G7K15), bisecting the interval with the largest error.
inline QuadResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10,
                            int max_subdiv = 60) {
    if (a == b) return {0.0, 0.0, 0};
    struct Seg { double a, b, val, err; };
    std::vector<Seg> segs;
    auto [v0, e0] = detail::gk15(f, a, b);
    segs.push_back({a, b, v0, e0});
    double total = v0, err = e0;
    int n = 0;
    while (err > abs_tol) {
        if (n >= max_subdiv)
            throw QuadratureError("integrate: tolerance not reached", total, err);
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Seg s = segs[worst];
        double m = 0.5 * (s.a + s.b);
        auto [v1, e1] = detail::gk15(f, s.a, m);
        auto [v2, e2] = detail::gk15(f, m, s.b);
        segs[worst] = {s.a, m, v1, e1};
        segs.push_back({m, s.b, v2, e2});
        total = 0;
        err = 0;
        for (const auto& g : segs) {
            total += g.val;
            err += g.err;
        }
        ++n;
    }
    return {total, err, n};
}

// ---------------------------------------------------------------- ODEs

template <class State, class Rhs>
State rk4_step(const Rhs& f, const State& y, double h) {
    State k1 = f(y);
    State y2 = y, y3 = y, y4 = y;
    for (std::size_t i = 0; i < y.size(); ++i) y2[i] = y[i] + 0.5 * h * k1[i];
    State k2 = f(y2);
    for (std::size_t i = 0; i < y.size(); ++i) y3[i] = y[i] + 0.5 * h * k2[i];
    State k3 = f(y3);
    for (std::size_t i = 0; i < y.size(); ++i) y4[i] = y[i] + h * k3[i];
    State k4 = f(y4);
    State out = y;
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// Dormand-Prince 5(4) for an autonomous system y' = f(y) on a std::array of
// scalars (double or Dual). Error control uses only the value part so that
// dual-valued runs take the same steps as the plain run.
template <class S, std::size_t N, class Rhs>
std::array<S, N> dopri5(const Rhs& f, std::array<S, N> y, double t1, double rtol = 1e-13, double atol = 1e-14,
                        int max_steps = 100000) {
    if (t1 == 0.0) return y;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2; (void)c3; (void)c4; (void)c5;
    using Arr = std::array<S, N>;
    auto comb = [&](const Arr& base, double h, std::initializer_list<std::pair<double, const Arr*>> terms) {
        Arr out = base;
        for (std::size_t i = 0; i < N; ++i) {
            S acc = S(0.0);
            for (auto& [c, k] : terms) acc += c * (*k)[i];
            out[i] = base[i] + h * acc;
        }
        return out;
    };
    const double dir = t1 > 0 ? 1.0 : -1.0;
    double t = 0.0;
    double h = dir * std::min(std::abs(t1), 1e-2);
    Arr k1 = f(y);
    for (int step = 0; step < max_steps; ++step) {
        if (dir * (t + h - t1) > 0) h = t1 - t;
        Arr k2 = f(comb(y, h, {{a21, &k1}}));
        Arr k3 = f(comb(y, h, {{a31, &k1}, {a32, &k2}}));
        Arr k4 = f(comb(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        Arr k5 = f(comb(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        Arr k6 = f(comb(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        Arr yn = comb(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        Arr k7 = f(yn);
        double errn = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double e = value_of(h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]));
            double sc = atol + rtol * std::max(std::abs(value_of(y[i])), std::abs(value_of(yn[i])));
            errn = std::max(errn, std::abs(e) / sc);
        }
        if (!std::isfinite(errn)) throw StepSizeError("dopri5: non-finite state");
        if (errn <= 1.0) {
            t += h;
            y = yn;
            k1 = k7;
            if (dir * (t - t1) >= 0) return y;
        }
        double fac = errn == 0 ? 5.0 : std::clamp(0.9 * std::pow(errn, -0.2), 0.2, 5.0);
        h *= fac;
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t1))) throw StepSizeError("dopri5: step size underflow");
    }
    throw StepSizeError("dopri5: too many steps");
}

// ---------------------------------------------------------------- elliptic

// Jacobi sn, cn, dn with modulus rho (parameter m = rho^2), by the descending
// Landen / AGM ladder.
inline std::array<double, 3> jacobi_sncndn(double u, double rho) {
    const double m = rho * rho;
    if (!(m >= 0.0 && m < 1.0)) throw DomainError("jacobi: need 0 <= rho^2 < 1");
    if (m < 1e-300) return {std::sin(u), std::cos(u), 1.0};
    constexpr int NMAX = 16;
    double a[NMAX + 1], c[NMAX + 1];
    a[0] = 1.0;
    double b = std::sqrt(1.0 - m);
    c[0] = std::sqrt(m);
    int n = 0;
    while (n < NMAX && std::abs(c[n]) > 1e-17 * a[n]) {
        double an = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = std::sqrt(a[n] * b);
        a[n + 1] = an;
        ++n;
    }
    double phi = std::ldexp(a[n] * u, n);
    for (int j = n; j > 0; --j) phi = 0.5 * (phi + std::asin(c[j] / a[j] * std::sin(phi)));
    const double sn = std::sin(phi), cn = std::cos(phi);
    return {sn, cn, std::sqrt(1.0 - m * sn * sn)};
}

inline double jacobi_cn(double chi, double rho) { return jacobi_sncndn(chi, rho)[1]; }

template <class T>
std::array<Dual<T>, 3> jacobi_sncndn(const Dual<T>& u, double rho) {
    auto b = jacobi_sncndn(u.v, rho);
    const double m = rho * rho;
    return {Dual<T>{b[0], b[1] * b[2] * u.d}, Dual<T>{b[1], -b[0] * b[2] * u.d},
            Dual<T>{b[2], -m * b[0] * b[1] * u.d}};
}
template <class T>
Dual<T> jacobi_cn(const Dual<T>& chi, double rho) {
    return jacobi_sncndn(chi, rho)[1];
}

}  // namespace plastsym
