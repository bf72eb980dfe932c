#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dual.hpp"
#include "numerics.hpp"

namespace plastsym {

// Scalar function of one variable, evaluable at double and nested dual levels up to D3.
struct Callable {
    std::string name;
    std::vector<double> args;
    std::function<double(double)> f0;
    std::function<D1(const D1&)> f1;
    std::function<D2(const D2&)> f2;
    std::function<D3(const D3&)> f3;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    int poly_degree = -1;  // >= 0 for polynomials

    double operator()(double t) const { return f0(t); }
    D1 operator()(const D1& t) const { return f1(t); }
    D2 operator()(const D2& t) const { return f2(t); }
    D3 operator()(const D3& t) const { return f3(t); }

    bool affine() const { return poly_degree >= 0 && poly_degree <= 1; }

    std::string spec() const {
        std::ostringstream os;
        os.precision(17);
        os << name;
        if (!args.empty()) {
            os << '(';
            for (std::size_t i = 0; i < args.size(); ++i) os << (i ? "," : "") << args[i];
            os << ')';
        }
        return os.str();
    }
};

template <class F>
Callable make_callable(std::string name, std::vector<double> args, F fn) {
    Callable c;
    c.name = std::move(name);
    c.args = std::move(args);
    c.f0 = fn;
    c.f1 = fn;
    c.f2 = fn;
    c.f3 = fn;
    return c;
}

// f'(t) at any level U, using the callable one level up.
template <class U>
U derivative(const Callable& f, const U& t) {
    return f(Dual<U>{t, U(1.0)}).d;
}

namespace callables {

inline Callable identity() {
    auto c = make_callable("identity", {}, [](const auto& t) { return t; });
    c.poly_degree = 1;
    return c;
}

// branch 0: (1/2) asin t in [-pi/4, pi/4]; branch 1: pi/2 - (1/2) asin t in [pi/4, 3pi/4].
inline Callable arcsin_half(int branch = 0) {
    if (branch != 0 && branch != 1) throw std::invalid_argument("arcsin_half: branch must be 0 or 1");
    Callable c;
    if (branch == 0)
        c = make_callable("arcsin_half", {}, [](const auto& t) { return 0.5 * asin(t); });
    else
        c = make_callable("arcsin_half", {1.0}, [](const auto& t) { return std::numbers::pi / 2 - 0.5 * asin(t); });
    c.lo = -1.0;
    c.hi = 1.0;
    return c;
}

// cn(1/(1 + cosh(atan(b t))), rho)
inline Callable cn_bump(double b, double rho) {
    if (!(rho * rho < 1.0 && rho * rho >= 0.0)) throw DomainError("cn_bump: need 0 <= rho^2 < 1");
    return make_callable("cn_bump", {b, rho}, [b, rho](const auto& t) {
        auto chi = 1.0 / (1.0 + cosh(atan(b * t)));
        return jacobi_cn(chi, rho);
    });
}

// a exp(-s t)
inline Callable exp_decay(double a, double s) {
    return make_callable("exp_decay", {a, s}, [a, s](const auto& t) { return a * exp(-s * t); });
}

inline Callable poly(std::vector<double> coeffs) {
    if (coeffs.empty()) coeffs = {0.0};
    auto c = make_callable("poly", coeffs, [coeffs](const auto& t) {
        using S = std::decay_t<decltype(t)>;
        S acc = S(0.0);
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
        return acc;
    });
    int deg = static_cast<int>(coeffs.size()) - 1;
    while (deg > 0 && coeffs[deg] == 0.0) --deg;
    c.poly_degree = deg;
    return c;
}

inline Callable sine() {
    return make_callable("sin", {}, [](const auto& t) { return sin(t); });
}

}  // namespace callables

// "name" or "name(a,b,...)"; numeric args accept a trailing "pi" factor, e.g. 4pi.
inline Callable parse_callable(const std::string& text) {
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    std::string name = s;
    std::vector<double> args;
    auto open = s.find('(');
    if (open != std::string::npos) {
        if (s.back() != ')') throw std::invalid_argument("callable: missing ')' in " + text);
        name = s.substr(0, open);
        std::stringstream as(s.substr(open + 1, s.size() - open - 2));
        std::string a;
        while (std::getline(as, a, ',')) {
            if (a.empty()) continue;
            double mult = 1.0;
            if (a.size() >= 2 && a.substr(a.size() - 2) == "pi") {
                mult = std::numbers::pi;
                a = a.substr(0, a.size() - 2);
                if (a.empty() || a == "+") a = "1";
                if (a == "-") a = "-1";
            }
            std::size_t used = 0;
            double v = std::stod(a, &used);
            if (used != a.size()) throw std::invalid_argument("callable: bad argument " + a);
            args.push_back(v * mult);
        }
    }
    auto need = [&](std::size_t n) {
        if (args.size() != n) throw std::invalid_argument("callable " + name + " expects " + std::to_string(n) + " arguments");
    };
    if (name == "identity") { need(0); return callables::identity(); }
    if (name == "arcsin_half") {
        if (args.size() > 1 || (args.size() == 1 && args[0] != 0.0 && args[0] != 1.0))
            throw std::invalid_argument("arcsin_half takes an optional branch 0 or 1");
        return callables::arcsin_half(args.empty() ? 0 : static_cast<int>(args[0]));
    }
    if (name == "cn_bump") { need(2); return callables::cn_bump(args[0], args[1]); }
    if (name == "exp_decay") { need(2); return callables::exp_decay(args[0], args[1]); }
    if (name == "poly") return callables::poly(args);
    if (name == "sin") { need(0); return callables::sine(); }
    throw std::invalid_argument("unknown callable: " + name);
}

}  // namespace plastsym
