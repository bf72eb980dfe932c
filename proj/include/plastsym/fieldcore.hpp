#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace plastsym {

// Yield limit, normalized.
inline constexpr double k_yield = 0.5;

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PlasticState {
    double sigma = 0.0;
    double theta = 0.0;
    double u = 0.0;
    double v = 0.0;

    friend PlasticState operator+(const PlasticState& a, const PlasticState& b) {
        return {a.sigma + b.sigma, a.theta + b.theta, a.u + b.u, a.v + b.v};
    }
    friend PlasticState operator-(const PlasticState& a, const PlasticState& b) {
        return {a.sigma - b.sigma, a.theta - b.theta, a.u - b.u, a.v - b.v};
    }
    friend PlasticState operator*(double s, const PlasticState& a) {
        return {s * a.sigma, s * a.theta, s * a.u, s * a.v};
    }
    std::array<double, 4> as_array() const { return {sigma, theta, u, v}; }
    bool finite() const {
        return std::isfinite(sigma) && std::isfinite(theta) && std::isfinite(u) && std::isfinite(v);
    }
};

struct FieldJet {
    PlasticState state;
    PlasticState d_x;
    PlasticState d_y;

    bool finite() const { return state.finite() && d_x.finite() && d_y.finite(); }
};

struct FeedVelocity {
    double U0 = 0.0;
    double V0 = 0.0;
};

// Maps theta into (-pi/2, pi/2]. Only for reporting.
inline double normalize_theta(double t) {
    constexpr double pi = std::numbers::pi;
    double r = std::remainder(t, pi);
    if (r <= -pi / 2) r += pi;
    return r;
}

inline std::array<double, 4> pde_residual(const FieldJet& j) {
    if (!j.finite()) throw DomainError("pde_residual: non-finite jet");
    const double c2 = std::cos(2 * j.state.theta);
    const double s2 = std::sin(2 * j.state.theta);
    const auto& X = j.d_x;
    const auto& Y = j.d_y;
    return {
        X.sigma - 2 * k_yield * (X.theta * c2 + Y.theta * s2),
        Y.sigma - 2 * k_yield * (X.theta * s2 - Y.theta * c2),
        (Y.u + X.v) * s2 + (X.u - Y.v) * c2,
        X.u + Y.v,
    };
}

inline double max_abs(const std::array<double, 4>& r) {
    double m = 0;
    for (double x : r) m = std::max(m, std::abs(x));
    return m;
}

using Field = std::function<PlasticState(double, double)>;

// Fourth-order central differences, step scaled by max(1,|x|,|y|).
inline FieldJet numeric_jet(const Field& f, double x, double y, double h = 1e-4) {
    const double hs = h * std::max({1.0, std::abs(x), std::abs(y)});
    auto diff = [&](double dx, double dy) {
        PlasticState p1 = f(x + dx, y + dy), m1 = f(x - dx, y - dy);
        PlasticState p2 = f(x + 2 * dx, y + 2 * dy), m2 = f(x - 2 * dx, y - 2 * dy);
        if (!p1.finite() || !m1.finite() || !p2.finite() || !m2.finite())
            throw DomainError("numeric_jet: stencil leaves the field's domain");
        return (1.0 / (12.0 * hs)) * ((8.0 * (p1 - m1)) - (p2 - m2));
    };
    FieldJet j;
    j.state = f(x, y);
    if (!j.state.finite()) throw DomainError("numeric_jet: point outside domain");
    j.d_x = diff(hs, 0.0);
    j.d_y = diff(0.0, hs);
    return j;
}

struct Slopes {
    double first;         // tan(theta)
    double second;        // -cot(theta)
    bool second_infinite;  // theta = 0 mod pi
    bool first_infinite;   // theta = pi/2 mod pi
};

inline Slopes characteristic_slopes(double theta) {
    Slopes s{};
    const double c = std::cos(theta), sn = std::sin(theta);
    constexpr double eps = 1e-15;
    s.first_infinite = std::abs(c) < eps;
    s.second_infinite = std::abs(sn) < eps;
    s.first = s.first_infinite ? std::numeric_limits<double>::infinity() : sn / c;
    s.second = s.second_infinite ? std::numeric_limits<double>::infinity() : -c / sn;
    return s;
}

struct NearStagnation : DomainError {
    using DomainError::DomainError;
};

inline double plasticity_limit_slope(double x, double y, const FeedVelocity& feed, const Field& f) {
    PlasticState s = f(x, y);
    double den = feed.U0 - s.u;
    if (std::abs(den) < 1e-12)
        throw NearStagnation("plasticity_limit_slope: U0 - u vanishes, use arc-length parametrization");
    return (feed.V0 - s.v) / den;
}

}  // namespace plastsym
