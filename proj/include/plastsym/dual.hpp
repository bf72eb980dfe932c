#pragma once

#include <cmath>
#include <type_traits>

namespace plastsym {

// Generic code calls these unqualified for double and Dual alike.
using std::sin, std::cos, std::tan, std::exp, std::log, std::sqrt, std::sinh, std::cosh, std::atan, std::asin,
    std::atan2, std::pow, std::abs;

// Forward-mode dual number with a single tangent. Nesting Dual<Dual<double>>
// gives second directional derivatives.
template <class T>
struct Dual {
    T v{};
    T d{};

    Dual() = default;
    Dual(double x) : v(x), d(0.0) {}  // NOLINT(implicit)
    Dual(T x, T dx) : v(x), d(dx) {}
    template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
    Dual(const U& x) : v(x), d(0.0) {}  // NOLINT(implicit)

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
    Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

    friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
    friend Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
    friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
    friend Dual operator/(const Dual& a, const Dual& b) {
        T inv = T(1.0) / b.v;
        return {a.v * inv, (a.d * b.v - a.v * b.d) * inv * inv};
    }
    friend Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
    friend Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
    friend Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
    friend Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
    friend Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
    friend Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
    friend Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
    friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
    friend bool operator<(const Dual& a, double b) { return a.v < b; }
    friend bool operator>(const Dual& a, double b) { return a.v > b; }
};

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};

inline double value_of(double x) { return x; }
template <class T> double value_of(const Dual<T>& x) { return value_of(x.v); }

template <class T> Dual<T> sin(const Dual<T>& a) { using std::sin, std::cos; return {sin(a.v), cos(a.v) * a.d}; }
template <class T> Dual<T> cos(const Dual<T>& a) { using std::sin, std::cos; return {cos(a.v), -sin(a.v) * a.d}; }
template <class T> Dual<T> tan(const Dual<T>& a) {
    using std::tan;
    T t = tan(a.v);
    return {t, (1.0 + t * t) * a.d};
}
template <class T> Dual<T> exp(const Dual<T>& a) { using std::exp; T e = exp(a.v); return {e, e * a.d}; }
template <class T> Dual<T> log(const Dual<T>& a) { using std::log; return {log(a.v), a.d / a.v}; }
template <class T> Dual<T> sqrt(const Dual<T>& a) { using std::sqrt; T s = sqrt(a.v); return {s, a.d / (2.0 * s)}; }
template <class T> Dual<T> sinh(const Dual<T>& a) { using std::sinh, std::cosh; return {sinh(a.v), cosh(a.v) * a.d}; }
template <class T> Dual<T> cosh(const Dual<T>& a) { using std::sinh, std::cosh; return {cosh(a.v), sinh(a.v) * a.d}; }
template <class T> Dual<T> atan(const Dual<T>& a) { using std::atan; return {atan(a.v), a.d / (1.0 + a.v * a.v)}; }
template <class T> Dual<T> asin(const Dual<T>& a) { using std::asin, std::sqrt; return {asin(a.v), a.d / sqrt(1.0 - a.v * a.v)}; }
template <class T> Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
    using std::atan2;
    T r2 = x.v * x.v + y.v * y.v;
    return {atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2};
}
template <class T> Dual<T> pow(const Dual<T>& a, double p) {
    using std::pow;
    return {pow(a.v, p), p * pow(a.v, p - 1.0) * a.d};
}
template <class T> Dual<T> abs(const Dual<T>& a) { return value_of(a) < 0 ? -a : a; }

using D1 = Dual<double>;
using D2 = Dual<Dual<double>>;
using D3 = Dual<D2>;

// Seeds x + eps along direction dx.
inline D1 seed(double x, double dx) { return {x, dx}; }

}  // namespace plastsym
