#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <unordered_map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fieldcore.hpp"
#include "numerics.hpp"
#include "solutions.hpp"

namespace plastsym {

using Vec2 = std::array<double, 2>;

enum class CurveKind { flowline, limit, sliplineA, sliplineB, contour, vector };

inline std::string to_string(CurveKind k) {
    switch (k) {
        case CurveKind::flowline: return "flowline";
        case CurveKind::limit: return "limit";
        case CurveKind::sliplineA: return "sliplineA";
        case CurveKind::sliplineB: return "sliplineB";
        case CurveKind::contour: return "contour";
        case CurveKind::vector: return "vector";
    }
    return "?";
}

inline CurveKind curve_kind_from_string(const std::string& s) {
    for (auto k : {CurveKind::flowline, CurveKind::limit, CurveKind::sliplineA, CurveKind::sliplineB,
                   CurveKind::contour, CurveKind::vector})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown curve kind: " + s);
}

enum class StopReason { steps, domain, stagnation, closed, crossing };

inline std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::steps: return "steps";
        case StopReason::domain: return "domain";
        case StopReason::stagnation: return "stagnation";
        case StopReason::closed: return "closed";
        case StopReason::crossing: return "crossing";
    }
    return "?";
}

struct Polyline {
    std::string id;
    CurveKind kind = CurveKind::flowline;
    std::vector<Vec2> points;
    struct Meta {
        Vec2 start{0, 0};
        std::string parametrization = "arc-length";
        std::string family;
        double ds = 0.0;
        StopReason stop_forward = StopReason::steps;
        StopReason stop_backward = StopReason::steps;
    } meta;

    double length() const {
        double L = 0;
        for (std::size_t i = 1; i < points.size(); ++i)
            L += std::hypot(points[i][0] - points[i - 1][0], points[i][1] - points[i - 1][1]);
        return L;
    }
};

struct TraceError : DomainError {
    using DomainError::DomainError;
};

// Direction field: returns a (not necessarily unit) tangent, or nullopt outside the domain.
using DirectionField = std::function<std::optional<Vec2>(double, double)>;

namespace detail {

struct TraceResult {
    std::vector<Vec2> pts;
    StopReason reason = StopReason::steps;
};

// Classical RK4 on the unit field, step ds. For line fields (defined up to
// sign) each stage is aligned with the current heading.
// Optional hook: stop(prev, next) -> reason, checked after each accepted step.
using StopHook = std::function<std::optional<StopReason>(const Vec2&, const Vec2&)>;

inline TraceResult rk4_trace(const DirectionField& f, Vec2 start, double ds, int n_steps, double sign, bool line_field,
                             const StopHook& hook = {}, double stagnation = 1e-8) {
    TraceResult out;
    out.pts.push_back(start);
    auto unit = [&](Vec2 p, const Vec2* ref) -> std::optional<Vec2> {
        auto d = f(p[0], p[1]);
        if (!d) return std::nullopt;
        double n = std::hypot((*d)[0], (*d)[1]);
        if (!std::isfinite(n)) return std::nullopt;
        if (n < stagnation) throw TraceError("stagnation");
        Vec2 e{(*d)[0] / n, (*d)[1] / n};
        if (ref && line_field && e[0] * (*ref)[0] + e[1] * (*ref)[1] < 0) e = {-e[0], -e[1]};
        return e;
    };
    auto first = unit(start, nullptr);
    if (!first) throw TraceError("start point outside the domain");
    Vec2 heading{sign * (*first)[0], sign * (*first)[1]};
    Vec2 p = start;
    for (int i = 0; i < n_steps; ++i) {
        try {
            auto k1 = unit(p, &heading);
            if (!k1) { out.reason = StopReason::domain; return out; }
            Vec2 s1 = line_field ? *k1 : Vec2{sign * (*k1)[0], sign * (*k1)[1]};
            auto k2 = unit({p[0] + 0.5 * ds * s1[0], p[1] + 0.5 * ds * s1[1]}, &s1);
            if (!k2) { out.reason = StopReason::domain; return out; }
            Vec2 s2 = line_field ? *k2 : Vec2{sign * (*k2)[0], sign * (*k2)[1]};
            auto k3 = unit({p[0] + 0.5 * ds * s2[0], p[1] + 0.5 * ds * s2[1]}, &s2);
            if (!k3) { out.reason = StopReason::domain; return out; }
            Vec2 s3 = line_field ? *k3 : Vec2{sign * (*k3)[0], sign * (*k3)[1]};
            auto k4 = unit({p[0] + ds * s3[0], p[1] + ds * s3[1]}, &s3);
            if (!k4) { out.reason = StopReason::domain; return out; }
            Vec2 s4 = line_field ? *k4 : Vec2{sign * (*k4)[0], sign * (*k4)[1]};
            Vec2 q{p[0] + ds / 6.0 * (s1[0] + 2 * s2[0] + 2 * s3[0] + s4[0]),
                   p[1] + ds / 6.0 * (s1[1] + 2 * s2[1] + 2 * s3[1] + s4[1])};
            if (!f(q[0], q[1])) { out.reason = StopReason::domain; return out; }
            heading = s1;
            out.pts.push_back(q);
            if (hook) {
                if (auto r = hook(p, q)) {
                    out.reason = *r;
                    return out;
                }
            }
            p = q;
        } catch (const TraceError&) {
            if (out.pts.size() == 1) throw;
            out.reason = StopReason::stagnation;
            return out;
        }
    }
    return out;
}

// One RK4 step of length h along sign * (unit field); nullopt if a stage leaves the domain.
inline std::optional<Vec2> rk4_unit_step(const DirectionField& f, Vec2 p, double h, double sign) {
    auto unit = [&](Vec2 q) -> std::optional<Vec2> {
        auto d = f(q[0], q[1]);
        if (!d) return std::nullopt;
        const double n = std::hypot((*d)[0], (*d)[1]);
        if (!(n > 0) || !std::isfinite(n)) return std::nullopt;
        return Vec2{sign * (*d)[0] / n, sign * (*d)[1] / n};
    };
    auto k1 = unit(p);
    if (!k1) return std::nullopt;
    auto k2 = unit({p[0] + 0.5 * h * (*k1)[0], p[1] + 0.5 * h * (*k1)[1]});
    if (!k2) return std::nullopt;
    auto k3 = unit({p[0] + 0.5 * h * (*k2)[0], p[1] + 0.5 * h * (*k2)[1]});
    if (!k3) return std::nullopt;
    auto k4 = unit({p[0] + h * (*k3)[0], p[1] + h * (*k3)[1]});
    if (!k4) return std::nullopt;
    return Vec2{p[0] + h / 6.0 * ((*k1)[0] + 2 * (*k2)[0] + 2 * (*k3)[0] + (*k4)[0]),
                p[1] + h / 6.0 * ((*k1)[1] + 2 * (*k2)[1] + 2 * (*k3)[1] + (*k4)[1])};
}

inline DirectionField velocity_field(const Solution& s) {
    return [&s](double x, double y) -> std::optional<Vec2> {
        if (!s.velocity_contains(x, y)) return std::nullopt;
        auto v = s.velocity(x, y);
        if (!std::isfinite(v[0]) || !std::isfinite(v[1])) return std::nullopt;
        return Vec2{v[0], v[1]};
    };
}

inline DirectionField relative_velocity_field(const Solution& s, FeedVelocity feed) {
    return [&s, feed](double x, double y) -> std::optional<Vec2> {
        if (!s.velocity_contains(x, y)) return std::nullopt;
        auto v = s.velocity(x, y);
        if (!std::isfinite(v[0]) || !std::isfinite(v[1])) return std::nullopt;
        return Vec2{feed.U0 - v[0], feed.V0 - v[1]};
    };
}

inline DirectionField slip_field(const Solution& s, bool branch_a) {
    return [&s, branch_a](double x, double y) -> std::optional<Vec2> {
        if (!s.contains(x, y)) return std::nullopt;
        const double th = s.state(x, y).theta;
        if (!std::isfinite(th)) return std::nullopt;
        return branch_a ? Vec2{std::cos(th), std::sin(th)} : Vec2{-std::sin(th), std::cos(th)};
    };
}

// Forward trace (direction +1) or backward (-1).
inline Polyline trace(const DirectionField& f, CurveKind kind, const Solution& s, Vec2 start, double ds, int n_steps,
                      int direction, bool line_field) {
    if (direction != 1 && direction != -1) throw std::invalid_argument("trace: direction must be +1 or -1");
    auto r = rk4_trace(f, start, ds, n_steps, direction, line_field);
    Polyline p;
    p.kind = kind;
    p.points = std::move(r.pts);
    p.meta.start = start;
    p.meta.family = s.family;
    p.meta.ds = ds;
    p.meta.stop_forward = r.reason;
    return p;
}

// Both directions from the seed, joined so that the points run along +direction.
inline Polyline trace_both(const DirectionField& f, CurveKind kind, const Solution& s, Vec2 start, double ds,
                           int n_steps, bool line_field, const StopHook& hook = {}) {
    auto fw = rk4_trace(f, start, ds, n_steps, +1, line_field, hook);
    auto bw = rk4_trace(f, start, ds, n_steps, -1, line_field, hook);
    Polyline p;
    p.kind = kind;
    p.points.assign(bw.pts.rbegin(), bw.pts.rend());
    p.points.insert(p.points.end(), fw.pts.begin() + 1, fw.pts.end());
    p.meta.start = start;
    p.meta.family = s.family;
    p.meta.ds = ds;
    p.meta.stop_forward = fw.reason;
    p.meta.stop_backward = bw.reason;
    return p;
}

}  // namespace detail

inline Polyline trace_flow_line(const Solution& s, Vec2 start, double ds, int n_steps, int direction = 1) {
    if (!s.velocity_contains(start[0], start[1])) throw TraceError("trace_flow_line: start outside domain");
    auto v = s.velocity(start[0], start[1]);
    if (std::hypot(v[0], v[1]) < 1e-8) throw TraceError("trace_flow_line: stagnation at start");
    return detail::trace(detail::velocity_field(s), CurveKind::flowline, s, start, ds, n_steps, direction, false);
}

inline Polyline trace_plasticity_limit(const Solution& s, FeedVelocity feed, Vec2 start, double ds, int n_steps,
                                       int direction = 1) {
    if (feed.U0 == 0.0 && feed.V0 == 0.0) throw std::invalid_argument("feed velocity must be nonzero");
    if (!s.velocity_contains(start[0], start[1])) throw TraceError("trace_plasticity_limit: start outside domain");
    auto v = s.velocity(start[0], start[1]);
    if (std::hypot(feed.U0 - v[0], feed.V0 - v[1]) < 1e-8)
        throw NearStagnation("trace_plasticity_limit: relative velocity vanishes at start");
    return detail::trace(detail::relative_velocity_field(s, feed), CurveKind::limit, s, start, ds, n_steps, direction,
                         false);
}

enum class SlipBranch { A, B };

inline Polyline trace_slip_line(const Solution& s, Vec2 start, SlipBranch branch, double ds, int n_steps,
                                int direction = 1) {
    if (!s.contains(start[0], start[1])) throw TraceError("trace_slip_line: start outside domain");
    const bool a = branch == SlipBranch::A;
    return detail::trace(detail::slip_field(s, a), a ? CurveKind::sliplineA : CurveKind::sliplineB, s, start, ds,
                         n_steps, direction, true);
}

// Tangent at point i: derivative of the Lagrange interpolant through up to seven
// neighbouring points, parametrized by cumulative chord length. Only the
// direction is meaningful.
inline Vec2 tangent_at(const Polyline& p, std::size_t i) {
    const std::size_t n = p.points.size();
    const std::size_t lo = i >= 3 ? i - 3 : 0, hi = std::min(n - 1, i + 3);
    std::vector<double> t;
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
        if (j > lo) acc += std::hypot(p.points[j][0] - p.points[j - 1][0], p.points[j][1] - p.points[j - 1][1]);
        t.push_back(acc);
    }
    const std::size_t c = i - lo;
    Vec2 d{0, 0};
    for (std::size_t j = 0; j < t.size(); ++j) {
        double w;
        if (j == c) {
            w = 0.0;
            for (std::size_t k = 0; k < t.size(); ++k)
                if (k != c) w += 1.0 / (t[c] - t[k]);
        } else {
            double num = 1.0, den = 1.0;
            for (std::size_t k = 0; k < t.size(); ++k) {
                if (k != j) den *= t[j] - t[k];
                if (k != j && k != c) num *= t[c] - t[k];
            }
            w = num / den;
        }
        d[0] += w * p.points[lo + j][0];
        d[1] += w * p.points[lo + j][1];
    }
    return d;
}

// Max angle (rad) between the polyline tangent and (u, v) over interior points.
inline double tangency_error(const Polyline& p, const Solution& s) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < p.points.size(); ++i) {
        const Vec2 t = tangent_at(p, i);
        auto v = s.velocity(p.points[i][0], p.points[i][1]);
        worst = std::max(worst, std::abs(std::atan2(t[0] * v[1] - t[1] * v[0], t[0] * v[0] + t[1] * v[1])));
    }
    return worst;
}

// Max |sin| of the angle between the polyline tangent and (U0 - u, V0 - v).
inline double limit_slope_residual(const Polyline& p, const Solution& s, FeedVelocity feed) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < p.points.size(); ++i) {
        const Vec2 t = tangent_at(p, i);
        auto v = s.velocity(p.points[i][0], p.points[i][1]);
        const double a = feed.U0 - v[0], b = feed.V0 - v[1];
        worst = std::max(worst, std::abs(t[0] * b - t[1] * a) / (std::hypot(t[0], t[1]) * std::hypot(a, b)));
    }
    return worst;
}

// ---------------------------------------------------------------- intersections

struct Crossing {
    Vec2 point{0, 0};
    double s_a = 0;  // fractional index along the first polyline
    double s_b = 0;
};

// Uniform-grid bucket index over the segments of a polyline.
class SegmentIndex {
public:
    explicit SegmentIndex(const Polyline& p) : p_(&p) {
        const auto& pts = p.points;
        double L = 0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) L = std::max(L, seg_len(i));
        cell_ = std::max(L * 4.0, 1e-9);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            auto [x0, x1, y0, y1] = cells_of(pts[i], pts[i + 1]);
            for (long cx = x0; cx <= x1; ++cx)
                for (long cy = y0; cy <= y1; ++cy) buckets_[key(cx, cy)].push_back(i);
        }
    }

    // Crossings of segment (a, b) with the indexed polyline; s_a is the parameter on (a, b).
    std::vector<Crossing> crossings(Vec2 a, Vec2 b) const {
        std::vector<Crossing> out;
        auto [x0, x1, y0, y1] = cells_of(a, b);
        std::vector<std::size_t> cand;
        for (long cx = x0; cx <= x1; ++cx)
            for (long cy = y0; cy <= y1; ++cy) {
                auto it = buckets_.find(key(cx, cy));
                if (it != buckets_.end()) cand.insert(cand.end(), it->second.begin(), it->second.end());
            }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        const Vec2 r{b[0] - a[0], b[1] - a[1]};
        for (std::size_t j : cand) {
            const Vec2 q = p_->points[j], s{p_->points[j + 1][0] - q[0], p_->points[j + 1][1] - q[1]};
            const double den = r[0] * s[1] - r[1] * s[0];
            if (den == 0.0) continue;
            const double qp0 = q[0] - a[0], qp1 = q[1] - a[1];
            const double t = (qp0 * s[1] - qp1 * s[0]) / den;
            const double u = (qp0 * r[1] - qp1 * r[0]) / den;
            if (t < 0 || t > 1 || u < 0 || u > 1) continue;
            // a hit on a shared vertex belongs to the later segment
            if (u == 1 && j + 2 < p_->points.size()) continue;
            out.push_back({{a[0] + t * r[0], a[1] + t * r[1]}, t, j + u});
        }
        return out;
    }

private:
    const Polyline* p_;
    double cell_ = 1.0;
    std::unordered_map<long long, std::vector<std::size_t>> buckets_;

    double seg_len(std::size_t i) const {
        return std::hypot(p_->points[i + 1][0] - p_->points[i][0], p_->points[i + 1][1] - p_->points[i][1]);
    }
    static long long key(long cx, long cy) { return (static_cast<long long>(cx) << 32) ^ (cy & 0xffffffffLL); }
    std::array<long, 4> cells_of(Vec2 a, Vec2 b) const {
        auto c = [&](double v) { return static_cast<long>(std::floor(v / cell_)); };
        return {c(std::min(a[0], b[0])), c(std::max(a[0], b[0])), c(std::min(a[1], b[1])), c(std::max(a[1], b[1]))};
    }
};

inline std::vector<Crossing> intersections(const Polyline& a, const Polyline& b) {
    std::vector<Crossing> out;
    if (a.points.size() < 2 || b.points.size() < 2) return out;
    SegmentIndex idx(b);
    for (std::size_t i = 0; i + 1 < a.points.size(); ++i)
        for (auto c : idx.crossings(a.points[i], a.points[i + 1])) {
            if (c.s_a == 1.0 && i + 2 < a.points.size()) continue;
            c.s_a += static_cast<double>(i);
            out.push_back(c);
        }
    return out;
}

inline double distance_to(const Polyline& c, Vec2 x) {
    double best = std::numeric_limits<double>::infinity();
    if (c.points.size() == 1) return std::hypot(c.points[0][0] - x[0], c.points[0][1] - x[1]);
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
        const Vec2 a = c.points[i], b = c.points[i + 1];
        const double dx = b[0] - a[0], dy = b[1] - a[1];
        const double L2 = dx * dx + dy * dy;
        double t = L2 > 0 ? ((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / L2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::hypot(a[0] + t * dx - x[0], a[1] + t * dy - x[1]));
    }
    return best;
}

// Fractional index of the point of `c` closest to x.
inline double project_onto(const Polyline& c, Vec2 x) {
    double best = std::numeric_limits<double>::infinity(), at = 0;
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
        const Vec2 a = c.points[i], b = c.points[i + 1];
        const double dx = b[0] - a[0], dy = b[1] - a[1];
        const double L2 = dx * dx + dy * dy;
        double t = L2 > 0 ? ((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / L2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double d = std::hypot(a[0] + t * dx - x[0], a[1] + t * dy - x[1]);
        if (d < best) { best = d; at = i + t; }
    }
    return at;
}

inline Vec2 point_at(const Polyline& p, double s) {
    const std::size_t i = std::min(static_cast<std::size_t>(std::floor(s)), p.points.size() - 2);
    const double t = s - i;
    return {p.points[i][0] + t * (p.points[i + 1][0] - p.points[i][0]),
            p.points[i][1] + t * (p.points[i + 1][1] - p.points[i][1])};
}

// Point at fractional index s: node i plus a fraction of the next step.
using Locator = std::function<Vec2(const Polyline&, double)>;

// Sub-polyline between fractional indices s0 and s1 (either order); endpoints
// from `locate` (linear interpolation by default).
inline Polyline slice(const Polyline& p, double s0, double s1, const Locator& locate = {}) {
    Polyline out = p;
    out.points.clear();
    const bool rev = s1 < s0;
    const double a = std::min(s0, s1), b = std::max(s0, s1);
    auto at = [&](double x) { return locate ? locate(p, x) : point_at(p, x); };
    out.points.push_back(at(a));
    for (std::size_t i = static_cast<std::size_t>(std::floor(a)) + 1; static_cast<double>(i) < b; ++i)
        if (p.points[i] != out.points.back()) out.points.push_back(p.points[i]);
    const Vec2 e = at(b);
    if (e != out.points.back()) out.points.push_back(e);
    if (rev) std::reverse(out.points.begin(), out.points.end());
    return out;
}

// ---------------------------------------------------------------- die assembly

struct DieSpec {
    Vec2 inner_seed{0, 0};
    Vec2 outer_seed{0, 0};
    FeedVelocity feed{1, 0};
    FeedVelocity extract{1, 0};
    Vec2 entry_seed{0, 0};
    Vec2 exit_seed{0, 0};
    double ds = 1e-3;
    int n_steps = 100000;
    int contour_direction = 1;  // reversing it must not change the assembled die
    double snap_tol = 1e-3;
};

struct DieGeometry {
    Polyline inner, outer;
    Polyline entry_limit, exit_limit;  // C1, C2
    FeedVelocity feed, extract;
    std::map<std::string, double> gaps;  // limit endpoint to contour distances
};

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// A contour traced both ways from its seed, each way stopped early if it
// returns to the seed. The stored orientation follows the velocity; a closed
// flow line is kept as the single forward loop.
inline Polyline trace_contour(const Solution& s, Vec2 seed, const DieSpec& spec) {
    auto field = velocity_field(s);
    auto closes = [&]() -> StopHook {
        auto travelled = std::make_shared<double>(0.0);
        return [travelled, seed, ds = spec.ds](const Vec2& a, const Vec2& b) -> std::optional<StopReason> {
            *travelled += std::hypot(b[0] - a[0], b[1] - a[1]);
            if (*travelled < 10 * ds) return std::nullopt;
            const double dx = b[0] - a[0], dy = b[1] - a[1];
            double t = ((seed[0] - a[0]) * dx + (seed[1] - a[1]) * dy) / (dx * dx + dy * dy);
            t = std::clamp(t, 0.0, 1.0);
            if (std::hypot(a[0] + t * dx - seed[0], a[1] + t * dy - seed[1]) < 0.5 * ds) return StopReason::closed;
            return std::nullopt;
        };
    };
    TraceResult fw, bw;
    auto run_fw = [&] { fw = rk4_trace(field, seed, spec.ds, spec.n_steps, +1, false, closes()); };
    auto run_bw = [&] {
        if (fw.reason == StopReason::closed) {
            bw.pts = {seed};
            bw.reason = StopReason::closed;
        } else {
            bw = rk4_trace(field, seed, spec.ds, spec.n_steps, -1, false, closes());
        }
    };
    if (spec.contour_direction >= 0) {
        run_fw();
        run_bw();
    } else {
        // backward first; a closed forward loop still wins
        bw = rk4_trace(field, seed, spec.ds, spec.n_steps, -1, false, closes());
        run_fw();
        if (fw.reason == StopReason::closed) run_bw();
    }
    Polyline p;
    p.kind = CurveKind::contour;
    p.points.assign(bw.pts.rbegin(), bw.pts.rend());
    p.points.insert(p.points.end(), fw.pts.begin() + 1, fw.pts.end());
    p.meta.start = seed;
    p.meta.family = s.family;
    p.meta.ds = spec.ds;
    p.meta.stop_forward = fw.reason;
    p.meta.stop_backward = bw.reason;
    return p;
}

struct LimitCut {
    Polyline curve;
    double s_inner = 0, s_outer = 0;  // fractional indices on the contours
};

// Limit curve from its seed in both directions, each direction stopped at the
// first transversal crossing with either contour. The seed itself counts as a
// crossing when it lies on a contour within the snap tolerance.
inline LimitCut cut_limit(const Solution& s, FeedVelocity fv, Vec2 seed, const Polyline& inner, const Polyline& outer,
                          const DieSpec& spec, const std::string& name) {
    const SegmentIndex ii(inner), io(outer);
    struct Hit {
        Vec2 point;
        int contour;  // 0 inner, 1 outer
        double s_contour;
    };
    auto field = relative_velocity_field(s, fv);
    // crossing on the chord (a, b) at fraction t, moved onto the integral curve
    auto on_curve = [&](Vec2 a, Vec2 b, double t, double sign, Vec2 chord_pt) {
        if (t <= 0.0) return a;
        const double h = t * std::hypot(b[0] - a[0], b[1] - a[1]);
        auto q = rk4_unit_step(field, a, h, sign);
        return q ? *q : chord_pt;
    };
    auto run = [&](double sign, std::optional<Hit>& hit) {
        StopHook hook = [&](const Vec2& a, const Vec2& b) -> std::optional<StopReason> {
            std::optional<Hit> best;
            double best_t = 2.0;
            for (int k = 0; k < 2; ++k)
                for (const auto& c : (k == 0 ? ii : io).crossings(a, b)) {
                    if (std::hypot(c.point[0] - seed[0], c.point[1] - seed[1]) < spec.snap_tol) continue;
                    if (c.s_a < best_t) {
                        best_t = c.s_a;
                        best = Hit{on_curve(a, b, c.s_a, sign, c.point), k, c.s_b};
                    }
                }
            if (best) {
                hit = best;
                return StopReason::crossing;
            }
            return std::nullopt;
        };
        return rk4_trace(field, seed, spec.ds, spec.n_steps, sign, false, hook);
    };
    std::optional<Hit> h_fw, h_bw;
    auto fw = run(+1, h_fw);
    auto bw = run(-1, h_bw);
    // the seed on a contour stands in for the crossing on one side
    std::optional<Hit> on_seed;
    const double di = distance_to(inner, seed), dout = distance_to(outer, seed);
    if (std::min(di, dout) < spec.snap_tol)
        on_seed = di <= dout ? Hit{seed, 0, project_onto(inner, seed)} : Hit{seed, 1, project_onto(outer, seed)};

    auto gap_msg = [&]() {
        std::ostringstream os;
        os << name << " does not reach both contours (forward stop " << to_string(fw.reason) << ", backward stop "
           << to_string(bw.reason) << "); end gaps to inner/outer: " << distance_to(inner, fw.pts.back()) << "/"
           << distance_to(outer, fw.pts.back()) << " and " << distance_to(inner, bw.pts.back()) << "/"
           << distance_to(outer, bw.pts.back());
        return os.str();
    };
    // replace the last point of a trace with its crossing point
    auto ends_at = [](std::vector<Vec2> pts, Vec2 x) {
        pts.back() = x;
        if (pts.size() >= 2 && pts[pts.size() - 2] == x) pts.pop_back();
        return pts;
    };
    std::vector<Vec2> fpts = fw.pts, bpts = bw.pts;
    Hit a, b;  // backward end, forward end
    if (h_fw && h_bw && h_fw->contour != h_bw->contour) {
        a = *h_bw;
        b = *h_fw;
        bpts = ends_at(bpts, a.point);
        fpts = ends_at(fpts, b.point);
    } else if (on_seed && h_fw && h_fw->contour != on_seed->contour) {
        a = *on_seed;
        b = *h_fw;
        bpts = {seed};
        fpts = ends_at(fpts, b.point);
    } else if (on_seed && h_bw && h_bw->contour != on_seed->contour) {
        a = *h_bw;
        b = *on_seed;
        bpts = ends_at(bpts, a.point);
        fpts = {seed};
    } else {
        throw AssemblyError(gap_msg());
    }
    LimitCut out;
    out.curve.kind = CurveKind::limit;
    out.curve.points.assign(bpts.rbegin(), bpts.rend());
    out.curve.points.insert(out.curve.points.end(), fpts.begin() + 1, fpts.end());
    if (out.curve.points.size() < 2) throw AssemblyError(name + ": degenerate limit curve");
    // canonical orientation: inner contour first
    if (a.contour == 1) {
        std::reverse(out.curve.points.begin(), out.curve.points.end());
        std::swap(a, b);
    }
    out.s_inner = a.s_contour;
    out.s_outer = b.s_contour;
    out.curve.meta.start = seed;
    out.curve.meta.family = s.family;
    out.curve.meta.ds = spec.ds;
    out.curve.meta.stop_forward = fw.reason;
    out.curve.meta.stop_backward = bw.reason;
    return out;
}

}  // namespace detail

inline DieGeometry assemble_die(const Solution& s, const DieSpec& spec) {
    for (auto seed : {spec.inner_seed, spec.outer_seed, spec.entry_seed, spec.exit_seed})
        if (!s.velocity_contains(seed[0], seed[1])) throw AssemblyError("assemble_die: seed outside domain");
    Polyline inner = detail::trace_contour(s, spec.inner_seed, spec);
    Polyline outer = detail::trace_contour(s, spec.outer_seed, spec);
    auto c1 = detail::cut_limit(s, spec.feed, spec.entry_seed, inner, outer, spec, "C1");
    auto c2 = detail::cut_limit(s, spec.extract, spec.exit_seed, inner, outer, spec, "C2");
    DieGeometry g;
    g.feed = spec.feed;
    g.extract = spec.extract;
    // contours run from their C1 crossing to their C2 crossing
    auto vf = detail::velocity_field(s);
    Locator on_flow = [&](const Polyline& p, double x) {
        const std::size_t i = std::min(static_cast<std::size_t>(std::floor(x)), p.points.size() - 2);
        const double t = x - i;
        if (t <= 0.0) return p.points[i];
        const Vec2 a = p.points[i], b = p.points[i + 1];
        auto q = detail::rk4_unit_step(vf, a, t * std::hypot(b[0] - a[0], b[1] - a[1]), +1);
        return q ? *q : point_at(p, x);
    };
    g.inner = slice(inner, c1.s_inner, c2.s_inner, on_flow);
    g.outer = slice(outer, c1.s_outer, c2.s_outer, on_flow);
    g.inner.id = "inner";
    g.outer.id = "outer";
    g.entry_limit = c1.curve;
    g.exit_limit = c2.curve;
    g.entry_limit.id = "C1";
    g.exit_limit.id = "C2";
    auto ends = [](const Polyline& l, const Polyline& c) {
        return std::min(distance_to(c, l.points.front()), distance_to(c, l.points.back()));
    };
    g.gaps["C1_inner"] = ends(g.entry_limit, g.inner);
    g.gaps["C1_outer"] = ends(g.entry_limit, g.outer);
    g.gaps["C2_inner"] = ends(g.exit_limit, g.inner);
    g.gaps["C2_outer"] = ends(g.exit_limit, g.outer);
    for (const auto& [k, v] : g.gaps)
        if (!(v < spec.snap_tol)) throw AssemblyError("assemble_die: " + k + " gap " + std::to_string(v));
    return g;
}

inline std::vector<Polyline> die_polylines(const DieGeometry& g) { return {g.inner, g.outer, g.entry_limit, g.exit_limit}; }

// ---------------------------------------------------------------- export

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void export_csv(const std::vector<Polyline>& lines, const std::string& path) {
    if (lines.empty()) throw std::invalid_argument("export_csv: empty geometry");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("export_csv: cannot write " + path);
    f << "curve_id,kind,x,y\n";
    for (const auto& l : lines)
        for (const auto& p : l.points) f << l.id << ',' << to_string(l.kind) << ',' << format_g17(p[0]) << ',' << format_g17(p[1]) << '\n';
    if (!f) throw std::runtime_error("export_csv: write failed for " + path);
}

inline std::vector<Polyline> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    std::getline(f, line);
    if (line != "curve_id,kind,x,y") throw std::runtime_error("read_csv: bad header");
    std::vector<Polyline> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, kind, xs, ys;
        std::getline(ss, id, ',');
        std::getline(ss, kind, ',');
        std::getline(ss, xs, ',');
        std::getline(ss, ys, ',');
        if (out.empty() || out.back().id != id) {
            out.emplace_back();
            out.back().id = id;
            out.back().kind = curve_kind_from_string(kind);
        }
        out.back().points.push_back({std::strtod(xs.c_str(), nullptr), std::strtod(ys.c_str(), nullptr)});
    }
    return out;
}

inline void export_svg(const std::vector<Polyline>& lines, const std::string& path) {
    if (lines.empty()) throw std::invalid_argument("export_svg: empty geometry");
    double xl = INFINITY, xh = -INFINITY, yl = INFINITY, yh = -INFINITY;
    for (const auto& l : lines)
        for (const auto& p : l.points) {
            xl = std::min(xl, p[0]); xh = std::max(xh, p[0]);
            yl = std::min(yl, p[1]); yh = std::max(yh, p[1]);
        }
    double w = std::max(xh - xl, 1e-9), h = std::max(yh - yl, 1e-9);
    const double mx = 0.05 * w, my = 0.05 * h;
    xl -= mx; xh += mx; yl -= my; yh += my;
    w = xh - xl;
    h = yh - yl;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("export_svg: cannot write " + path);
    static const std::map<CurveKind, std::string> style = {
        {CurveKind::flowline, "stroke:#1f77b4"}, {CurveKind::limit, "stroke:#d62728;stroke-dasharray:4 2"},
        {CurveKind::sliplineA, "stroke:#2ca02c"}, {CurveKind::sliplineB, "stroke:#9467bd"},
        {CurveKind::contour, "stroke:#000000"},  {CurveKind::vector, "stroke:#555555"}};
    const double lw = 0.003 * std::max(w, h);
    f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\""
      << static_cast<int>(std::round(800 * h / w)) << "\" viewBox=\"" << format_g17(xl) << ' ' << format_g17(-yh) << ' '
      << format_g17(w) << ' ' << format_g17(h) << "\">\n";
    for (const auto& l : lines) {
        f << "<path id=\"" << l.id << "\" class=\"" << to_string(l.kind) << "\" style=\"fill:none;" << style.at(l.kind)
          << ";stroke-width:" << format_g17(lw) << "\" d=\"";
        for (std::size_t i = 0; i < l.points.size(); ++i)
            f << (i ? " L" : "M") << format_g17(l.points[i][0]) << ',' << format_g17(-l.points[i][1]);
        f << "\"/>\n";
    }
    f << "</svg>\n";
    if (!f) throw std::runtime_error("export_svg: write failed for " + path);
}

enum class ExportFormat { csv, svg };

inline void export_geometry(const std::vector<Polyline>& lines, ExportFormat fmt, const std::string& path) {
    fmt == ExportFormat::csv ? export_csv(lines, path) : export_svg(lines, path);
}
inline void export_geometry(const DieGeometry& g, ExportFormat fmt, const std::string& path) {
    export_geometry(die_polylines(g), fmt, path);
}

}  // namespace plastsym
