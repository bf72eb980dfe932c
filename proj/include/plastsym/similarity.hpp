#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dual.hpp"
#include "fieldcore.hpp"
#include "numerics.hpp"

namespace plastsym {

struct BranchError : DomainError {
    using DomainError::DomainError;
};

// Angle profile J(xi) for theta = J(y/x) with first integral
//   ((xi^2-1) sin 2J + 2 xi cos 2J) J' = c1,  c1 != 0.
// With phi = atan(xi) and psi = phi - J this integrates to
//   phi = psi + c1 I(psi) + c2,   I'(psi) = 1/(sin 2psi - c1),
// which is solved for psi on one monotone branch picked by the anchor psi0.
class SimilarityProfile {
public:
    struct Row {
        double psi, phi, xi, J;
    };
    struct Eval {
        double J = 0.0;
        double psi = 0.0;
        double residual = 0.0;  // |F/F'| at the returned psi
    };

    SimilarityProfile(double c1, double c2, double psi0 = std::numbers::pi / 4) : c1_(c1), c2_(c2), psi0_(psi0) {
        if (c1 == 0.0 || !std::isfinite(c1)) throw DomainError("SimilarityProfile: c1 must be nonzero");
        build();
    }

    // Profile through (xi0, J0 = atan(xi0) - psi0).
    static SimilarityProfile from_anchor(double c1, double xi0, double psi0) {
        SimilarityProfile tmp(c1, 0.0, psi0);
        double c2 = std::atan(xi0) - tmp.Phi(psi0);
        return SimilarityProfile(c1, c2, psi0);
    }

    double c1() const { return c1_; }
    double c2() const { return c2_; }
    double psi0() const { return psi0_; }
    double psi_lo() const { return psi_lo_; }
    double psi_hi() const { return psi_hi_; }
    double xi_min() const { return xi_min_; }
    double xi_max() const { return xi_max_; }
    double anchor_xi() const { return std::tan(Phi(psi0_) + c2_ - window_center_); }
    const std::vector<Row>& cache() const { return cache_; }

    // Lower limit for the indefinite integrals.
    double xi_ref() const { return contains(1.0) ? 1.0 : anchor_xi(); }

    double I(double psi) const {
        const double a = c1_ * std::tan(psi) - 1.0;
        if (std::abs(c1_) > 1.0) {
            const double q = std::sqrt(c1_ * c1_ - 1.0);
            const double wrap = std::floor(psi / std::numbers::pi + 0.5);
            return -(std::atan(a / q) + (c1_ > 0 ? 1.0 : -1.0) * std::numbers::pi * wrap) / q;
        }
        if (std::abs(c1_) < 1.0) {
            const double p = std::sqrt(1.0 - c1_ * c1_);
            return std::log(std::abs((a + p) / (a - p))) / (2.0 * p);
        }
        return 1.0 / a;
    }
    double dI(double psi) const { return 1.0 / (std::sin(2 * psi) - c1_); }
    double Phi(double psi) const { return psi + c1_ * I(psi); }
    double dPhi(double psi) const {
        const double s = std::sin(2 * psi);
        return s / (s - c1_);
    }

    static double Dn(double xi, double J) { return (xi * xi - 1.0) * std::sin(2 * J) + 2.0 * xi * std::cos(2 * J); }
    template <class S>
    static S Dn(const S& xi, const S& J) {
        return (xi * xi - 1.0) * sin(2.0 * J) + 2.0 * xi * cos(2.0 * J);
    }

    bool contains(double xi, double guard = 0.0) const {
        return std::isfinite(xi) && xi > xi_min_ + guard && xi < xi_max_ - guard;
    }

    Eval solve(double xi) const {
        if (!std::isfinite(xi)) throw BranchError("similarity_J: non-finite xi");
        const double phi = std::atan(xi) + window_center_;
        auto F = [&](double psi) { return Phi(psi) + c2_ - phi; };
        const bool inc = cache_.back().phi > cache_.front().phi;
        auto less = [&](const Row& r, double v) { return inc ? r.phi < v : r.phi > v; };
        auto it = std::lower_bound(cache_.begin(), cache_.end(), phi, less);
        double psi;
        if (it == cache_.end() || (it == cache_.begin() && it->phi != phi)) {
            // Beyond the cache: only acceptable at a pole end, where psi is pinned
            // within rounding of the endpoint.
            const Row& r = it == cache_.end() ? cache_.back() : cache_.front();
            psi = r.psi;
        } else if (it->phi == phi) {
            psi = it->psi;
        } else {
            const Row& a = *(it - 1);
            const Row& b = *it;
            psi = brent_root(F, a.psi, b.psi, 0.0, 200);
        }
        Eval e;
        e.psi = psi;
        e.J = phi - psi;
        const double d = dPhi(psi);
        e.residual = std::abs(F(psi) / d);
        if (!std::isfinite(e.residual) || e.residual > 1e-12)
            throw BranchError("similarity_J: xi outside the profile branch (correction " + std::to_string(e.residual) + ")");
        return e;
    }

    double J(double xi) const { return solve(xi).J; }

    // J at any dual level; derivatives come from the first integral.
    template <class S>
    S J_of(const S& xi) const {
        if constexpr (std::is_same_v<S, double>) {
            return J(xi);
        } else {
            using U = std::decay_t<decltype(xi.v)>;
            U j = J_of<U>(xi.v);
            U jp = c1_ / Dn<U>(xi.v, j);
            return S{j, jp * xi.d};
        }
    }

    enum class Integral { CosInt, PhiQ, PsiQ };

    // Integrand of the named integral at level U.
    template <class U>
    U integrand(Integral which, const U& s) const {
        U j = J_of<U>(s);
        switch (which) {
            case Integral::CosInt: return cos(2.0 * j);
            case Integral::PhiQ: return sin(2.0 * j) * (c1_ / Dn<U>(s, j)) / s;
            case Integral::PsiQ: return s * sin(2.0 * j) * (c1_ / Dn<U>(s, j));
        }
        return U(0.0);
    }

    // int_{xi_ref}^{xi} of the integrand, adaptive Gauss-Kronrod in xi.
    double integral(Integral which, double xi, double abs_tol = 1e-10) const {
        return integral_between(which, xi_ref(), xi, abs_tol);
    }
    double integral_between(Integral which, double a, double b, double abs_tol = 1e-10) const {
        if (a == b) return 0.0;
        if (!contains(a) || !contains(b)) throw BranchError("profile integral: limits outside the branch");
        if ((which == Integral::PhiQ) && (a <= 0.0) != (b <= 0.0))
            throw DomainError("profile integral: interval crosses xi = 0");
        return integrate([&](double s) { return integrand<double>(which, s); }, a, b, abs_tol).value;
    }

    template <class S>
    S integral_of(Integral which, const S& xi) const {
        if constexpr (std::is_same_v<S, double>) {
            return integral(which, xi);
        } else {
            using U = std::decay_t<decltype(xi.v)>;
            return S{integral_of<U>(which, xi.v), integrand<U>(which, xi.v) * xi.d};
        }
    }

    // int sin(2J)/xi dJ over the same xi interval, by quadrature in psi on the
    // explicit branch parametrization; independent of the xi-space root solves.
    double phiq_by_substitution(double xi0, double xi1) const {
        if (xi0 == xi1) return 0.0;
        const double p0 = solve(xi0).psi, p1 = solve(xi1).psi;
        auto g = [&](double psi) {
            const double phi = Phi(psi) + c2_;
            const double J = phi - psi;
            const double dJ = dPhi(psi) - 1.0;
            return std::sin(2 * J) / std::tan(phi - window_center_) * dJ;
        };
        return integrate(g, p0, p1, 1e-12, 200).value;
    }

private:
    double c1_, c2_, psi0_;
    double psi_lo_ = 0, psi_hi_ = 0;
    double window_center_ = 0;
    double xi_min_ = 0, xi_max_ = 0;
    std::vector<Row> cache_;

    void build() {
        constexpr double pi = std::numbers::pi;
        // Critical points: sin 2psi = 0 and, for |c1| <= 1, sin 2psi = c1.
        std::vector<double> crit;
        const double base = std::floor(psi0_ / (pi / 2)) * (pi / 2);
        for (int m = -2; m <= 3; ++m) crit.push_back(base + m * pi / 2);
        if (std::abs(c1_) <= 1.0) {
            const double a = 0.5 * std::asin(c1_);
            const double k0 = std::floor(psi0_ / pi);
            for (int m = -2; m <= 2; ++m) {
                crit.push_back(a + (k0 + m) * pi);
                crit.push_back(pi / 2 - a + (k0 + m) * pi);
            }
        }
        std::sort(crit.begin(), crit.end());
        auto hi = std::upper_bound(crit.begin(), crit.end(), psi0_);
        psi_hi_ = *hi;
        psi_lo_ = *(hi - 1);
        const double width = psi_hi_ - psi_lo_;
        if (psi0_ - psi_lo_ < 1e-14 * std::max(1.0, std::abs(psi0_)) || psi_hi_ - psi0_ < 1e-14 * std::max(1.0, std::abs(psi0_)))
            throw DomainError("SimilarityProfile: anchor psi0 sits on a singular point");

        const double phi0 = Phi(psi0_) + c2_;
        window_center_ = std::round(phi0 / pi) * pi;

        // Nodes: uniform interior plus geometric clustering toward both ends, down to rounding level.
        std::vector<double> psis;
        const int nu = 400;
        for (int i = 1; i < nu; ++i) psis.push_back(psi_lo_ + width * i / nu);
        for (double e = 1.0; e <= 22.0; e += 0.125) {
            const double d = width * std::pow(10.0, -e);
            psis.push_back(psi_lo_ + d);
            psis.push_back(psi_hi_ - d);
        }
        psis.push_back(psi0_);
        // Representable neighbours of the ends.
        double l = psi_lo_, h = psi_hi_;
        for (int i = 0; i < 8; ++i) {
            l = std::nextafter(l, psi_hi_);
            h = std::nextafter(h, psi_lo_);
            psis.push_back(l);
            psis.push_back(h);
        }
        std::sort(psis.begin(), psis.end());
        psis.erase(std::unique(psis.begin(), psis.end()), psis.end());

        const double sgn = dPhi(psi0_) > 0 ? 1.0 : -1.0;
        cache_.clear();
        for (double p : psis) {
            if (!(p > psi_lo_ && p < psi_hi_)) continue;
            const double sp = std::sin(2 * p);
            // drop nodes on the wrong side of a rounded endpoint
            if (sp == 0.0 || sp - c1_ == 0.0) continue;
            if ((sp / (sp - c1_) > 0 ? 1.0 : -1.0) != sgn) continue;
            const double phi = Phi(p) + c2_;
            if (!std::isfinite(phi)) continue;
            if (phi <= window_center_ - pi / 2 || phi >= window_center_ + pi / 2) continue;
            const double xi = std::tan(phi - window_center_);
            cache_.push_back({p, phi, xi, phi - p});
        }
        // enforce strict monotonicity in phi (rounding can create ties near the ends)
        std::vector<Row> mono;
        for (const auto& r : cache_) {
            if (mono.empty() || (sgn > 0 ? r.phi > mono.back().phi : r.phi < mono.back().phi)) mono.push_back(r);
        }
        cache_ = std::move(mono);
        if (cache_.size() < 8) throw DomainError("SimilarityProfile: branch too narrow to tabulate");
        // sort by phi increasing
        if (cache_.front().phi > cache_.back().phi) std::reverse(cache_.begin(), cache_.end());
        xi_min_ = cache_.front().xi;
        xi_max_ = cache_.back().xi;
    }
};

}  // namespace plastsym
