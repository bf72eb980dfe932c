#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plastsym/similarity.hpp"
#include "plastsym/solutions.hpp"

using namespace plastsym;

TEST(Families, RigidMotion) {
    auto s = make_solution("RIGID");
    auto v = s.velocity(2.0, 3.0);
    EXPECT_EQ(v[0], 3.0);
    EXPECT_EQ(v[1], -2.0);
    EXPECT_EQ(residual_stats(s, 20).max_residual, 0.0);
}

TEST(Families, UnknownFamilyOrParameterThrows) {
    EXPECT_THROW(make_solution("NOPE"), std::invalid_argument);
    EXPECT_THROW(make_solution("RIGID", {{"c9", 1.0}}), std::invalid_argument);
    EXPECT_THROW(make_solution("RIGID", {{"b1", NAN}}), std::invalid_argument);
    EXPECT_THROW(make_solution("RIGID", {}, {{"T", callables::identity()}}), std::invalid_argument);
}

TEST(Families, C1ZeroStressOnPositiveAxis) {
    auto s = make_solution("SIM_C1Z_ADD_A");
    auto st = s.state(1.0, 0.0);
    EXPECT_EQ(st.theta, 0.0);
    EXPECT_DOUBLE_EQ(st.sigma, s.params.at("c2"));
    EXPECT_FALSE(s.contains(0.0, 1.0));
}

TEST(Families, C1ZeroThetaIsPolarAngle) {
    auto s = make_solution("SIM_C1Z_MUL_B");
    for (const auto& p : s.sample(30)) {
        auto st = s.state(p[0], p[1]);
        const double phi = std::atan(p[1] / p[0]);
        EXPECT_NEAR(st.theta, phi, 1e-14);
        EXPECT_NEAR(st.sigma, -2 * k_yield * phi + s.params.at("c2"), 1e-14);
    }
}

TEST(Families, MulCVelocityIsTangentialToCircles) {
    auto s = make_solution("SIM_C1Z_MUL_C");
    for (const auto& p : s.sample(30)) {
        auto v = s.velocity(p[0], p[1]);
        EXPECT_NEAR(p[0] * v[0] + p[1] * v[1], 0.0, 1e-14);
    }
}

TEST(Families, MulAReducesToMulC) {
    // Q = 0 and P(eta) = eta reproduce the omega2 = 2 member with c3 = c4 = 1
    auto a = make_solution("SIM_C1Z_MUL_A", {{"c2", 0.0}}, {{"P", callables::poly({0, 1})}, {"Q", callables::poly({0})}});
    auto c = make_solution("SIM_C1Z_MUL_C", {{"c2", 0.0}, {"c3", 1.0}, {"c4", 1.0}, {"omega2", 2.0}});
    for (const auto& p : a.sample(20)) {
        auto sa = a.state(p[0], p[1]), sc = c.state(p[0], p[1]);
        EXPECT_NEAR(sa.u, sc.u, 1e-13);
        EXPECT_NEAR(sa.v, sc.v, 1e-13);
        EXPECT_NEAR(sa.sigma, sc.sigma, 1e-15);
    }
}

TEST(Families, KPisVelocity) {
    auto s = make_solution("K_PIS");
    const double x = 0.6, y = -1.1, r2 = x * x + y * y;
    auto v = s.velocity(x, y);
    EXPECT_NEAR(v[0], -x / r2 - 2 * y + 4, 1e-15);
    EXPECT_NEAR(v[1], -y / r2 + 2 * x + 1, 1e-15);
    EXPECT_FALSE(s.contains(0.0, 0.0));
}

TEST(B1Implicit, OriginAndSpeed) {
    auto s = make_solution("B1_IMPLICIT", {{"c1", 1.0}});
    auto v = s.velocity(0.0, 0.0);
    EXPECT_NEAR(v[0], 1.0, 1e-15);
    EXPECT_NEAR(v[1], 0.0, 1e-15);
    for (const auto& p : s.sample(40)) {
        auto w = s.velocity(p[0], p[1]);
        EXPECT_NEAR(std::hypot(w[0], w[1]), 1.0, 1e-12);
    }
}

TEST(B1Implicit, VelocityIsConstantAlongCharacteristicLines) {
    // x cos T + y sin T = xi / c1 is a straight line on which xi, hence (u, v), is fixed
    const double c1 = 1.0;
    auto T = callables::arcsin_half();
    auto r = solve_b1_implicit(0.2, 0.3, T, c1);
    const double t = T(r.xi);
    for (double d : {-0.1, 0.05, 0.15}) {
        const double x = 0.2 - d * std::sin(t), y = 0.3 + d * std::cos(t);
        auto q = solve_b1_implicit(x, y, T, c1);
        EXPECT_NEAR(q.xi, r.xi, 1e-12);
        EXPECT_NEAR(q.u, r.u, 1e-12);
        EXPECT_NEAR(q.v, r.v, 1e-12);
    }
}

TEST(B1Implicit, ReducedEquationsVanish) {
    for (const auto& T : {callables::identity(), callables::arcsin_half(), callables::poly({0.1, 0.5, 0.2})})
        for (double xi : {-0.4, 0.0, 0.3}) {
            auto r = b1_reduced_residual(T, 1.0, 0.0, xi);
            for (double v : r) EXPECT_LT(std::abs(v), 1e-12) << T.spec() << " xi=" << xi;
        }
}

TEST(Reduced, KInvariantPde) {
    for (double x : {0.7, 1.3})
        for (double y : {0.4, -0.9}) EXPECT_LT(std::abs(k_xi_pde_residual(x, y, 1.0)), 1e-8);
}

TEST(Profile, FirstIntegralHolds) {
    SimilarityProfile p(0.6, 0.0);
    const double h = 1e-4;
    int tested = 0;
    for (const auto& row : p.cache()) {
        const double xi = row.xi;
        if (!p.contains(xi - 2 * h, 1e-3) || !p.contains(xi + 2 * h, 1e-3) || std::abs(xi) > 10) continue;
        const double Jp = (-p.J(xi + 2 * h) + 8 * p.J(xi + h) - 8 * p.J(xi - h) + p.J(xi - 2 * h)) / (12 * h);
        EXPECT_NEAR(SimilarityProfile::Dn(xi, p.J(xi)) * Jp, 0.6, 1e-7) << xi;
        ++tested;
    }
    EXPECT_GT(tested, 10);
}

TEST(Profile, SecondDerivativeMatchesDifferencedFirst) {
    SimilarityProfile p(1.7, 0.2);
    const double xi = 0.5 * (p.xi_min() + std::min(p.xi_max(), p.xi_min() + 4.0));
    ASSERT_TRUE(p.contains(xi, 1e-2));
    D2 X{D1{xi, 1.0}, D1{1.0, 0.0}};
    D2 J = p.J_of<D2>(X);
    const double h = 1e-5;
    auto jp = [&](double t) { return p.J_of<D1>(D1{t, 1.0}).d; };
    EXPECT_NEAR(J.d.d, (jp(xi + h) - jp(xi - h)) / (2 * h), 1e-6);
    EXPECT_NEAR(J.d.v, jp(xi), 1e-15);
}

TEST(Profile, BranchIsMonotone) {
    for (double c1 : {0.6, 1.7, -0.8}) {
        SimilarityProfile p(c1, 0.0);
        const auto& c = p.cache();
        ASSERT_GT(c.size(), 2u);
        const bool inc = c.back().phi > c.front().phi;
        for (std::size_t i = 1; i < c.size(); ++i) EXPECT_EQ(c[i].phi > c[i - 1].phi, inc) << c1 << " row " << i;
    }
}

TEST(Profile, OutsideBranchThrows) {
    SimilarityProfile p(0.6, 0.0);
    EXPECT_THROW(p.J(std::nan("")), BranchError);
    EXPECT_THROW(SimilarityProfile(0.0, 0.0), DomainError);
}

TEST(Profile, FromAnchorPassesThroughAnchor) {
    auto p = SimilarityProfile::from_anchor(0.6, 1.2, std::numbers::pi / 4);
    EXPECT_NEAR(p.J(1.2), std::atan(1.2) - std::numbers::pi / 4, 1e-12);
}

TEST(ProfileQuadrature, Additivity) {
    SimilarityProfile p(0.6, 0.0);
    const double lo = std::max(p.xi_min(), 0.05) + 0.1, hi = std::min(p.xi_max(), 20.0) - 0.1;
    ASSERT_LT(lo, hi);
    const double a = lo, b = 0.5 * (lo + hi), c = hi;
    using I = SimilarityProfile::Integral;
    for (auto w : {I::CosInt, I::PhiQ, I::PsiQ})
        EXPECT_NEAR(p.integral_between(w, a, b) + p.integral_between(w, b, c), p.integral_between(w, a, c), 1e-9);
}

TEST(ProfileQuadrature, SubstitutionOracle) {
    SimilarityProfile p(0.6, 0.0);
    const double lo = std::max(p.xi_min(), 0.05) + 0.1, hi = std::min(p.xi_max(), 20.0) - 0.1;
    EXPECT_NEAR(p.phiq_by_substitution(lo, hi), p.integral_between(SimilarityProfile::Integral::PhiQ, lo, hi), 1e-7);
}

TEST(Gates, EveryFamilyPassesItsResidualGate) {
    for (const auto& f : family_names()) {
        auto s = make_solution(f);
        auto st = residual_stats(s, 30, 42, true);
        EXPECT_EQ(st.points, 30) << f;
        EXPECT_LT(st.max_residual, s.tolerance()) << f;
        EXPECT_LT(st.max_divergence, 1e-10) << f;
        EXPECT_LT(st.max_jet_mismatch, 1e-6) << f;
    }
}

TEST(Gates, QuadratureFamiliesHaveSymmetricMixedPartials) {
    for (const char* f : {"SIM_C1NZ_ADD_A", "SIM_C1Z_MUL_A"}) {
        auto s = make_solution(f);
        for (const auto& p : s.sample(5)) {
            auto a = mixed_partials(s, p[0], p[1], true), b = mixed_partials(s, p[0], p[1], false);
            for (int i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-6) << f;
        }
    }
}

TEST(Gates, SigmaSystemForProfileFamilies) {
    auto s = make_solution("SIM_C1NZ_MUL_A");
    SimilarityProfile prof(s.params.at("c1"), s.params.at("c2"), s.params.at("psi0"));
    for (const auto& p : s.sample(10)) {
        auto r = sim_sigma_system_residual(s, prof, p[0], p[1]);
        for (double v : r) EXPECT_LT(std::abs(v), 1e-6);
    }
}

TEST(AsPrinted, ReadingsThatBreakTheSystem) {
    for (const char* f : {"B1_IMPLICIT", "SIM_C1NZ_ADD_A", "SIM_C1NZ_ADD_B", "SIM_C1NZ_MUL_B", "SIM_C1Z_ADD_B",
                          "SIM_C1Z_MUL_A", "SIM_C1Z_MUL_C"}) {
        auto s = make_solution(f, {}, {}, Variant::AsPrinted);
        EXPECT_GT(residual_stats(s, 30).max_residual, 1e-3) << f;
    }
}

TEST(AsPrinted, OneArgumentArctanFlipsThetaInLeftHalfPlane) {
    auto c = make_solution("K_PIS"), p = make_solution("K_PIS", {}, {}, Variant::AsPrinted);
    // theta may differ by pi/2 where x y < 0; the corrected branch is continuous across y = 0 for x > 0
    const double a = c.state(1.0, 1e-3).theta, b = c.state(1.0, -1e-3).theta;
    EXPECT_NEAR(a, b, 1e-2);
    const double pa = p.state(1.0, 1e-3).theta, pb = p.state(1.0, -1e-3).theta;
    EXPECT_NEAR(std::abs(pa - pb), std::numbers::pi / 2, 1e-2);
}
