#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plastsym/liealg.hpp"
#include "plastsym/solutions.hpp"
#include "plastsym/symmetry.hpp"

using namespace plastsym;

namespace {

std::vector<std::pair<Point6, Point6>> bracket_samples(const Generator& a, const Generator& b, int n = 20) {
    std::vector<std::pair<Point6, Point6>> out;
    for (const auto& p : sample_points(n, 7)) out.push_back({p, lie_bracket(a, b, p)});
    return out;
}

double max_abs6(const Point6& p) {
    double m = 0;
    for (double v : p) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST(Generators, RotationAndPressureShift) {
    Point6 p{0.3, -0.7, 1.1, 0.4, 2.0, -1.5};
    auto b1 = eval_generator(generator("B1"), p);
    EXPECT_EQ(b1, (Point6{1.5, 2.0, 0, 0, 0, 0}));
    auto p5 = eval_generator(generator("P5"), p);
    EXPECT_EQ(p5, (Point6{0, 0, 1, 0, 0, 0}));
    EXPECT_THROW(generator("B7"), std::invalid_argument);
}

TEST(Generators, KAtZeroStressAndItsPrintedSign) {
    const double x = 0.8, y = -0.4, u = 1.2, v = 0.6;
    Point6 p{x, y, 0, 0, u, v};
    auto k = eval_generator(generator("K"), p);
    Point6 want{-x / 2, y / 2, 0, 0, u / 2, -v / 2};
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(k[i], want[i], 1e-15) << i;
    auto kp = eval_generator(generator("K_as_printed"), p);
    EXPECT_NEAR(kp[X], x / 2, 1e-15);
    for (int i = 1; i < 6; ++i) EXPECT_NEAR(kp[i], want[i], 1e-15) << i;
}

TEST(Brackets, B1D2IsTwiceB1) {
    auto e = expand_in_basis(bracket_samples(generator("B1"), generator("D2")), {generator("B1")});
    ASSERT_EQ(e.coefficients.size(), 1u);
    EXPECT_NEAR(e.coefficients[0], 2.0, 1e-12);
    EXPECT_LT(e.residual, 1e-12);
}

TEST(Brackets, KWithLIsMinusP5) {
    auto e = expand_in_basis(bracket_samples(generator("K"), generator("L")), {generator("P5")});
    EXPECT_NEAR(e.coefficients[0], -1.0, 1e-10);
    EXPECT_LT(e.residual, 1e-10);
}

TEST(Brackets, TranslationsCommute) {
    for (const auto& p : sample_points(10, 3))
        EXPECT_EQ(max_abs6(lie_bracket(generator("P1"), generator("P2"), p)), 0.0);
}

TEST(Brackets, Antisymmetric) {
    for (const auto& p : sample_points(10, 5)) {
        auto ab = lie_bracket(generator("K"), generator("B3"), p);
        auto ba = lie_bracket(generator("B3"), generator("K"), p);
        for (int i = 0; i < 6; ++i) EXPECT_NEAR(ab[i], -ba[i], 1e-13);
    }
}

TEST(Brackets, NumericJacobiIdentity) {
    const auto &a = generator("B3"), &b = generator("K"), &c = generator("L");
    auto ab = bracket_field(a, b), bc = bracket_field(b, c), ca = bracket_field(c, a);
    double worst = 0;
    for (const auto& p : sample_points(20, 11)) {
        auto t1 = lie_bracket(ab, c, p), t2 = lie_bracket(bc, a, p), t3 = lie_bracket(ca, b, p);
        for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(t1[i] + t2[i] + t3[i]));
    }
    EXPECT_LT(worst, 1e-7);
}

TEST(Expansion, RecoversScaledGenerator) {
    std::vector<std::pair<Point6, Point6>> s;
    for (const auto& p : sample_points(15, 1)) {
        auto g = eval_generator(generator("B1"), p);
        for (double& v : g) v *= 2;
        s.push_back({p, g});
    }
    auto e = expand_in_basis(s, {generator("B1"), generator("P5")});
    EXPECT_NEAR(e.coefficients[0], 2.0, 1e-12);
    EXPECT_NEAR(e.coefficients[1], 0.0, 1e-12);
}

TEST(Expansion, B3WithB2GivesMinusB6) {
    auto e = expand_in_basis(bracket_samples(generator("B3"), generator("B2")), {generator("B6")});
    EXPECT_NEAR(e.coefficients[0], -1.0, 1e-12);
    EXPECT_LT(e.residual, 1e-12);
}

TEST(Expansion, NonMemberLeavesLargeResidual) {
    // x^2 d/dx is not a combination of constant-coefficient translations and dilations
    std::vector<std::pair<Point6, Point6>> s;
    for (const auto& p : sample_points(20, 2)) s.push_back({p, Point6{p[X] * p[X], 0, 0, 0, 0, 0}});
    auto e = expand_in_basis(s, {generator("P1"), generator("D1")});
    EXPECT_GT(e.residual, 0.1);
}

TEST(Expansion, TooFewSamplesThrows) {
    std::vector<std::pair<Point6, Point6>> s{{Point6{}, Point6{}}};
    std::vector<Generator> basis;
    for (const auto& n : {"P1", "P2", "P3", "P4", "P5"}) basis.push_back(generator(n));
    EXPECT_THROW(expand_in_basis(s, basis), ConditioningError);
}

TEST(StructureTables, BothTablesMatchNumericBrackets) {
    for (auto t : {table_L(), table_S()}) {
        auto r = verify_structure_table(t, table_generators(t), 30, 1e-8);
        EXPECT_TRUE(r.pass()) << t.name << " failures " << r.failures;
        EXPECT_EQ(r.cells.size(), t.basis.size() * t.basis.size());
    }
}

TEST(StructureTables, CorruptedCellIsTheOnlyFailure) {
    auto t = table_L();
    const int i = t.index("B1"), j = t.index("D2");
    t.c[i][j] = IntCombo{{"B1", 1}};
    auto r = verify_structure_table(t, table_generators(t), 30, 1e-8);
    ASSERT_EQ(r.failures, 1);
    for (const auto& c : r.cells)
        if (!c.pass) {
            EXPECT_EQ(c.row, "B1");
            EXPECT_EQ(c.col, "D2");
        }
}

TEST(StructureTables, AliasCellIsRecorded) {
    auto t = table_L();
    ASSERT_EQ(t.aliased_cells.size(), 1u);
    EXPECT_EQ(t.aliased_cells[0].substr(0, 5), "D2,P2");
    EXPECT_EQ(t.c[t.index("D2")][t.index("P2")], (IntCombo{{"P2", -1}}));
}

TEST(StructureTables, ParseCell) {
    EXPECT_TRUE(parse_cell("0").empty());
    EXPECT_EQ(parse_cell("2B_1"), (IntCombo{{"B1", 2}}));
    EXPECT_EQ(parse_cell("-D_2 + B_3"), (IntCombo{{"D2", -1}, {"B3", 1}}));
    EXPECT_THROW(parse_cell("2Q_9"), std::invalid_argument);
}

TEST(StructureTables, KAsPrintedBreaksTableS) {
    auto t = table_S();
    auto basis = table_generators(t);
    basis[t.index("K")] = generator("K_as_printed");
    auto r = verify_structure_table(t, basis, 30, 1e-8);
    EXPECT_EQ(r.failures, 6);
}

TEST(StructureTables, JacobiAndAntisymmetry) {
    for (auto t : {table_L(), table_S()}) {
        EXPECT_TRUE(jacobi_check(t).pass()) << t.name;
        EXPECT_EQ(antisymmetry_violations(t), 0) << t.name;
    }
    auto t = table_L();
    // flip one sign consistently in both cells: still antisymmetric, Jacobi breaks
    const int i = t.index("B1"), j = t.index("B2");
    t.c[i][j] = IntCombo{{"D2", 1}};
    t.c[j][i] = IntCombo{{"D2", -1}};
    EXPECT_EQ(antisymmetry_violations(t), 0);
    EXPECT_FALSE(jacobi_check(t).pass());
}

TEST(Automorphisms, SignsAndInvolution) {
    EXPECT_EQ(discrete_automorphism(Automorphism::R1, IntCombo{{"B3", 1}}), (IntCombo{{"B3", -1}}));
    EXPECT_EQ(discrete_automorphism(Automorphism::R2, IntCombo{{"P3", 2}}), (IntCombo{{"P3", -2}}));
    EXPECT_EQ(discrete_automorphism(Automorphism::R2, IntCombo{{"B3", 1}}), (IntCombo{{"B3", 1}}));
    IntCombo c{{"B1", 1}, {"D2", 3}, {"P4", -2}, {"B5", 1}};
    for (auto w : {Automorphism::R1, Automorphism::R2})
        EXPECT_EQ(discrete_automorphism(w, discrete_automorphism(w, c)), c);
}

TEST(Automorphisms, PreserveTableL) {
    EXPECT_TRUE(verify_automorphism(Automorphism::R1, table_L()).pass());
    EXPECT_TRUE(verify_automorphism(Automorphism::R2, table_L()).pass());
    EXPECT_EQ(verify_automorphism(Automorphism::R1, table_L()).cells, 196);
}

TEST(InfiniteFamilies, KnownMembersPass) {
    auto zero = [](const D1&, const D1&) { return D1{0.0, 0.0}; };
    auto one = [](const D1&, const D1&) { return D1{1.0, 0.0}; };
    EXPECT_LT(verify_infinite_family(Family::X1, one, zero), 1e-14);
    auto b3a = [](const D1& s, const D1& t) { return s + 0.5 * sin(2.0 * t); };
    auto b3b = [](const D1&, const D1& t) { return -0.5 * cos(2.0 * t); };
    EXPECT_LT(verify_infinite_family(Family::X1, b3a, b3b), 1e-12);
    auto b5a = [](const D1& s, const D1& t) { return s - 0.5 * sin(2.0 * t); };
    auto b5b = [](const D1&, const D1& t) { return 0.5 * cos(2.0 * t); };
    EXPECT_LT(verify_infinite_family(Family::X2, b5a, b5b), 1e-12);
    // B3 coefficients do not satisfy the X2 constraints
    EXPECT_GT(verify_infinite_family(Family::X2, b3a, b3b), 0.5);
}

TEST(InfiniteFamilies, NonMemberFails) {
    auto f1 = [](const D1& s, const D1&) { return s; };
    auto zero = [](const D1&, const D1&) { return D1{0.0, 0.0}; };
    EXPECT_NEAR(verify_infinite_family(Family::X1, f1, zero), 1.0, 1e-12);
}

TEST(Flows, TranslationAndLinearOrbit) {
    Point6 p{0.3, -0.2, 0.5, 0.1, 1.0, 2.0};
    auto q = flow(generator("P1"), p, 1.5);
    EXPECT_DOUBLE_EQ(q[X], 1.8);
    auto b3 = flow(generator("B3"), p, 0.7);
    EXPECT_NEAR(b3[X], p[X] + 0.7 * (p[SIG] + 0.5 * std::sin(2 * p[TH])), 1e-15);
    EXPECT_NEAR(b3[Y], p[Y] - 0.7 * 0.5 * std::cos(2 * p[TH]), 1e-15);
}

TEST(Flows, KIsFirstOrderAccurateForSmallT) {
    Point6 p{0.9, 0.4, 0.2, 0.3, -0.5, 0.7};
    const double t = 1e-4;
    auto q = flow(generator("K"), p, t);
    auto g = eval_generator(generator("K"), p);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR((q[i] - p[i]) / t, g[i], 1e-3) << i;
}

TEST(Flows, GroupLaw) {
    Point6 p{0.9, 0.4, 0.2, 0.3, -0.5, 0.7};
    for (const char* n : {"K", "L", "D2", "B1"}) {
        const auto& g = generator(n);
        auto a = flow(g, flow(g, p, 0.3), 0.2), b = flow(g, p, 0.5);
        for (int i = 0; i < 6; ++i) EXPECT_NEAR(a[i], b[i], 1e-9) << n << " " << i;
    }
}

TEST(Flows, JacobianMatchesDifferenceQuotient) {
    Point6 p{0.9, 0.4, 0.2, 0.3, -0.5, 0.7};
    const auto& g = generator("K");
    auto J = flow_jacobian(g, p, 0.4);
    const double h = 1e-6;
    for (int c = 0; c < 6; ++c) {
        Point6 a = p, b = p;
        a[c] += h;
        b[c] -= h;
        auto fa = flow(g, a, 0.4), fb = flow(g, b, 0.4);
        for (int i = 0; i < 6; ++i) EXPECT_NEAR(J(i, c), (fa[i] - fb[i]) / (2 * h), 1e-6);
    }
}

TEST(SymmetryAction, PressureShiftAndRotation) {
    auto rigid = make_solution("RIGID", {{"b1", 1.0}, {"b2", 0.3}, {"b3", -0.2}, {"sigma0", 0.1}, {"theta0", 0.2}});
    EXPECT_LT(symmetry_check(generator("P5"), make_solution("K_PIS"), 0.7, 10).max_residual, 1e-8);
    auto r = symmetry_check(generator("L"), rigid, std::numbers::pi / 6, 10);
    EXPECT_LT(r.max_residual, 1e-8);
    EXPECT_EQ(r.tested, 10);
}

TEST(SymmetryAction, ZeroTimeReproducesOriginalResidual) {
    auto s = make_solution("K_PIS");
    const double base = residual_stats(s, 10).max_residual;
    EXPECT_NEAR(symmetry_check(generator("K"), s, 0.0, 10).max_residual, base, 1e-14);
}

TEST(Catalog, ParsesRowsWithParameters) {
    auto rows = parse_catalog("# comment\n\nL_1,2 = { B1 + L + a*D1 } | a:real\n");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].id, "L_1,2");
    EXPECT_EQ(rows[0].line, 3);
    ASSERT_EQ(rows[0].basis.size(), 1u);
    EXPECT_EQ(rows[0].basis[0].terms.size(), 3u);
    ASSERT_EQ(rows[0].params.size(), 1u);
    EXPECT_EQ(rows[0].params[0].second, ParamDomain::real);
    auto s = parse_catalog("S_2,40 = { D2 ; K }");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].basis.size(), 2u);
    EXPECT_TRUE(parse_catalog("").empty());
}

TEST(Catalog, ErrorsCarryLineNumbers) {
    try {
        parse_catalog("L_1,1 = { B1 }\nL_1,2 = { B1 + Q7 }\n");
        FAIL() << "expected a parse error";
    } catch (const CatalogParseError& e) {
        EXPECT_EQ(e.line, 2);
    }
    try {
        parse_catalog("\n\nX = { B1 + a*L } | a:complex\n");
        FAIL() << "expected a parse error";
    } catch (const CatalogParseError& e) {
        EXPECT_EQ(e.line, 3);
    }
}

TEST(Catalog, ShippedFilesLoad) {
    const std::string dir = PLASTSYM_DEFAULT_CATALOG_DIR;
    for (const char* f : {"L_dim1.txt", "S_dim1.txt", "S_dim2.txt", "L_dim2_partial.txt"})
        EXPECT_FALSE(load_catalog(dir + "/" + f).empty()) << f;
}

TEST(Catalog, Closure) {
    auto ok = parse_catalog("S_2,1 = { B1 ; D2 }")[0];
    auto r = verify_subalgebra_closure(ok);
    EXPECT_TRUE(r.pass());
    EXPECT_EQ(r.draws, 1);
    auto bad = parse_catalog("bad = { B3 ; B2 }")[0];
    auto rb = verify_subalgebra_closure(bad);
    EXPECT_FALSE(rb.pass());
    EXPECT_FALSE(rb.first_failure.empty());
}

TEST(Catalog, SignParametersAreDrawnExhaustively) {
    auto e = parse_catalog("S_2,8 = { B1 ; D2 + eps1*L + eps2*P5 + eps3*D1 } | eps1:pm1, eps2:pm1, eps3:pm1")[0];
    EXPECT_EQ(verify_subalgebra_closure(e).draws, 8);
}
