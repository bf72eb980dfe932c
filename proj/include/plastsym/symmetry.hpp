#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

#include "fieldcore.hpp"
#include "liealg.hpp"
#include "numerics.hpp"
#include "solutions.hpp"

namespace plastsym {

struct SymmetryReport {
    double max_residual = 0.0;
    int tested = 0;
    int untestable = 0;  // preimage solve failed or left the domain
};

namespace detail {

// Image of the graph point over (x, y) plus d(image)/dx and d(image)/dy.
inline std::array<Point6, 3> graph_image(const Generator& g, const Solution& s, double x, double y, double t) {
    std::array<Point6, 3> out{};
    for (int dir = 0; dir < 2; ++dir) {
        D1 X{x, dir == 0 ? 1.0 : 0.0}, Y{y, dir == 1 ? 1.0 : 0.0};
        auto st = s.f1(X, Y);
        Vec6<D1> p{X, Y, st[0], st[1], st[2], st[3]};
        auto q = flow_t<D1>(g, p, t);
        for (int i = 0; i < 6; ++i) {
            out[0][i] = q[i].v;
            out[1 + dir][i] = q[i].d;
        }
    }
    return out;
}

}  // namespace detail

// Pushes the solution graph through exp(t g) and evaluates the residual of the
// transformed fields at the sample points themselves: for each target (X, Y)
// the preimage (x, y) is found by Newton starting from (X, Y).
inline SymmetryReport symmetry_check(const Generator& g, const Solution& s, double t, int n_points,
                                     std::uint64_t seed = 42) {
    SymmetryReport rep;
    for (const auto& p : s.sample(n_points, seed)) {
        const double X = p[0], Y = p[1];
        try {
            auto F = [&](const Eigen::VectorXd& z) {
                auto im = detail::graph_image(g, s, z[0], z[1], t);
                Eigen::VectorXd r(2);
                r << im[0][0] - X, im[0][1] - Y;
                return r;
            };
            auto J = [&](const Eigen::VectorXd& z) {
                auto im = detail::graph_image(g, s, z[0], z[1], t);
                Eigen::MatrixXd A(2, 2);
                A << im[1][0], im[2][0], im[1][1], im[2][1];
                return A;
            };
            auto adm = [&](const Eigen::VectorXd& z) { return s.contains(z[0], z[1]); };
            Eigen::VectorXd z0(2);
            z0 << X, Y;
            NewtonOptions opt;
            opt.tol = 1e-12 * std::max(1.0, std::hypot(X, Y));
            auto sol = newton_solve(F, J, z0, opt, adm);
            auto im = detail::graph_image(g, s, sol.x[0], sol.x[1], t);
            Eigen::Matrix2d A;
            A << im[1][0], im[2][0], im[1][1], im[2][1];
            Eigen::Matrix<double, 4, 2> B;
            for (int i = 0; i < 4; ++i) {
                B(i, 0) = im[1][2 + i];
                B(i, 1) = im[2][2 + i];
            }
            Eigen::Matrix<double, 4, 2> G = B * A.inverse();
            FieldJet j;
            j.state = {im[0][2], im[0][3], im[0][4], im[0][5]};
            j.d_x = {G(0, 0), G(1, 0), G(2, 0), G(3, 0)};
            j.d_y = {G(0, 1), G(1, 1), G(2, 1), G(3, 1)};
            rep.max_residual = std::max(rep.max_residual, max_abs(pde_residual(j)));
            ++rep.tested;
        } catch (const std::exception&) {
            ++rep.untestable;
        }
    }
    return rep;
}

}  // namespace plastsym
