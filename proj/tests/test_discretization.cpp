#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <robinsub/mesh.hpp>
#include <robinsub/tridiag.hpp>
#include <robinsub/weights.hpp>

using namespace robinsub;

namespace {

DiscreteField sample(const Mesh& m, double (*f)(double))
{
    std::vector<double> v(m.size());
    for (int i = 0; i < m.size(); ++i) v[i] = f(m.nodes[i]);
    return DiscreteField(m, v);
}

} // namespace

TEST(Mesh, UnitIntervalFourCells)
{
    const auto m = build_mesh(0, 1, 4);
    ASSERT_EQ(m.size(), 5);
    const double expect[] = {0, 0.25, 0.5, 0.75, 1};
    for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(m.nodes[i], expect[i]);
    EXPECT_DOUBLE_EQ(m.h, 0.25);
}

TEST(Mesh, PiInterval)
{
    EXPECT_DOUBLE_EQ(build_mesh(0, std::numbers::pi, 100).h, std::numbers::pi / 100);
}

TEST(Mesh, RejectsDegenerateInput)
{
    EXPECT_THROW(build_mesh(1, 0, 4), invalid_argument);
    EXPECT_THROW(build_mesh(0, 1, 1), invalid_argument);
}

TEST(RobinLaplacian, ConstantField)
{
    const auto m = build_mesh(0, 1, 10);
    const DiscreteField c(m, std::vector<double>(m.size(), 3.0));
    for (double alpha : {-2.0, 0.0, 0.7}) {
        const auto r = apply_robin_laplacian(m, c, alpha);
        EXPECT_NEAR(r[0], -2 * alpha * 3.0 / m.h, 1e-12);
        EXPECT_NEAR(r[m.n_cells], -2 * alpha * 3.0 / m.h, 1e-12);
        for (int i = 1; i < m.n_cells; ++i) EXPECT_NEAR(r[i], 0.0, 1e-12);
    }
}

TEST(RobinLaplacian, LinearFieldNeumannRows)
{
    const auto m = build_mesh(0, 1, 8);
    const auto u = sample(m, [](double x) { return x; });
    const auto r = apply_robin_laplacian(m, u, 0.0);
    for (int i = 1; i < m.n_cells; ++i) EXPECT_NEAR(r[i], 0.0, 1e-12);
    // ghost node mirrors the neighbour, so the end rows see the slope as a flux
    EXPECT_NEAR(r[0], 2.0 / m.h * (u[0] - u[1]) / m.h, 1e-10);
    EXPECT_NEAR(r[m.n_cells], 2.0 / m.h * (u[m.n_cells] - u[m.n_cells - 1]) / m.h, 1e-10);
}

TEST(RobinLaplacian, SinFourthInterior)
{
    const auto m = build_mesh(0, std::numbers::pi, 400);
    const auto w = sample(m, [](double x) { return std::pow(std::sin(x), 4); });
    const auto r = apply_robin_laplacian(m, w, 1.0);
    double err = 0.0;
    for (int i = 1; i < m.n_cells; ++i) {
        const double s = std::sin(m.nodes[i]), c = std::cos(m.nodes[i]);
        err = std::max(err, std::abs(r[i] - (4 * s * s * s * s - 12 * s * s * c * c)));
    }
    EXPECT_LT(err, 10 * m.h * m.h);
}

TEST(RobinLaplacian, Linearity)
{
    const auto m = build_mesh(0, 1, 50);
    const auto u = sample(m, [](double x) { return std::exp(x); });
    const auto v = sample(m, [](double x) { return std::cos(3 * x); });
    std::vector<double> s(m.size());
    for (int i = 0; i < m.size(); ++i) s[i] = u[i] + v[i];
    const auto ru = apply_robin_laplacian(m, u, -1.3), rv = apply_robin_laplacian(m, v, -1.3);
    const auto rs = apply_robin_laplacian(m, DiscreteField(m, s), -1.3);
    for (int i = 0; i < m.size(); ++i) EXPECT_NEAR(rs[i], ru[i] + rv[i], 1e-9 * (std::abs(ru[i]) + std::abs(rv[i]) + 1));
}

// u = cosh(k(x - 1/2)) satisfies the Robin condition with alpha = k tanh(k/2); solve (L + 1) u = (1 - k^2) u.
// The ghost-node end rows are only first-order consistent, but the solution error is second order.
TEST(RobinLaplacian, SecondOrderWithExactRobinData)
{
    const double k = 1.5, alpha = k * std::tanh(0.5 * k);
    std::vector<double> errs;
    for (int n : {100, 200, 400}) {
        const auto m = build_mesh(0, 1, n);
        std::vector<double> u(m.size()), f(m.size());
        for (int i = 0; i < m.size(); ++i) {
            u[i] = std::cosh(k * (m.nodes[i] - 0.5));
            f[i] = (1 - k * k) * u[i];
        }
        Tridiag A = robin_matrix(m, alpha);
        for (double& d : A.diag) d += 1.0;
        errs.push_back(sup_distance(solve_tridiag(A, f), u));
    }
    for (int i = 0; i + 1 < 3; ++i) {
        const double order = std::log2(errs[i] / errs[i + 1]);
        EXPECT_GE(order, 1.8);
        EXPECT_LE(order, 2.2);
    }
}

TEST(RobinLaplacian, DiscreteGreenIdentityAndSymmetry)
{
    const auto m = build_mesh(0, 1, 64);
    const auto u = sample(m, [](double x) { return 1 + x * x; });
    const auto v = sample(m, [](double x) { return std::sin(2 * x) + 0.3; });
    const double alpha = 0.8;
    const auto w = trapezoid_weights(m);
    const auto Lu = apply_robin_laplacian(m, u, alpha), Lv = apply_robin_laplacian(m, v, alpha);
    double lhs = 0, rhs = 0, sym = 0;
    for (int i = 0; i < m.size(); ++i) {
        lhs += w[i] * Lu[i] * v[i];
        sym += w[i] * Lv[i] * u[i];
    }
    for (int i = 0; i < m.n_cells; ++i) rhs += (u[i + 1] - u[i]) * (v[i + 1] - v[i]) / m.h;
    rhs -= alpha * (u[0] * v[0] + u[m.n_cells] * v[m.n_cells]);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs) + 1e-12);
    EXPECT_NEAR(lhs, sym, 1e-12 * std::abs(lhs) + 1e-12);
}

TEST(RobinLaplacian, MeshMismatch)
{
    const auto m = build_mesh(0, 1, 10), m2 = build_mesh(0, 1, 11);
    EXPECT_THROW(apply_robin_laplacian(m, DiscreteField(m2, std::vector<double>(12, 1.0)), 0.0), invalid_argument);
}

TEST(Integrals, Domain)
{
    const auto m = build_mesh(0, 1, 7);
    EXPECT_NEAR(integrate_domain(m, DiscreteField(m, std::vector<double>(m.size(), 1.0))), 1.0, 1e-15);
    const auto m10 = build_mesh(0, 1, 10);
    EXPECT_DOUBLE_EQ(integrate_domain(m10, sample(m10, [](double x) { return x; })), 0.5);
    const auto mp = build_mesh(0, std::numbers::pi, 400);
    const auto a = sample_weight(WeightSpec::aq(0.5), mp);
    EXPECT_NEAR(integrate_domain(mp, a), -4 * std::numbers::pi, 1e-6 * 4 * std::numbers::pi);
}

TEST(Integrals, Boundary)
{
    const auto m = build_mesh(0, 1, 10);
    EXPECT_DOUBLE_EQ(integrate_boundary(m, DiscreteField(m, std::vector<double>(m.size(), 1.0))), 2.0);
    EXPECT_DOUBLE_EQ(integrate_boundary(m, sample(m, [](double x) { return x; })), 1.0);
    const auto mp = build_mesh(0, std::numbers::pi, 100);
    std::vector<double> w(mp.size());
    for (int i = 0; i < mp.size(); ++i) w[i] = std::pow(std::sin(mp.nodes[i]), 4);
    w.front() = w.back() = 0;
    EXPECT_EQ(integrate_boundary(mp, DiscreteField(mp, w)), 0.0);
}

TEST(Norms, Examples)
{
    const auto m = build_mesh(0, 1, 200);
    const auto c = norms(m, DiscreteField(m, std::vector<double>(m.size(), -2.5)));
    EXPECT_DOUBLE_EQ(c.sup_norm, 2.5);
    EXPECT_NEAR(c.h1_norm, 2.5, 1e-12);
    EXPECT_DOUBLE_EQ(c.min_value, -2.5);
    const auto x = norms(m, sample(m, [](double t) { return t; }));
    EXPECT_NEAR(x.h1_norm, std::sqrt(1 + 1.0 / 3), 1e-4);
    const auto z = norms(m, DiscreteField(m, std::vector<double>(m.size(), 0.0)));
    EXPECT_EQ(z.sup_norm, 0.0);
    EXPECT_EQ(z.h1_norm, 0.0);
    EXPECT_EQ(z.min_value, 0.0);
}

TEST(Tridiag, SolveMatchesMultiply)
{
    const auto m = build_mesh(0, 1, 30);
    Tridiag A = robin_matrix(m, -0.5);
    for (double& d : A.diag) d += 1.0;
    std::vector<double> x(m.size());
    for (int i = 0; i < m.size(); ++i) x[i] = std::sin(i * 0.3) + 2;
    const auto b = A.multiply(x);
    const auto y = solve_tridiag(A, b);
    EXPECT_LT(sup_distance(x, y), 1e-10);
}

TEST(Tridiag, SturmCountMatchesBisection)
{
    const auto m = build_mesh(0, 1, 40);
    const auto S = symmetrize(robin_matrix(m, 0.0), trapezoid_weights(m));
    // Neumann Laplacian: eigenvalues 0 and (2/h sin(k pi h / 2))^2 on the discrete grid
    EXPECT_NEAR(eigenvalue_bisection(S, 0), 0.0, 1e-9);
    const double l1 = eigenvalue_bisection(S, 1);
    EXPECT_NEAR(l1, std::pow(2 / m.h * std::sin(std::numbers::pi * m.h / 2), 2), 1e-8 * l1);
    EXPECT_EQ(sturm_count(S, 0.5 * l1), 1);
}
