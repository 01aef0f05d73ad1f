#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <robinsub/spectral.hpp>
#include <robinsub/variational.hpp>

using namespace robinsub;

namespace {

ProblemSpec cosine_dip(double amplitude = 1.0, double alpha = -1.0)
{
    return make_problem(build_mesh(0, 1, 400), WeightSpec::cosine_dip(0.1, amplitude), 0.5, alpha);
}

// Smallest root of k tan(k/2) = -alpha on (0, pi): even Robin mode cos(k (x - 1/2)) on (0, 1).
double robin_even_root(double alpha)
{
    double lo = 1e-12, hi = std::numbers::pi - 1e-12;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid * std::tan(0.5 * mid) + alpha < 0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(Eigen, ZeroPotentialNeumann)
{
    const auto m = build_mesh(0, 1, 400);
    const auto r = smallest_eigen_with_potential(m, 0.0, std::vector<double>(m.size(), 0.0));
    EXPECT_NEAR(r.gamma1, 0.0, 1e-9);
    EXPECT_TRUE(r.converged);
    for (double v : r.eigenfunction.values) EXPECT_NEAR(v, 1.0, 1e-8);
}

TEST(Eigen, ZeroPotentialRobinMatchesTranscendentalRoot)
{
    const auto m = build_mesh(0, 1, 400);
    const double k = robin_even_root(-1.0);
    const auto r = smallest_eigen_with_potential(m, -1.0, std::vector<double>(m.size(), 0.0));
    EXPECT_NEAR(r.gamma1, k * k, 1e-4 * k * k);
    EXPECT_TRUE(r.converged);
}

TEST(Eigen, ZeroPotentialDirichlet)
{
    const auto m = build_mesh(0, 1, 200);
    const auto r = smallest_eigen_with_potential(m, dirichlet_alpha, std::vector<double>(m.size(), 0.0));
    EXPECT_NEAR(r.gamma1, std::pow(2 / m.h * std::sin(std::numbers::pi * m.h / 2), 2), 1e-8);
    EXPECT_EQ(r.eigenfunction.values.front(), 0.0);
    EXPECT_EQ(r.eigenfunction.values.back(), 0.0);
}

TEST(Eigen, ResidualBoundAndPositivity)
{
    const auto m = build_mesh(0, 1, 300);
    std::vector<double> pot(m.size());
    for (int i = 0; i < m.size(); ++i) pot[i] = 5 * std::sin(3 * m.nodes[i]);
    const auto r = smallest_eigen_with_potential(m, 0.4, pot);
    ASSERT_TRUE(r.converged);
    for (double v : r.eigenfunction.values) EXPECT_GT(v, 0.0);
    Tridiag A = robin_matrix(m, 0.4);
    for (int i = 0; i < m.size(); ++i) A.diag[i] -= pot[i];
    EXPECT_LE(r.eigen_residual, 1e-8 * A.norm_inf());
}

TEST(Gamma1, PositiveOnCurveC0)
{
    const auto p = cosine_dip();
    for (double a : {-8.0, -2.0, -1.0, -0.5}) {
        const auto u = c0_solution(p, a);
        const auto g = gamma1_linearized(with_alpha(p, a), u);
        EXPECT_GT(g.gamma1, 0.0) << "alpha " << a;
    }
}

TEST(Gamma1, RejectsDeadCore)
{
    const auto p = cosine_dip();
    Solution s;
    s.field = DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.0));
    s.positivity.tag = PositivityTag::Trivial;
    EXPECT_THROW(gamma1_linearized(p, s), invalid_argument);
}

TEST(Lepro, ZeroAtAlphaZero)
{
    EXPECT_NEAR(lepro_lambda1(cosine_dip(10.0), 0.0, 1e-2), 0.0, 1e-9);
}

TEST(Lepro, PrincipalEigenvalueDecreasesWithEpsilon)
{
    const auto p = cosine_dip(10.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        const auto r = principal_eigenvalues_lepro(p, eps);
        EXPECT_GT(r.alpha1_eps, 0.0);
        EXPECT_LT(r.alpha1_eps, prev);
        EXPECT_NEAR(r.gamma1, 0.0, 1e-6);
        for (double v : r.eigenfunction.values) EXPECT_GT(v, 0.0);
        prev = r.alpha1_eps;
    }
}

TEST(Lepro, RequiresLargeNegativeMass)
{
    EXPECT_THROW(principal_eigenvalues_lepro(cosine_dip(1.0), 0.1), invalid_argument);
    EXPECT_THROW(principal_eigenvalues_lepro(cosine_dip(10.0), 0.0), invalid_argument);
}
