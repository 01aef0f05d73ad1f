#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <robinsub/variational.hpp>

using namespace robinsub;

namespace {

ProblemSpec cosine_dip(double c = 0.1, int n = 400)
{
    return make_problem(build_mesh(0, 1, n), WeightSpec::cosine_dip(c), 0.5, -1.0);
}

// inf { D(v) : v fixed to 0 on the closed positive set, v(1)^2 = 1 } by a dense solve of the reduced form:
// B has rank one on the free nodes, so the infimum is 1 / (D_ff^{-1})_{bb}.
double alpha_p_dense(const Mesh& m, const std::vector<double>& a)
{
    const int n = m.n_cells;
    std::vector<char> fixed(n + 1, 0);
    for (int i = 0; i <= n; ++i)
        if (a[i] > 0)
            for (int j = std::max(0, i - 1); j <= std::min(n, i + 1); ++j) fixed[j] = 1;
    std::vector<int> free_nodes;
    for (int i = 0; i <= n; ++i)
        if (!fixed[i]) free_nodes.push_back(i);
    const int k = static_cast<int>(free_nodes.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(k, k);
    std::vector<int> pos(n + 1, -1);
    for (int j = 0; j < k; ++j) pos[free_nodes[j]] = j;
    for (int c = 0; c < n; ++c) {
        const int l = pos[c], r = pos[c + 1];
        if (l >= 0) D(l, l) += 1 / m.h;
        if (r >= 0) D(r, r) += 1 / m.h;
        if (l >= 0 && r >= 0) {
            D(l, r) -= 1 / m.h;
            D(r, l) -= 1 / m.h;
        }
    }
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    e(k - 1) = 1.0;
    const Eigen::VectorXd x = D.ldlt().solve(e);
    return 1.0 / x(k - 1);
}

} // namespace

TEST(ConstantCa, Examples)
{
    EXPECT_NEAR(compute_c_a(cosine_dip()), 0.0025, 1e-12);
    double delta = 0;
    const auto m = aq_mesh(400, 0.0, &delta);
    EXPECT_NEAR(compute_c_a(WeightSpec::aq(0.5), m, 0.5), 4 * std::numbers::pi * std::numbers::pi, 1e-4);
    EXPECT_THROW(compute_c_a(cosine_dip(0.0)), invalid_argument);
    EXPECT_THROW(compute_c_a(WeightSpec::cosine_dip(0.1), build_mesh(0, 1, 10), 1.0), invalid_argument);
}

TEST(Mu, DecreasingInAlphaAndSolves)
{
    const auto p = cosine_dip();
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {-4.0, -2.0, -1.0, -0.5}) {
        const auto r = minimize_mu(p, a);
        EXPECT_GT(r.mu, 0.0);
        EXPECT_LT(r.mu, prev);
        prev = r.mu;
    }
    const auto r = minimize_mu(p, -1.0);
    const auto u = scaled_mu_minimizer(r, p.q);
    EXPECT_LE(relative_residual(make_system(with_alpha(p, -1.0)), u.values, 0.0), 1e-6);
}

TEST(Mu, NegativeWeightHasNoFeasibleSeed)
{
    auto w = WeightSpec::affine(0.0, -1.0);
    w.allow_definite = true;
    const auto p = make_problem(build_mesh(0, 1, 100), w, 0.5, -1.0);
    EXPECT_THROW(minimize_mu(p, -1.0), invalid_argument);
}

TEST(Mu, DescentNeverIncreasesSeedValue)
{
    const auto r = minimize_mu(cosine_dip(), -2.0);
    for (const auto& run : r.runs)
        if (!run.v.empty()) EXPECT_LE(run.value, run.seed_value);
}

TEST(Forms, SignFlipInvariance)
{
    const auto p = cosine_dip();
    const var::Forms F(p.mesh, p.a.values, p.q);
    for (const auto& s : multistart_seeds(p.mesh, 8)) {
        std::vector<double> neg = s;
        for (double& v : neg) v = -v;
        EXPECT_DOUBLE_EQ(F.D(s), F.D(neg));
        EXPECT_DOUBLE_EQ(F.B(s), F.B(neg));
        EXPECT_DOUBLE_EQ(F.N(s), F.N(neg));
    }
}

TEST(AlphaTilde, PositiveIffNegativeMass)
{
    const double at = compute_alpha_tilde(cosine_dip(0.1));
    EXPECT_GT(at, 0.0);
    EXPECT_EQ(compute_alpha_tilde(cosine_dip(0.0)), 0.0);
    EXPECT_EQ(compute_alpha_tilde(cosine_dip(-0.1)), 0.0);
}

TEST(AlphaTilde, BelowSigmaWithTightConstraints)
{
    const auto p = cosine_dip();
    const auto at = compute_alpha_tilde_full(p);
    const auto sg = compute_sigma_full(p);
    EXPECT_LE(at.value, sg.value + 1e-10);
    EXPECT_LT(at.constraint_residual, 1e-8);
    EXPECT_LT(sg.constraint_residual, 1e-8);
    const auto& v = sg.minimizer.values;
    EXPECT_NEAR(v.front() * v.front() + v.back() * v.back(), 1.0, 1e-12);
}

TEST(Sigma, ZeroMeanIsZero)
{
    EXPECT_EQ(compute_sigma(cosine_dip(0.0)), 0.0);
}

TEST(AlphaP, InfiniteWhenPositiveSetTouchesBothEnds)
{
    EXPECT_TRUE(std::isinf(compute_alpha_p(WeightSpec::cosine_dip(0.1), build_mesh(0, 1, 400))));
    auto pos = WeightSpec::affine(0.0, 1.0);
    pos.allow_definite = true;
    EXPECT_TRUE(std::isinf(compute_alpha_p(pos, build_mesh(0, 1, 100))));
}

TEST(AlphaP, AffineAgreesWithDenseOracle)
{
    const auto m = build_mesh(0, 1, 200);
    const auto w = WeightSpec::affine(-3.0, 1.0);
    const double ap = compute_alpha_p(w, m);
    ASSERT_TRUE(std::isfinite(ap));
    EXPECT_NEAR(ap, alpha_p_dense(m, sample_weight(w, m).values), 1e-8 * ap);
}

TEST(UpperBound, FiniteAndAboveAlphaTilde)
{
    const auto p = cosine_dip();
    const auto uN = solve_neumann(p);
    ASSERT_EQ(uN.positivity.tag, PositivityTag::InteriorPositive);
    const double bound = alpha_s_upper_bound(p, uN);
    EXPECT_TRUE(std::isfinite(bound));
    EXPECT_GT(bound, compute_alpha_tilde(p));
}

TEST(UpperBound, RejectsBoundaryZeroNeumannSolution)
{
    const auto p = cosine_dip();
    Solution s;
    s.field = DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.01));
    s.field.values.front() = 0.0;
    s.positivity = classify_positivity(s.field, false);
    ASSERT_EQ(s.positivity.tag, PositivityTag::BoundaryZero);
    EXPECT_THROW(alpha_s_upper_bound(p, s), invalid_argument);
}
