#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <robinsub/oracle.hpp>
#include <robinsub/solver.hpp>
#include <robinsub/variational.hpp>

using namespace robinsub;

namespace {

ProblemSpec cosine_dip(double alpha, Formulation f = Formulation::P_form, int n = 400)
{
    return make_problem(build_mesh(0, 1, n), WeightSpec::cosine_dip(0.1), 0.5, alpha, f);
}

ProblemSpec oracle_problem(int n)
{
    return make_problem(build_mesh(0, std::numbers::pi, n), WeightSpec::aq(0.5), 0.5, 1.0, Formulation::R_form);
}

// sin^4 on (-delta, pi + delta), extended by zero
DiscreteField extended_oracle(const Mesh& m)
{
    return DiscreteField::from_function(m, [](double x) {
        return (x <= 0 || x >= std::numbers::pi) ? 0.0 : std::pow(std::sin(x), 4);
    });
}

} // namespace

TEST(Residual, ZeroFieldIsASolution)
{
    for (double alpha : {-1.0, 0.0, 0.3})
        for (double eps : {0.0, 1e-3}) {
            const auto p = cosine_dip(alpha);
            SolverConfig c;
            c.epsilon = eps;
            const auto r = residual(p, DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.0)), c);
            EXPECT_EQ(sup_abs(r.values), 0.0);
        }
}

TEST(Residual, ConstantsSolveAtAlphaZero)
{
    const auto p = cosine_dip(0.0, Formulation::R_form);
    const auto r = residual(p, DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.37)), SolverConfig{});
    EXPECT_LT(sup_abs(r.values), 1e-12);
}

TEST(Residual, OracleSecondOrder)
{
    const auto p400 = oracle_problem(400), p800 = oracle_problem(800);
    const double r400 = relative_residual(make_system(p400), oracle_field(p400.mesh, 0.5, 1.0).values, 0.0);
    const double r800 = relative_residual(make_system(p800), oracle_field(p800.mesh, 0.5, 1.0).values, 0.0);
    EXPECT_LT(r800, 1e-4);
    EXPECT_GE(std::log2(r400 / r800), 1.8);
}

TEST(Residual, NegativeNodeRejected)
{
    const auto p = cosine_dip(-1.0);
    std::vector<double> w(p.mesh.size(), 0.01);
    w[7] = -1e-3;
    EXPECT_THROW(residual(p, DiscreteField(p.mesh, w), SolverConfig{}), invalid_argument);
}

TEST(Newton, ReturnsToOracle)
{
    const auto p = oracle_problem(800);
    auto seed = oracle_field(p.mesh, 0.5, 1.0);
    for (double& v : seed.values) v += 0.01;
    const auto s = solve_newton(p, seed, SolverConfig{});
    EXPECT_LT(sup_distance(s.field.values, oracle_field(p.mesh, 0.5, 1.0).values), 5e-4);
}

TEST(Newton, ConstantAtAlphaZero)
{
    const auto p = cosine_dip(0.0, Formulation::R_form);
    const auto s = solve_newton(p, DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), compute_c_a(p))), SolverConfig{});
    for (double v : s.field.values) EXPECT_NEAR(v, 0.0025, 1e-12);
}

TEST(Newton, ZeroSeedStaysTrivial)
{
    const auto p = cosine_dip(-1.0);
    const auto s = solve_newton(p, DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.0)), SolverConfig{});
    EXPECT_EQ(s.positivity.tag, PositivityTag::Trivial);
}

TEST(Deregularize, LargeAndSmallSolutions)
{
    const auto p = cosine_dip(0.1);
    const auto big = deregularize(p, DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.25)), eps_ladder(0.25, 8), SolverConfig{});
    ASSERT_TRUE(big.converged);
    EXPECT_EQ(big.epsilon_used, 0.0);
    EXPECT_EQ(big.positivity.tag, PositivityTag::InteriorPositive);

    const auto bump = DiscreteField::from_function(p.mesh, [](double x) { return 1e-3 * (1 + std::cos(2 * std::numbers::pi * x)); });
    const auto small = deregularize(p, bump, eps_ladder(1e-3, 8), SolverConfig{});
    ASSERT_TRUE(small.converged);
    EXPECT_EQ(small.positivity.tag, PositivityTag::InteriorPositive);
    for (int i = 0; i < p.mesh.size(); ++i) EXPECT_LT(small.field[i], big.field[i]);
    EXPECT_GT(sup_abs(big.field.values), 10 * sup_abs(small.field.values));
}

TEST(Deregularize, DeadCoreOracle)
{
    double delta = 0;
    const auto m = aq_mesh(400, 0.1, &delta);
    const auto p = make_problem(m, WeightSpec::aq(0.5, delta), 0.5, 1.0, Formulation::R_form);
    const auto s = deregularize(p, extended_oracle(m), {1e-6, 1e-8, 0.0}, SolverConfig{});
    ASSERT_TRUE(s.converged);
    EXPECT_EQ(s.positivity.tag, PositivityTag::DeadCore);
    EXPECT_LT(sup_distance(s.field.values, extended_oracle(m).values), 1e-3);
}

TEST(Classify, Examples)
{
    const auto m = build_mesh(0, 1, 50);
    EXPECT_EQ(classify_positivity(DiscreteField(m, std::vector<double>(m.size(), 0.0025)), false).tag, PositivityTag::InteriorPositive);
    EXPECT_EQ(classify_positivity(DiscreteField(m, std::vector<double>(m.size(), 0.0)), false).tag, PositivityTag::Trivial);

    double delta = 0;
    const auto ma = aq_mesh(400, 0.1, &delta);
    const auto pc = classify_positivity(extended_oracle(ma), false);
    ASSERT_EQ(pc.tag, PositivityTag::DeadCore);
    ASSERT_EQ(pc.dead_core_intervals.size(), 2u);
    EXPECT_EQ(pc.dead_core_intervals.front().first, 0);
    EXPECT_GE(ma.nodes[pc.dead_core_intervals.front().second], -1e-9);
    EXPECT_EQ(pc.dead_core_intervals.back().second, ma.n_cells);
    EXPECT_LE(ma.nodes[pc.dead_core_intervals.back().first], std::numbers::pi + 1e-9);
}

TEST(ChangeOfVariables, Examples)
{
    const auto m = build_mesh(0, 1, 10);
    const DiscreteField one(m, std::vector<double>(m.size(), 1.0));
    const auto w = change_of_variables(one, 4.0, 0.5, Direction::u_to_w);
    for (double v : w.values) EXPECT_DOUBLE_EQ(v, 16.0);
    const auto f = DiscreteField::from_function(m, [](double x) { return 1 + x * x; });
    const auto back = change_of_variables(change_of_variables(f, 0.3, 0.25, Direction::u_to_w), 0.3, 0.25, Direction::w_to_u);
    EXPECT_LT(sup_distance(back.values, f.values), 1e-15);
    EXPECT_THROW(change_of_variables(one, 0.0, 0.5, Direction::w_to_u), invalid_argument);
}

TEST(ChangeOfVariables, ScalingEquivariance)
{
    const auto p = cosine_dip(0.1);
    const auto s = deregularize(p, DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.0025 / 0.01)), eps_ladder(0.25, 8), SolverConfig{});
    ASSERT_TRUE(s.converged);
    const auto w = change_of_variables(s.field, 0.1, 0.5, Direction::u_to_w);
    const auto r = with_formulation(p, Formulation::R_form);
    EXPECT_LE(relative_residual(make_system(r), w.values, 0.0), 10 * SolverConfig{}.newton_tol);
}

TEST(Monotone, ZeroSubGivesZero)
{
    const auto p = cosine_dip(-1.0);
    const auto u = c0_solution(p, -1.0);
    const auto s = monotone_iteration(p, DiscreteField(p.mesh, std::vector<double>(p.mesh.size(), 0.0)), u.field, SolverConfig{});
    EXPECT_EQ(sup_abs(s.field.values), 0.0);
}

TEST(Monotone, EigenSubsolutionToMuSupersolution)
{
    const auto p = cosine_dip(-1.0);
    const auto mu = minimize_mu(p, -1.0);
    const auto super = scaled_mu_minimizer(mu, p.q);
    const auto sub = eigen_subsolution(p, super);
    const auto s = monotone_iteration(p, sub, super, SolverConfig{});
    EXPECT_EQ(s.positivity.tag, PositivityTag::InteriorPositive);
    const auto ref = c0_solution(p, -1.0);
    EXPECT_LT(sup_distance(s.field.values, ref.field.values), 1e-8 * sup_abs(ref.field.values) + 1e-12);
}

TEST(Monotone, OrderingViolated)
{
    const auto p = cosine_dip(-1.0);
    const DiscreteField lo(p.mesh, std::vector<double>(p.mesh.size(), 1.0));
    const DiscreteField hi(p.mesh, std::vector<double>(p.mesh.size(), 0.5));
    EXPECT_THROW(monotone_iteration(p, lo, hi, SolverConfig{}), invalid_argument);
}

TEST(Dirichlet, NontrivialSolutionExists)
{
    const auto p = cosine_dip(dirichlet_alpha);
    const auto near = c0_solution(p, -1000.0);
    const auto s = solve_dirichlet(p, near.field, SolverConfig{});
    EXPECT_NE(s.positivity.tag, PositivityTag::Trivial);
    EXPECT_EQ(s.field.values.front(), 0.0);
    EXPECT_EQ(s.field.values.back(), 0.0);
    // regression value at x = 0.1 on n = 400
    EXPECT_GT(s.field[40], 0.0);
}

TEST(Dirichlet, NegativeWeightOnlyTrivial)
{
    auto w = WeightSpec::affine(0.0, -1.0);
    w.allow_definite = true;
    const auto p = make_problem(build_mesh(0, 1, 200), w, 0.5, dirichlet_alpha);
    for (const auto& seed : multistart_seeds(p.mesh, 8)) {
        std::vector<double> s = seed;
        for (double& v : s) v = std::abs(v);
        try {
            const auto sol = deregularize(p, DiscreteField(p.mesh, s), eps_ladder(1.0, 8), SolverConfig{});
            if (sol.converged) EXPECT_EQ(sol.positivity.tag, PositivityTag::Trivial);
        } catch (const convergence_error&) {
        }
    }
}

TEST(Mixed, UniqueAndPositiveAtBoundary)
{
    const auto p = cosine_dip(-1.0);
    MixedProblemSpec mx;
    mx.d_low = 0.0;
    mx.d_high = 0.2;
    mx.dirichlet_end = MixedEnd::high;
    const Mesh m = mixed_mesh(p, mx);
    SolverConfig c;
    c.max_iters = 200;
    const auto a = solve_mixed_Q(p, mx, DiscreteField(m, std::vector<double>(m.size(), 1.0)), c);
    const auto b = solve_mixed_Q(p, mx, DiscreteField::from_function(m, [](double x) { return 1.0 - x / 0.2; }), c);
    EXPECT_LT(sup_distance(a.solution.field.values, b.solution.field.values), 1e-8);
    EXPECT_GT(a.boundary_value, 0.0);
}

TEST(CurveC0, StrictlyIncreasingAndBoundedBelow)
{
    const auto p = cosine_dip(-1.0);
    std::vector<Solution> sols;
    for (double a : {-8.0, -4.0, -2.0, -1.0, -0.5}) sols.push_back(c0_solution(p, a));
    double min_sup = 1e300;
    for (std::size_t k = 0; k < sols.size(); ++k) {
        EXPECT_EQ(sols[k].positivity.tag, PositivityTag::InteriorPositive);
        min_sup = std::min(min_sup, sup_abs(sols[k].field.values));
        if (k)
            for (int i = 0; i < p.mesh.size(); ++i) EXPECT_LT(sols[k - 1].field[i], sols[k].field[i]);
    }
    // lower-bound property over this sweep
    EXPECT_GT(min_sup, 1e-4);
    RecordProperty("min_sup_norm", std::to_string(min_sup));
}

TEST(CurveC0, DirichletLimitInH1)
{
    const auto p = cosine_dip(dirichlet_alpha);
    const auto uD = solve_dirichlet(p, c0_solution(p, -1000.0).field, SolverConfig{});
    double prev = 1e300;
    for (double a : {-10.0, -100.0, -1000.0}) {
        const auto u = c0_solution(p, a);
        std::vector<double> d(p.mesh.size());
        for (int i = 0; i < p.mesh.size(); ++i) d[i] = u.field[i] - uD.field[i];
        const double dist = norms(p.mesh, DiscreteField(p.mesh, d)).h1_norm;
        EXPECT_LT(dist, prev);
        prev = dist;
    }
}

TEST(CurveC0, ZeroMeanBlowUp)
{
    const auto p = make_problem(build_mesh(0, 1, 400), WeightSpec::cosine_dip(0.0), 0.5, -1.0);
    std::vector<double> mins;
    for (double a : {-0.4, -0.2, -0.1, -0.05}) mins.push_back(norms(p.mesh, c0_solution(p, a).field).min_value);
    for (std::size_t k = 1; k < mins.size(); ++k) EXPECT_GT(mins[k], mins[k - 1]);
    EXPECT_GT(mins.back(), 10 * mins.front());
}
