#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include <robinsub/io.hpp>
#include <robinsub/pipeline.hpp>

using namespace robinsub;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("robinsub_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

} // namespace

TEST(Numbers, RoundTripAndErrors)
{
    for (double v : {0.1, -1e-300, 1.0 / 3.0, 12345.678901234567})
        EXPECT_EQ(parse_double(fmt17(v)), v);
    EXPECT_TRUE(std::isinf(parse_double("-inf")));
    EXPECT_THROW(parse_double("0.1x"), invalid_argument);
    EXPECT_THROW(parse_double(""), invalid_argument);
}

TEST(SolutionFile, RoundTripIsExact)
{
    const auto dir = scratch_dir("solution");
    const auto p = make_problem(build_mesh(0, 1, 50), WeightSpec::cosine_dip(0.1), 0.5, -1.0);
    const auto s = c0_solution(p, -1.0);
    write_solution(dir / "u.txt", p, s);
    const auto f = read_solution(dir / "u.txt");
    EXPECT_EQ(f.values, s.field.values);
    EXPECT_EQ(f.header.at("positivity"), "InteriorPositive");
    EXPECT_EQ(parse_double(f.header.at("alpha")), -1.0);
    fs::remove_all(dir);
}

TEST(SolutionFile, TruncatedFileRejected)
{
    const auto dir = scratch_dir("truncated");
    {
        std::ofstream out(dir / "bad.txt");
        out << "n_cells 4\nvalues\n0\n1\n";
    }
    EXPECT_THROW(read_solution(dir / "bad.txt"), io_error);
    EXPECT_THROW(read_solution(dir / "missing.txt"), io_error);
    fs::remove_all(dir);
}

TEST(BranchCsv, HeaderAndDeterminism)
{
    const auto dir = scratch_dir("csv");
    const auto p = make_problem(build_mesh(0, 1, 200), WeightSpec::cosine_dip(0.1, 10.0), 0.5, 0.0, Formulation::R_form);
    const auto f1 = epsilon_family(p, {1e-1, 1e-2}, SolverConfig{}, ContinuationParams{}, 1);
    const auto f3 = epsilon_family(p, {1e-1, 1e-2}, SolverConfig{}, ContinuationParams{}, 3);
    write_branch_csv(dir / "a.csv", f1.branches[1]);
    write_branch_csv(dir / "b.csv", f3.branches[1]);
    const auto a = slurp(dir / "a.csv");
    EXPECT_EQ(a.substr(0, a.find('\n')),
              "alpha,epsilon,arclength,sup_norm,min_value,boundary_left,boundary_right,gamma1,positivity_tag");
    EXPECT_EQ(a, slurp(dir / "b.csv"));
    fs::remove_all(dir);
}

TEST(Json, NonFiniteNumbersBecomeStrings)
{
    EXPECT_EQ(json_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(json_number(0.5), 0.5);
    const auto dir = scratch_dir("json");
    nlohmann::json j{{"x", json_number(-std::numeric_limits<double>::infinity())}, {"y", 2}};
    write_json(dir / "j.json", j);
    EXPECT_EQ(read_json(dir / "j.json"), j);
    fs::remove_all(dir);
}

TEST(Config, ParsesSectionsAndLists)
{
    const auto c = parse(
        "[problem]\nweight = cosine_dip\nweight_c = 0\nn_cells = 123\nalpha = dirichlet\n"
        "[continuation]\neps_list = 0.1, 0.01\n"
        "[multiplicity]\nalphas = 0, 0.05\nn_seeds = 8\n"
        "[run]\ntasks = variational, multiplicity\ninline = false\n");
    EXPECT_EQ(c.n_cells, 123);
    EXPECT_TRUE(std::isinf(c.alpha));
    EXPECT_EQ(c.eps_list, (std::vector<double>{0.1, 0.01}));
    EXPECT_EQ(c.mult_alphas, (std::vector<double>{0.0, 0.05}));
    EXPECT_EQ(c.tasks, (std::vector<std::string>{"variational", "multiplicity"}));
    EXPECT_FALSE(c.inline_tasks);
    EXPECT_EQ(weight_at(c.weight, 0.0), 1.0);
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(parse("[run]\ntasks = nonsense\n"), invalid_argument);
    EXPECT_THROW(parse("[problem]\nq = abc\n"), invalid_argument);
    EXPECT_THROW(parse("[problem]\nformulation = Q\n"), invalid_argument);
    EXPECT_THROW(parse("[multiplicity]\nn_seeds = 4\n"), invalid_argument);
    EXPECT_THROW(parse("[problem\n"), invalid_argument);
    EXPECT_THROW(load_config("/nonexistent/run.cfg"), io_error);
}

TEST(Directories, UnwritableTargetIsIoError)
{
    EXPECT_THROW(ensure_dir("/proc/robinsub_cannot_exist"), io_error);
}

TEST(Pipeline, OracleTaskIsReproducible)
{
    RunConfig c;
    c.oracle_q = {0.5};
    c.oracle_alpha = {1.0};
    const auto a = task_verify_oracle(c), b = task_verify_oracle(c);
    EXPECT_EQ(a.status, 0);
    EXPECT_EQ(a.data.dump(), b.data.dump());
    c.oracle_tamper = true;
    EXPECT_NE(task_verify_oracle(c).status, 0);
}
