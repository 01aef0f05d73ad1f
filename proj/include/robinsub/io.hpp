#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "continuation.hpp"
#include "error.hpp"
#include "solver.hpp"
#include "weights.hpp"

namespace robinsub {

inline std::string fmt17(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_short(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline double parse_double(const std::string& s)
{
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw invalid_argument("not a number: '" + s + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw invalid_argument("not a number: '" + s + "'");
    return v;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p);
    if (!out) throw io_error("cannot write " + p.string());
    return out;
}

inline void ensure_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw io_error("cannot create directory " + dir.string());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream t(probe);
        if (!t) throw io_error("directory not writable: " + dir.string());
    }
    std::filesystem::remove(probe, ec);
}

// ---------------------------------------------------------------------------
// Solution text format: "key value" header lines, a "values" line, then one nodal value per line.

struct SolutionFile {
    std::map<std::string, std::string> header;
    std::vector<double> values;
};

inline void write_solution(const std::filesystem::path& path, const ProblemSpec& p, const Solution& s)
{
    auto out = open_out(path);
    out << "alpha " << fmt17(s.alpha) << "\n";
    out << "q " << fmt17(p.q) << "\n";
    out << "epsilon " << fmt17(s.epsilon_used) << "\n";
    out << "formulation " << to_string(p.formulation) << "\n";
    out << "weight " << to_string(p.weight.kind) << "\n";
    out << "n_cells " << p.mesh.n_cells << "\n";
    out << "residual_sup " << fmt17(s.residual_sup) << "\n";
    out << "positivity " << to_string(s.positivity.tag) << "\n";
    out << "values\n";
    for (double v : s.field.values) out << fmt17(v) << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

inline SolutionFile read_solution(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    SolutionFile f;
    std::string line;
    bool body = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!body) {
            if (line == "values") {
                body = true;
                continue;
            }
            std::istringstream ls(line);
            std::string k, v;
            ls >> k >> v;
            f.header[k] = v;
        } else {
            f.values.push_back(parse_double(line));
        }
    }
    if (!body) throw io_error("no values section in " + path.string());
    const auto it = f.header.find("n_cells");
    if (it == f.header.end() || std::stoi(it->second) + 1 != static_cast<int>(f.values.size()))
        throw io_error("node count does not match n_cells in " + path.string());
    return f;
}

// ---------------------------------------------------------------------------
// Branch export

inline void write_branch_csv(const std::filesystem::path& path, const Branch& b)
{
    auto out = open_out(path);
    out << "alpha,epsilon,arclength,sup_norm,min_value,boundary_left,boundary_right,gamma1,positivity_tag\n";
    for (const auto& p : b.points) {
        out << fmt17(p.alpha) << ',' << fmt17(p.epsilon) << ',' << fmt17(p.arclength) << ',' << fmt17(p.sup_norm) << ','
            << fmt17(p.min_value) << ',' << fmt17(p.field.values.front()) << ',' << fmt17(p.field.values.back()) << ','
            << (p.gamma1 ? fmt17(*p.gamma1) : std::string("nan")) << ',' << to_string(p.positivity.tag) << "\n";
    }
    if (!out) throw io_error("write failed: " + path.string());
}

// two columns (alpha, sup_norm) for external plotting
inline void write_branch_dat(const std::filesystem::path& path, const Branch& b)
{
    auto out = open_out(path);
    out << "# alpha sup_norm\n";
    for (const auto& p : b.points) out << fmt17(p.alpha) << ' ' << fmt17(p.sup_norm) << "\n";
}

inline nlohmann::json json_number(double v)
{
    if (std::isfinite(v)) return v;
    return fmt17(v);
}

inline nlohmann::json branch_summary(const Branch& b)
{
    nlohmann::json j;
    j["epsilon"] = b.epsilon;
    j["start_tag"] = to_string(b.start_tag);
    j["end_tag"] = to_string(b.end_tag);
    j["turning_points"] = b.turning_points;
    std::vector<double> tp_alpha;
    for (int i : b.turning_points) tp_alpha.push_back(b.points[i].alpha);
    j["turning_alphas"] = tp_alpha;
    j["n_points"] = b.points.size();
    j["amplitude_scale"] = b.amplitude_scale;
    j["gamma0_alpha"] = b.gamma0_alpha ? json_number(*b.gamma0_alpha) : nlohmann::json(nullptr);
    j["gamma1_constant"] = b.gamma1_constant ? json_number(*b.gamma1_constant) : nlohmann::json(nullptr);
    j["message"] = b.message;
    if (!b.points.empty()) {
        j["alpha_first"] = b.points.front().alpha;
        j["alpha_last"] = b.points.back().alpha;
        j["arclength"] = b.points.back().arclength;
    }
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw io_error("bad json in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Run configuration: INI sections [problem] [solver] [continuation] [variational] [multiplicity]
// [oracle] [run]. Lists are comma separated.

struct RunConfig {
    // problem
    double x_left = 0.0, x_right = 1.0;
    int n_cells = 400;
    WeightSpec weight = WeightSpec::cosine_dip(0.1);
    double q = 0.5;
    double alpha = -1.0;
    Formulation formulation = Formulation::P_form;
    // solver
    SolverConfig solver;
    std::vector<double> eps_schedule;
    // continuation
    ContinuationParams cont;
    std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
    double eps_terminal = 1e-8;
    double family_amplitude = 0.0; // cosine_dip amplitude for the epsilon family, 0 keeps the problem weight
    std::vector<double> c0_alphas{-8, -4, -2, -1, -0.5};
    double c0_alpha_min = -10.0, c0_alpha_max = -0.05;
    // variational
    std::vector<double> mu_alphas{-1.0};
    std::vector<double> q_grid{0.25, 0.5, 0.75}; // alpha_tilde(q) and the empirical positivity proxies
    // multiplicity
    std::vector<double> mult_alphas;
    int n_seeds = 16;
    // oracle
    std::vector<double> oracle_q{1.0 / 3.0, 0.5, 0.75};
    std::vector<double> oracle_alpha{0.5, 1.0, 2.0};
    int oracle_n = 200;
    double oracle_threshold = 5e-4;
    bool oracle_tamper = false;
    // run
    std::vector<std::string> tasks;
    std::string output_dir = "out";
    int jobs = 1;
    bool inline_tasks = true;

    boost::property_tree::ptree raw;
};

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        const auto b = cur.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = cur.find_last_not_of(" \t");
        out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

inline std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> v;
    for (const auto& t : split_list(s)) v.push_back(parse_double(t));
    return v;
}

inline const std::vector<std::string>& known_tasks()
{
    static const std::vector<std::string> t{"verify_oracle", "solve", "continue", "variational", "multiplicity", "report"};
    return t;
}

inline RunConfig parse_config(std::istream& in, const std::string& origin = "<config>")
{
    namespace pt = boost::property_tree;
    RunConfig c;
    try {
        pt::ini_parser::read_ini(in, c.raw);
    } catch (const pt::ini_parser_error& e) {
        throw invalid_argument(origin + ": " + e.what());
    }
    const auto& r = c.raw;
    auto num = [&](const std::string& key, double& dst) {
        if (auto v = r.get_optional<std::string>(key)) dst = parse_double(*v);
    };
    auto integer = [&](const std::string& key, int& dst) {
        if (auto v = r.get_optional<std::string>(key)) dst = static_cast<int>(parse_double(*v));
    };
    auto list = [&](const std::string& key, std::vector<double>& dst) {
        if (auto v = r.get_optional<std::string>(key)) dst = parse_list(*v);
    };
    auto flag = [&](const std::string& key, bool& dst) {
        if (auto v = r.get_optional<std::string>(key)) dst = (*v == "true" || *v == "1" || *v == "yes");
    };

    num("problem.x_left", c.x_left);
    num("problem.x_right", c.x_right);
    integer("problem.n_cells", c.n_cells);
    num("problem.q", c.q);
    if (auto v = r.get_optional<std::string>("problem.alpha")) c.alpha = (*v == "dirichlet") ? dirichlet_alpha : parse_double(*v);
    if (auto v = r.get_optional<std::string>("problem.formulation")) {
        if (*v == "P" || *v == "P_form") c.formulation = Formulation::P_form;
        else if (*v == "R" || *v == "R_form") c.formulation = Formulation::R_form;
        else throw invalid_argument(origin + ": unknown formulation " + *v);
    }
    const std::string kind = r.get<std::string>("problem.weight", "cosine_dip");
    switch (weight_kind_from_string(kind)) {
    case WeightKind::cosine_dip:
        c.weight = WeightSpec::cosine_dip(parse_double(r.get<std::string>("problem.weight_c", "0.1")),
                                          parse_double(r.get<std::string>("problem.weight_amplitude", "1")));
        break;
    case WeightKind::builtin_aq:
        c.weight = WeightSpec::aq(c.q, parse_double(r.get<std::string>("problem.weight_delta", "0")));
        break;
    case WeightKind::affine:
        c.weight = WeightSpec::affine(parse_double(r.get<std::string>("problem.weight_slope", "-3")),
                                      parse_double(r.get<std::string>("problem.weight_intercept", "1")));
        break;
    case WeightKind::tabulated: {
        const auto file = r.get_optional<std::string>("problem.weight_file");
        if (!file) throw invalid_argument(origin + ": tabulated weight needs problem.weight_file");
        c.weight = read_tabulated_weight(*file);
        break;
    }
    }
    flag("problem.allow_definite", c.weight.allow_definite);

    num("solver.newton_tol", c.solver.newton_tol);
    integer("solver.max_iters", c.solver.max_iters);
    num("solver.damping_min", c.solver.damping_min);
    num("solver.epsilon", c.solver.epsilon);
    list("solver.eps_schedule", c.eps_schedule);

    num("continuation.step_min", c.cont.step_min);
    num("continuation.step_max", c.cont.step_max);
    num("continuation.step_init", c.cont.step_init);
    num("continuation.alpha_min", c.cont.alpha_min);
    num("continuation.alpha_max", c.cont.alpha_max);
    num("continuation.arclength_budget", c.cont.arclength_budget);
    integer("continuation.max_steps", c.cont.max_steps);
    num("continuation.contact_tol", c.cont.contact_tol);
    list("continuation.eps_list", c.eps_list);
    num("continuation.eps_terminal", c.eps_terminal);
    num("continuation.family_amplitude", c.family_amplitude);
    list("continuation.c0_alphas", c.c0_alphas);
    num("continuation.c0_alpha_min", c.c0_alpha_min);
    num("continuation.c0_alpha_max", c.c0_alpha_max);

    list("variational.mu_alphas", c.mu_alphas);
    list("variational.q_grid", c.q_grid);
    for (double q : c.q_grid) require(q >= 0.0 && q < 1.0, origin + ": q_grid entries must lie in [0, 1)");

    list("multiplicity.alphas", c.mult_alphas);
    integer("multiplicity.n_seeds", c.n_seeds);

    list("oracle.q_list", c.oracle_q);
    list("oracle.alpha_list", c.oracle_alpha);
    integer("oracle.n_cells", c.oracle_n);
    num("oracle.threshold", c.oracle_threshold);
    flag("oracle.tamper", c.oracle_tamper);

    if (auto v = r.get_optional<std::string>("run.tasks")) c.tasks = split_list(*v);
    if (auto v = r.get_optional<std::string>("run.output_dir")) c.output_dir = *v;
    integer("run.jobs", c.jobs);
    flag("run.inline", c.inline_tasks);

    for (const auto& t : c.tasks)
        if (std::find(known_tasks().begin(), known_tasks().end(), t) == known_tasks().end())
            throw invalid_argument(origin + ": unknown task " + t);
    require(c.n_cells >= 2, origin + ": n_cells must be >= 2");
    require(c.n_seeds >= 8, origin + ": n_seeds must be >= 8");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config " + path.string());
    return parse_config(in, path.string());
}

inline nlohmann::json config_echo(const RunConfig& c)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [section, tree] : c.raw) {
        for (const auto& [key, val] : tree) j[section][key] = val.get_value<std::string>();
    }
    return j;
}

inline Mesh config_mesh(const RunConfig& c, int n_override = 0)
{
    return build_mesh(c.x_left, c.x_right, n_override > 0 ? n_override : c.n_cells);
}

inline ProblemSpec config_problem(const RunConfig& c, int n_override = 0)
{
    const auto f = std::isinf(c.alpha) ? Formulation::P_form : c.formulation;
    return make_problem(config_mesh(c, n_override), c.weight, c.q, c.alpha, f);
}

} // namespace robinsub
