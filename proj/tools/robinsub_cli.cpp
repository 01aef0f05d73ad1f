// robinsub: continuation and verification runs for -u'' = a(x) u^q with Robin data u' = alpha u.
// Exit codes: 0 pass, 2 a scientific check failed, 3 I/O, 4 missing or invalid inputs.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include <robinsub/pipeline.hpp>

namespace fs = std::filesystem;
using namespace robinsub;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check = 2;
constexpr int exit_io = 3;
constexpr int exit_missing = 4;

struct Cli {
    std::string config_path;
    std::string out_dir;
    int jobs = 0;
    int n_cells = 0;
    std::string alpha;
};

RunConfig load(const Cli& cli)
{
    RunConfig c;
    if (!cli.config_path.empty()) {
        if (!fs::is_regular_file(cli.config_path)) throw invalid_argument("config file not found: " + cli.config_path);
        c = load_config(cli.config_path);
    }
    if (!cli.alpha.empty()) c.alpha = cli.alpha == "dirichlet" ? dirichlet_alpha : parse_double(cli.alpha);
    if (!cli.out_dir.empty()) c.output_dir = cli.out_dir;
    if (cli.jobs > 0) c.jobs = cli.jobs;
    return c;
}

RunOptions options(const Cli& cli, const RunConfig& c)
{
    RunOptions o;
    o.out_dir = c.output_dir;
    o.jobs = std::max(1, c.jobs);
    o.n_cells = cli.n_cells;
    return o;
}

using Task = std::function<TaskOutcome(const RunConfig&, const RunOptions&)>;

const std::map<std::string, Task>& task_table()
{
    static const std::map<std::string, Task> t{
        {"verify_oracle", [](const RunConfig& c, const RunOptions&) { return task_verify_oracle(c); }},
        {"solve", task_solve},
        {"continue", task_continue},
        {"variational", task_variational},
        {"multiplicity", task_multiplicity},
    };
    return t;
}

void print_summary(const std::string& name, const TaskOutcome& t)
{
    std::printf("%s: %s\n", name.c_str(), t.status == 0 ? "ok" : "check failed");
    if (t.data.contains("checks"))
        for (const auto& ch : t.data["checks"])
            std::printf("  [%s] %s\n", ch["pass"].get<bool>() ? "pass" : "FAIL", ch["name"].get<std::string>().c_str());
}

int run_single(const Cli& cli, const std::string& task)
{
    const RunConfig c = load(cli);
    const RunOptions o = options(cli, c);
    ensure_dir(o.out_dir);
    const auto out = task_table().at(task)(c, o);
    write_json(o.out_dir / (task + ".json"), out.data);
    print_summary(task, out);
    return out.status == 0 ? exit_ok : exit_check;
}

// Collects the outputs of the configured tasks (running them when allowed) into report.json.
int run_report(const Cli& cli)
{
    const RunConfig c = load(cli);
    const RunOptions o = options(cli, c);
    ensure_dir(o.out_dir);
    json report = json::object();
    int status = exit_ok;
    std::vector<std::string> missing;
    json checks = json::array();
    for (const auto& task : c.tasks) {
        if (task == "report") continue;
        const fs::path file = o.out_dir / (task + ".json");
        json data;
        if (fs::exists(file)) {
            data = read_json(file);
        } else if (c.inline_tasks) {
            const auto out = task_table().at(task)(c, o);
            write_json(file, out.data);
            data = out.data;
        } else {
            missing.push_back(file.string());
            continue;
        }
        if (data.contains("checks"))
            for (const auto& ch : data["checks"]) {
                checks.push_back(ch);
                if (!ch["pass"].get<bool>()) status = exit_check;
            }
        report[task] = data;
    }
    if (!missing.empty()) {
        for (const auto& m : missing) std::fprintf(stderr, "missing input: %s\n", m.c_str());
        return exit_missing;
    }
    if (!c.tasks.empty()) report["acceptance"] = checks;
    write_json(o.out_dir / "report.json", report);
    std::printf("report: %zu checks, %s\n", checks.size(), status == exit_ok ? "all pass" : "failures present");
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"robinsub: sublinear Robin problem toolkit"};
    app.require_subcommand(1);
    Cli cli;
    app.add_option("--config", cli.config_path, "run configuration file");
    app.add_option("--out", cli.out_dir, "output directory");
    app.add_option("--jobs", cli.jobs, "concurrent epsilon-family members and seeds")->check(CLI::PositiveNumber);
    app.add_option("--n-cells", cli.n_cells, "override the number of cells")->check(CLI::Range(2, 1 << 24));
    app.add_option("--alpha", cli.alpha, "override alpha (number or 'dirichlet')");

    std::string chosen;
    const std::vector<std::pair<std::string, std::string>> subs{
        {"verify-oracle", "residual order of the closed-form solution"},
        {"solve", "solve at the configured alpha"},
        {"continue", "epsilon family, terminal branch and the negative-alpha curve"},
        {"variational", "c_a, alpha_tilde, sigma, alpha_p, mu and the alpha_s sandwich"},
        {"multiplicity", "multistart solution counts"},
        {"report", "aggregate task outputs into report.json"},
    };
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough()->callback([&chosen, n = name] { chosen = n; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_missing;
    }

    try {
        if (chosen == "report") return run_report(cli);
        std::string task = chosen;
        std::replace(task.begin(), task.end(), '-', '_');
        return run_single(cli, task);
    } catch (const io_error& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return exit_io;
    } catch (const invalid_argument& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return exit_missing;
    } catch (const convergence_error& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return exit_check;
    }
}
