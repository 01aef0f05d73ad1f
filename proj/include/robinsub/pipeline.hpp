#pragma once

// Task runners shared by the command line tool and the report. Each returns JSON plus a status:
// 0 when every scientific check passed, 2 otherwise.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "continuation.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "solver.hpp"
#include "spectral.hpp"
#include "variational.hpp"
#include "weights.hpp"

namespace robinsub {

using json = nlohmann::json;

struct TaskOutcome {
    json data = json::object();
    int status = 0;
};

struct RunOptions {
    std::filesystem::path out_dir = "out";
    int jobs = 1;
    int n_cells = 0; // 0: keep the config value
};

inline json check_entry(const std::string& name, const json& measured, const json& tolerance, const std::string& anchor,
                        bool pass)
{
    return json{{"name", name}, {"measured", measured}, {"tolerance", tolerance}, {"anchor", anchor}, {"pass", pass}};
}

inline json hypothesis_json(const HypothesisReport& h)
{
    json j;
    j["integral_a"] = h.integral_a;
    j["holds_A0"] = h.holds_A0;
    j["holds_A1"] = h.holds_A1;
    j["holds_A2"] = h.holds_A2;
    j["holds_A3"] = h.holds_A3;
    j["components_positive_set"] = h.components_positive_set;
    j["d_witness"] = h.d_witness ? json(*h.d_witness) : json(nullptr);
    j["witness_side"] = h.witness_side == WitnessSide::left ? "left" : "right";
    return j;
}

inline int worst(int a, int b) { return std::max(a, b); }

// ---------------------------------------------------------------------------

inline TaskOutcome task_verify_oracle(const RunConfig& c)
{
    TaskOutcome t;
    t.data["cases"] = json::array();
    t.data["checks"] = json::array();
    for (double q : c.oracle_q)
        for (double a : c.oracle_alpha) {
            const auto oc = verify_oracle(q, a, c.oracle_n, c.oracle_threshold, c.oracle_tamper);
            t.data["cases"].push_back({{"q", q},
                                       {"alpha", a},
                                       {"n_cells", oc.n_cells},
                                       {"residuals", oc.residuals},
                                       {"order", oc.order},
                                       {"finest", oc.finest},
                                       {"threshold", oc.threshold},
                                       {"tampered", c.oracle_tamper},
                                       {"pass", oc.pass}});
            t.data["checks"].push_back(check_entry("oracle order q=" + fmt_short(q) + " alpha=" + fmt_short(a),
                                                   {{"order", oc.order}, {"finest", oc.finest}},
                                                   {{"order", "[1.8, 2.2]"}, {"finest_below", oc.threshold}},
                                                   "closed-form sin^r solution of -w'' = alpha a_q w^q", oc.pass));
            if (!oc.pass) t.status = 2;
        }
    return t;
}

// Seed for a direct solve at the configured alpha.
inline Solution solve_configured(const ProblemSpec& p, const RunConfig& c)
{
    const bool a0 = p.integral_a() < -tol_zero(p.a);
    if (p.dirichlet()) {
        auto near = c0_solution(p, -1000.0, c.solver);
        return solve_dirichlet(p, near.field, c.solver);
    }
    if (p.formulation == Formulation::P_form && p.alpha < 0) return c0_solution(p, p.alpha, c.solver);
    double level = 1.0;
    if (a0) {
        level = compute_c_a(p);
        if (p.formulation == Formulation::P_form && p.alpha > 0) level *= std::pow(p.alpha, -1.0 / (1.0 - p.q));
    }
    const DiscreteField seed(p.mesh, std::vector<double>(p.mesh.size(), level));
    const auto sched = c.eps_schedule.empty() ? eps_ladder(level, 8) : c.eps_schedule;
    return deregularize(p, seed, sched, c.solver);
}

inline TaskOutcome task_solve(const RunConfig& c, const RunOptions& o)
{
    TaskOutcome t;
    const auto p = config_problem(c, o.n_cells);
    Solution s;
    try {
        s = solve_configured(p, c);
    } catch (const convergence_error& e) {
        t.data["error"] = e.what();
        t.status = 2;
        return t;
    }
    write_solution(o.out_dir / "solution.txt", p, s);
    const auto nm = norms(p.mesh, s.field);
    t.data = {{"alpha", json_number(s.alpha)},
              {"epsilon", s.epsilon_used},
              {"formulation", to_string(p.formulation)},
              {"sup_norm", nm.sup_norm},
              {"min_value", nm.min_value},
              {"h1_norm", nm.h1_norm},
              {"residual_sup", s.residual_sup},
              {"positivity", to_string(s.positivity.tag)},
              {"converged", s.converged},
              {"file", "solution.txt"}};
    if (!s.converged) t.status = 2;
    return t;
}

// Weight used for the epsilon family (cosine_dip may be rescaled in amplitude).
inline WeightSpec family_weight(const RunConfig& c)
{
    WeightSpec w = c.weight;
    if (w.kind == WeightKind::cosine_dip && c.family_amplitude > 0) {
        if (w.params.size() < 2) w.params.resize(2, 1.0);
        w.params[1] = c.family_amplitude;
    }
    return w;
}

inline std::vector<double> family_eps(const RunConfig& c)
{
    auto e = c.eps_list;
    if (c.eps_terminal > 0 && (e.empty() || c.eps_terminal < e.back())) e.push_back(c.eps_terminal);
    return e;
}

// Least-squares slope of log alpha_{1,eps} against log eps; observed only, no rate is asserted.
inline double observed_decay_rate(const std::vector<double>& eps, const std::vector<double>& a1)
{
    std::vector<double> x, y;
    for (std::size_t k = 0; k < eps.size() && k < a1.size(); ++k)
        if (eps[k] > 0 && a1[k] > 0 && std::isfinite(a1[k])) {
            x.push_back(std::log(eps[k]));
            y.push_back(std::log(a1[k]));
        }
    if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= x.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline TaskOutcome task_continue(const RunConfig& c, const RunOptions& o)
{
    TaskOutcome t;
    const Mesh m = config_mesh(c, o.n_cells);
    const auto fp = make_problem(m, family_weight(c), c.q, 0.0, Formulation::R_form);
    const auto eps = family_eps(c);
    json echo = config_echo(c);

    const auto fam = epsilon_family(fp, eps, c.solver, c.cont, o.jobs);
    const double ca = fp.integral_a() < -tol_zero(fp.a) ? compute_c_a(fp) : std::numeric_limits<double>::quiet_NaN();
    t.data["family"] = json::array();
    t.data["checks"] = json::array();
    for (std::size_t k = 0; k < fam.branches.size(); ++k) {
        const auto& b = fam.branches[k];
        const std::string stem = "branch_eps" + std::to_string(k);
        write_branch_csv(o.out_dir / (stem + ".csv"), b);
        write_branch_dat(o.out_dir / (stem + ".dat"), b);
        json side = branch_summary(b);
        side["alpha1_eps"] = json_number(fam.alpha1[k]);
        side["config"] = echo;
        write_json(o.out_dir / (stem + ".json"), side);
        side.erase("config");
        side["file"] = stem + ".csv";
        t.data["family"].push_back(side);

        const bool tags = b.start_tag == EndTag::Gamma0_contact && b.end_tag == EndTag::Gamma1_contact;
        t.data["checks"].push_back(check_entry("contact tags eps=" + fmt_short(b.epsilon),
                                               {{"start", to_string(b.start_tag)}, {"end", to_string(b.end_tag)}},
                                               "Gamma0_contact -> Gamma1_contact",
                                               "regularized branch joins the trivial line to the line of constants", tags));
        if (!tags) t.status = worst(t.status, 2);
        if (b.gamma0_alpha && std::isfinite(fam.alpha1[k])) {
            const double d = std::abs(*b.gamma0_alpha - fam.alpha1[k]);
            t.data["checks"].push_back(check_entry("trivial-line contact eps=" + fmt_short(b.epsilon), d, 1e-3,
                                                   "branch leaves the trivial line at the principal eigenvalue",
                                                   d <= 1e-3));
            if (d > 1e-3) t.status = 2;
        }
        if (b.gamma1_constant && std::isfinite(ca)) {
            const double d = std::abs(*b.gamma1_constant - (ca - b.epsilon));
            t.data["checks"].push_back(check_entry("constant-line contact eps=" + fmt_short(b.epsilon), d, 1e-3,
                                                   "branch meets the constants at c_a - eps", d <= 1e-3));
            if (d > 1e-3) t.status = 2;
        }
    }
    t.data["alpha1_eps"] = fam.alpha1;
    t.data["alpha1_eps_observed_rate"] = json_number(observed_decay_rate(eps, fam.alpha1));
    t.data["hausdorff"] = fam.hausdorff;
    t.data["complete"] = fam.complete;
    t.data["c_a"] = json_number(ca);
    if (!fam.complete) {
        t.data["message"] = fam.message;
        t.status = 2;
    }

    // curve through the negative-alpha solutions, plain formulation, no regularization
    const auto p = make_problem(m, c.weight, c.q, -1.0, Formulation::P_form);
    if (!positive_runs(p.a, tol_zero(p.a)).empty()) {
        try {
            const auto start = c0_solution(p, -1.0, c.solver);
            json c0 = json::array();
            for (int dir : {-1, 1}) {
                ContinuationParams cp = c.cont;
                cp.alpha_min = c.c0_alpha_min;
                cp.alpha_max = c.c0_alpha_max;
                cp.stop_at_gamma1 = false;
                const auto b = continue_branch(p, start, dir, c.solver, cp);
                const std::string stem = dir < 0 ? "c0_down" : "c0_up";
                write_branch_csv(o.out_dir / (stem + ".csv"), b);
                write_branch_dat(o.out_dir / (stem + ".dat"), b);
                json side = branch_summary(b);
                side["config"] = echo;
                write_json(o.out_dir / (stem + ".json"), side);
                side.erase("config");
                side["file"] = stem + ".csv";
                double gmin = std::numeric_limits<double>::infinity();
                for (const auto& q : b.points)
                    if (q.gamma1) gmin = std::min(gmin, *q.gamma1);
                side["gamma1_min"] = json_number(gmin);
                c0.push_back(side);
            }
            t.data["c0"] = c0;
        } catch (const std::exception& e) {
            t.data["c0_error"] = e.what();
        }
    }
    return t;
}

inline TaskOutcome task_variational(const RunConfig& c, const RunOptions& o)
{
    TaskOutcome t;
    auto p = config_problem(c, o.n_cells);
    p = with_formulation(std::isinf(p.alpha) ? with_alpha(p, -1.0) : p, Formulation::P_form);
    const auto hyp = check_hypotheses(c.weight, p.mesh);
    t.data["hypotheses"] = hypothesis_json(hyp);
    t.data["checks"] = json::array();

    const auto at = compute_alpha_tilde_full(p);
    const auto sg = compute_sigma_full(p);
    t.data["alpha_tilde"] = at.value;
    t.data["alpha_tilde_constraint_residual"] = at.constraint_residual;
    t.data["sigma"] = sg.value;
    t.data["sigma_constraint_residual"] = sg.constraint_residual;
    t.data["alpha_p"] = json_number(compute_alpha_p(c.weight, p.mesh));
    t.data["alpha_s_lower"] = at.value;

    const bool pos_iff = (at.value > 0) == hyp.holds_A0;
    t.data["checks"].push_back(check_entry("alpha_tilde positive iff int a < 0", {{"alpha_tilde", at.value}, {"holds_A0", hyp.holds_A0}},
                                           "exact", "alpha_tilde > 0 exactly under a negative mean", pos_iff));
    const bool s_ge = sg.value >= at.value;
    t.data["checks"].push_back(check_entry("sigma >= alpha_tilde", {{"sigma", sg.value}, {"alpha_tilde", at.value}}, "exact",
                                           "sigma dominates alpha_tilde", s_ge));
    if (!pos_iff || !s_ge) t.status = 2;

    json mu = json::object();
    for (double a : c.mu_alphas) {
        try {
            mu[fmt17(a)] = minimize_mu(p, a).mu;
        } catch (const std::exception& e) {
            mu[fmt17(a)] = std::string("error: ") + e.what();
        }
    }
    t.data["mu_of_alpha"] = mu;

    // Sweep q: alpha_tilde(q) and, per q, whether the Dirichlet and Neumann solutions found are interior positive.
    // The proxies are the smallest tested q from which every larger tested q is also positive; recorded, not asserted.
    json sweep = json::array();
    std::vector<int> pos_D, pos_N;
    const bool a0 = hyp.holds_A0;
    for (double q : c.q_grid) {
        json row{{"q", q}};
        auto pq = make_problem(p.mesh, c.weight, q, -1.0);
        try {
            row["alpha_tilde"] = compute_alpha_tilde_full(pq).value;
        } catch (const std::exception& e) {
            row["alpha_tilde"] = std::string("error: ") + e.what();
        }
        int d = 0, nn = -1;
        try {
            const auto near = c0_solution(pq, -1000.0, c.solver);
            const auto uD = solve_dirichlet(with_alpha(pq, dirichlet_alpha), near.field, c.solver);
            row["u_D_positivity"] = to_string(uD.positivity.tag);
            d = uD.positivity.tag == PositivityTag::InteriorPositive;
        } catch (const std::exception& e) {
            row["u_D_positivity"] = std::string("error: ") + e.what();
        }
        if (a0) {
            nn = 0;
            try {
                const auto uN = solve_neumann(with_alpha(pq, 0.0), c.solver);
                row["u_N_positivity"] = to_string(uN.positivity.tag);
                nn = uN.positivity.tag == PositivityTag::InteriorPositive;
            } catch (const std::exception& e) {
                row["u_N_positivity"] = std::string("error: ") + e.what();
            }
        }
        pos_D.push_back(d);
        pos_N.push_back(nn);
        sweep.push_back(row);
    }
    const auto proxy = [&](const std::vector<int>& pos) -> json {
        std::vector<std::size_t> order(c.q_grid.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto x, auto y) { return c.q_grid[x] < c.q_grid[y]; });
        json best = nullptr;
        for (auto it = order.rbegin(); it != order.rend() && pos[*it] == 1; ++it) best = c.q_grid[*it];
        return best;
    };
    t.data["q_sweep"] = sweep;
    t.data["q_D_empirical_proxy"] = proxy(pos_D);
    if (a0) t.data["q_N_empirical_proxy"] = proxy(pos_N);

    if (hyp.holds_A0) {
        t.data["c_a"] = compute_c_a(p);
        const auto uN = solve_neumann(p, c.solver);
        const double bound = alpha_s_upper_bound(p, uN);
        t.data["u_N_sup"] = sup_abs(uN.field.values);
        t.data["alpha_s_upper"] = bound;
        const double lo = at.value > 0 ? 0.5 * at.value : 1e-3 * bound;
        const auto est = estimate_alpha_s(p, lo, bound, c.solver, c.n_seeds, 1e-5, o.jobs);
        t.data["alpha_s_estimate"] = json_number(est.value);
        t.data["alpha_s_bracket"] = {est.lo, est.hi};
        const bool ordered = est.bracketed && at.value <= est.value && est.value <= bound;
        t.data["checks"].push_back(check_entry("sandwich", {{"alpha_tilde", at.value}, {"alpha_s_estimate", json_number(est.value)}, {"upper", bound}},
                                               "alpha_tilde <= alpha_s_estimate <= upper",
                                               "alpha_s lies between alpha_tilde and -int a / int_boundary u_N^{1-q}", ordered));
        if (!ordered) t.status = 2;
    }
    return t;
}

// Default probe points: below the fold and on the negative side for a negative mean, else nonnegative alphas.
inline std::vector<double> multiplicity_alphas(const RunConfig& c, const ProblemSpec& p)
{
    if (!c.mult_alphas.empty()) return c.mult_alphas;
    if (p.integral_a() < -tol_zero(p.a)) {
        const auto uN = solve_neumann(p, c.solver);
        return {0.25 * alpha_s_upper_bound(p, uN), -0.5};
    }
    return {0.0, 0.05, 0.1};
}

// u is nontrivial somewhere on the positive set of a
inline bool nontrivial_on_positive_set(const ProblemSpec& p, const Solution& s)
{
    const double tol = tol_zero(p.a);
    const double abs_tol = 1e-10;
    for (int i = 0; i < p.mesh.size(); ++i)
        if (p.a[i] > tol && s.field[i] > abs_tol) return true;
    return false;
}

inline TaskOutcome task_multiplicity(const RunConfig& c, const RunOptions& o)
{
    TaskOutcome t;
    const auto p = with_formulation(with_alpha(config_problem(c, o.n_cells), 0.0), Formulation::P_form);
    t.data["table"] = json::array();
    t.data["checks"] = json::array();
    const bool a0 = p.integral_a() < -tol_zero(p.a);
    const bool zero_mean = std::abs(p.integral_a()) <= tol_zero(p.a);
    const auto alphas = multiplicity_alphas(c, p);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        const double a = alphas[k];
        const auto r = count_solutions_multistart(p, a, c.solver, c.n_seeds, {}, o.jobs);
        json row;
        row["alpha"] = a;
        row["count"] = r.count;
        row["seeds_tried"] = r.seeds_tried;
        row["seeds_converged"] = r.seeds_converged;
        int on_pos = 0;
        json sols = json::array();
        for (const auto& s : r.solutions) {
            const auto nm = norms(p.mesh, s.field);
            const bool np = nontrivial_on_positive_set(p, s);
            on_pos += np;
            sols.push_back({{"sup_norm", nm.sup_norm},
                            {"min_value", nm.min_value},
                            {"positivity", to_string(s.positivity.tag)},
                            {"role", to_string(s.role_tag)},
                            {"nontrivial_on_positive_set", np}});
        }
        row["solutions"] = sols;
        row["count_nontrivial_on_positive_set"] = on_pos;
        if (r.count == 2) {
            bool ordered = true;
            for (int i = 0; i < p.mesh.size(); ++i)
                if (!(r.solutions[0].field[i] < r.solutions[1].field[i])) ordered = false;
            row["ordered"] = ordered;
        }
        row["note"] = r.count == 0 ? "none found" : "";
        t.data["table"].push_back(row);

        // default probe points under a negative mean: two ordered solutions below the fold, one for alpha < 0
        if (a0 && c.mult_alphas.empty()) {
            const bool ok = k == 0 ? r.count == 2 && row.value("ordered", false) : r.count == 1;
            t.data["checks"].push_back(check_entry("multiplicity alpha=" + fmt_short(a), r.count, k == 0 ? "2, ordered" : "1",
                                                   k == 0 ? "exactly two ordered nontrivial solutions below the fold"
                                                          : "unique positive solution for negative alpha",
                                                   ok));
            if (!ok) t.status = 2;
        }
        if (zero_mean && a >= 0) {
            const bool ok = on_pos == 0;
            t.data["checks"].push_back(check_entry("zero-mean nonexistence alpha=" + fmt_short(a), on_pos, 0,
                                                   "no solution nontrivial on the positive set for alpha >= 0", ok));
            if (!ok) t.status = 2;
        }
    }
    return t;
}

} // namespace robinsub
