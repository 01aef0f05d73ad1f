#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "tridiag.hpp"
#include "weights.hpp"

namespace robinsub {

inline constexpr double dirichlet_alpha = -std::numeric_limits<double>::infinity();

enum class Formulation { P_form, R_form };

inline const char* to_string(Formulation f) { return f == Formulation::P_form ? "P" : "R"; }

struct ProblemSpec {
    Mesh mesh;
    WeightSpec weight;
    double q = 0.5;
    double alpha = 0.0;
    Formulation formulation = Formulation::P_form;
    DiscreteField a; // sampled weight

    bool dirichlet() const { return std::isinf(alpha); }
    // coefficient in front of a(x) g(w)
    double lambda() const { return formulation == Formulation::R_form ? alpha : 1.0; }
    double integral_a() const { return integrate_domain(mesh, a); }
};

inline ProblemSpec make_problem(const Mesh& mesh, const WeightSpec& weight, double q, double alpha,
                                Formulation f = Formulation::P_form)
{
    require(q >= 0.0 && q < 1.0, "ProblemSpec: q must lie in [0,1)");
    require(std::isfinite(alpha) || alpha == dirichlet_alpha, "ProblemSpec: alpha must be finite or -inf");
    require(!(std::isinf(alpha) && f == Formulation::R_form), "ProblemSpec: the Dirichlet case uses P_form");
    ProblemSpec p;
    p.mesh = mesh;
    p.weight = weight;
    p.q = q;
    p.alpha = alpha;
    p.formulation = f;
    p.a = sample_weight(weight, mesh);
    return p;
}

inline ProblemSpec with_alpha(ProblemSpec p, double alpha)
{
    require(!(std::isinf(alpha) && p.formulation == Formulation::R_form), "with_alpha: Dirichlet needs P_form");
    p.alpha = alpha;
    return p;
}

inline ProblemSpec with_formulation(ProblemSpec p, Formulation f)
{
    p.formulation = f;
    return p;
}

struct SolverConfig {
    double epsilon = 0.0;
    double newton_tol = 1e-10;
    int max_iters = 60;
    double damping_min = 1.0 / 1024.0;
    bool nonneg_projection = true;
};

enum class PositivityTag { Trivial, InteriorPositive, DeadCore, BoundaryZero };

inline const char* to_string(PositivityTag t)
{
    switch (t) {
    case PositivityTag::Trivial: return "Trivial";
    case PositivityTag::InteriorPositive: return "InteriorPositive";
    case PositivityTag::DeadCore: return "DeadCore";
    case PositivityTag::BoundaryZero: return "BoundaryZero";
    }
    return "?";
}

struct PositivityClass {
    PositivityTag tag = PositivityTag::Trivial;
    std::vector<std::pair<int, int>> dead_core_intervals;
};

enum class RoleTag { generic, u_D, u_N, w1, w2 };

inline const char* to_string(RoleTag r)
{
    switch (r) {
    case RoleTag::generic: return "generic";
    case RoleTag::u_D: return "u_D";
    case RoleTag::u_N: return "u_N";
    case RoleTag::w1: return "w1";
    case RoleTag::w2: return "w2";
    }
    return "?";
}

struct Solution {
    DiscreteField field;
    double residual_sup = 0.0;
    PositivityClass positivity;
    double alpha = 0.0;
    double epsilon_used = 0.0;
    RoleTag role_tag = RoleTag::generic;
    int iterations = 0;
    bool converged = true;
    std::string note;
};

inline constexpr double default_pos_tol = 1e-6;
inline constexpr double default_abs_tol = 1e-10;

// Nonlinearity (s + eps)^{q-1} s, with 0^q = 0 at eps = 0.
inline double g_eps(double s, double q, double eps)
{
    if (s <= 0.0) return 0.0;
    if (eps == 0.0) return q == 0.0 ? 1.0 : std::pow(s, q);
    return std::pow(s + eps, q - 1.0) * s;
}

inline double dg_eps(double s, double q, double eps, double floor)
{
    if (eps == 0.0) {
        if (q == 0.0) return 0.0;
        return q * std::pow(std::max(s, floor), q - 1.0);
    }
    s = std::max(s, 0.0);
    return std::pow(s + eps, q - 2.0) * (q * s + eps);
}

// Semilinear system L w = b g(w) on a mesh. L carries the boundary rows; b vanishes on
// Dirichlet rows. Covers (P), (R), the Dirichlet case and the mixed problem.
struct SemilinearSystem {
    Mesh mesh;
    Tridiag L;
    std::vector<double> b;
    std::vector<double> hw; // row weights used for the weak residual
    double q = 0.5;
    std::vector<char> dirichlet_row;
};

inline SemilinearSystem make_system(const ProblemSpec& p)
{
    SemilinearSystem s;
    s.mesh = p.mesh;
    s.L = robin_matrix(p.mesh, p.alpha);
    s.q = p.q;
    s.hw = trapezoid_weights(p.mesh);
    s.b.resize(p.mesh.size());
    const double lam = p.lambda();
    for (int i = 0; i < p.mesh.size(); ++i) s.b[i] = lam * p.a[i];
    s.dirichlet_row.assign(p.mesh.size(), 0);
    if (p.dirichlet()) {
        s.b.front() = s.b.back() = 0.0;
        s.dirichlet_row.front() = s.dirichlet_row.back() = 1;
    }
    return s;
}

inline std::vector<double> system_residual(const SemilinearSystem& s, const std::vector<double>& w, double eps)
{
    auto r = s.L.multiply(w);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s.b[i] * g_eps(w[i], s.q, eps);
    return r;
}

inline Tridiag system_jacobian(const SemilinearSystem& s, const std::vector<double>& w, double eps)
{
    Tridiag J = s.L;
    const double floor = 1e-12 * std::max(sup_abs(w), 1e-300);
    for (std::size_t i = 0; i < w.size(); ++i) J.diag[i] -= s.b[i] * dg_eps(w[i], s.q, eps, floor);
    return J;
}

// max_i |hw_i r_i|; Dirichlet rows enter as the raw value.
inline double weak_sup(const SemilinearSystem& s, const std::vector<double>& r)
{
    double m = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        m = std::max(m, std::abs(s.dirichlet_row[i] ? r[i] : s.hw[i] * r[i]));
    return m;
}

inline double relative_residual(const SemilinearSystem& s, const std::vector<double>& w, double eps)
{
    const double scale = sup_abs(w);
    const double r = weak_sup(s, system_residual(s, w, eps));
    if (scale == 0.0) return r == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return r / scale;
}

inline PositivityClass classify_positivity(const DiscreteField& f, bool dirichlet,
                                           double pos_tol = default_pos_tol, double abs_tol = default_abs_tol)
{
    PositivityClass pc;
    double sup = sup_abs(f.values);
    if (sup < abs_tol) {
        pc.tag = PositivityTag::Trivial;
        return pc;
    }
    const int n = f.size();
    const int lo = dirichlet ? 1 : 0, hi = dirichlet ? n - 2 : n - 1;
    const double thr = pos_tol * sup;
    for (int i = lo; i <= hi;) {
        if (f[i] < thr) {
            int j = i;
            while (j + 1 <= hi && f[j + 1] < thr) ++j;
            pc.dead_core_intervals.emplace_back(i, j);
            i = j + 1;
        } else {
            ++i;
        }
    }
    if (pc.dead_core_intervals.empty()) {
        pc.tag = PositivityTag::InteriorPositive;
    } else {
        // runs consisting of endpoint nodes only mean the solution vanishes on the boundary
        bool interior = false;
        for (auto [a, b] : pc.dead_core_intervals)
            if (b > a || (a != 0 && a != n - 1)) interior = true;
        pc.tag = interior ? PositivityTag::DeadCore : PositivityTag::BoundaryZero;
    }
    return pc;
}

inline PositivityClass classify_positivity(const Solution& s, bool dirichlet, double pos_tol = default_pos_tol)
{
    return classify_positivity(s.field, dirichlet, pos_tol);
}

struct NewtonOutcome {
    std::vector<double> w;
    double rel_residual = 0.0;
    int iterations = 0;
};

// Damped Newton: halve the step until the weak residual decreases, floor damping_min.
inline NewtonOutcome newton_system(const SemilinearSystem& s, std::vector<double> w, const SolverConfig& cfg)
{
    const double eps = cfg.epsilon;
    auto clip = [&](std::vector<double>& v) {
        if (cfg.nonneg_projection)
            for (double& x : v) x = std::max(x, 0.0);
    };
    clip(w);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (s.dirichlet_row[i]) w[i] = 0.0;
    auto r = system_residual(s, w, eps);
    double merit = weak_sup(s, r);
    for (int it = 0; it <= cfg.max_iters; ++it) {
        const double scale = sup_abs(w);
        const double rel = scale > 0 ? merit / scale : (merit == 0.0 ? 0.0 : merit);
        if (!std::isfinite(rel)) throw convergence_error("Newton diverged", w, rel);
        if (rel <= cfg.newton_tol) return {w, rel, it};
        if (it == cfg.max_iters) break;
        std::vector<double> delta;
        try {
            delta = TridiagLU(system_jacobian(s, w, eps)).solve(r);
        } catch (const convergence_error&) {
            throw convergence_error("Jacobian singular", w, rel);
        }
        double t = 1.0;
        std::vector<double> trial(w.size()), rt;
        double mt = std::numeric_limits<double>::infinity();
        while (true) {
            for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] - t * delta[i];
            clip(trial);
            rt = system_residual(s, trial, eps);
            mt = weak_sup(s, rt);
            if (mt < merit || t <= cfg.damping_min) break;
            t *= 0.5;
        }
        w.swap(trial);
        r.swap(rt);
        merit = mt;
    }
    const double scale = sup_abs(w);
    throw convergence_error("Newton: max_iters exceeded", w, scale > 0 ? merit / scale : merit);
}

inline std::vector<double> residual_vector(const ProblemSpec& p, const DiscreteField& field, const SolverConfig& cfg)
{
    check_on(field, p.mesh, "residual");
    for (double v : field.values)
        if (v < 0) throw invalid_argument("residual: negative nodal value");
    return system_residual(make_system(p), field.values, cfg.epsilon);
}

inline DiscreteField residual(const ProblemSpec& p, const DiscreteField& field, const SolverConfig& cfg)
{
    return DiscreteField(p.mesh, residual_vector(p, field, cfg));
}

inline Solution make_solution(const ProblemSpec& p, std::vector<double> w, double rel, int iters, double eps)
{
    Solution sol;
    sol.field = DiscreteField(p.mesh, std::move(w));
    sol.residual_sup = rel;
    sol.alpha = p.alpha;
    sol.epsilon_used = eps;
    sol.iterations = iters;
    sol.positivity = classify_positivity(sol.field, p.dirichlet());
    return sol;
}

inline Solution solve_newton(const ProblemSpec& p, const DiscreteField& seed, const SolverConfig& cfg)
{
    check_on(seed, p.mesh, "solve_newton");
    for (double v : seed.values)
        if (!(v >= 0.0)) throw invalid_argument("solve_newton: seed must be nonnegative and finite");
    const auto s = make_system(p);
    auto out = newton_system(s, seed.values, cfg);
    return make_solution(p, std::move(out.w), out.rel_residual, out.iterations, cfg.epsilon);
}

// Decreasing schedule base * 10^{-1}, ..., base * 10^{-k}, optionally followed by 0.
inline std::vector<double> eps_ladder(double base, int k, bool terminal_zero = true)
{
    std::vector<double> e;
    double v = base;
    for (int i = 0; i < k; ++i) e.push_back(v *= 0.1);
    if (terminal_zero) e.push_back(0.0);
    return e;
}

inline Solution deregularize(const ProblemSpec& p, const DiscreteField& seed, const std::vector<double>& schedule,
                             const SolverConfig& cfg)
{
    require(!schedule.empty(), "deregularize: empty schedule");
    require(schedule.back() >= 0.0, "deregularize: terminal epsilon must be >= 0");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        require(schedule[i] < schedule[i - 1], "deregularize: schedule must be strictly decreasing");
    DiscreteField w = seed;
    Solution last;
    bool any = false;
    for (double eps : schedule) {
        SolverConfig c = cfg;
        c.epsilon = eps;
        try {
            last = solve_newton(p, w, c);
            any = true;
            w = last.field;
        } catch (const convergence_error& e) {
            if (!any) throw;
            last.converged = false;
            last.note = std::string("stage eps=") + std::to_string(eps) + " failed: " + e.what();
            return last;
        }
    }
    return last;
}

enum class Direction { u_to_w, w_to_u };

inline DiscreteField change_of_variables(const DiscreteField& f, double alpha, double q, Direction dir)
{
    require(q >= 0.0 && q < 1.0, "change_of_variables: q must lie in [0,1)");
    if (dir == Direction::w_to_u) require(alpha > 0.0, "change_of_variables: alpha must be > 0 for w_to_u");
    else require(alpha >= 0.0, "change_of_variables: alpha must be >= 0 for u_to_w");
    const double k = std::pow(alpha, 1.0 / (1.0 - q));
    DiscreteField out = f;
    for (double& v : out.values) v = dir == Direction::u_to_w ? v * k : v / k;
    return out;
}

inline Solution solve_dirichlet(const ProblemSpec& p, const DiscreteField& seed, const SolverConfig& cfg)
{
    require(p.dirichlet(), "solve_dirichlet: problem alpha must be -inf");
    auto sol = solve_newton(p, seed, cfg);
    sol.field.values.front() = sol.field.values.back() = 0.0;
    if (sol.positivity.tag != PositivityTag::Trivial) sol.role_tag = RoleTag::u_D;
    return sol;
}

// ---------------------------------------------------------------------------
// Sub- and supersolution iteration

// Strong residual sign test with a row-relative slack.
inline bool residual_sign_ok(const SemilinearSystem& s, const std::vector<double>& w, double eps, int sign,
                             double slack = 1e-6)
{
    const auto Lw = s.L.multiply(w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double nl = s.b[i] * g_eps(w[i], s.q, eps);
        const double r = Lw[i] - nl;
        const double scale = std::abs(Lw[i]) + std::abs(nl) + 1e-300;
        if (sign * r < -slack * scale) return false;
    }
    return true;
}

// Minimal solution in [sub, super]. Semi-implicit step
//   (L + K) v + b^- g(v) = b^+ g(u) + K u,
// which is order preserving once L + K is an M-matrix; each step is solved by Newton.
inline Solution monotone_iteration(const ProblemSpec& p, const DiscreteField& sub, const DiscreteField& super,
                                   const SolverConfig& cfg, int max_outer = 200000)
{
    check_on(sub, p.mesh, "monotone_iteration");
    check_on(super, p.mesh, "monotone_iteration");
    const double scale = std::max(sup_abs(super.values), 1e-300);
    for (int i = 0; i < sub.size(); ++i) {
        if (sub[i] < 0) throw invalid_argument("monotone_iteration: subsolution must be nonnegative");
        if (sub[i] > super[i] + 1e-14 * scale) throw invalid_argument("monotone_iteration: ordering violated (sub > super)");
    }
    const auto s = make_system(p);
    const double eps = cfg.epsilon;
    if (!residual_sign_ok(s, sub.values, eps, -1)) throw invalid_argument("monotone_iteration: sub is not a subsolution");
    if (!residual_sign_ok(s, super.values, eps, +1)) throw invalid_argument("monotone_iteration: super is not a supersolution");

    const double K = (p.dirichlet() || p.alpha < 0) ? 0.0 : 1.0 + 1.01 * std::max(0.0, 2.0 * p.alpha / p.mesh.h);
    SemilinearSystem inner = s;
    std::vector<double> bplus(s.b.size());
    for (std::size_t i = 0; i < s.b.size(); ++i) {
        inner.L.diag[i] += s.dirichlet_row[i] ? 0.0 : K;
        bplus[i] = std::max(s.b[i], 0.0);
        inner.b[i] = std::min(s.b[i], 0.0); // L v - b^- g(v) with b^- <= 0 here
    }
    SolverConfig ic = cfg;
    ic.newton_tol = 1e-14;
    ic.max_iters = 100;

    std::vector<double> u = sub.values;
    int outer = 0;
    for (; outer < max_outer; ++outer) {
        std::vector<double> rhs(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            rhs[i] = s.dirichlet_row[i] ? 0.0 : bplus[i] * g_eps(u[i], s.q, eps) + K * u[i];
        // Newton on (L+K)v - b_neg g(v) - rhs = 0
        std::vector<double> v = u;
        for (int it = 0; it < ic.max_iters; ++it) {
            auto r = system_residual(inner, v, eps);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rhs[i];
            const double res = weak_sup(inner, r);
            const double sc = std::max(sup_abs(v), sup_abs(u));
            if (res <= 1e-14 * std::max(sc, 1e-300) || res == 0.0) break;
            auto d = TridiagLU(system_jacobian(inner, v, eps)).solve(r);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(v[i] - d[i], 0.0);
        }
        // monotone from below: never step down
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::min(std::max(v[i], u[i]), super[i]);
        const double inc = sup_distance(u, v);
        u.swap(v);
        if (inc <= 1e-13 * std::max(sup_abs(u), 1e-300) || inc == 0.0) break;
    }
    Solution sol;
    const double rel = relative_residual(s, u, eps);
    if (rel <= cfg.newton_tol || sup_abs(u) == 0.0) {
        sol = make_solution(p, u, sup_abs(u) == 0.0 ? 0.0 : rel, outer, eps);
    } else {
        sol = solve_newton(p, DiscreteField(p.mesh, u), cfg);
        sol.iterations += outer;
    }
    sol.note = "monotone iteration, K=" + std::to_string(K);
    return sol;
}

// First eigenfunction of -u'' = lambda a u with zero Dirichlet data on the nodes strictly inside
// the longest positive run of a. Returns (lambda, phi on the full mesh, zero outside, sup = 1).
inline std::pair<double, DiscreteField> positive_set_eigenfunction(const ProblemSpec& p)
{
    const auto runs = positive_runs(p.a, tol_zero(p.a));
    require(!runs.empty(), "positive_set_eigenfunction: a has no positive set");
    auto best = *std::max_element(runs.begin(), runs.end(),
                                  [](auto x, auto y) { return x.second - x.first < y.second - y.first; });
    const int i0 = best.first + 1, i1 = best.second - 1;
    require(i1 - i0 + 1 >= 2, "positive_set_eigenfunction: positive set too narrow for the mesh");
    const int m = i1 - i0 + 1;
    const double ih2 = 1.0 / (p.mesh.h * p.mesh.h);
    SymTridiag t;
    t.d.resize(m);
    t.e.resize(m - 1);
    for (int k = 0; k < m; ++k) t.d[k] = 2.0 * ih2 / p.a[i0 + k];
    for (int k = 0; k + 1 < m; ++k) t.e[k] = -ih2 / std::sqrt(p.a[i0 + k] * p.a[i0 + k + 1]);
    const double lam = eigenvalue_bisection(t, 0);
    auto y = inverse_iteration(t, lam, 1e-6 * std::max(std::abs(lam), 1.0));
    DiscreteField phi(p.mesh);
    double mx = 0.0;
    for (int k = 0; k < m; ++k) {
        phi[i0 + k] = y[k] / std::sqrt(p.a[i0 + k]);
        mx = std::max(mx, std::abs(phi[i0 + k]));
    }
    const double sgn = phi[i0 + m / 2] < 0 ? -1.0 : 1.0;
    for (double& v : phi.values) v = std::max(0.0, sgn * v / mx);
    return {lam, phi};
}

// Small multiple of the positive-set eigenfunction lying below `below`.
inline DiscreteField eigen_subsolution(const ProblemSpec& p, const DiscreteField& below)
{
    const double lam = p.lambda();
    require(lam > 0, "eigen_subsolution: needs a positive coefficient in front of a");
    auto [mu, phi] = positive_set_eigenfunction(p);
    double s = 0.5 * std::pow(lam / mu, 1.0 / (1.0 - p.q));
    for (int k = 0; k < 200; ++k) {
        bool ok = true;
        for (int i = 0; i < phi.size(); ++i)
            if (s * phi[i] > below[i]) ok = false;
        if (ok) break;
        s *= 0.5;
    }
    for (double& v : phi.values) v *= s;
    return phi;
}

// ---------------------------------------------------------------------------
// Mixed problem on a sub-interval touching the boundary: Neumann at the boundary end,
// Dirichlet at the interior end.

enum class MixedEnd { low, high };

struct MixedProblemSpec {
    double d_low = 0.0;
    double d_high = 0.0;
    MixedEnd dirichlet_end = MixedEnd::high;
};

struct MixedSolution {
    Mesh mesh;
    Solution solution;
    // value at the Neumann end (the boundary point of the domain)
    double boundary_value = 0.0;
};

inline Mesh mixed_mesh(const ProblemSpec& p, const MixedProblemSpec& mx)
{
    const int n = std::max(8, static_cast<int>(std::lround((mx.d_high - mx.d_low) / p.mesh.h)));
    return build_mesh(mx.d_low, mx.d_high, n);
}

inline MixedSolution solve_mixed_Q(const ProblemSpec& p, const MixedProblemSpec& mx, const DiscreteField& seed,
                                   const SolverConfig& cfg)
{
    require(mx.d_high > mx.d_low, "solve_mixed_Q: empty sub-interval");
    const double tolx = 1e-12 * p.mesh.length();
    require(mx.d_low >= p.mesh.x_left - tolx && mx.d_high <= p.mesh.x_right + tolx,
            "solve_mixed_Q: sub-interval leaves the domain");
    const double neumann_x = mx.dirichlet_end == MixedEnd::high ? mx.d_low : mx.d_high;
    require(std::abs(neumann_x - p.mesh.x_left) <= tolx || std::abs(neumann_x - p.mesh.x_right) <= tolx,
            "solve_mixed_Q: the Neumann end must be a boundary point of the domain");
    MixedSolution out;
    out.mesh = mixed_mesh(p, mx);
    const Mesh& m = out.mesh;
    require(seed.on(m), "solve_mixed_Q: seed must live on mixed_mesh(problem, mixed)");

    DiscreteField a = DiscreteField::from_function(m, [&](double x) { return weight_at(p.weight, x); });
    const double tol = 1e-12 * std::max(sup_abs(a.values), 1e-300);
    bool pos = false;
    for (int i = 0; i < a.size(); ++i) {
        // the Dirichlet endpoint sits on the sign change
        const bool dir_node = (mx.dirichlet_end == MixedEnd::high) ? i == m.n_cells : i == 0;
        if (!dir_node && a[i] < -1e-9 * sup_abs(a.values)) throw invalid_argument("solve_mixed_Q: weight negative on the sub-interval");
        pos = pos || a[i] > tol;
    }
    require(pos, "solve_mixed_Q: weight vanishes on the sub-interval");

    SemilinearSystem s;
    s.mesh = m;
    s.L = robin_matrix(m, 0.0);
    s.q = p.q;
    s.hw = trapezoid_weights(m);
    s.b = a.values;
    s.dirichlet_row.assign(m.size(), 0);
    const int dn = mx.dirichlet_end == MixedEnd::high ? m.n_cells : 0;
    s.dirichlet_row[dn] = 1;
    s.b[dn] = 0.0;
    s.L.diag[dn] = 1.0;
    s.L.lo[dn] = s.L.up[dn] = 0.0;

    auto res = newton_system(s, seed.values, cfg);
    Solution sol;
    sol.field = DiscreteField(m, std::move(res.w));
    sol.residual_sup = res.rel_residual;
    sol.iterations = res.iterations;
    sol.epsilon_used = cfg.epsilon;
    sol.alpha = 0.0;
    sol.positivity = classify_positivity(sol.field, false);
    out.solution = sol;
    out.boundary_value = sol.field[mx.dirichlet_end == MixedEnd::high ? 0 : m.n_cells];
    return out;
}

// Mixed problem on the (A.3) witness of the weight.
inline MixedProblemSpec witness_mixed_spec(const ProblemSpec& p)
{
    auto rep = check_hypotheses(p.weight, p.mesh);
    require(rep.holds_A3 && rep.d_witness.has_value(), "witness_mixed_spec: no (A.3) witness");
    MixedProblemSpec mx;
    if (rep.witness_side == WitnessSide::left) {
        mx.d_low = p.mesh.x_left;
        mx.d_high = *rep.d_witness;
        mx.dirichlet_end = MixedEnd::high;
    } else {
        mx.d_low = *rep.d_witness;
        mx.d_high = p.mesh.x_right;
        mx.dirichlet_end = MixedEnd::low;
    }
    return mx;
}

// Deterministic solve of the mixed problem: Newton from a hat seed with an epsilon ladder fallback.
inline MixedSolution solve_mixed_default(const ProblemSpec& p, const MixedProblemSpec& mx, const SolverConfig& cfg = {})
{
    const Mesh m = mixed_mesh(p, mx);
    auto seed = DiscreteField::from_function(m, [&](double x) {
        const double t = (x - mx.d_low) / (mx.d_high - mx.d_low);
        return mx.dirichlet_end == MixedEnd::high ? 1.0 - t : t;
    });
    SolverConfig c = cfg;
    c.max_iters = std::max(c.max_iters, 200);
    try {
        return solve_mixed_Q(p, mx, seed, c);
    } catch (const convergence_error&) {
        MixedSolution last;
        for (double eps : eps_ladder(1.0, 10)) {
            c.epsilon = eps;
            last = solve_mixed_Q(p, mx, seed, c);
            seed = last.solution.field;
        }
        return last;
    }
}

// (-int a) / v^{1-q} at the boundary end of the mixed problem.
inline double alpha2_upper_bound(const ProblemSpec& p, const MixedSolution& v)
{
    require(v.boundary_value > 0, "alpha2_upper_bound: mixed solution vanishes at the boundary");
    return -p.integral_a() / std::pow(v.boundary_value, 1.0 - p.q);
}

} // namespace robinsub
