#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "error.hpp"
#include "mesh.hpp"
#include "solver.hpp"
#include "spectral.hpp"
#include "variational.hpp"

namespace robinsub {

enum class EndTag { Gamma0_contact, Gamma1_contact, alpha_limit, failure };

inline const char* to_string(EndTag t)
{
    switch (t) {
    case EndTag::Gamma0_contact: return "Gamma0_contact";
    case EndTag::Gamma1_contact: return "Gamma1_contact";
    case EndTag::alpha_limit: return "alpha_limit";
    case EndTag::failure: return "failure";
    }
    return "?";
}

struct BranchPoint {
    double alpha = 0.0;
    double epsilon = 0.0;
    DiscreteField field;
    double sup_norm = 0.0;
    double min_value = 0.0;
    std::optional<double> gamma1;
    double arclength = 0.0;
    PositivityClass positivity;
    double residual = 0.0;
};

struct Branch {
    std::vector<BranchPoint> points;
    EndTag start_tag = EndTag::failure;
    EndTag end_tag = EndTag::failure;
    std::vector<int> turning_points;
    double epsilon = 0.0;
    double amplitude_scale = 1.0;
    // alpha where the branch meets the trivial line, extrapolated to zero amplitude
    std::optional<double> gamma0_alpha;
    // constant reached on the line of constants at alpha = 0
    std::optional<double> gamma1_constant;
    std::string message;
};

struct ContinuationParams {
    double step_min = 1e-5;
    double step_max = 5e-2;
    double step_init = 1e-3;
    double alpha_min = -std::numeric_limits<double>::infinity();
    double alpha_max = std::numeric_limits<double>::infinity();
    double arclength_budget = 50.0;
    int max_steps = 20000;
    double contact_tol = 1e-3;
    double amplitude_scale = 0.0; // 0: c_a when defined, else the start amplitude
    int max_corrector_iters = 15;
    bool compute_gamma1 = true;
    bool stop_at_gamma1 = true;
    // nonzero: orient the start by growth (+1) or decay (-1) of the field instead of alpha
    int amplitude_direction = 0;
};

namespace cont {

struct State {
    std::vector<double> w;
    double alpha = 0.0;
};

// F(w, alpha) = L_alpha w - lambda(alpha) a g_eps(w)
struct BranchSystem {
    ProblemSpec p;
    double eps = 0.0;
    std::vector<double> hw;
    double domain_length = 1.0;

    BranchSystem(const ProblemSpec& prob, double e) : p(prob), eps(e), hw(trapezoid_weights(prob.mesh)),
                                                      domain_length(prob.mesh.length()) {}

    double lam(double alpha) const { return p.formulation == Formulation::R_form ? alpha : 1.0; }
    double dlam() const { return p.formulation == Formulation::R_form ? 1.0 : 0.0; }

    std::vector<double> F(const State& s) const
    {
        auto r = robin_matrix(p.mesh, s.alpha).multiply(s.w);
        const double l = lam(s.alpha);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= l * p.a[i] * g_eps(s.w[i], p.q, eps);
        return r;
    }
    Tridiag Fw(const State& s) const
    {
        Tridiag J = robin_matrix(p.mesh, s.alpha);
        const double l = lam(s.alpha);
        const double floor = 1e-12 * std::max(sup_abs(s.w), 1e-300);
        for (std::size_t i = 0; i < s.w.size(); ++i) J.diag[i] -= l * p.a[i] * dg_eps(s.w[i], p.q, eps, floor);
        return J;
    }
    std::vector<double> Falpha(const State& s) const
    {
        const int n = p.mesh.n_cells;
        std::vector<double> d(n + 1, 0.0);
        const double dl = dlam();
        if (dl != 0.0)
            for (int i = 0; i <= n; ++i) d[i] = -dl * p.a[i] * g_eps(s.w[i], p.q, eps);
        d[0] += -2.0 * s.w[0] / p.mesh.h;
        d[n] += -2.0 * s.w[n] / p.mesh.h;
        return d;
    }
    double rel_residual(const State& s, const std::vector<double>& r) const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) m = std::max(m, std::abs(hw[i] * r[i]));
        const double sc = sup_abs(s.w);
        return sc > 0 ? m / sc : m;
    }
};

// Solve [Fw Fa; c^T d] [x; y] = [f; g].
inline bool bordered_solve(const Tridiag& J, const std::vector<double>& Fa, const std::vector<double>& c, double d,
                           const std::vector<double>& f, double g, std::vector<double>& x, double& y)
{
    const int n = J.size();
    Eigen::SparseMatrix<double> M(n + 1, n + 1);
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(5 * n + 2);
    for (int i = 0; i < n; ++i) {
        if (i > 0 && J.lo[i] != 0.0) T.emplace_back(i, i - 1, J.lo[i]);
        T.emplace_back(i, i, J.diag[i]);
        if (i + 1 < n && J.up[i] != 0.0) T.emplace_back(i, i + 1, J.up[i]);
        if (Fa[i] != 0.0) T.emplace_back(i, n, Fa[i]);
        if (c[i] != 0.0) T.emplace_back(n, i, c[i]);
    }
    T.emplace_back(n, n, d);
    M.setFromTriplets(T.begin(), T.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) return false;
    Eigen::VectorXd rhs(n + 1);
    for (int i = 0; i < n; ++i) rhs[i] = f[i];
    rhs[n] = g;
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !sol.allFinite()) return false;
    x.assign(sol.data(), sol.data() + n);
    y = sol[n];
    return true;
}

// Newton on F = 0 plus one linear side condition <c_w, w> + c_a alpha = target.
inline bool corrector(const BranchSystem& S, State& X, const std::vector<double>& cw, double ca, double target, double tol,
                      int max_iter)
{
    for (int it = 0; it <= max_iter; ++it) {
        auto r = S.F(X);
        double side = ca * X.alpha - target;
        for (std::size_t i = 0; i < cw.size(); ++i) side += cw[i] * X.w[i];
        const double rel = S.rel_residual(X, r);
        if (!std::isfinite(rel)) return false;
        const double side_scale = std::abs(target) + std::abs(ca * X.alpha) + 1e-300;
        if (rel <= tol && std::abs(side) <= 1e-10 * side_scale) return true;
        if (it == max_iter) break;
        std::vector<double> dx;
        double da = 0.0;
        if (!bordered_solve(S.Fw(X), S.Falpha(X), cw, ca, r, side, dx, da)) return false;
        for (std::size_t i = 0; i < dx.size(); ++i) X.w[i] = std::max(X.w[i] - dx[i], 0.0);
        X.alpha -= da;
    }
    return false;
}

struct Metric {
    std::vector<double> tw; // weights of the field part
    double ta = 1.0;

    double dot(const State& a, const State& b) const
    {
        double s = ta * a.alpha * b.alpha;
        for (std::size_t i = 0; i < tw.size(); ++i) s += tw[i] * a.w[i] * b.w[i];
        return s;
    }
    double norm(const State& a) const { return std::sqrt(dot(a, a)); }
};

inline State diff(const State& a, const State& b)
{
    State d;
    d.alpha = a.alpha - b.alpha;
    d.w.resize(a.w.size());
    for (std::size_t i = 0; i < a.w.size(); ++i) d.w[i] = a.w[i] - b.w[i];
    return d;
}

inline State axpy(const State& x, double t, const State& d)
{
    State y = x;
    y.alpha += t * d.alpha;
    for (std::size_t i = 0; i < y.w.size(); ++i) y.w[i] += t * d.w[i];
    return y;
}

inline void scale(State& s, double k)
{
    s.alpha *= k;
    for (double& v : s.w) v *= k;
}

} // namespace cont

// Constant where an R-form branch meets alpha = 0. With w = c + alpha zeta, mean(zeta) = 0, the
// divided system L_0 zeta + B c - a g(c) = 0 stays regular at alpha = 0 (B = dL/dalpha).
inline double gamma1_contact_constant(const ProblemSpec& problem, double eps, double c_seed,
                                      const std::vector<double>& zeta_seed, double tol = 1e-12)
{
    const Mesh& m = problem.mesh;
    const int n = m.size();
    const auto hw = trapezoid_weights(m);
    const Tridiag L0 = robin_matrix(m, 0.0);
    std::vector<double> B(n, 0.0);
    B.front() = B.back() = -2.0 / m.h;
    std::vector<double> z = zeta_seed;
    double c = c_seed;
    for (int it = 0; it < 50; ++it) {
        auto r = L0.multiply(z);
        double mean = 0.0;
        for (int i = 0; i < n; ++i) {
            r[i] += B[i] * c - problem.a[i] * g_eps(c, problem.q, eps);
            mean += hw[i] * z[i];
        }
        double wr = 0.0;
        for (int i = 0; i < n; ++i) wr = std::max(wr, std::abs(hw[i] * r[i]));
        if (wr <= tol * std::max(c, 1e-300) && it > 0) return c;
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = B[i] - problem.a[i] * dg_eps(c, problem.q, eps, 0.0);
        std::vector<double> dz;
        double dc = 0.0;
        if (!cont::bordered_solve(L0, col, hw, 0.0, r, mean, dz, dc)) break;
        for (int i = 0; i < n; ++i) z[i] -= dz[i];
        c = std::max(c - dc, 0.5 * c);
    }
    throw convergence_error("gamma1_contact_constant: Newton failed");
}

inline std::vector<int> detect_turning_points(const std::vector<double>& alphas)
{
    std::vector<int> idx;
    for (std::size_t i = 1; i + 1 < alphas.size(); ++i) {
        const double d0 = alphas[i] - alphas[i - 1], d1 = alphas[i + 1] - alphas[i];
        if (d0 * d1 < 0) idx.push_back(static_cast<int>(i));
    }
    return idx;
}

inline std::vector<int> detect_turning_points(const Branch& b)
{
    std::vector<double> a;
    for (const auto& p : b.points) a.push_back(p.alpha);
    return detect_turning_points(a);
}

inline BranchPoint make_branch_point(const ProblemSpec& p, const cont::State& X, double eps, double arclength,
                                     double residual, bool with_gamma1)
{
    BranchPoint bp;
    bp.alpha = X.alpha;
    bp.epsilon = eps;
    bp.field = DiscreteField(p.mesh, X.w);
    const auto nm = norms(p.mesh, bp.field);
    bp.sup_norm = nm.sup_norm;
    bp.min_value = nm.min_value;
    bp.arclength = arclength;
    bp.residual = residual;
    bp.positivity = classify_positivity(bp.field, false);
    if (with_gamma1 && (eps > 0 || bp.positivity.tag == PositivityTag::InteriorPositive)) {
        cont::BranchSystem S(p, eps);
        try {
            bp.gamma1 = eigenvalue_bisection(symmetrize(S.Fw(X), S.hw), 0);
        } catch (const std::exception&) {
        }
    }
    return bp;
}

inline double default_amplitude_scale(const ProblemSpec& p, double start_sup)
{
    if (p.integral_a() < -tol_zero(p.a)) {
        const double ca = compute_c_a(p);
        if (p.formulation == Formulation::R_form) return ca;
    }
    return std::max(start_sup, 1e-300);
}

// Pseudo-arclength continuation from a converged solution. direction = sign of d alpha at the start.
inline Branch continue_branch(const ProblemSpec& problem, const Solution& start, int direction,
                              const SolverConfig& cfg = {}, const ContinuationParams& prm = {})
{
    require(direction == 1 || direction == -1, "continue_branch: direction must be +1 or -1");
    require(!problem.dirichlet(), "continue_branch: alpha must be finite");
    check_on(start.field, problem.mesh, "continue_branch");
    const double eps = start.epsilon_used;
    const ProblemSpec p = with_alpha(problem, start.alpha);
    cont::BranchSystem S(p, eps);

    Branch br;
    br.epsilon = eps;
    br.amplitude_scale = prm.amplitude_scale > 0 ? prm.amplitude_scale : default_amplitude_scale(p, sup_abs(start.field.values));
    cont::Metric metric;
    metric.tw = S.hw;
    for (double& v : metric.tw) v /= br.amplitude_scale * br.amplitude_scale * S.domain_length;

    cont::State X{start.field.values, start.alpha};
    {
        auto r = S.F(X);
        if (S.rel_residual(X, r) > 10 * cfg.newton_tol)
            throw invalid_argument("continue_branch: start is not converged at its (alpha, epsilon)");
    }
    br.points.push_back(make_branch_point(p, X, eps, 0.0, start.residual_sup, prm.compute_gamma1));
    br.start_tag = EndTag::alpha_limit;

    // initial tangent from Fw v = -Falpha
    cont::State T;
    try {
        auto v = TridiagLU(S.Fw(X)).solve(S.Falpha(X));
        T.w.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) T.w[i] = -v[i];
        T.alpha = 1.0;
    } catch (const convergence_error&) {
        br.end_tag = EndTag::failure;
        br.message = "singular Jacobian at the start point";
        return br;
    }
    double orient = direction;
    if (prm.amplitude_direction != 0) {
        double g = 0.0;
        for (std::size_t i = 0; i < T.w.size(); ++i) g += S.hw[i] * T.w[i] * X.w[i];
        orient = g >= 0 ? prm.amplitude_direction : -prm.amplitude_direction;
    }
    cont::scale(T, orient / metric.norm(T));

    // near alpha = 0 the structure lives on the scale of |alpha|
    double ds = std::clamp(std::min(prm.step_init, 0.1 * std::abs(X.alpha) + prm.step_min), prm.step_min, prm.step_max);
    double arc = 0.0;
    int successes = 0;
    cont::State prev = X;
    bool have_prev = false;

    auto finish = [&](EndTag tag, const std::string& msg) {
        br.end_tag = tag;
        br.message = msg;
        br.turning_points = detect_turning_points(br);
        return br;
    };

    for (int step = 0; step < prm.max_steps; ++step) {
        if (have_prev) {
            T = cont::diff(X, prev);
            cont::scale(T, 1.0 / metric.norm(T));
        }
        cont::State Y;
        bool ok = false;
        while (true) {
            Y = cont::axpy(X, ds, T);
            for (double& v : Y.w) v = std::max(v, 0.0);
            std::vector<double> cw(T.w.size());
            for (std::size_t i = 0; i < cw.size(); ++i) cw[i] = metric.tw[i] * T.w[i];
            const double target = metric.dot(T, X) + ds;
            ok = cont::corrector(S, Y, cw, metric.ta * T.alpha, target, cfg.newton_tol, prm.max_corrector_iters);
            if (ok) {
                // reject jumps to a different sheet
                const double dist = metric.norm(cont::diff(Y, X));
                if (dist > 2.0 * ds || sup_abs(Y.w) == 0.0) ok = false;
            }
            if (ok) break;
            successes = 0;
            ds *= 0.5;
            if (ds < prm.step_min) return finish(EndTag::failure, "corrector failed at step_min");
        }
        const double dist = metric.norm(cont::diff(Y, X));
        // leaving the alpha window: land on its edge with a fixed-alpha correction
        if (Y.alpha > prm.alpha_max || Y.alpha < prm.alpha_min) {
            const double edge = Y.alpha > prm.alpha_max ? prm.alpha_max : prm.alpha_min;
            const double t = (edge - X.alpha) / (Y.alpha - X.alpha);
            cont::State W = cont::axpy(X, t, cont::diff(Y, X));
            W.alpha = edge;
            const std::vector<double> cw(W.w.size(), 0.0);
            if (cont::corrector(S, W, cw, 1.0, edge, cfg.newton_tol, prm.max_corrector_iters) && sup_abs(W.w) > 0) {
                arc += metric.norm(cont::diff(W, X));
                auto r = S.F(W);
                br.points.push_back(make_branch_point(p, W, eps, arc, S.rel_residual(W, r), prm.compute_gamma1));
            }
            return finish(EndTag::alpha_limit, "left the alpha window");
        }
        // alpha crosses zero on the R-form: refine the contact with the line of constants
        if (prm.stop_at_gamma1 && p.formulation == Formulation::R_form && X.alpha > 0 && Y.alpha <= 0) {
            cont::State Tc = T;
            std::vector<double> cw(Tc.w.size());
            for (std::size_t i = 0; i < cw.size(); ++i) cw[i] = metric.tw[i] * Tc.w[i];
            const double base = metric.dot(Tc, X);
            double s0 = 0.0, a0 = X.alpha, s1 = ds, a1 = Y.alpha;
            cont::State Z = Y;
            for (int k = 0; k < 40 && std::abs(Z.alpha) > 1e-14; ++k) {
                const double s2 = s1 - a1 * (s1 - s0) / (a1 - a0);
                cont::State W = cont::axpy(X, s2, Tc);
                if (!cont::corrector(S, W, cw, metric.ta * Tc.alpha, base + s2, cfg.newton_tol, prm.max_corrector_iters))
                    break;
                s0 = s1;
                a0 = a1;
                s1 = s2;
                a1 = W.alpha;
                Z = W;
            }
            arc += metric.norm(cont::diff(Z, X));
            auto r = S.F(Z);
            br.points.push_back(make_branch_point(p, Z, eps, arc, S.rel_residual(Z, r), prm.compute_gamma1));
            // seed the regular system from the last point with alpha well away from 0
            double mean = 0.0;
            for (std::size_t i = 0; i < X.w.size(); ++i) mean += S.hw[i] * X.w[i];
            mean /= S.domain_length;
            std::vector<double> zeta(X.w.size());
            for (std::size_t i = 0; i < zeta.size(); ++i) zeta[i] = (X.w[i] - mean) / X.alpha;
            try {
                br.gamma1_constant = gamma1_contact_constant(p, eps, mean, zeta);
            } catch (const convergence_error&) {
                double mz = 0.0;
                for (std::size_t i = 0; i < Z.w.size(); ++i) mz += S.hw[i] * Z.w[i];
                br.gamma1_constant = mz / S.domain_length;
            }
            return finish(EndTag::Gamma1_contact, "reached the line of constants");
        }
        arc += dist;
        auto r = S.F(Y);
        const double prev_sup = sup_abs(X.w);
        prev = X;
        have_prev = true;
        X = Y;
        br.points.push_back(make_branch_point(p, X, eps, arc, S.rel_residual(X, r), prm.compute_gamma1));
        const auto& last = br.points.back();
        if (last.alpha > 0 && last.sup_norm < prm.contact_tol && last.sup_norm < prev_sup) {
            // linear extrapolation of alpha to zero amplitude
            const auto& q0 = br.points[br.points.size() - 2];
            const double t = last.sup_norm / std::max(q0.sup_norm - last.sup_norm, 1e-300);
            br.gamma0_alpha = last.alpha + t * (last.alpha - q0.alpha);
            return finish(EndTag::Gamma0_contact, "approached the trivial line");
        }
        if (arc > prm.arclength_budget) return finish(EndTag::alpha_limit, "arclength budget exhausted");
        if (++successes >= 2) {
            ds = std::min(ds * 1.3, prm.step_max);
            successes = 0;
        }
    }
    return finish(EndTag::alpha_limit, "max_steps reached");
}

// Point on the bifurcating branch with <phi, w>_W = s <phi, phi>_W, seeded at (alpha1, s phi).
inline Solution bifurcation_point(const ProblemSpec& problem, const SpectralResult& lepro, double s,
                                  const SolverConfig& cfg = {})
{
    const double eps = lepro.epsilon;
    const ProblemSpec p = with_formulation(with_alpha(problem, lepro.alpha1_eps), Formulation::R_form);
    cont::BranchSystem S(p, eps);
    const auto& phi = lepro.eigenfunction.values;
    std::vector<double> cw(phi.size());
    double pp = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        cw[i] = S.hw[i] * phi[i];
        pp += cw[i] * phi[i];
    }
    cont::State X;
    X.alpha = lepro.alpha1_eps;
    X.w.resize(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) X.w[i] = s * phi[i];
    if (!cont::corrector(S, X, cw, 0.0, s * pp, cfg.newton_tol, 30))
        throw convergence_error("bifurcation_point: corrector failed", X.w);
    Solution sol = make_solution(with_alpha(p, X.alpha), X.w, S.rel_residual(X, S.F(X)), 0, eps);
    return sol;
}

// Branch of the regularized problem leaving the trivial line at alpha_{1,eps}.
inline Branch gamma_eps_branch(const ProblemSpec& problem, double eps, const SolverConfig& cfg = {},
                               const ContinuationParams& prm = {})
{
    const ProblemSpec p = with_formulation(problem, Formulation::R_form);
    const auto lep = principal_eigenvalues_lepro(p, eps);
    double amp_ref = eps;
    if (p.integral_a() < -tol_zero(p.a)) amp_ref = std::min(eps, compute_c_a(p));
    const double s0 = 1e-3 * amp_ref;
    SolverConfig c = cfg;
    c.epsilon = eps;
    auto a = bifurcation_point(p, lep, s0, c);
    auto b = bifurcation_point(p, lep, 0.5 * s0, c);
    ContinuationParams pr = prm;
    pr.amplitude_direction = 1;
    if (!std::isfinite(pr.alpha_max)) {
        try {
            pr.alpha_max = alpha2_upper_bound(p, solve_mixed_default(p, witness_mixed_spec(p)));
        } catch (const std::exception&) {
        }
    }
    if (pr.amplitude_scale <= 0) pr.amplitude_scale = default_amplitude_scale(p, s0);
    Branch br = continue_branch(with_alpha(p, a.alpha), a, 1, c, pr);
    br.start_tag = EndTag::Gamma0_contact;
    // alpha at zero amplitude from the two small-amplitude points
    br.gamma0_alpha.reset();
    br.gamma0_alpha = 2.0 * b.alpha - a.alpha;
    return br;
}

struct EpsilonFamily {
    std::vector<Branch> branches;
    std::vector<double> alpha1;          // spectral alpha_{1,eps}
    std::vector<double> hausdorff;       // between consecutive branches
    bool complete = true;
    std::string message;
};

// Symmetric Hausdorff distance in (alpha, sup_norm / scale).
inline double branch_distance(const Branch& a, const Branch& b, double scale)
{
    auto directed = [scale](const Branch& x, const Branch& y) {
        double worst = 0.0;
        for (const auto& p : x.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& r : y.points) {
                const double da = p.alpha - r.alpha, dn = (p.sup_norm - r.sup_norm) / scale;
                best = std::min(best, std::hypot(da, dn));
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

inline EpsilonFamily epsilon_family(const ProblemSpec& problem, const std::vector<double>& eps_list,
                                    const SolverConfig& cfg = {}, const ContinuationParams& prm = {}, int jobs = 1)
{
    require(!eps_list.empty(), "epsilon_family: empty list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        require(eps_list[i] > 0, "epsilon_family: epsilons must be positive");
        if (i) require(eps_list[i] < eps_list[i - 1], "epsilon_family: list must be strictly decreasing");
    }
    EpsilonFamily fam;
    const std::size_t n = eps_list.size();
    fam.branches.resize(n);
    fam.alpha1.assign(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(n);
    auto run = [&](std::size_t k) {
        try {
            fam.alpha1[k] = principal_eigenvalues_lepro(with_formulation(problem, Formulation::R_form), eps_list[k]).alpha1_eps;
            fam.branches[k] = gamma_eps_branch(problem, eps_list[k], cfg, prm);
        } catch (const std::exception& e) {
            errors[k] = e.what();
            fam.branches[k].epsilon = eps_list[k];
            fam.branches[k].end_tag = EndTag::failure;
            fam.branches[k].message = e.what();
        }
    };
    if (jobs <= 1) {
        for (std::size_t k = 0; k < n; ++k) run(k);
    } else {
        std::vector<std::future<void>> fut;
        for (std::size_t k = 0; k < n; ++k) {
            fut.push_back(std::async(std::launch::async, run, k));
            if (fut.size() == static_cast<std::size_t>(jobs)) {
                for (auto& f : fut) f.get();
                fut.clear();
            }
        }
        for (auto& f : fut) f.get();
    }
    for (std::size_t k = 0; k < n; ++k)
        if (fam.branches[k].end_tag == EndTag::failure) {
            fam.complete = false;
            fam.message += "eps=" + std::to_string(eps_list[k]) + ": " + fam.branches[k].message + "; ";
        }
    const double scale = fam.branches.front().amplitude_scale;
    for (std::size_t k = 0; k + 1 < n; ++k)
        fam.hausdorff.push_back(branch_distance(fam.branches[k], fam.branches[k + 1], scale));
    return fam;
}

// ---------------------------------------------------------------------------
// Reduction onto constants: t + psi with psi of zero mean.

struct LSReduction {
    double t = 0.0;
    DiscreteField psi;
    double G_value = 0.0;
    double alpha = 0.0;
    double multiplier = 0.0; // constant absorbed by the projection
};

inline LSReduction ls_solve_psi(const ProblemSpec& problem, double alpha, double t, const SolverConfig& cfg = {})
{
    require(t > 0, "ls_solve_psi: t must be > 0");
    const ProblemSpec p = with_formulation(with_alpha(problem, alpha), Formulation::R_form);
    cont::BranchSystem S(p, cfg.epsilon);
    const int n = p.mesh.size();
    std::vector<double> psi(n, 0.0);
    double mu = 0.0;
    const std::vector<double> ones(n, 1.0);
    for (int it = 0; it <= cfg.max_iters; ++it) {
        cont::State X;
        X.alpha = alpha;
        X.w.resize(n);
        for (int i = 0; i < n; ++i) {
            X.w[i] = t + psi[i];
            if (!(X.w[i] > 0)) throw convergence_error("ls_solve_psi: t + psi lost positivity", psi);
        }
        auto r = S.F(X);
        for (double& v : r) v += mu;
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += S.hw[i] * psi[i];
        if (S.rel_residual(X, r) <= cfg.newton_tol && std::abs(mean) <= 1e-14 * (t + sup_abs(psi))) break;
        if (it == cfg.max_iters) throw convergence_error("ls_solve_psi: Newton failed", psi);
        std::vector<double> dx;
        double dmu = 0.0;
        if (!cont::bordered_solve(S.Fw(X), ones, S.hw, 0.0, r, mean, dx, dmu))
            throw convergence_error("ls_solve_psi: singular bordered system", psi);
        for (int i = 0; i < n; ++i) psi[i] -= dx[i];
        mu -= dmu;
    }
    LSReduction out;
    out.t = t;
    out.alpha = alpha;
    out.multiplier = mu;
    out.psi = DiscreteField(p.mesh, psi);
    double G = 0.0;
    for (int i = 0; i < n; ++i) G += S.hw[i] * p.a[i] * g_eps(t + psi[i], p.q, cfg.epsilon);
    G += (t + psi.front()) + (t + psi.back());
    out.G_value = G;
    return out;
}

inline double ls_G(const ProblemSpec& problem, double alpha, double t, const SolverConfig& cfg = {})
{
    return ls_solve_psi(problem, alpha, t, cfg).G_value;
}

// ---------------------------------------------------------------------------
// Multistart counting

struct MultistartResult {
    int count = 0;
    std::vector<Solution> solutions; // sorted by sup norm
    int seeds_tried = 0;
    int seeds_converged = 0;
};

inline double dedup_tol(double sup_norm) { return 1e-4 * (1.0 + sup_norm); }

// Nontrivial solutions of P at alpha from deregularized multistart Newton. `hints` are extra
// seeds in P variables (e.g. a solution on the curve through the Neumann solution).
inline MultistartResult count_solutions_multistart(const ProblemSpec& problem, double alpha, const SolverConfig& cfg,
                                                   int n_seeds = 16, const std::vector<DiscreteField>& hints = {},
                                                   int jobs = 1)
{
    require(n_seeds >= 8, "count_solutions_multistart: need at least 8 seeds");
    const ProblemSpec p = with_formulation(with_alpha(problem, alpha), Formulation::P_form);
    const bool has_ca = p.integral_a() < -tol_zero(p.a);
    const double ca = has_ca ? compute_c_a(p) : 1.0;
    const double amp = has_ca && alpha > 0 ? ca * std::pow(alpha, -1.0 / (1.0 - p.q)) : ca;

    // the two solutions for alpha > 0 live on different scales (c_a and c_a alpha^{-1/(1-q)}),
    // so every seed shape is tried at both
    std::vector<double> amps{amp};
    if (amp != ca) amps.push_back(ca);
    std::vector<std::vector<double>> seeds;
    for (const auto& shape : multistart_seeds(p.mesh, n_seeds)) {
        const double m = sup_abs(shape);
        for (double A : amps) {
            auto s = shape;
            for (double& v : s) v = std::abs(v) * A / m;
            seeds.push_back(std::move(s));
        }
    }
    if (has_ca && alpha > 0) {
        seeds.emplace_back(p.mesh.size(), ca * std::pow(alpha, -1.0 / (1.0 - p.q)));
        seeds.emplace_back(p.mesh.size(), ca);
    }
    for (const auto& h : hints) seeds.push_back(h.values);

    auto run = [&](const std::vector<double>& s) -> std::optional<Solution> {
        const double sc = std::max(sup_abs(s), 1e-300);
        SolverConfig c = cfg;
        c.max_iters = std::max(c.max_iters, 100);
        try {
            // plain Newton first, then the regularized ladder
            auto sol = solve_newton(p, DiscreteField(p.mesh, s), c);
            if (sol.positivity.tag != PositivityTag::Trivial) return sol;
        } catch (const std::exception&) {
        }
        try {
            auto sol = deregularize(p, DiscreteField(p.mesh, s), eps_ladder(sc, 8), c);
            if (sol.converged && sol.epsilon_used == 0.0) return sol;
        } catch (const std::exception&) {
        }
        return std::nullopt;
    };
    std::vector<std::optional<Solution>> found(seeds.size());
    if (jobs <= 1) {
        for (std::size_t k = 0; k < seeds.size(); ++k) found[k] = run(seeds[k]);
    } else {
        std::vector<std::future<std::optional<Solution>>> fut;
        for (const auto& s : seeds) fut.push_back(std::async(std::launch::async, run, s));
        for (std::size_t k = 0; k < seeds.size(); ++k) found[k] = fut[k].get();
    }
    MultistartResult out;
    out.seeds_tried = static_cast<int>(seeds.size());
    for (auto& f : found) {
        if (!f) continue;
        ++out.seeds_converged;
        if (f->positivity.tag == PositivityTag::Trivial) continue;
        bool dup = false;
        for (const auto& s : out.solutions)
            if (sup_distance(s.field.values, f->field.values) < dedup_tol(norms(p.mesh, s.field).sup_norm)) dup = true;
        if (!dup) out.solutions.push_back(std::move(*f));
    }
    std::sort(out.solutions.begin(), out.solutions.end(),
              [](const Solution& a, const Solution& b) { return sup_abs(a.field.values) < sup_abs(b.field.values); });
    out.count = static_cast<int>(out.solutions.size());
    if (out.count == 2 && alpha > 0) {
        out.solutions[0].role_tag = RoleTag::w1;
        out.solutions[1].role_tag = RoleTag::w2;
    }
    return out;
}

struct AlphaSEstimate {
    double value = std::numeric_limits<double>::quiet_NaN();
    double lo = 0.0, hi = 0.0; // final bracket: count >= 1 at lo, none at hi
    int evaluations = 0;
    bool bracketed = false;
};

// Largest alpha in (lo, hi] with at least one nontrivial solution found by multistart, by bisection.
inline AlphaSEstimate estimate_alpha_s(const ProblemSpec& problem, double lo, double hi, const SolverConfig& cfg = {},
                                       int n_seeds = 16, double rel_tol = 1e-5, int jobs = 1)
{
    require(0 < lo && lo < hi, "estimate_alpha_s: need 0 < lo < hi");
    AlphaSEstimate e;
    auto found = [&](double a) {
        ++e.evaluations;
        return count_solutions_multistart(problem, a, cfg, n_seeds, {}, jobs).count >= 1;
    };
    if (!found(lo)) {
        e.lo = e.hi = lo;
        return e;
    }
    if (found(hi)) {
        e.lo = e.hi = e.value = hi;
        return e;
    }
    e.bracketed = true;
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (found(mid)) lo = mid;
        else hi = mid;
    }
    e.lo = lo;
    e.hi = hi;
    e.value = lo;
    return e;
}

} // namespace robinsub
