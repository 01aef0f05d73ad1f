#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "solver.hpp"
#include "tridiag.hpp"
#include "weights.hpp"

namespace robinsub {

inline double compute_c_a(const WeightSpec& weight, const Mesh& m, double q)
{
    require(q >= 0.0 && q < 1.0, "compute_c_a: q must lie in [0,1)");
    const double ia = integrate_domain(m, sample_weight(weight, m));
    if (!(ia < -tol_zero(sample_weight(weight, m)))) throw invalid_argument("compute_c_a: int a >= 0");
    return std::pow(-ia / 2.0, 1.0 / (1.0 - q));
}

inline double compute_c_a(const ProblemSpec& p)
{
    const double ia = p.integral_a();
    if (!(ia < -tol_zero(p.a))) throw invalid_argument("compute_c_a: int a >= 0");
    return std::pow(-ia / 2.0, 1.0 / (1.0 - p.q));
}

struct VariationalOptions {
    int n_seeds = 16;
    int max_iter = 20000;
    double grad_tol = 1e-11;
    int penalty_stages = 5;
    double penalty_start = 1.0;
    int jobs = 1;
    std::uint64_t rng_seed = 0x5eed5eedULL;
};

struct Minimum {
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> v;
    int seed_index = -1;
    double seed_value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    double grad_norm = 0.0;
};

struct VariationalResult {
    double c_a = std::numeric_limits<double>::quiet_NaN();
    double alpha_tilde = std::numeric_limits<double>::quiet_NaN();
    double alpha_p = std::numeric_limits<double>::quiet_NaN();
    double sigma = std::numeric_limits<double>::quiet_NaN();
    std::map<double, double> mu_of_alpha;
    double alpha_s_lower = std::numeric_limits<double>::quiet_NaN();
    double alpha_s_upper = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, DiscreteField> minimizers;
};

namespace var {

// Quadratic forms and the (q+1)-homogeneous integral on a mesh.
struct Forms {
    Mesh mesh;
    std::vector<double> hw, a;
    double q = 0.5;
    Tridiag S; // H1 Gram matrix (stiffness + lumped mass)
    std::optional<TridiagLU> S_lu;

    Forms(const Mesh& m, const std::vector<double>& a_, double q_) : mesh(m), hw(trapezoid_weights(m)), a(a_), q(q_)
    {
        const int n = m.n_cells;
        S = Tridiag(n + 1);
        for (int i = 0; i < n; ++i) {
            const double k = 1.0 / m.h;
            S.diag[i] += k;
            S.diag[i + 1] += k;
            S.up[i] -= k;
            S.lo[i + 1] -= k;
        }
        for (int i = 0; i <= n; ++i) S.diag[i] += hw[i];
        S_lu.emplace(S);
    }

    double D(const std::vector<double>& u) const { return dirichlet_energy(mesh, u); }
    double B(const std::vector<double>& u) const { return u.front() * u.front() + u.back() * u.back(); }
    double N(const std::vector<double>& u) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += hw[i] * a[i] * std::pow(std::abs(u[i]), q + 1.0);
        return s;
    }
    std::vector<double> gradD(const std::vector<double>& u) const
    {
        const int n = mesh.n_cells;
        std::vector<double> g(n + 1, 0.0);
        for (int i = 0; i < n; ++i) {
            const double d = 2.0 * (u[i + 1] - u[i]) / mesh.h;
            g[i] -= d;
            g[i + 1] += d;
        }
        return g;
    }
    std::vector<double> gradB(const std::vector<double>& u) const
    {
        std::vector<double> g(u.size(), 0.0);
        g.front() = 2.0 * u.front();
        g.back() += 2.0 * u.back();
        return g;
    }
    // sign(u)|u|^q with 0 at u = 0
    std::vector<double> gradN(const std::vector<double>& u) const
    {
        std::vector<double> g(u.size(), 0.0);
        for (std::size_t i = 0; i < u.size(); ++i)
            if (u[i] != 0.0) g[i] = (q + 1.0) * hw[i] * a[i] * std::copysign(std::pow(std::abs(u[i]), q), u[i]);
        return g;
    }
    double sdot(const std::vector<double>& x, const std::vector<double>& y) const
    {
        auto Sy = S.multiply(y);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * Sy[i];
        return s;
    }
    void normalize(std::vector<double>& v) const
    {
        const double n = std::sqrt(sdot(v, v));
        for (double& x : v) x /= n;
    }
};

inline double dot(const std::vector<double>& x, const std::vector<double>& y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline void axpy(std::vector<double>& y, double a, const std::vector<double>& x)
{
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// value + Euclidean gradient of a 0-homogeneous functional; +inf marks infeasible points
using Objective = std::function<double(const std::vector<double>&, std::vector<double>*)>;

// Sobolev-preconditioned descent on the H1 unit sphere with Barzilai-Borwein steps and a
// nonmonotone Armijo test.
inline Minimum sphere_descent(const Forms& F, const Objective& f, std::vector<double> v, int max_iter, double gtol)
{
    F.normalize(v);
    std::vector<double> g;
    double fv = f(v, &g);
    Minimum out;
    out.seed_value = fv;
    if (!std::isfinite(fv)) return out;
    auto G = F.S_lu->solve(g);
    axpy(G, -dot(v, g), v);
    double gn2 = std::max(F.sdot(G, G), 0.0);
    double tau = 0.1 / std::sqrt(std::max(gn2, 1e-300));
    std::vector<double> hist(10, fv);
    int it = 0;
    for (; it < max_iter; ++it) {
        if (std::sqrt(gn2) <= gtol * std::max(1.0, std::abs(fv))) break;
        const double fref = *std::max_element(hist.begin(), hist.end());
        std::vector<double> trial(v.size()), gt;
        double ft = 0.0;
        bool ok = false;
        for (int bt = 0; bt < 60; ++bt) {
            trial = v;
            axpy(trial, -tau, G);
            F.normalize(trial);
            ft = f(trial, &gt);
            if (std::isfinite(ft) && ft <= fref - 1e-4 * tau * gn2) {
                ok = true;
                break;
            }
            tau *= 0.5;
        }
        if (!ok) break;
        auto Gt = F.S_lu->solve(gt);
        axpy(Gt, -dot(trial, gt), trial);
        std::vector<double> s(v.size()), y(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            s[i] = trial[i] - v[i];
            y[i] = Gt[i] - G[i];
        }
        const double sy = F.sdot(s, y), ss = F.sdot(s, s);
        tau = sy > 0 ? ss / sy : tau * 2.0;
        tau = std::clamp(tau, 1e-12, 1e6);
        v.swap(trial);
        G.swap(Gt);
        fv = ft;
        gn2 = std::max(F.sdot(G, G), 0.0);
        hist[it % hist.size()] = fv;
    }
    out.value = fv;
    out.v = std::move(v);
    out.iterations = it;
    out.grad_norm = std::sqrt(gn2);
    return out;
}

// Descent for D/B on {nu = 0}, nu = N / B^{(q+1)/2}; each step is pulled back onto the constraint.
inline Minimum manifold_descent(const Forms& F, std::vector<double> v, int max_iter, double gtol)
{
    const double p = 0.5 * (F.q + 1.0);
    auto nu_and_grad = [&](const std::vector<double>& u, std::vector<double>* g) {
        const double B = F.B(u), N = F.N(u);
        if (g) {
            auto gN = F.gradN(u), gB = F.gradB(u);
            g->assign(u.size(), 0.0);
            const double Bp = std::pow(B, p);
            for (std::size_t i = 0; i < u.size(); ++i) (*g)[i] = gN[i] / Bp - p * N / (Bp * B) * gB[i];
        }
        return N / std::pow(B, p);
    };
    auto f_and_grad = [&](const std::vector<double>& u, std::vector<double>* g) {
        const double D = F.D(u), B = F.B(u);
        if (g) {
            auto gD = F.gradD(u), gB = F.gradB(u);
            g->assign(u.size(), 0.0);
            for (std::size_t i = 0; i < u.size(); ++i) (*g)[i] = gD[i] / B - D / (B * B) * gB[i];
        }
        return D / B;
    };
    auto restore = [&](std::vector<double>& u) {
        for (int k = 0; k < 50; ++k) {
            std::vector<double> gc;
            const double c = nu_and_grad(u, &gc);
            if (std::abs(c) <= 1e-15) return true;
            auto Gc = F.S_lu->solve(gc);
            const double d = dot(Gc, gc);
            if (!(d > 0)) return false;
            axpy(u, -c / d, Gc);
            F.normalize(u);
        }
        std::vector<double> gc;
        return std::abs(nu_and_grad(u, &gc)) <= 1e-12;
    };
    Minimum out;
    F.normalize(v);
    if (!restore(v)) return out;
    auto direction = [&](const std::vector<double>& u, std::vector<double>& Pd, double& fval) {
        std::vector<double> gf, gc;
        fval = f_and_grad(u, &gf);
        nu_and_grad(u, &gc);
        auto Gf = F.S_lu->solve(gf), Gc = F.S_lu->solve(gc);
        // S-orthogonal projection onto the tangent space of {nu = 0} and the sphere
        const double lam = dot(Gf, gc) / dot(Gc, gc);
        Pd = Gf;
        axpy(Pd, -lam, Gc);
        axpy(Pd, -F.sdot(Pd, u), u);
        return std::sqrt(std::max(F.sdot(Pd, Pd), 0.0));
    };
    std::vector<double> P;
    double fv = 0.0;
    double pn = direction(v, P, fv);
    out.seed_value = fv;
    double tau = 0.1 / std::max(pn, 1e-300);
    int it = 0;
    for (; it < max_iter; ++it) {
        if (pn <= gtol * std::max(1.0, std::abs(fv))) break;
        bool ok = false;
        std::vector<double> trial;
        for (int bt = 0; bt < 60; ++bt) {
            trial = v;
            axpy(trial, -tau, P);
            F.normalize(trial);
            if (restore(trial) && f_and_grad(trial, nullptr) <= fv - 1e-4 * tau * pn * pn) {
                ok = true;
                break;
            }
            tau *= 0.5;
        }
        if (!ok) break;
        v.swap(trial);
        pn = direction(v, P, fv);
        tau *= 2.0;
    }
    out.value = fv;
    out.v = std::move(v);
    out.iterations = it;
    out.grad_norm = pn;
    return out;
}

} // namespace var

// Deterministic seeds: a constant, hats at equispaced centers, random smooth fields.
inline std::vector<std::vector<double>> multistart_seeds(const Mesh& m, int count, std::uint64_t rng_seed = 0x5eed5eedULL)
{
    std::vector<std::vector<double>> seeds;
    const int n_hats = std::max(1, (count - 1) / 2);
    seeds.emplace_back(m.size(), 1.0);
    for (int j = 0; j < n_hats && static_cast<int>(seeds.size()) < count; ++j) {
        const double c = m.x_left + m.length() * (n_hats == 1 ? 0.5 : static_cast<double>(j) / (n_hats - 1));
        const double width = 0.25 * m.length();
        std::vector<double> v(m.size());
        for (int i = 0; i < m.size(); ++i) v[i] = 0.05 + std::max(0.0, 1.0 - std::abs(m.nodes[i] - c) / width);
        seeds.push_back(std::move(v));
    }
    std::mt19937_64 gen(rng_seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    while (static_cast<int>(seeds.size()) < count) {
        double c[6];
        for (double& x : c) x = U(gen);
        std::vector<double> v(m.size());
        for (int i = 0; i < m.size(); ++i) {
            const double t = (m.nodes[i] - m.x_left) / m.length();
            double s = 1.2;
            for (int k = 0; k < 6; ++k) s += c[k] * std::cos(k * std::numbers::pi * t) / (1.0 + k);
            v[i] = s;
        }
        seeds.push_back(std::move(v));
    }
    return seeds;
}

namespace var {

template <class Run>
std::vector<Minimum> run_seeds(const std::vector<std::vector<double>>& seeds, int jobs, Run run)
{
    std::vector<Minimum> out(seeds.size());
    if (jobs <= 1) {
        for (std::size_t k = 0; k < seeds.size(); ++k) out[k] = run(seeds[k]);
    } else {
        std::vector<std::future<Minimum>> fut;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            fut.push_back(std::async(std::launch::async, run, seeds[k]));
            if (fut.size() == static_cast<std::size_t>(jobs) || k + 1 == seeds.size()) {
                const std::size_t base = k + 1 - fut.size();
                for (std::size_t j = 0; j < fut.size(); ++j) out[base + j] = fut[j].get();
                fut.clear();
            }
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k].seed_index = static_cast<int>(k);
    return out;
}

inline Minimum best_of(const std::vector<Minimum>& runs)
{
    Minimum best;
    for (const auto& r : runs)
        if (!r.v.empty() && r.value < best.value) best = r;
    return best;
}

} // namespace var

struct MuResult {
    double mu = std::numeric_limits<double>::quiet_NaN();
    DiscreteField minimizer; // scaled so that int a |u|^{q+1} = 1
    std::vector<Minimum> runs;
};

// mu(alpha) = inf { D - alpha B : N = 1 } via R(u) = (D - alpha B) / N^{2/(q+1)}.
inline MuResult minimize_mu(const ProblemSpec& p, double alpha, const VariationalOptions& opt = {},
                            const std::vector<std::vector<double>>* extra_seeds = nullptr)
{
    var::Forms F(p.mesh, p.a.values, p.q);
    const double e = 2.0 / (p.q + 1.0);
    var::Objective R = [&F, alpha, e](const std::vector<double>& u, std::vector<double>* g) {
        const double N = F.N(u);
        if (!(N > 0)) return std::numeric_limits<double>::infinity();
        const double num = F.D(u) - alpha * F.B(u);
        const double Ne = std::pow(N, e);
        if (g) {
            auto gD = F.gradD(u), gB = F.gradB(u), gN = F.gradN(u);
            g->resize(u.size());
            for (std::size_t i = 0; i < u.size(); ++i)
                (*g)[i] = (gD[i] - alpha * gB[i]) / Ne - e * num / (Ne * N) * gN[i];
        }
        return num / Ne;
    };
    auto seeds = multistart_seeds(p.mesh, opt.n_seeds, opt.rng_seed);
    if (extra_seeds) seeds.insert(seeds.end(), extra_seeds->begin(), extra_seeds->end());
    bool feasible = false;
    for (const auto& s : seeds)
        if (F.N(s) > 0) feasible = true;
    if (!feasible) throw invalid_argument("minimize_mu: no seed enters the feasible cone");
    MuResult out;
    out.runs = var::run_seeds(seeds, opt.jobs, [&](const std::vector<double>& s) {
        return var::sphere_descent(F, R, s, opt.max_iter, opt.grad_tol);
    });
    auto best = var::best_of(out.runs);
    if (best.v.empty()) throw convergence_error("minimize_mu: descent failed from every seed");
    const double N = F.N(best.v);
    std::vector<double> u = best.v;
    const double s = std::pow(N, -1.0 / (p.q + 1.0));
    for (double& x : u) x = std::abs(x) * s;
    out.mu = F.D(u) - alpha * F.B(u);
    out.minimizer = DiscreteField(p.mesh, std::move(u));
    return out;
}

// mu^{-1/(1-q)} times the normalized minimizer: a solution of P at alpha.
inline DiscreteField scaled_mu_minimizer(const MuResult& r, double q)
{
    DiscreteField u = r.minimizer;
    const double k = std::pow(r.mu, -1.0 / (1.0 - q));
    for (double& v : u.values) v *= k;
    return u;
}

// Positive solution of P at alpha (< alpha_tilde) from the variational characterization, polished by Newton.
inline Solution c0_solution(const ProblemSpec& p, double alpha, const SolverConfig& cfg = {},
                            const VariationalOptions& opt = {})
{
    auto P = with_formulation(with_alpha(p, alpha), Formulation::P_form);
    auto mu = minimize_mu(P, alpha, opt);
    auto seed = scaled_mu_minimizer(mu, p.q);
    SolverConfig c = cfg;
    c.max_iters = std::max(c.max_iters, 200);
    auto sol = solve_newton(P, seed, c);
    if (alpha == 0.0 && sol.positivity.tag != PositivityTag::Trivial) sol.role_tag = RoleTag::u_N;
    return sol;
}

inline Solution solve_neumann(const ProblemSpec& p, const SolverConfig& cfg = {}, const VariationalOptions& opt = {})
{
    auto s = c0_solution(p, 0.0, cfg, opt);
    s.role_tag = RoleTag::u_N;
    return s;
}

struct ConstrainedResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    DiscreteField minimizer; // normalized to boundary integral 1
    double constraint_residual = 0.0;
    std::vector<Minimum> runs;
};

namespace var {

enum class ConstraintKind { inequality, equality };

inline ConstrainedResult constrained_boundary_min(const ProblemSpec& p, ConstraintKind kind, const VariationalOptions& opt)
{
    Forms F(p.mesh, p.a.values, p.q);
    const double pe = 0.5 * (p.q + 1.0);
    auto seeds = multistart_seeds(p.mesh, opt.n_seeds, opt.rng_seed);
    auto run = [&](const std::vector<double>& seed) {
        std::vector<double> v = seed;
        Minimum m;
        double rho = opt.penalty_start;
        for (int stage = 0; stage < opt.penalty_stages; ++stage, rho *= 10.0) {
            Objective f = [&F, rho, pe, kind](const std::vector<double>& u, std::vector<double>* g) {
                const double D = F.D(u), B = F.B(u), N = F.N(u);
                if (!(B > 0)) return std::numeric_limits<double>::infinity();
                const double Bp = std::pow(B, pe);
                const double nu = N / Bp;
                const double c = kind == ConstraintKind::equality ? nu : std::min(nu, 0.0);
                if (g) {
                    auto gD = F.gradD(u), gB = F.gradB(u), gN = F.gradN(u);
                    g->resize(u.size());
                    for (std::size_t i = 0; i < u.size(); ++i) {
                        const double dnu = gN[i] / Bp - pe * nu / B * gB[i];
                        (*g)[i] = gD[i] / B - D / (B * B) * gB[i] + 2.0 * rho * c * dnu;
                    }
                }
                return D / B + rho * c * c;
            };
            m = sphere_descent(F, f, v, opt.max_iter, 1e-9);
            if (m.v.empty()) return m;
            v = m.v;
        }
        const double nu = F.N(v) / std::pow(F.B(v), pe);
        if (kind == ConstraintKind::inequality && nu >= 0) {
            // constraint inactive: plain local minimum of D / B on {N > 0}
            m.value = F.D(v) / F.B(v);
            m.v = v;
            return m;
        }
        auto mm = manifold_descent(F, v, opt.max_iter, opt.grad_tol);
        mm.seed_value = m.seed_value;
        return mm;
    };
    ConstrainedResult out;
    out.runs = run_seeds(seeds, opt.jobs, run);
    auto best = best_of(out.runs);
    if (best.v.empty()) throw convergence_error("constrained minimization failed from every seed");
    std::vector<double> v = best.v;
    const double sB = 1.0 / std::sqrt(F.B(v));
    for (double& x : v) x = std::abs(x) * sB;
    out.value = F.D(v);
    const double N = F.N(v);
    out.constraint_residual = kind == ConstraintKind::equality ? std::abs(N) : std::max(0.0, -N);
    out.minimizer = DiscreteField(p.mesh, std::move(v));
    return out;
}

} // namespace var

// inf { D : N = 0, B = 1 }.
inline ConstrainedResult compute_sigma_full(const ProblemSpec& p, const VariationalOptions& opt = {})
{
    if (std::abs(p.integral_a()) <= tol_zero(p.a)) {
        ConstrainedResult r;
        r.value = 0.0;
        r.minimizer = DiscreteField(p.mesh, std::sqrt(0.5));
        return r;
    }
    return var::constrained_boundary_min(p, var::ConstraintKind::equality, opt);
}

inline double compute_sigma(const ProblemSpec& p, const VariationalOptions& opt = {})
{
    return compute_sigma_full(p, opt).value;
}

// inf { D : N >= 0, B = 1 }. Minimizers of the equality-constrained problem are admissible
// here as well, so they join the candidate set.
inline ConstrainedResult compute_alpha_tilde_full(const ProblemSpec& p, const VariationalOptions& opt = {})
{
    if (p.integral_a() >= -tol_zero(p.a)) {
        ConstrainedResult r;
        r.value = 0.0;
        r.minimizer = DiscreteField(p.mesh, std::sqrt(0.5));
        return r;
    }
    auto ineq = var::constrained_boundary_min(p, var::ConstraintKind::inequality, opt);
    auto eq = compute_sigma_full(p, opt);
    if (eq.value < ineq.value) {
        eq.runs.insert(eq.runs.end(), ineq.runs.begin(), ineq.runs.end());
        return eq;
    }
    return ineq;
}

inline double compute_alpha_tilde(const ProblemSpec& p, const VariationalOptions& opt = {})
{
    return compute_alpha_tilde_full(p, opt).value;
}

// inf { D : v = 0 on the closure of the positive set, B = 1 }; +inf when (A.2) holds.
inline double compute_alpha_p(const WeightSpec& weight, const Mesh& m)
{
    const auto a = sample_weight(weight, m);
    const auto rep = check_hypotheses(weight, m);
    const double inf = std::numeric_limits<double>::infinity();
    if (rep.holds_A2) return inf;
    const int n = m.n_cells;
    std::vector<char> fixed(n + 1, 0);
    for (auto [i0, i1] : rep.positive_runs)
        for (int i = std::max(0, i0 - 1); i <= std::min(n, i1 + 1); ++i) fixed[i] = 1;
    std::vector<int> bnd;
    if (!fixed[0]) bnd.push_back(0);
    if (!fixed[n]) bnd.push_back(n);
    if (bnd.empty()) return inf;
    if (rep.positive_runs.empty()) return 0.0;
    // Eliminating the free interior nodes leaves, per free boundary node, the energy of the
    // linear interpolant down to the first fixed node.
    double best = inf;
    for (int b : bnd) {
        const int step = b == 0 ? 1 : -1;
        int j = b;
        while (j + step >= 0 && j + step <= n && !fixed[j + step]) j += step;
        if (j + step < 0 || j + step > n) return 0.0;
        best = std::min(best, 1.0 / (std::abs(j + step - b) * m.h));
    }
    return best;
}

inline double alpha_s_upper_bound(const ProblemSpec& p, const Solution& u_N)
{
    require(p.integral_a() < -tol_zero(p.a), "alpha_s_upper_bound: requires int a < 0");
    if (u_N.positivity.tag != PositivityTag::InteriorPositive)
        throw invalid_argument("alpha_s_upper_bound: u_N must be InteriorPositive");
    const auto& u = u_N.field.values;
    return -p.integral_a() / (std::pow(u.front(), 1.0 - p.q) + std::pow(u.back(), 1.0 - p.q));
}

} // namespace robinsub
