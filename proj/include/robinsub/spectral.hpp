#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "solver.hpp"
#include "tridiag.hpp"

namespace robinsub {

struct SpectralResult {
    double gamma1 = std::numeric_limits<double>::quiet_NaN();
    double alpha1_eps = std::numeric_limits<double>::quiet_NaN();
    DiscreteField eigenfunction;
    double epsilon = 0.0;
    bool converged = false;
    double eigen_residual = 0.0;
};

namespace detail {

struct EigenPair {
    double lambda = 0.0;
    std::vector<double> phi; // on the rows of `a`, sup-normalized and positive
    double residual = 0.0;
    bool positive = false;
};

// Smallest eigenpair of a tridiagonal operator that is self-adjoint in the w-weighted product.
inline EigenPair smallest_eigenpair(const Tridiag& a, const std::vector<double>& w)
{
    const auto t = symmetrize(a, w);
    EigenPair ep;
    ep.lambda = eigenvalue_bisection(t, 0);
    auto y = inverse_iteration(t, ep.lambda, 1.0);
    const int n = a.size();
    ep.phi.resize(n);
    double mx = 0.0;
    int imax = 0;
    for (int i = 0; i < n; ++i) {
        ep.phi[i] = y[i] / std::sqrt(w[i]);
        if (std::abs(ep.phi[i]) > mx) {
            mx = std::abs(ep.phi[i]);
            imax = i;
        }
    }
    const double s = ep.phi[imax] < 0 ? -1.0 / mx : 1.0 / mx;
    for (double& v : ep.phi) v *= s;
    ep.positive = true;
    for (double v : ep.phi)
        if (!(v > 0)) ep.positive = false;
    auto Ap = a.multiply(ep.phi);
    double r = 0.0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(Ap[i] - ep.lambda * ep.phi[i]));
    ep.residual = r;
    return ep;
}

inline Tridiag interior_block(const Tridiag& a)
{
    const int n = a.size() - 2;
    Tridiag b(n);
    for (int i = 0; i < n; ++i) {
        b.lo[i] = a.lo[i + 1];
        b.diag[i] = a.diag[i + 1];
        b.up[i] = a.up[i + 1];
    }
    b.lo[0] = 0.0;
    b.up[n - 1] = 0.0;
    return b;
}

} // namespace detail

// Smallest eigenvalue of L_alpha - diag(potential), Robin (or Dirichlet for alpha = -inf).
inline SpectralResult smallest_eigen_with_potential(const Mesh& m, double alpha, const std::vector<double>& potential)
{
    Tridiag A = robin_matrix(m, alpha);
    for (int i = 0; i < m.size(); ++i) A.diag[i] -= potential[i];
    auto w = trapezoid_weights(m);
    SpectralResult res;
    detail::EigenPair ep;
    if (std::isinf(alpha)) {
        auto B = detail::interior_block(A);
        std::vector<double> wi(w.begin() + 1, w.end() - 1);
        ep = detail::smallest_eigenpair(B, wi);
        ep.phi.insert(ep.phi.begin(), 0.0);
        ep.phi.push_back(0.0);
        ep.positive = true;
        for (int i = 1; i + 1 < m.size(); ++i)
            if (!(ep.phi[i] > 0)) ep.positive = false;
        res.converged = ep.positive && ep.residual <= 1e-8 * B.norm_inf();
    } else {
        ep = detail::smallest_eigenpair(A, w);
        res.converged = ep.positive && ep.residual <= 1e-8 * A.norm_inf();
    }
    res.gamma1 = ep.lambda;
    res.eigenfunction = DiscreteField(m, std::move(ep.phi));
    res.eigen_residual = ep.residual;
    return res;
}

// Smallest eigenvalue of the linearization -Delta - lambda a g'_eps(u) at a solution.
inline SpectralResult gamma1_linearized(const ProblemSpec& p, const Solution& at)
{
    check_on(at.field, p.mesh, "gamma1_linearized");
    if (at.epsilon_used == 0.0 && at.positivity.tag != PositivityTag::InteriorPositive)
        throw invalid_argument("gamma1_linearized: solution must be InteriorPositive");
    std::vector<double> pot(p.mesh.size());
    const double lam = p.lambda();
    for (int i = 0; i < p.mesh.size(); ++i)
        pot[i] = lam * p.a[i] * dg_eps(at.field[i], p.q, at.epsilon_used, 0.0);
    if (p.dirichlet()) pot.front() = pot.back() = 0.0;
    auto res = smallest_eigen_with_potential(p.mesh, p.alpha, pot);
    res.epsilon = at.epsilon_used;
    if (!res.converged) throw convergence_error("gamma1_linearized: inverse iteration stagnated");
    return res;
}

// Principal eigenvalue of L_alpha - alpha eps^{q-1} a.
inline double lepro_lambda1(const ProblemSpec& p, double alpha, double eps)
{
    Tridiag A = robin_matrix(p.mesh, alpha);
    const double k = alpha * std::pow(eps, p.q - 1.0);
    for (int i = 0; i < p.mesh.size(); ++i) A.diag[i] -= k * p.a[i];
    return eigenvalue_bisection(symmetrize(A, trapezoid_weights(p.mesh)), 0);
}

inline bool lepro_negative(const ProblemSpec& p, double alpha, double eps)
{
    Tridiag A = robin_matrix(p.mesh, alpha);
    const double k = alpha * std::pow(eps, p.q - 1.0);
    for (int i = 0; i < p.mesh.size(); ++i) A.diag[i] -= k * p.a[i];
    return sturm_count(symmetrize(A, trapezoid_weights(p.mesh)), 0.0) > 0;
}

// Positive principal eigenvalue alpha_{1,eps}: root of alpha -> lambda_1(alpha) on (0, alpha_hi].
// alpha_hi <= 0 selects the mixed-problem bound when available, else 10.
inline SpectralResult principal_eigenvalues_lepro(const ProblemSpec& p, double eps, double alpha_hi = 0.0)
{
    require(eps > 0.0, "principal_eigenvalues_lepro: epsilon must be > 0");
    const double ia = p.integral_a();
    if (!(ia * std::pow(eps, p.q - 1.0) + 2.0 < 0.0))
        throw invalid_argument("principal_eigenvalues_lepro: int a eps^{q-1} + |boundary| < 0 fails");
    require(!positive_runs(p.a, tol_zero(p.a)).empty(), "principal_eigenvalues_lepro: a^+ vanishes");

    std::vector<double> candidates;
    if (alpha_hi > 0) {
        candidates.push_back(alpha_hi);
    } else {
        try {
            auto mx = witness_mixed_spec(p);
            candidates.push_back(alpha2_upper_bound(p, solve_mixed_default(p, mx)));
        } catch (const std::exception&) {
        }
        candidates.push_back(10.0);
    }
    double hi = -1.0;
    for (double c : candidates)
        if (c > 0 && lepro_negative(p, c, eps)) {
            hi = c;
            break;
        }
    if (hi < 0) throw convergence_error("principal_eigenvalues_lepro: no sign change in (0, alpha_hi]");
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (lepro_negative(p, mid, eps)) hi = mid;
        else lo = mid;
    }
    const double a1 = 0.5 * (lo + hi);
    std::vector<double> pot(p.mesh.size());
    const double k = a1 * std::pow(eps, p.q - 1.0);
    for (int i = 0; i < p.mesh.size(); ++i) pot[i] = k * p.a[i];
    auto res = smallest_eigen_with_potential(p.mesh, a1, pot);
    res.alpha1_eps = a1;
    res.epsilon = eps;
    return res;
}

} // namespace robinsub
