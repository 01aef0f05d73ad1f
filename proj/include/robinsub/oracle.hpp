#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "weights.hpp"

namespace robinsub {

// w = alpha^{1/(1-q)} sin^r x on (0, pi) solves -w'' = alpha a_q w^q with w = w' = 0 at both ends,
// so the Robin condition holds for every alpha.
inline DiscreteField oracle_field(const Mesh& m, double q, double alpha)
{
    const double r = 2.0 / (1.0 - q), amp = std::pow(alpha, 1.0 / (1.0 - q));
    std::vector<double> w(m.size());
    for (int i = 0; i < m.size(); ++i) w[i] = amp * std::pow(std::abs(std::sin(m.nodes[i])), r);
    w.front() = w.back() = 0.0;
    return DiscreteField(m, std::move(w));
}

// Sup of the pointwise PDE residual at interior nodes and of the second-order one-sided Robin
// residual at the ends, relative to the amplitude alpha^{1/(1-q)}. sign = -1 flips the weight.
inline double oracle_residual(int n_cells, double q, double alpha, double sign = 1.0)
{
    require(q > 0 && q < 1, "oracle_residual: q must lie in (0,1)");
    require(alpha > 0, "oracle_residual: alpha must be > 0");
    const Mesh m = build_mesh(0.0, std::numbers::pi, n_cells);
    const auto w = oracle_field(m, q, alpha);
    const auto a = sample_weight(WeightSpec::aq(q), m);
    const double h = m.h;
    const int n = m.n_cells;
    double r = 0.0;
    for (int i = 1; i < n; ++i) {
        const double lap = (-w[i - 1] + 2.0 * w[i] - w[i + 1]) / (h * h);
        r = std::max(r, std::abs(lap - sign * alpha * a[i] * std::pow(w[i], q)));
    }
    const double dl = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h);
    const double dr = (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / (2.0 * h);
    r = std::max(r, std::abs(-dl - alpha * w[0]));
    r = std::max(r, std::abs(dr - alpha * w[n]));
    return r / std::pow(alpha, 1.0 / (1.0 - q));
}

struct OracleCase {
    double q = 0.5;
    double alpha = 1.0;
    std::vector<int> n_cells;
    std::vector<double> residuals;
    double order = 0.0;
    double finest = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// least-squares slope of -log r against log n
inline double observed_order(const std::vector<int>& ns, const std::vector<double>& rs)
{
    const std::size_t k = ns.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = std::log(static_cast<double>(ns[i])), y = -std::log(rs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

inline OracleCase verify_oracle(double q, double alpha, int n_base = 200, double threshold_factor = 5e-4,
                                bool tamper = false)
{
    OracleCase c;
    c.q = q;
    c.alpha = alpha;
    for (int k = 0; k < 3; ++k) {
        c.n_cells.push_back(n_base << k);
        c.residuals.push_back(oracle_residual(n_base << k, q, alpha, tamper ? -1.0 : 1.0));
    }
    c.order = observed_order(c.n_cells, c.residuals);
    c.finest = c.residuals.back();
    c.threshold = threshold_factor * alpha;
    c.pass = c.order >= 1.8 && c.order <= 2.2 && c.finest < c.threshold;
    return c;
}

} // namespace robinsub
