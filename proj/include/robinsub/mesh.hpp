#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"

namespace robinsub {

struct Mesh {
    double x_left = 0.0;
    double x_right = 1.0;
    int n_cells = 0;
    double h = 0.0;
    std::vector<double> nodes;

    int size() const { return n_cells + 1; }
    double length() const { return x_right - x_left; }

    bool same_as(const Mesh& o) const
    {
        return x_left == o.x_left && x_right == o.x_right && n_cells == o.n_cells;
    }
};

inline Mesh build_mesh(double x_left, double x_right, int n_cells)
{
    require(std::isfinite(x_left) && std::isfinite(x_right) && x_right > x_left,
            "build_mesh: degenerate interval");
    require(n_cells >= 2, "build_mesh: need at least 2 cells");
    Mesh m;
    m.x_left = x_left;
    m.x_right = x_right;
    m.n_cells = n_cells;
    m.h = (x_right - x_left) / n_cells;
    m.nodes.resize(n_cells + 1);
    for (int i = 0; i <= n_cells; ++i) m.nodes[i] = x_left + i * m.h;
    m.nodes[n_cells] = x_right;
    return m;
}

// Nodal values on a mesh. Carries the mesh signature for mismatch checks.
struct DiscreteField {
    double x_left = 0.0;
    double x_right = 0.0;
    int n_cells = 0;
    std::vector<double> values;

    DiscreteField() = default;
    DiscreteField(const Mesh& m, double fill = 0.0)
        : x_left(m.x_left), x_right(m.x_right), n_cells(m.n_cells), values(m.size(), fill) {}
    DiscreteField(const Mesh& m, std::vector<double> v)
        : x_left(m.x_left), x_right(m.x_right), n_cells(m.n_cells), values(std::move(v))
    {
        require(static_cast<int>(values.size()) == m.size(), "DiscreteField: length does not match mesh");
    }

    template <class F>
    static DiscreteField from_function(const Mesh& m, F&& f)
    {
        DiscreteField out(m);
        for (int i = 0; i < m.size(); ++i) out.values[i] = f(m.nodes[i]);
        return out;
    }

    int size() const { return static_cast<int>(values.size()); }
    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }

    bool on(const Mesh& m) const
    {
        return x_left == m.x_left && x_right == m.x_right && n_cells == m.n_cells &&
               static_cast<int>(values.size()) == m.size();
    }

    bool finite() const
    {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
};

inline void check_on(const DiscreteField& f, const Mesh& m, const char* who)
{
    if (!f.on(m)) throw invalid_argument(std::string(who) + ": mesh mismatch");
}

// Trapezoid weights h/2, h, ..., h, h/2.
inline std::vector<double> trapezoid_weights(const Mesh& m)
{
    std::vector<double> w(m.size(), m.h);
    w.front() = w.back() = 0.5 * m.h;
    return w;
}

// Ghost-node Robin Laplacian. Row i of -u'' with -u'(x_left) = alpha u(x_left),
// u'(x_right) = alpha u(x_right).
inline DiscreteField apply_robin_laplacian(const Mesh& m, const DiscreteField& u, double alpha)
{
    check_on(u, m, "apply_robin_laplacian");
    require(std::isfinite(alpha), "apply_robin_laplacian: alpha must be finite");
    const int n = m.n_cells;
    const double ih2 = 1.0 / (m.h * m.h);
    DiscreteField r(m);
    for (int i = 1; i < n; ++i) r[i] = (-u[i - 1] + 2.0 * u[i] - u[i + 1]) * ih2;
    r[0] = (2.0 * u[0] - 2.0 * u[1] - 2.0 * m.h * alpha * u[0]) * ih2;
    r[n] = (2.0 * u[n] - 2.0 * u[n - 1] - 2.0 * m.h * alpha * u[n]) * ih2;
    return r;
}

inline double integrate_domain(const Mesh& m, const DiscreteField& f)
{
    check_on(f, m, "integrate_domain");
    require(f.finite(), "integrate_domain: non-finite values");
    const int n = m.n_cells;
    double s = 0.5 * (f[0] + f[n]);
    for (int i = 1; i < n; ++i) s += f[i];
    return s * m.h;
}

inline double integrate_boundary(const Mesh& m, const DiscreteField& f)
{
    check_on(f, m, "integrate_boundary");
    require(f.finite(), "integrate_boundary: non-finite values");
    return f[0] + f[m.n_cells];
}

struct Norms {
    double sup_norm = 0.0;
    double h1_norm = 0.0;
    double min_value = 0.0;
};

inline Norms norms(const Mesh& m, const DiscreteField& f)
{
    check_on(f, m, "norms");
    Norms out;
    out.min_value = *std::min_element(f.values.begin(), f.values.end());
    double grad2 = 0.0, l2 = 0.0;
    const auto w = trapezoid_weights(m);
    for (int i = 0; i < f.size(); ++i) {
        out.sup_norm = std::max(out.sup_norm, std::abs(f[i]));
        l2 += w[i] * f[i] * f[i];
    }
    for (int i = 0; i < m.n_cells; ++i) {
        const double d = f[i + 1] - f[i];
        grad2 += d * d / m.h;
    }
    out.h1_norm = std::sqrt(grad2 + l2);
    return out;
}

// Discrete Dirichlet energy sum (u_{i+1}-u_i)^2/h.
inline double dirichlet_energy(const Mesh& m, const std::vector<double>& u)
{
    double s = 0.0;
    for (int i = 0; i < m.n_cells; ++i) {
        const double d = u[i + 1] - u[i];
        s += d * d;
    }
    return s / m.h;
}

inline double sup_abs(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline double sup_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

} // namespace robinsub
