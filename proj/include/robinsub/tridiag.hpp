#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"

namespace robinsub {

// General tridiagonal matrix. lo[i] = A(i,i-1), up[i] = A(i,i+1); lo[0], up[n-1] unused.
struct Tridiag {
    std::vector<double> lo, diag, up;

    Tridiag() = default;
    explicit Tridiag(int n) : lo(n, 0.0), diag(n, 0.0), up(n, 0.0) {}

    int size() const { return static_cast<int>(diag.size()); }

    std::vector<double> multiply(const std::vector<double>& x) const
    {
        const int n = size();
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lo[i] * x[i - 1];
            if (i + 1 < n) s += up[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    double norm_inf() const
    {
        double s = 0.0;
        for (int i = 0; i < size(); ++i)
            s = std::max(s, std::abs(lo[i]) + std::abs(diag[i]) + std::abs(up[i]));
        return s;
    }
};

// LU with partial pivoting (gtsv-style), factor once, solve many.
class TridiagLU {
public:
    explicit TridiagLU(const Tridiag& a) { factor(a); }

    std::vector<double> solve(std::vector<double> b) const
    {
        const int n = static_cast<int>(d_.size());
        for (int i = 0; i + 1 < n; ++i) {
            if (swapped_[i]) std::swap(b[i], b[i + 1]);
            b[i + 1] -= f_[i] * b[i];
        }
        b[n - 1] /= d_[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
        for (int i = n - 3; i >= 0; --i) b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
        return b;
    }

private:
    void factor(const Tridiag& a)
    {
        const int n = a.size();
        require(n >= 1, "TridiagLU: empty matrix");
        d_ = a.diag;
        du_ = a.up;
        du2_.assign(n, 0.0);
        f_.assign(n, 0.0);
        swapped_.assign(n, 0);
        std::vector<double> dl(n, 0.0);
        for (int i = 0; i + 1 < n; ++i) dl[i] = a.lo[i + 1];
        const double tiny = 1e-15 * std::max(a.norm_inf(), std::numeric_limits<double>::min());
        for (int i = 0; i + 1 < n; ++i) {
            if (std::abs(d_[i]) >= std::abs(dl[i])) {
                if (std::abs(d_[i]) <= tiny) throw convergence_error("tridiagonal matrix is singular");
                const double fct = dl[i] / d_[i];
                f_[i] = fct;
                d_[i + 1] -= fct * du_[i];
            } else {
                const double fct = d_[i] / dl[i];
                f_[i] = fct;
                swapped_[i] = 1;
                d_[i] = dl[i];
                const double t = d_[i + 1];
                d_[i + 1] = du_[i] - fct * t;
                if (i + 2 < n) {
                    du2_[i] = du_[i + 1];
                    du_[i + 1] = -fct * du_[i + 1];
                }
                du_[i] = t;
            }
        }
        if (std::abs(d_[n - 1]) <= tiny || !std::isfinite(d_[n - 1]))
            throw convergence_error("tridiagonal matrix is singular");
    }

    std::vector<double> d_, du_, du2_, f_;
    std::vector<char> swapped_;
};

inline std::vector<double> solve_tridiag(const Tridiag& a, const std::vector<double>& b)
{
    return TridiagLU(a).solve(b);
}

// Matrix of apply_robin_laplacian. alpha = -inf gives identity boundary rows (u = 0).
inline Tridiag robin_matrix(const Mesh& m, double alpha)
{
    const int n = m.n_cells;
    const double ih2 = 1.0 / (m.h * m.h);
    Tridiag t(n + 1);
    for (int i = 1; i < n; ++i) {
        t.lo[i] = -ih2;
        t.diag[i] = 2.0 * ih2;
        t.up[i] = -ih2;
    }
    if (std::isinf(alpha)) {
        require(alpha < 0, "robin_matrix: alpha = +inf is not allowed");
        t.diag[0] = t.diag[n] = 1.0;
    } else {
        t.diag[0] = (2.0 - 2.0 * m.h * alpha) * ih2;
        t.up[0] = -2.0 * ih2;
        t.diag[n] = (2.0 - 2.0 * m.h * alpha) * ih2;
        t.lo[n] = -2.0 * ih2;
    }
    return t;
}

// Symmetric tridiagonal: diagonal d, off-diagonal e (e[i] couples i and i+1).
struct SymTridiag {
    std::vector<double> d, e;
    int size() const { return static_cast<int>(d.size()); }
};

// Similarity transform W^{1/2} A W^{-1/2} for an A that is self-adjoint in the
// W-weighted inner product.
inline SymTridiag symmetrize(const Tridiag& a, const std::vector<double>& w)
{
    const int n = a.size();
    SymTridiag s;
    s.d = a.diag;
    s.e.assign(n > 0 ? n - 1 : 0, 0.0);
    for (int i = 0; i + 1 < n; ++i)
        s.e[i] = 0.5 * (w[i] * a.up[i] + w[i + 1] * a.lo[i + 1]) / std::sqrt(w[i] * w[i + 1]);
    return s;
}

// Number of eigenvalues strictly less than x (Sturm sequence).
inline int sturm_count(const SymTridiag& t, double x)
{
    const int n = t.size();
    const double pivmin = std::numeric_limits<double>::min() * 1e10;
    int count = 0;
    double q = t.d[0] - x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
    for (int i = 1; i < n; ++i) {
        q = t.d[i] - x - t.e[i - 1] * t.e[i - 1] / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < 0) ++count;
    }
    return count;
}

inline void gershgorin(const SymTridiag& t, double& lo, double& hi)
{
    const int n = t.size();
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (int i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.e[i - 1]);
        if (i + 1 < n) r += std::abs(t.e[i]);
        lo = std::min(lo, t.d[i] - r);
        hi = std::max(hi, t.d[i] + r);
    }
}

// k-th smallest eigenvalue (k = 0 is the smallest) by bisection.
inline double eigenvalue_bisection(const SymTridiag& t, int k = 0)
{
    double lo, hi;
    gershgorin(t, lo, hi);
    const double span = std::max(hi - lo, 1.0);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sturm_count(t, mid) > k) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

inline Tridiag to_general(const SymTridiag& s, double shift)
{
    const int n = s.size();
    Tridiag a(n);
    for (int i = 0; i < n; ++i) a.diag[i] = s.d[i] - shift;
    for (int i = 0; i + 1 < n; ++i) {
        a.up[i] = s.e[i];
        a.lo[i + 1] = s.e[i];
    }
    return a;
}

// Inverse iteration for the eigenvector closest to `lambda`, shifted by `lambda - offset`.
// Deterministic all-ones start. Returns a unit-2-norm vector.
inline std::vector<double> inverse_iteration(const SymTridiag& t, double lambda, double offset = 1.0,
                                             int max_iter = 500, double tol = 1e-14)
{
    const int n = t.size();
    const TridiagLU lu(to_general(t, lambda - offset));
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    for (int it = 0; it < max_iter; ++it) {
        auto y = lu.solve(x);
        double nrm = 0.0;
        for (double v : y) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (!(nrm > 0) || !std::isfinite(nrm)) throw convergence_error("inverse iteration breakdown");
        double dot = 0.0;
        for (int i = 0; i < n; ++i) {
            y[i] /= nrm;
            dot += y[i] * x[i];
        }
        if (dot < 0)
            for (double& v : y) v = -v;
        double diff = 0.0;
        for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(y[i] - x[i]));
        x = std::move(y);
        if (diff < tol) return x;
    }
    return x;
}

} // namespace robinsub
