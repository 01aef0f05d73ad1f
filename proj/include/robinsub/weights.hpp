#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"

namespace robinsub {

enum class WeightKind { builtin_aq, cosine_dip, affine, tabulated };

inline const char* to_string(WeightKind k)
{
    switch (k) {
    case WeightKind::builtin_aq: return "builtin_aq";
    case WeightKind::cosine_dip: return "cosine_dip";
    case WeightKind::affine: return "affine";
    case WeightKind::tabulated: return "tabulated";
    }
    return "?";
}

inline WeightKind weight_kind_from_string(const std::string& s)
{
    if (s == "builtin_aq") return WeightKind::builtin_aq;
    if (s == "cosine_dip") return WeightKind::cosine_dip;
    if (s == "affine") return WeightKind::affine;
    if (s == "tabulated") return WeightKind::tabulated;
    throw invalid_argument("unknown weight kind: " + s);
}

// params by kind:
//   builtin_aq  {delta}            zero extension margin, a = r(1 - r cos^2 x) on [0, pi]
//   cosine_dip  {c, amplitude=1}   a = amplitude * (cos 2 pi x - c)
//   affine      {slope, intercept} a = slope * x + intercept
//   tabulated   nodal values at tab_x, interpolated linearly
struct WeightSpec {
    WeightKind kind = WeightKind::cosine_dip;
    std::vector<double> params;
    double q_exponent = 0.5;
    std::vector<double> tab_x;
    bool allow_definite = false;

    double r() const { return 2.0 / (1.0 - q_exponent); }

    static WeightSpec aq(double q, double delta = 0.0)
    {
        WeightSpec w;
        w.kind = WeightKind::builtin_aq;
        w.q_exponent = q;
        w.params = {delta};
        return w;
    }
    static WeightSpec cosine_dip(double c, double amplitude = 1.0)
    {
        WeightSpec w;
        w.kind = WeightKind::cosine_dip;
        w.params = {c, amplitude};
        return w;
    }
    static WeightSpec affine(double slope, double intercept)
    {
        WeightSpec w;
        w.kind = WeightKind::affine;
        w.params = {slope, intercept};
        return w;
    }
    static WeightSpec tabulated(std::vector<double> xs, std::vector<double> values)
    {
        WeightSpec w;
        w.kind = WeightKind::tabulated;
        w.tab_x = std::move(xs);
        w.params = std::move(values);
        return w;
    }
};

inline void validate(const WeightSpec& w)
{
    switch (w.kind) {
    case WeightKind::builtin_aq:
        require(w.q_exponent > 0.0 && w.q_exponent < 1.0, "builtin_aq: q must lie in (0,1)");
        require(w.params.size() <= 1, "builtin_aq: params are {delta}");
        require(w.params.empty() || (std::isfinite(w.params[0]) && w.params[0] >= 0.0),
                "builtin_aq: delta must be >= 0");
        break;
    case WeightKind::cosine_dip:
        require(!w.params.empty() && w.params.size() <= 2, "cosine_dip: params are {c, amplitude}");
        break;
    case WeightKind::affine:
        require(w.params.size() == 2, "affine: params are {slope, intercept}");
        break;
    case WeightKind::tabulated:
        require(w.tab_x.size() >= 2 && w.tab_x.size() == w.params.size(),
                "tabulated: need matching x and value columns");
        for (std::size_t i = 1; i < w.tab_x.size(); ++i)
            require(w.tab_x[i] > w.tab_x[i - 1], "tabulated: x must be strictly increasing");
        break;
    }
    for (double p : w.params) require(std::isfinite(p), "weight params must be finite");
}

// Two-column text file: x a(x). '#' starts a comment.
inline WeightSpec read_tabulated_weight(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open weight table " + path);
    std::vector<double> xs, vs;
    std::string line;
    while (std::getline(in, line)) {
        if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
        std::istringstream ls(line);
        double x, v;
        if (!(ls >> x)) continue;
        if (!(ls >> v)) throw io_error("malformed weight table line: " + line);
        xs.push_back(x);
        vs.push_back(v);
    }
    auto w = WeightSpec::tabulated(std::move(xs), std::move(vs));
    validate(w);
    return w;
}

// Mesh on (-delta, pi + delta) with 0 and pi on nodes; delta is rounded to a multiple of pi/n_inside.
inline Mesh aq_mesh(int n_inside, double delta_target, double* delta_out = nullptr)
{
    const double h = std::numbers::pi / n_inside;
    const int k = static_cast<int>(std::lround(delta_target / h));
    const double delta = k * h;
    if (delta_out) *delta_out = delta;
    return build_mesh(-delta, std::numbers::pi + delta, n_inside + 2 * k);
}

// Pointwise formula; builtin_aq is extended by zero outside [0, pi].
inline double weight_at(const WeightSpec& spec, double x)
{
    switch (spec.kind) {
    case WeightKind::builtin_aq: {
        if (x < 0 || x > std::numbers::pi) return 0.0;
        const double r = spec.r(), c = std::cos(x);
        return r * (1.0 - r * c * c);
    }
    case WeightKind::cosine_dip: {
        const double amp = spec.params.size() > 1 ? spec.params[1] : 1.0;
        return amp * (std::cos(2.0 * std::numbers::pi * x) - spec.params[0]);
    }
    case WeightKind::affine: return spec.params[0] * x + spec.params[1];
    case WeightKind::tabulated: {
        const auto& xs = spec.tab_x;
        const double xc = std::clamp(x, xs.front(), xs.back());
        auto it = std::upper_bound(xs.begin(), xs.end(), xc);
        std::size_t j = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin(), 1), xs.size() - 1);
        const double t = (xc - xs[j - 1]) / (xs[j] - xs[j - 1]);
        return (1.0 - t) * spec.params[j - 1] + t * spec.params[j];
    }
    }
    return 0.0;
}

inline DiscreteField sample_weight(const WeightSpec& spec, const Mesh& m)
{
    validate(spec);
    DiscreteField a(m);
    const double tol_x = 1e-9 * m.h;
    switch (spec.kind) {
    case WeightKind::builtin_aq: {
        const double delta = spec.params.empty() ? 0.0 : spec.params[0];
        const double pi = std::numbers::pi;
        if (std::abs(m.x_left + delta) > tol_x || std::abs(m.x_right - pi - delta) > tol_x)
            throw invalid_argument("sample_weight: mesh does not cover (-delta, pi + delta)");
        if (delta > 0) {
            const double k = delta / m.h;
            if (std::abs(k - std::round(k)) > 1e-6)
                throw invalid_argument("sample_weight: 0 and pi must be mesh nodes");
        }
        const double r = spec.r();
        for (int i = 0; i < m.size(); ++i) {
            const double x = m.nodes[i];
            const double c = std::cos(x);
            const double inside = r * (1.0 - r * c * c);
            const bool at_zero = std::abs(x) <= tol_x, at_pi = std::abs(x - pi) <= tol_x;
            // node on the jump: mean of the one-sided limits
            if ((at_zero || at_pi) && delta > 0) a[i] = 0.5 * inside;
            else if (x < 0 || x > pi) a[i] = 0.0;
            else a[i] = inside;
        }
        break;
    }
    case WeightKind::cosine_dip:
    case WeightKind::affine:
        for (int i = 0; i < m.size(); ++i) a[i] = weight_at(spec, m.nodes[i]);
        break;
    case WeightKind::tabulated: {
        const auto& xs = spec.tab_x;
        const double slack = 1e-12 * (xs.back() - xs.front());
        if (m.x_left < xs.front() - slack || m.x_right > xs.back() + slack)
            throw invalid_argument("sample_weight: mesh extends beyond the tabulated range");
        for (int i = 0; i < m.size(); ++i) a[i] = weight_at(spec, m.nodes[i]);
        break;
    }
    }
    if (!spec.allow_definite) {
        const bool pos = std::any_of(a.values.begin(), a.values.end(), [](double v) { return v > 0; });
        const bool neg = std::any_of(a.values.begin(), a.values.end(), [](double v) { return v < 0; });
        require(pos && neg, "sample_weight: weight does not change sign (set allow_definite to test definite weights)");
    }
    return a;
}

inline double tol_zero(const DiscreteField& a) { return 1e-12 * sup_abs(a.values); }

enum class WitnessSide { left, right };

struct HypothesisReport {
    double integral_a = 0.0;
    bool holds_A0 = false;
    int components_positive_set = 0;
    bool holds_A1 = false;
    bool holds_A2 = false;
    bool holds_A3 = false;
    std::optional<double> d_witness;
    WitnessSide witness_side = WitnessSide::left;
    // maximal runs [first, last] of nodes with a > tol_zero
    std::vector<std::pair<int, int>> positive_runs;
};

inline std::vector<std::pair<int, int>> positive_runs(const DiscreteField& a, double tol)
{
    std::vector<std::pair<int, int>> runs;
    const int n = a.size();
    for (int i = 0; i < n;) {
        if (a[i] > tol) {
            int j = i;
            while (j + 1 < n && a[j + 1] > tol) ++j;
            runs.emplace_back(i, j);
            i = j + 1;
        } else {
            ++i;
        }
    }
    return runs;
}

inline HypothesisReport check_hypotheses(const WeightSpec& spec, const Mesh& m)
{
    auto a = sample_weight(spec, m);
    HypothesisReport rep;
    const double tol = tol_zero(a);
    const int n = m.n_cells;
    rep.integral_a = integrate_domain(m, a);
    rep.holds_A0 = rep.integral_a < -tol;
    rep.positive_runs = positive_runs(a, tol);
    rep.components_positive_set = static_cast<int>(rep.positive_runs.size());
    rep.holds_A1 = rep.components_positive_set >= 1;

    auto touches = [&](int end, int inward) {
        if (a[end] > tol) return true;
        return std::abs(a[end]) <= tol && a[end + inward] > tol;
    };
    rep.holds_A2 = touches(0, 1) && touches(n, -1);

    // endpoint-touching runs with a >= -tol, positive somewhere; root located by linear interpolation
    auto witness = [&](bool from_left, double& d, double& len) {
        const int step = from_left ? 1 : -1;
        int i = from_left ? 0 : n;
        bool positive = false;
        int last = -1;
        while (i >= 0 && i <= n && a[i] >= -tol) {
            positive = positive || a[i] > tol;
            last = i;
            i += step;
        }
        if (last < 0 || !positive) return false;
        if (i < 0 || i > n) {
            d = from_left ? m.x_right : m.x_left;
        } else {
            const double t = a[last] / (a[last] - a[i]);
            d = m.nodes[last] + step * t * m.h;
        }
        len = std::abs(d - (from_left ? m.x_left : m.x_right));
        return true;
    };
    double dl = 0, ll = -1, dr = 0, lr = -1;
    const bool wl = witness(true, dl, ll), wr = witness(false, dr, lr);
    if (wl || wr) {
        rep.holds_A3 = true;
        if (wl && (!wr || ll >= lr)) {
            rep.d_witness = dl;
            rep.witness_side = WitnessSide::left;
        } else {
            rep.d_witness = dr;
            rep.witness_side = WitnessSide::right;
        }
    }
    return rep;
}

} // namespace robinsub
