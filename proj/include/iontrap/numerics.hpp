#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

// Small dense numerics used by the electrostatics solvers: 3-vectors, a
// symmetric 3x3 Jacobi eigensolver, a BFGS minimizer with backtracking line
// search, and Richardson-extrapolated central differences.

namespace iontrap {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EigenSystem {
    std::array<double, 3> values{};  // ascending
    std::array<Vec3, 3> vectors{};   // unit, matching values
};

// Cyclic Jacobi rotations; converges to machine precision in a few sweeps.
inline EigenSystem eigen_symmetric_3x3(Mat3 a) {
    Mat3 v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        double diag = std::abs(a[0][0]) + std::abs(a[1][1]) + std::abs(a[2][2]);
        if (off <= 1e-300 || off <= 1e-16 * diag) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    EigenSystem es;
    std::array<int, 3> idx = {0, 1, 2};
    std::array<double, 3> d = {a[0][0], a[1][1], a[2][2]};
    if (d[idx[0]] > d[idx[1]]) std::swap(idx[0], idx[1]);
    if (d[idx[1]] > d[idx[2]]) std::swap(idx[1], idx[2]);
    if (d[idx[0]] > d[idx[1]]) std::swap(idx[0], idx[1]);
    for (int i = 0; i < 3; ++i) {
        es.values[i] = d[idx[i]];
        es.vectors[i] = {v[0][idx[i]], v[1][idx[i]], v[2][idx[i]]};
    }
    return es;
}

struct MinimizeResult {
    Vec3 position{};
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// BFGS with backtracking Armijo line search. Objective and gradient are
// supplied separately; the gradient is assumed analytic and consistent.
// Callers should pre-scale so that coordinates and function values are O(1).
template <class F, class G>
MinimizeResult bfgs_minimize(F&& f, G&& grad, Vec3 x0, double grad_tol,
                             int max_iterations = 500) {
    Mat3 h{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; // inverse Hessian estimate
    Vec3 x = x0;
    double fx = f(x);
    Vec3 g = grad(x);
    bool scaled_h = false;
    MinimizeResult result;
    for (int it = 0; it < max_iterations; ++it) {
        result.iterations = it;
        if (g.norm() <= grad_tol) {
            result.converged = true;
            break;
        }
        Vec3 dir = mat_vec(h, g) * -1.0;
        double descent = dir.dot(g);
        if (descent >= 0.0) { // reset on loss of positive-definiteness
            h = Mat3{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
            scaled_h = false;
            dir = g * -1.0;
            descent = dir.dot(g);
        }
        double step = 1.0;
        Vec3 xn;
        double fn = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 80; ++ls) {
            xn = x + dir * step;
            fn = f(xn);
            if (std::isfinite(fn) && fn <= fx + 1e-4 * step * descent) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const Vec3 gn = grad(xn);
        const Vec3 s = xn - x;
        const Vec3 yv = gn - g;
        const double sy = s.dot(yv);
        if (sy > 1e-30) {
            if (!scaled_h) { // Shanno-Phua scaling before the first update
                const double gamma = sy / yv.dot(yv);
                h = Mat3{{{gamma, 0, 0}, {0, gamma, 0}, {0, 0, gamma}}};
                scaled_h = true;
            }
            const Vec3 hy = mat_vec(h, yv);
            const double yhy = yv.dot(hy);
            const double a = (sy + yhy) / (sy * sy);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    h[i][j] += a * s[i] * s[j] -
                               (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
        x = xn;
        fx = fn;
        g = gn;
    }
    result.position = x;
    result.value = fx;
    result.gradient_norm = g.norm();
    if (!result.converged && g.norm() <= grad_tol) result.converged = true;
    return result;
}

// Richardson-extrapolated central difference of a scalar function of one
// coordinate of a Vec3 argument.
template <class F>
double richardson_partial(F&& f, Vec3 x, int axis, double h) {
    auto central = [&](double step) {
        Vec3 xp = x, xm = x;
        xp[axis] += step;
        xm[axis] -= step;
        return (f(xp) - f(xm)) / (2.0 * step);
    };
    const double d1 = central(h);
    const double d2 = central(h / 2.0);
    return (4.0 * d2 - d1) / 3.0;
}

// Golden-section maximization of a 1-D function on [lo, hi].
template <class F>
std::pair<double, double> golden_maximize(F&& f, double lo, double hi,
                                          double tol_rel = 1e-10) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while ((b - a) > tol_rel * (std::abs(a) + std::abs(b)) && (b - a) > 1e-300) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
        if (b - a < 1e-15 * std::max(1.0, std::abs(a))) break;
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

struct NelderMeadResult {
    std::vector<double> best;
    double value = 0.0;
    int evaluations = 0;
};

// Nelder-Mead simplex on n parameters with box bounds (values clamped).
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> start,
                             const std::vector<double>& lo,
                             const std::vector<double>& hi,
                             const std::vector<double>& initial_step,
                             int max_evals = 2000, double ftol = 1e-10) {
    const std::size_t n = start.size();
    auto clamp = [&](std::vector<double> p) {
        for (std::size_t i = 0; i < n; ++i)
            p[i] = std::min(hi[i], std::max(lo[i], p[i]));
        return p;
    };
    int evals = 0;
    auto eval = [&](const std::vector<double>& p) {
        ++evals;
        return f(p);
    };
    std::vector<std::vector<double>> simplex(n + 1, clamp(start));
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += initial_step[i];
        simplex[i + 1] = clamp(simplex[i + 1]);
    }
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(simplex[i]);

    while (evals < max_evals) {
        // order
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = i + 1; j <= n; ++j)
                if (fv[j] < fv[i]) {
                    std::swap(fv[i], fv[j]);
                    std::swap(simplex[i], simplex[j]);
                }
        if (std::abs(fv[n] - fv[0]) <= ftol * (std::abs(fv[0]) + ftol)) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / double(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + coef * (simplex[n][j] - centroid[j]);
            return clamp(p);
        };
        auto reflected = blend(-1.0);
        double fr = eval(reflected);
        if (fr < fv[0]) {
            auto expanded = blend(-2.0);
            double fe = eval(expanded);
            if (fe < fr) {
                simplex[n] = expanded;
                fv[n] = fe;
            } else {
                simplex[n] = reflected;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = reflected;
            fv[n] = fr;
        } else {
            auto contracted = blend(fr < fv[n] ? -0.5 : 0.5);
            double fc = eval(contracted);
            if (fc < std::min(fr, fv[n])) {
                simplex[n] = contracted;
                fv[n] = fc;
            } else { // shrink toward best
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    fv[i] = eval(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    return {simplex[best], fv[best], evals};
}

} // namespace iontrap
