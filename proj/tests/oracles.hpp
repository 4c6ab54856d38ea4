#pragma once

// Test-only numerical oracles, kept independent of the library's closed-form
// implementations: adaptive quadrature for solid angles, a direct DFT bin,
// and small statistics helpers.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

// ---- adaptive Simpson in 1-D, recursive with error control -----------------

inline double simpson(const std::function<double(double)>& f, double a, double m,
                      double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(f, a, lm, m, fa, flm, fm);
    const double right = simpson(f, m, rm, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 28) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = simpson(f, a, m, b, fa, fm, fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

/// Solid angle of an axis-aligned rectangle [x0,x1]x[y0,y1] in the z = 0
/// plane, seen from (px, py, pz): double integral of pz / r^3.
inline double rect_solid_angle_quadrature(double x0, double x1, double y0, double y1,
                                          double px, double py, double pz,
                                          double tol = 1e-13) {
    auto inner = [&](double x) {
        auto integrand = [&](double y) {
            const double dx = x - px;
            const double dy = y - py;
            const double r2 = dx * dx + dy * dy + pz * pz;
            return pz / (r2 * std::sqrt(r2));
        };
        return adaptive_simpson(integrand, y0, y1, tol);
    };
    return adaptive_simpson(inner, x0, x1, tol);
}

/// Magnitude of the fundamental Fourier component (peak amplitude) of one
/// period sampled at n points.
inline double dft_fundamental_amplitude(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double phase = 2.0 * M_PI * double(k) / double(n);
        re += samples[k] * std::cos(phase);
        im -= samples[k] * std::sin(phase);
    }
    return 2.0 * std::sqrt(re * re + im * im) / double(n);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / double(n), my = sy / double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = fit.intercept + fit.slope * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
    }
    fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

inline double gaussian_cdf(double x, double mean, double sigma) {
    return 0.5 * std::erfc(-(x - mean) / (sigma * std::sqrt(2.0)));
}

} // namespace oracles
