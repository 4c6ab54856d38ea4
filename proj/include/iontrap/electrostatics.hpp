#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "iontrap/constants.hpp"
#include "iontrap/numerics.hpp"

// Analytic electrostatics for rectangular surface electrodes in the gapless-
// plane approximation. The basis function for one electrode at 1 V (rest of
// the plane grounded) is the solid angle it subtends divided by 2*pi, with
// closed-form first and second derivatives. Pseudopotential, trap minimum,
// secular frequencies and trap depth build on top of it.

namespace iontrap {

enum class ElectrodeRole { RF, DC, Ground };

struct RectElectrode {
    double x_min = 0.0, x_max = 0.0; // m
    double y_min = 0.0, y_max = 0.0; // m
    ElectrodeRole role = ElectrodeRole::Ground;
    double voltage = 0.0; // V; amplitude for RF, static for DC/Ground
    std::string label;
};

struct TrapLayout {
    std::vector<RectElectrode> electrodes;
    double rf_amplitude = 0.0;          // V, mirrored by the RF electrodes' voltage
    double rf_angular_frequency = 0.0;  // rad/s
    double ion_mass = constants.sr88_mass;         // kg
    double ion_charge = constants.elementary_charge; // C
};

struct InvalidLayoutError : SolverError {
    using SolverError::SolverError;
};

inline void validate_layout(const TrapLayout& layout) {
    bool has_rf = false;
    for (std::size_t i = 0; i < layout.electrodes.size(); ++i) {
        const auto& e = layout.electrodes[i];
        if (!(e.x_min < e.x_max) || !(e.y_min < e.y_max))
            throw DomainError("electrode " + std::to_string(i) + " has degenerate extent");
        if (e.role == ElectrodeRole::RF) has_rf = true;
        for (std::size_t j = i + 1; j < layout.electrodes.size(); ++j) {
            const auto& o = layout.electrodes[j];
            const bool disjoint = e.x_max <= o.x_min || o.x_max <= e.x_min ||
                                  e.y_max <= o.y_min || o.y_max <= e.y_min;
            if (!disjoint)
                throw DomainError("electrodes " + std::to_string(i) + " and " +
                                  std::to_string(j) + " overlap");
        }
    }
    if (!has_rf) throw DomainError("layout has no RF electrode");
    if (!(layout.rf_angular_frequency > 0.0))
        throw DomainError("rf_angular_frequency must be positive");
    if (!(layout.ion_mass > 0.0) || !(layout.ion_charge > 0.0))
        throw DomainError("ion mass and charge must be positive");
}

namespace detail {

// Per-corner terms of the solid-angle closed form and their derivatives.
// With u = x-xi, v = y-yj, R = |p - corner|, A = u^2+z^2, B = v^2+z^2:
//   T    = atan2(u*v, z*R)
//   T_x  = z*v/(R*A)            T_y  = z*u/(R*B)
//   T_z  = -u*v*(R^2+z^2)/(R*A*B)
//   T_xx = -z*v*u*(A+2R^2)/(R^3*A^2)    T_yy analogous with B
//   T_xy = z/R^3
//   T_xz = v*((u^2+v^2)*A - 2z^2R^2)/(R^3*A^2)   T_yz analogous
//   T_zz = -u*v*z*(4R^2AB - (R^2+z^2)(AB + 2R^2(A+B)))/(R^3*A^2*B^2)
// Each corner term is itself harmonic, so the assembled basis is too.
struct CornerTerms {
    double value;
    Vec3 grad;
    Mat3 hess;
};

inline CornerTerms corner_terms(double u, double v, double z) {
    const double z2 = z * z;
    const double a = u * u + z2;
    const double b = v * v + z2;
    const double r2 = u * u + v * v + z2;
    const double r = std::sqrt(r2);
    const double r3 = r * r2;

    CornerTerms t;
    t.value = std::atan2(u * v, z * r);
    t.grad = {z * v / (r * a), z * u / (r * b), -u * v * (r2 + z2) / (r * a * b)};

    const double uv2 = u * u + v * v;
    t.hess[0][0] = -z * v * u * (a + 2.0 * r2) / (r3 * a * a);
    t.hess[1][1] = -z * u * v * (b + 2.0 * r2) / (r3 * b * b);
    t.hess[0][1] = t.hess[1][0] = z / r3;
    t.hess[0][2] = t.hess[2][0] = v * (uv2 * a - 2.0 * z2 * r2) / (r3 * a * a);
    t.hess[1][2] = t.hess[2][1] = u * (uv2 * b - 2.0 * z2 * r2) / (r3 * b * b);
    const double n = r2 + z2;
    t.hess[2][2] = -u * v * z *
                   (4.0 * r2 * a * b - n * (a * b + 2.0 * r2 * (a + b))) /
                   (r3 * a * a * b * b);
    return t;
}

inline void require_above_plane(const Vec3& p) {
    if (!(p.z > 0.0))
        throw DomainError("field point must satisfy z > 0, got z = " + std::to_string(p.z));
}

} // namespace detail

struct BasisEval {
    double value = 0.0; // dimensionless, [0, 1]
    Vec3 grad{};        // 1/m
    Mat3 hess{};        // 1/m^2
};

/// Basis potential of one electrode at 1 V with the rest of the plane
/// grounded, plus analytic derivatives. Equals (solid angle)/(2*pi).
inline BasisEval unit_potential_eval(const RectElectrode& e, const Vec3& p) {
    detail::require_above_plane(p);
    BasisEval out{0.0, {0, 0, 0}, {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}};
    const double xs[2] = {e.x_min, e.x_max};
    const double ys[2] = {e.y_min, e.y_max};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            const auto t = detail::corner_terms(p.x - xs[i], p.y - ys[j], p.z);
            out.value += sign * t.value;
            out.grad = out.grad + t.grad * sign;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) out.hess[a][b] += sign * t.hess[a][b];
        }
    }
    const double inv2pi = 1.0 / (2.0 * M_PI);
    out.value *= inv2pi;
    out.grad = out.grad * inv2pi;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out.hess[a][b] *= inv2pi;
    return out;
}

inline double unit_potential(const RectElectrode& e, const Vec3& p) {
    return unit_potential_eval(e, p).value;
}

/// Static potential (V) from DC and ground electrode voltages.
inline double potential(const TrapLayout& layout, const Vec3& p) {
    detail::require_above_plane(p);
    double v = 0.0;
    for (const auto& e : layout.electrodes)
        if (e.role != ElectrodeRole::RF && e.voltage != 0.0)
            v += e.voltage * unit_potential(e, p);
    return v;
}

/// Gradient of the RF electrode potential at its voltage amplitude (V/m).
inline Vec3 rf_field_gradient(const TrapLayout& layout, const Vec3& p) {
    detail::require_above_plane(p);
    Vec3 g{};
    for (const auto& e : layout.electrodes)
        if (e.role == ElectrodeRole::RF && e.voltage != 0.0)
            g = g + unit_potential_eval(e, p).grad * e.voltage;
    return g;
}

namespace detail {

struct FieldEval {
    Vec3 rf_grad{};     // V/m
    Mat3 rf_hess{};     // V/m^2
    double dc_value = 0.0; // V
    Vec3 dc_grad{};     // V/m
};

inline FieldEval field_eval(const TrapLayout& layout, const Vec3& p) {
    require_above_plane(p);
    FieldEval f{};
    for (const auto& e : layout.electrodes) {
        if (e.voltage == 0.0) continue;
        const auto b = unit_potential_eval(e, p);
        if (e.role == ElectrodeRole::RF) {
            f.rf_grad = f.rf_grad + b.grad * e.voltage;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) f.rf_hess[i][j] += e.voltage * b.hess[i][j];
        } else {
            f.dc_value += e.voltage * b.value;
            f.dc_grad = f.dc_grad + b.grad * e.voltage;
        }
    }
    return f;
}

inline double ponderomotive_scale(const TrapLayout& layout) {
    // q^2 / (4 m Omega^2), in J per (V/m)^2
    const double q = layout.ion_charge;
    const double w = layout.rf_angular_frequency;
    return q * q / (4.0 * layout.ion_mass * w * w);
}

} // namespace detail

/// Total pseudopotential (ponderomotive + static) in eV.
inline double pseudopotential(const TrapLayout& layout, const Vec3& p) {
    const auto f = detail::field_eval(layout, p);
    const double ponder_j = detail::ponderomotive_scale(layout) * f.rf_grad.dot(f.rf_grad);
    const double dc_j = layout.ion_charge * f.dc_value;
    return (ponder_j + dc_j) / constants.elementary_charge;
}

/// Analytic gradient of the total pseudopotential, eV/m.
inline Vec3 pseudopotential_gradient(const TrapLayout& layout, const Vec3& p) {
    const auto f = detail::field_eval(layout, p);
    const double scale = detail::ponderomotive_scale(layout);
    const Vec3 hg = mat_vec(f.rf_hess, f.rf_grad);
    const Vec3 grad_j = hg * (2.0 * scale) + f.dc_grad * layout.ion_charge;
    return grad_j * (1.0 / constants.elementary_charge);
}

struct MinimizationError : SolverError {
    Vec3 best_iterate;
    double gradient_norm;
    MinimizationError(const std::string& msg, Vec3 best, double gnorm)
        : SolverError(msg), best_iterate(best), gradient_norm(gnorm) {}
};

/// Local minimum of the total pseudopotential from the given start point.
/// Optimizes in coordinates scaled by the seed height so the quasi-Newton
/// steps are well conditioned; converges to 1e-9 of the characteristic
/// gradient scale.
inline Vec3 find_minimum(const TrapLayout& layout, const Vec3& initial_guess) {
    detail::require_above_plane(initial_guess);
    const double length_scale = initial_guess.z;
    const Vec3 g_phys0 = pseudopotential_gradient(layout, initial_guess);
    const double energy_scale = std::max({1e-6, std::abs(pseudopotential(layout, initial_guess)),
                                          length_scale * g_phys0.norm()});
    auto to_phys = [&](const Vec3& w) { return w * length_scale; };
    auto f = [&](const Vec3& w) {
        const Vec3 p = to_phys(w);
        return p.z > 0.0 ? pseudopotential(layout, p) / energy_scale
                         : std::numeric_limits<double>::infinity();
    };
    auto g = [&](const Vec3& w) {
        return pseudopotential_gradient(layout, to_phys(w)) *
               (length_scale / energy_scale);
    };
    const Vec3 w0 = initial_guess * (1.0 / length_scale);
    auto res = bfgs_minimize(f, g, w0, 1e-9, 500);
    const Vec3 found = to_phys(res.position);
    if (!res.converged)
        throw MinimizationError(
            "pseudopotential minimization did not converge (scaled |grad| = " +
                std::to_string(res.gradient_norm) + ")",
            found, res.gradient_norm);
    if (!(found.z > 0.0))
        throw InvalidLayoutError("pseudopotential minimum found at z <= 0");
    return found;
}

struct UnstableTrapError : SolverError {
    int axis;
    UnstableTrapError(const std::string& msg, int unstable_axis)
        : SolverError(msg), axis(unstable_axis) {}
};

struct SecularModes {
    std::array<double, 3> frequencies_hz{}; // ascending
    std::array<Vec3, 3> axes{};
};

/// Hessian of the pseudopotential energy (J/m^2) by Richardson-extrapolated
/// central differences of the analytic gradient.
inline Mat3 energy_hessian(const TrapLayout& layout, const Vec3& at, double step = 0.0) {
    const double h = step > 0.0 ? step : std::max(1e-9, 1e-4 * at.z);
    Mat3 hess{};
    for (int j = 0; j < 3; ++j) {
        auto column = [&](double s) {
            Vec3 pp = at, pm = at;
            pp[j] += s;
            pm[j] -= s;
            const Vec3 gp = pseudopotential_gradient(layout, pp);
            const Vec3 gm = pseudopotential_gradient(layout, pm);
            return (gp - gm) * (1.0 / (2.0 * s));
        };
        const Vec3 d1 = column(h);
        const Vec3 d2 = column(h / 2.0);
        const Vec3 r = (d2 * 4.0 - d1) * (1.0 / 3.0);
        for (int i = 0; i < 3; ++i) hess[i][j] = r[i] * constants.elementary_charge;
    }
    for (int i = 0; i < 3; ++i) // symmetrize
        for (int j = i + 1; j < 3; ++j) {
            const double s = 0.5 * (hess[i][j] + hess[j][i]);
            hess[i][j] = hess[j][i] = s;
        }
    return hess;
}

inline SecularModes secular_modes_from_hessian(const Mat3& energy_hess_j_m2, double mass_kg) {
    const auto es = eigen_symmetric_3x3(energy_hess_j_m2);
    SecularModes modes;
    for (int i = 0; i < 3; ++i) {
        if (!(es.values[i] > 0.0)) {
            int axis = 0;
            double amax = std::abs(es.vectors[i][0]);
            for (int k = 1; k < 3; ++k)
                if (std::abs(es.vectors[i][k]) > amax) {
                    amax = std::abs(es.vectors[i][k]);
                    axis = k;
                }
            throw UnstableTrapError("non-positive curvature along axis " +
                                        std::to_string(axis) +
                                        " (eigenvalue " + std::to_string(es.values[i]) + ")",
                                    axis);
        }
        modes.frequencies_hz[i] = std::sqrt(es.values[i] / mass_kg) / (2.0 * M_PI);
        modes.axes[i] = es.vectors[i];
    }
    return modes;
}

inline SecularModes secular_frequencies(const TrapLayout& layout, const Vec3& minimum) {
    return secular_modes_from_hessian(energy_hessian(layout, minimum), layout.ion_mass);
}

namespace detail {

// Minimize the pseudopotential over (x, y) at fixed z by damped Newton on the
// transverse gradient block.
inline Vec3 transverse_minimum(const TrapLayout& layout, double z, Vec3 start) {
    Vec3 p{start.x, start.y, z};
    const double h = std::max(1e-9, 1e-4 * z);
    for (int it = 0; it < 50; ++it) {
        const Vec3 g = pseudopotential_gradient(layout, p);
        const double gnorm = std::hypot(g.x, g.y);
        if (gnorm < 1e-10) break;
        // 2x2 Hessian block by central differences of the analytic gradient
        Vec3 px = p, mx = p, py = p, my = p;
        px.x += h; mx.x -= h; py.y += h; my.y -= h;
        const Vec3 gx = (pseudopotential_gradient(layout, px) -
                         pseudopotential_gradient(layout, mx)) * (1.0 / (2.0 * h));
        const Vec3 gy = (pseudopotential_gradient(layout, py) -
                         pseudopotential_gradient(layout, my)) * (1.0 / (2.0 * h));
        const double a = gx.x, b = 0.5 * (gx.y + gy.x), c = gy.y;
        const double det = a * c - b * b;
        double dx, dy;
        if (det > 0.0 && a > 0.0) {
            dx = -(c * g.x - b * g.y) / det;
            dy = -(a * g.y - b * g.x) / det;
        } else { // fall back to gradient descent
            const double scale = std::max(std::abs(a) + std::abs(c), 1e-12);
            dx = -g.x / scale;
            dy = -g.y / scale;
        }
        const double f0 = pseudopotential(layout, p);
        double t = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
            Vec3 cand{p.x + t * dx, p.y + t * dy, z};
            if (pseudopotential(layout, cand) < f0) {
                p = cand;
                break;
            }
            t *= 0.5;
        }
        if (t < 1e-9) break;
    }
    return p;
}

} // namespace detail

struct TrapDepthResult {
    double depth_ev = 0.0;
    Vec3 escape_position{};
};

/// Barrier between the minimum and the vertical escape saddle above it.
/// Ascends along z with transverse refinement, bounded at 10x the ion height,
/// then refines the barrier top by golden-section maximization.
inline TrapDepthResult trap_depth(const TrapLayout& layout, const Vec3& minimum) {
    const double z0 = minimum.z;
    const double z_max = 10.0 * z0;
    const int coarse_steps = 400;
    const double phi_min = pseudopotential(layout, minimum);

    double best_z = z0;
    double best_val = phi_min;
    Vec3 transverse = minimum;
    std::vector<double> zs, vals;
    std::vector<Vec3> points;
    zs.reserve(coarse_steps + 1);
    for (int k = 0; k <= coarse_steps; ++k) {
        const double z = z0 + (z_max - z0) * double(k) / coarse_steps;
        transverse = detail::transverse_minimum(layout, z, transverse);
        const double v = pseudopotential(layout, transverse);
        zs.push_back(z);
        vals.push_back(v);
        points.push_back(transverse);
        if (v > best_val) {
            best_val = v;
            best_z = z;
        }
        // stop early once clearly past the barrier
        if (v < best_val - 0.5 * (best_val - phi_min) && best_z > z0 && k > 5) break;
    }
    const std::size_t n = zs.size();
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (vals[i] > vals[imax]) imax = i;
    if (imax == n - 1 && zs[imax] >= z_max * (1.0 - 1e-12))
        throw SolverError("no escape saddle found below z = " + std::to_string(z_max) +
                          " m (potential still rising at the search bound)");
    if (imax == 0) // no barrier above the minimum
        return {0.0, minimum};

    const double lo = zs[imax - 1];
    const double hi = zs[imax + 1];
    Vec3 seed = points[imax];
    auto along = [&](double z) {
        seed = detail::transverse_minimum(layout, z, seed);
        return pseudopotential(layout, seed);
    };
    auto [z_saddle, v_saddle] = golden_maximize(along, lo, hi, 1e-12);
    Vec3 escape = detail::transverse_minimum(layout, z_saddle, seed);
    return {v_saddle - phi_min, escape};
}

/// Copy of the layout with all DC/ground voltages zeroed.
inline TrapLayout rf_only(const TrapLayout& layout) {
    TrapLayout out = layout;
    for (auto& e : out.electrodes)
        if (e.role != ElectrodeRole::RF) e.voltage = 0.0;
    return out;
}

/// Copy of the layout with the RF drive rescaled to the given amplitude.
inline TrapLayout with_rf_amplitude(const TrapLayout& layout, double amplitude) {
    TrapLayout out = layout;
    for (auto& e : out.electrodes)
        if (e.role == ElectrodeRole::RF)
            e.voltage = amplitude * (layout.rf_amplitude != 0.0
                                         ? e.voltage / layout.rf_amplitude
                                         : 1.0);
    out.rf_amplitude = amplitude;
    return out;
}

/// Largest-magnitude Mathieu q parameter from the RF curvature at the minimum.
inline double mathieu_q(const TrapLayout& layout, const Vec3& minimum) {
    const double h = std::max(1e-9, 1e-4 * minimum.z);
    Mat3 rf_hess{};
    for (int j = 0; j < 3; ++j) {
        auto column = [&](double s) {
            Vec3 pp = minimum, pm = minimum;
            pp[j] += s;
            pm[j] -= s;
            return (rf_field_gradient(layout, pp) - rf_field_gradient(layout, pm)) *
                   (1.0 / (2.0 * s));
        };
        const Vec3 d1 = column(h);
        const Vec3 d2 = column(h / 2.0);
        const Vec3 r = (d2 * 4.0 - d1) * (1.0 / 3.0);
        for (int i = 0; i < 3; ++i) rf_hess[i][j] = r[i];
    }
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double s = 0.5 * (rf_hess[i][j] + rf_hess[j][i]);
            rf_hess[i][j] = rf_hess[j][i] = s;
        }
    const auto es = eigen_symmetric_3x3(rf_hess);
    const double w = layout.rf_angular_frequency;
    double qmax = 0.0;
    for (double lambda : es.values)
        qmax = std::max(qmax, std::abs(2.0 * layout.ion_charge * lambda /
                                       (layout.ion_mass * w * w)));
    return qmax;
}

struct TrapSolution {
    Vec3 minimum_position{};
    std::array<double, 3> secular_frequencies_hz{};
    double trap_depth_ev = 0.0;     // total (RF + DC)
    double rf_only_depth_ev = 0.0;  // DC voltages zeroed
    Vec3 escape_position{};
    double mathieu_q = 0.0;
};

inline TrapSolution solve_trap(const TrapLayout& layout, const Vec3& initial_guess) {
    validate_layout(layout);
    TrapSolution sol;
    sol.minimum_position = find_minimum(layout, initial_guess);
    sol.secular_frequencies_hz = secular_frequencies(layout, sol.minimum_position).frequencies_hz;
    const auto depth = trap_depth(layout, sol.minimum_position);
    sol.trap_depth_ev = depth.depth_ev;
    sol.escape_position = depth.escape_position;
    const TrapLayout rf = rf_only(layout);
    const Vec3 rf_min = find_minimum(rf, initial_guess);
    sol.rf_only_depth_ev = trap_depth(rf, rf_min).depth_ev;
    sol.mathieu_q = mathieu_q(layout, sol.minimum_position);
    return sol;
}

} // namespace iontrap
