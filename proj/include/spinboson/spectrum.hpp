#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "spinboson/errors.hpp"
#include "spinboson/model.hpp"
#include "spinboson/thermo.hpp"

namespace spinboson::spectrum {

struct Root {
    double energy = 0.0;
    double residual = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int multiplicity = 1;
};

struct SpectrumResult {
    std::vector<Root> roots;            // ascending in energy
    std::vector<double> poles_excluded; // {Omega, omega0} with radius below
    double exclusion_radius = 0.0;
    double e_max = 0.0;
    long cells_excluded = 0;
    long cells_total = 0;
};

inline double pole_exclusion_radius(const ModelParams& p) {
    return 1e-8 * std::max(p.omega_big, p.omega0);
}

// Collective-excitation condition after the continuation i w -> E of the
// frequency-product factor: returns RHS - 1 with the three brackets weighted
// tanh^2, tanh^2, tanh. Roots are the excitation energies.
inline double excitation_residual(double E, const ModelParams& p, double beta) {
    const double W = p.omega_big, w0 = p.omega0;
    const double radius = pole_exclusion_radius(p);
    if (std::abs(E - W) < radius || std::abs(E - w0) < radius)
        throw PoleProximity("E = " + std::to_string(E) +
                            " is inside a pole exclusion radius");
    const double t = std::tanh(beta * W / 4.0);
    const double g1s = p.g1 * p.g1, g2s = p.g2 * p.g2;
    const double dw0 = w0 * w0 - E * E;
    const double dW = W * W - E * E;

    const double bracket1 = -(g1s * g1s + g2s * g2s) / (dw0 * dW) * t * t;
    const double bracket2 = -(g1s * g2s / dw0) *
                         (1.0 / ((W - E) * (W - E)) + 1.0 / ((W + E) * (W + E)) -
                          4.0 * W * W / (dW * dW)) *
                         t * t;
    const double bracket3 = ((g1s / (W - E) + g2s / (W + E)) / (w0 - E) +
                          (g1s / (W + E) + g2s / (W - E)) / (w0 + E)) *
                         t;
    return bracket1 + bracket2 + bracket3 - 1.0;
}

// E2 = sqrt[(g1 (Omega+omega0)^2 + g2 (Omega-omega0)^2) / (g1+g2)];
// reduces to Omega+omega0 for g2=0 and |Omega-omega0| for g1=0.
inline double e2_closed_form(const ModelParams& p) {
    if (p.g1 + p.g2 <= 0.0)
        throw DomainError("g1", "e2_closed_form requires g1 + g2 > 0");
    const double sp = p.omega_big + p.omega0;
    const double sm = p.omega_big - p.omega0;
    return std::sqrt((p.g1 * sp * sp + p.g2 * sm * sm) / (p.g1 + p.g2));
}

struct SolveOptions {
    double e_max = 0.0;          // 0 -> default 3 (Omega + omega0)
    long grid_n = 4000;
    double rel_tol = 1e-12;      // bisection |dE| target, relative
    double zero_root_tol = 1e-9; // residual threshold for the explicit E=0 test
};

// Scans (0, e_max] for sign changes of the residual, refines each bracket by
// bisection, and tests E=0 explicitly via the limit value of the residual
// (the condition is even in E, so criticality produces a double root at 0
// that never flips sign).
inline SpectrumResult solve_spectrum(const ModelParams& p, double beta,
                                     SolveOptions opt = {}) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw DomainError("beta", "solve_spectrum requires finite beta > 0");
    SpectrumResult out;
    out.e_max = opt.e_max > 0.0 ? opt.e_max : 3.0 * (p.omega_big + p.omega0);
    out.exclusion_radius = pole_exclusion_radius(p);
    out.poles_excluded = {p.omega_big, p.omega0};
    if (opt.grid_n < 2) throw DomainError("grid_n", "grid_n must be >= 2");

    const double abs_tol = opt.rel_tol * std::max(1.0, out.e_max);
    auto near_pole = [&](double e) {
        for (double q : out.poles_excluded)
            if (std::abs(e - q) < out.exclusion_radius) return true;
        return false;
    };

    // explicit E = 0 test
    {
        const double r0 = excitation_residual(0.0, p, beta);
        if (std::abs(r0) <= opt.zero_root_tol)
            out.roots.push_back(Root{0.0, r0, 0.0, 0.0, 1});
    }

    const double h = out.e_max / static_cast<double>(opt.grid_n);
    out.cells_total = opt.grid_n;
    double prev_e = 0.0;
    bool prev_ok = !near_pole(prev_e);
    double prev_r = prev_ok ? excitation_residual(prev_e, p, beta) : 0.0;
    for (long i = 1; i <= opt.grid_n; ++i) {
        const double e = h * static_cast<double>(i);
        // skip cells whose interior contains a pole, not just the endpoints
        bool cell_clear = !near_pole(e);
        for (double q : out.poles_excluded)
            if (q > prev_e && q < e) cell_clear = false;
        if (!cell_clear || !prev_ok) {
            ++out.cells_excluded;
            prev_e = e;
            prev_ok = !near_pole(e);
            prev_r = prev_ok ? excitation_residual(e, p, beta) : 0.0;
            continue;
        }
        const double r = excitation_residual(e, p, beta);
        if (prev_r == 0.0) {
            out.roots.push_back(Root{prev_e, 0.0, prev_e, prev_e, 1});
        } else if (r * prev_r < 0.0) {
            double lo = prev_e, hi = e, rlo = prev_r;
            while (hi - lo > abs_tol) {
                const double mid = 0.5 * (lo + hi);
                const double rm = excitation_residual(mid, p, beta);
                if (rm == 0.0) { lo = hi = mid; break; }
                if (rm * rlo < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    rlo = rm;
                }
            }
            const double root = 0.5 * (lo + hi);
            out.roots.push_back(
                Root{root, excitation_residual(root, p, beta), prev_e, e, 1});
        }
        prev_e = e;
        prev_r = r;
        prev_ok = true;
    }

    if (out.cells_excluded * 10 > out.cells_total)
        throw PoleDense("more than 10% of scan cells excluded near poles");

    std::sort(out.roots.begin(), out.roots.end(),
              [](const Root& a, const Root& b) { return a.energy < b.energy; });
    // The residual is even in E, so an exact zero root is a parabola touch;
    // sign noise at the eps level fakes a crossing at O(sqrt(eps)). Absorb
    // bracketed roots inside the zero cluster into the explicit zero root.
    const double zero_cluster = 1e-6 * out.e_max;
    const bool has_zero = !out.roots.empty() && out.roots.front().energy == 0.0 &&
                          out.roots.front().bracket_hi == 0.0;
    if (has_zero) {
        std::vector<Root> kept;
        for (const Root& r : out.roots)
            if (r.energy == 0.0 || r.energy > zero_cluster) kept.push_back(r);
        out.roots = std::move(kept);
    }
    // dedupe: separation > 10 * tolerance, merging multiplicity
    std::vector<Root> unique;
    for (const Root& r : out.roots) {
        if (!unique.empty() && r.energy - unique.back().energy <= 10.0 * abs_tol)
            unique.back().multiplicity += 1;
        else
            unique.push_back(r);
    }
    out.roots = std::move(unique);
    // degenerate Omega = omega0, g1 = 0: the closed-form E2 collapses onto
    // the zero root; report one root with multiplicity metadata
    if (has_zero && !out.roots.empty() && p.g1 + p.g2 > 0.0) {
        const double e2 = e2_closed_form(p);
        if (e2 <= zero_cluster) out.roots.front().multiplicity = 2;
    }
    return out;
}

} // namespace spinboson::spectrum
