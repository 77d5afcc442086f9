#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spinboson/errors.hpp"
#include "spinboson/matsubara.hpp"
#include "spinboson/model.hpp"

namespace spinboson::thermo {

using complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Free system: normal-ordered boson mode + N two-level atoms at +-Omega/2.

inline double free_lnz(const ModelParams& p) {
    const double x = p.beta * p.omega0;
    const double y = p.beta * p.omega_big / 2.0;
    // ln(2 cosh y) = y + log1p(e^{-2y}) avoids overflow at large beta
    return -std::log1p(-std::exp(-x)) +
           static_cast<double>(p.n_atoms) * (y + std::log1p(std::exp(-2.0 * y)));
}

inline double free_energy(const ModelParams& p) {
    const double x = p.beta * p.omega0;
    const double y = p.beta * p.omega_big / 2.0;
    return p.omega0 / std::expm1(x) -
           static_cast<double>(p.n_atoms) * (p.omega_big / 2.0) * std::tanh(y);
}

// S0 = ln Z0 + beta E0 evaluated termwise; the naive difference cancels
// catastrophically once S0 ~ 1e-40 at large beta.
inline double free_entropy(const ModelParams& p) {
    const double x = p.beta * p.omega0;
    const double ex = std::exp(-x);
    const double boson = -std::log1p(-ex) + x * ex / (1.0 - ex);
    const double y = p.beta * p.omega_big / 2.0;
    const double e2y = std::exp(-2.0 * y);
    const double atom = std::log1p(e2y) + y * (2.0 * e2y / (1.0 + e2y));
    return boson + static_cast<double>(p.n_atoms) * atom;
}

// ---------------------------------------------------------------------------
// Sigma-z model closed forms. The g-dependent pieces all come from the zero
// mode; `drop` removes them wholesale (the ad hoc remedy for the negative
// entropy), `keep` uses the formulas as they stand.

enum class ZeroModePolicy { keep, drop };

// ln Z - ln Z0 = g^2 beta / omega0 * tanh^2(Omega beta / 4), with C0 = 1.
inline double lnz_shift_sigma_z(const ModelParams& p,
                                ZeroModePolicy policy = ZeroModePolicy::keep) {
    if (policy == ZeroModePolicy::drop) return 0.0;
    const double t = std::tanh(p.omega_big * p.beta / 4.0);
    return p.g * p.g * p.beta / p.omega0 * t * t;
}

inline double energy_sigma_z(const ModelParams& p,
                             ZeroModePolicy policy = ZeroModePolicy::keep) {
    if (policy == ZeroModePolicy::drop) return free_energy(p);
    const double x = p.omega_big * p.beta / 4.0;
    const double ch = std::cosh(x);
    const double shift = -(p.g * p.g / (2.0 * p.omega0)) * std::tanh(x) *
                         (std::sinh(2.0 * x) + p.omega_big * p.beta) / (ch * ch);
    return free_energy(p) + shift;
}

inline double entropy_shift_unit_sigma_z(const ModelParams& p) {
    // shift per unit g^2; sech^2 written via exponentials to stay accurate
    // (and overflow-free) at large beta
    const double x = p.omega_big * p.beta / 4.0;
    const double e2x = std::exp(-2.0 * x);
    const double sech2 = 4.0 * e2x / ((1.0 + e2x) * (1.0 + e2x));
    return (p.beta * p.beta * p.omega_big / (2.0 * p.omega0)) * std::tanh(x) * sech2;
}

inline double entropy_sigma_z(const ModelParams& p,
                              ZeroModePolicy policy = ZeroModePolicy::keep) {
    if (policy == ZeroModePolicy::drop) return free_entropy(p);
    return free_entropy(p) - p.g * p.g * entropy_shift_unit_sigma_z(p);
}

inline double lnz_total_sigma_z(const ModelParams& p,
                                ZeroModePolicy policy = ZeroModePolicy::keep) {
    return free_lnz(p) + lnz_shift_sigma_z(p, policy);
}

struct EntropyBound {
    double g_squared = 0.0;      // largest g^2 with S(beta) >= 0 on the grid
    double beta_first_fail = 0.0; // grid beta where positivity fails first
};

// Largest g^2 keeping S(beta) >= 0 across the supplied beta grid, by
// bisection on g^2 with a per-beta scan. S is linear in g^2, so the result
// coincides with min_beta S0/shift_unit; that identity is the test oracle.
inline EntropyBound entropy_positive_g2_bound(const ModelParams& base,
                                              const std::vector<double>& beta_grid,
                                              int iterations = 200) {
    if (beta_grid.size() < 3)
        throw GridTooCoarse("entropy scan needs at least 3 beta grid points");
    auto scan = [&](double g2) -> std::optional<double> {
        // returns beta of first S < 0, or nullopt if S >= 0 everywhere
        for (double b : beta_grid) {
            ModelParams p = base;
            p.beta = b;
            if (free_entropy(p) - g2 * entropy_shift_unit_sigma_z(p) < 0.0)
                return b;
        }
        return std::nullopt;
    };
    double lo = 0.0;
    double hi = 1.0;
    while (!scan(hi) && hi < 1e12) hi *= 4.0; // expand until S dips negative
    EntropyBound out;
    out.beta_first_fail = scan(hi).value_or(beta_grid.back());
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (auto fail = scan(mid)) {
            hi = mid;
            out.beta_first_fail = *fail;
        } else {
            lo = mid;
        }
    }
    out.g_squared = lo;
    return out;
}

// ---------------------------------------------------------------------------
// Generalized Dicke coefficient functions.

inline double tanh_factor(const ModelParams& p) {
    return p.zero_temperature ? 1.0 : std::tanh(p.beta * p.omega_big / 4.0);
}

// a(omega) = [g1^2/(Omega - i w) + g2^2/(Omega + i w)] / (omega0 - i w)
//            * tanh(beta Omega / 4)
inline complex coeff_a(double omega, const ModelParams& p) {
    const complex iw(0.0, omega);
    return (p.g1 * p.g1 / (p.omega_big - iw) + p.g2 * p.g2 / (p.omega_big + iw)) /
           (p.omega0 - iw) * tanh_factor(p);
}

// c(omega) = g1 g2 Omega / [sqrt(omega0^2 + w^2) (Omega^2 + w^2)]
//            * tanh(beta Omega / 4)
inline double coeff_c(double omega, const ModelParams& p) {
    return p.g1 * p.g2 * p.omega_big /
           (std::sqrt(p.omega0 * p.omega0 + omega * omega) *
            (p.omega_big * p.omega_big + omega * omega)) *
           tanh_factor(p);
}

// a0(0) + 2 c0(0) = (g1+g2)^2/(Omega omega0) * tanh(beta Omega / 4);
// the transition sits at value 1.
inline double transition_condition(const ModelParams& p) {
    const double s = p.g1 + p.g2;
    return s * s / (p.omega_big * p.omega0) * tanh_factor(p);
}

// Bound-side coefficients a0(w), c0(w) built from the absolute-value
// Matsubara kernel (the determinant-estimate side of the bound).
inline std::pair<double, double> bound_coefficients(double omega, const ModelParams& p,
                                                    long fermion_cutoff = 20000) {
    const auto kernel =
        matsubara::absolute_pair_kernel_sum(omega, p.omega_big, p.beta, fermion_cutoff);
    const double a0 = (p.g1 * p.g1 + p.g2 * p.g2) /
                      (p.beta * std::sqrt(p.omega0 * p.omega0 + omega * omega)) *
                      kernel.value;
    const double c0 = p.omega0 * p.g1 * p.g2 /
                      (p.beta * (p.omega0 * p.omega0 + omega * omega)) * kernel.value;
    return {a0, c0};
}

// ---------------------------------------------------------------------------
// Critical point.

enum class CriticalCase { thermal, quantum_critical, none };
enum class CriticalCondition { thermal, quantum, intensity_zero_t };

struct CriticalPoint {
    CriticalCase kind = CriticalCase::none;
    double beta_c = std::numeric_limits<double>::quiet_NaN(); // finite iff thermal
    double coupling_at_zero_t = 0.0; // sqrt(omega0 * Omega)
    CriticalCondition which = CriticalCondition::thermal;
};

// beta_c = (4/Omega) artanh(Omega omega0 / (g1+g2)^2) when (g1+g2)^2 exceeds
// Omega omega0; the boundary is the quantum critical line g1+g2 = sqrt(w0 W).
inline CriticalPoint critical_beta(const ModelParams& p) {
    CriticalPoint out;
    out.coupling_at_zero_t = std::sqrt(p.omega0 * p.omega_big);
    const double s = p.g1 + p.g2;
    const double arg = p.omega_big * p.omega0 / (s * s);
    if (s <= 0.0 || arg > 1.0) {
        out.kind = CriticalCase::none;
        return out;
    }
    if (arg == 1.0) {
        out.kind = CriticalCase::quantum_critical;
        out.which = CriticalCondition::quantum;
        return out;
    }
    out.kind = CriticalCase::thermal;
    out.beta_c = 4.0 / p.omega_big * std::atanh(arg);
    return out;
}

// ---------------------------------------------------------------------------
// Partition-function ratio as a product over bosonic frequencies, and its
// upper bound.

struct RatioResult {
    double value = 1.0;            // Z/Z0 (may overflow to inf near beta_c)
    double ln_value = 0.0;         // ln(Z/Z0), always finite in normal phase
    double zero_mode_factor = 1.0; // zero-mode contribution to Z/Z0: the divergence monitor
    double tail_estimate = 0.0;
    long M_used = 0;
    bool critical_flag = false;    // zero-mode factor within tolerance of divergence
};

inline constexpr long kDefaultRatioCutoff = 10000;

// Z/Z0 = [(1-a(0)+2c(0))(1-a(0)-2c(0))]^{-1/2}
//        * prod_{w>0} [(1-a(w))(1-a(-w)) - c^2(w)]^{-1}
// truncated at M bosonic frequencies. The tail uses ln(1-x) ~ -x with the
// exact 1/w^2 and 1/w^4 asymptote of the log factor summed in closed form.
inline RatioResult ratio_product(const ModelParams& p, long M = kDefaultRatioCutoff) {
    if (p.zero_temperature)
        throw DomainError("beta", "ratio_product requires finite beta");
    const double cond = transition_condition(p);
    if (cond >= 1.0)
        throw SuperradiantRegime(cond, "zero-mode factor 1 - a(0) - 2c(0)");

    const double t = tanh_factor(p);
    const double a0 = coeff_a(0.0, p).real();
    const double c0 = coeff_c(0.0, p);
    const double zm = (1.0 - a0 + 2.0 * c0) * (1.0 - a0 - 2.0 * c0);
    RatioResult out;
    out.M_used = M;
    out.zero_mode_factor = 1.0 / std::sqrt(zm);
    out.critical_flag = (1.0 - a0 - 2.0 * c0) <= 1e-9;
    double ln = -0.5 * std::log(zm);

    double head2 = 0.0, head4 = 0.0;
    for (long n = M; n >= 1; --n) {
        const double w = 2.0 * M_PI * static_cast<double>(n) / p.beta;
        const complex aw = coeff_a(w, p);
        const double cw = coeff_c(w, p);
        // a(-w) = conj a(w) for real parameters
        const double factor = std::norm(1.0 - aw) - cw * cw;
        if (factor <= 0.0)
            throw SuperradiantRegime(cond, "nonzero-mode factor at n=" + std::to_string(n));
        ln -= std::log(factor);
        const double invn2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
        head2 += invn2;
        head4 += invn2 * invn2;
    }

    // -ln factor(w) = A2/w^2 + A4/w^4 + O(w^-6)
    const double g1s = p.g1 * p.g1, g2s = p.g2 * p.g2;
    const double A2 = 2.0 * (g2s - g1s) * t;
    const double A4 = 2.0 * t * ((g1s + g2s) * p.omega_big * p.omega0 +
                                 (g1s - g2s) * (p.omega_big * p.omega_big +
                                                p.omega0 * p.omega0)) +
                      (g1s - g2s) * (g1s - g2s) * t * t;
    const double u = p.beta / (2.0 * M_PI); // w_n = n / u
    const double zeta2 = M_PI * M_PI / 6.0;
    const double zeta4 = M_PI * M_PI * M_PI * M_PI / 90.0;
    const double tail = A2 * u * u * (zeta2 - head2) + A4 * u * u * u * u * (zeta4 - head4);
    ln += tail;

    // residual ~ 1/w^6: integrate the measured residual at n = M+1, floored
    // at the rounding level of the accumulated log
    {
        const double w = 2.0 * M_PI * static_cast<double>(M + 1) / p.beta;
        const complex aw = coeff_a(w, p);
        const double cw = coeff_c(w, p);
        const double exact = -std::log(std::norm(1.0 - aw) - cw * cw);
        const double asym = A2 / (w * w) + A4 / (w * w * w * w);
        out.tail_estimate =
            std::max(std::abs(exact - asym) * (static_cast<double>(M) / 5.0 + 1.0),
                     std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ln)));
    }

    out.ln_value = ln;
    out.value = std::exp(ln);
    return out;
}

// Determinant-estimate upper bound: same product shape built from the
// absolute-kernel coefficients a0(w), c0(w); fermion_cutoff controls the
// inner sums.
inline RatioResult ratio_upper_bound(const ModelParams& p, long M = 300,
                                     long fermion_cutoff = 20000) {
    if (p.zero_temperature)
        throw DomainError("beta", "ratio_upper_bound requires finite beta");
    const double cond = transition_condition(p);
    if (cond >= 1.0)
        throw SuperradiantRegime(cond, "zero-mode factor 1 - a0(0) - 2c0(0)");

    auto bound_coeffs = [&](double w) { return bound_coefficients(w, p, fermion_cutoff); };

    RatioResult out;
    out.M_used = M;
    auto [a0, c0] = bound_coeffs(0.0);
    const double zm = (1.0 - a0 + 2.0 * c0) * (1.0 - a0 - 2.0 * c0);
    if (zm <= 0.0)
        throw SuperradiantRegime(cond, "bound zero-mode factor");
    out.zero_mode_factor = 1.0 / std::sqrt(zm);
    double ln = -0.5 * std::log(zm);
    double last = 0.0;
    for (long n = 1; n <= M; ++n) {
        const double w = 2.0 * M_PI * static_cast<double>(n) / p.beta;
        auto [a0w, c0w] = bound_coeffs(w);
        const double factor = (1.0 - a0w + 2.0 * c0w) * (1.0 - a0w - 2.0 * c0w);
        if (factor <= 0.0)
            throw SuperradiantRegime(cond, "bound factor at n=" + std::to_string(n));
        last = -std::log(factor);
        ln += last;
    }
    // factors decay like ln(w)/w^2; a crude integral-style tail estimate
    out.tail_estimate = std::abs(last) * static_cast<double>(M);
    out.ln_value = ln;
    out.value = std::exp(ln);
    return out;
}

// ---------------------------------------------------------------------------
// Intensity-dependent model coefficients and their zero-temperature limit.

struct IntensityCoefficients {
    complex a;
    complex c;
    complex d;
};

// b0_magnitude = |b(0)| is carried by the caller assembling reports; the
// finite-temperature non-Gaussian integral itself is out of scope.
inline IntensityCoefficients intensity_coeffs(double omega, const ModelParams& p,
                                              double /*b0_magnitude*/ = 0.0) {
    if (p.zero_temperature) {
        IntensityCoefficients out;
        const complex iw(0.0, omega);
        out.a = 0.0;
        out.c = p.g2 * p.g2 / ((p.omega_big + iw) * (p.omega0 - iw));
        out.d = 0.0;
        return out;
    }
    const double t = std::tanh(p.beta * p.omega_big / 4.0);
    const complex iw(0.0, omega);
    IntensityCoefficients out;
    out.a = (M_PI * p.g1 * p.g1 / (p.beta * p.omega0)) * t /
            ((p.omega_big - iw) * (p.omega0 - iw));
    out.c = p.g2 * p.g2 * t / ((p.omega_big + iw) * (p.omega0 - iw));
    out.d = p.g1 * p.g2 * std::sqrt(M_PI / (p.beta * p.omega0)) * t /
            ((p.omega_big + iw) * std::sqrt(p.omega0 * p.omega0 + omega * omega));
    return out;
}

// lim_{beta->inf} Z/Z0 = prod_w (1 - c(w))^{-1} with c from the zero-T limit.
// The limit leaves the grid spacing unconstrained; we evaluate on w_n =
// n * grid_spacing, n in [-M, M], which pins the zero-mode factor
// (1 - g2^2/(Omega omega0))^{-1} and the criticality flag either way.
inline RatioResult intensity_zero_t_ratio(const ModelParams& p, long M = kDefaultRatioCutoff,
                                          double grid_spacing = 1.0,
                                          double critical_tol = 1e-9) {
    if (!p.zero_temperature)
        throw DomainError("beta", "intensity_zero_t_ratio requires the zero-T marker");
    const double c0 = p.g2 * p.g2 / (p.omega_big * p.omega0);
    if (c0 >= 1.0)
        throw SuperradiantRegime(c0, "zero-mode factor 1 - g2^2/(Omega omega0)");

    RatioResult out;
    out.M_used = M;
    out.zero_mode_factor = 1.0 / (1.0 - c0);
    out.critical_flag = (1.0 - c0) <= critical_tol;
    double ln = -std::log1p(-c0);
    double head2 = 0.0;
    for (long n = M; n >= 1; --n) {
        const double w = grid_spacing * static_cast<double>(n);
        const complex iw(0.0, w);
        const complex cw = p.g2 * p.g2 / ((p.omega_big + iw) * (p.omega0 - iw));
        // (1-c(w))(1-c(-w)) = |1-c(w)|^2 pairs the +-w factors
        ln -= std::log(std::norm(1.0 - cw));
        head2 += 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    }
    // 2 Re c(w) ~ 2 g2^2 / w^2 dominates the tail of -ln|1-c|^2
    const double zeta2 = M_PI * M_PI / 6.0;
    const double tail = 2.0 * p.g2 * p.g2 / (grid_spacing * grid_spacing) * (zeta2 - head2);
    ln += tail;
    out.tail_estimate = std::abs(tail) / static_cast<double>(M); // next order down
    out.ln_value = ln;
    out.value = std::exp(ln);
    return out;
}

// Coefficient families evaluated over the bosonic grid w_n = 2 pi n / beta,
// n in [-M, M]; d is populated for the intensity-dependent model only, the
// bound-side a0/c0 for the generalized Dicke model only. At zero temperature
// (intensity model) the grid degenerates to unit spacing.
struct CouplingCoefficients {
    ModelKind model;
    std::vector<double> omegas;
    std::vector<complex> a;
    std::vector<complex> c;
    std::vector<complex> d;
    std::vector<double> a0;
    std::vector<double> c0;
};

inline CouplingCoefficients evaluate_coefficients(const ModelKind& kind,
                                                  const ModelParams& p, long M,
                                                  long fermion_cutoff = 20000) {
    if (kind.model == Model::sigma_z)
        throw DomainError("model", "coefficient families apply to Dicke-type models");
    if (p.zero_temperature && kind.model == Model::generalized_dicke)
        throw DomainError("beta", "coefficient grid requires finite beta");
    CouplingCoefficients out;
    out.model = kind;
    for (long n = -M; n <= M; ++n) {
        const double w = p.zero_temperature
                             ? static_cast<double>(n)
                             : 2.0 * M_PI * static_cast<double>(n) / p.beta;
        out.omegas.push_back(w);
        if (kind.model == Model::generalized_dicke) {
            out.a.push_back(coeff_a(w, p));
            out.c.push_back(coeff_c(w, p));
            const auto [a0w, c0w] = bound_coefficients(w, p, fermion_cutoff);
            out.a0.push_back(a0w);
            out.c0.push_back(c0w);
        } else {
            const auto k = intensity_coeffs(w, p);
            out.a.push_back(k.a);
            out.c.push_back(k.c);
            out.d.push_back(k.d);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Analytic ThermoReport assembly.

// 4th-order central difference in beta.
inline double d_dbeta(const std::function<double(double)>& f, double beta,
                      double rel_step = 1e-4) {
    const double h = rel_step * beta;
    return (-f(beta + 2.0 * h) + 8.0 * f(beta + h) - 8.0 * f(beta - h) +
            f(beta - 2.0 * h)) /
           (12.0 * h);
}

inline ThermoReport analytic_report(const ModelKind& kind, const ModelParams& p,
                                    ZeroModePolicy policy = ZeroModePolicy::keep,
                                    long M = kDefaultRatioCutoff) {
    ThermoReport rep;
    rep.source = ReportSource::analytic;
    switch (kind.model) {
    case Model::sigma_z:
        if (p.zero_temperature)
            throw DomainError("beta", "sigma-z closed forms require finite beta");
        rep.ln_z_ratio = lnz_shift_sigma_z(p, policy);
        rep.ln_z_total = lnz_total_sigma_z(p, policy);
        rep.mean_energy = energy_sigma_z(p, policy);
        rep.entropy = entropy_sigma_z(p, policy);
        rep.order_parameter = 0.0; // no condensate; partition function entire
        break;
    case Model::generalized_dicke: {
        if (p.zero_temperature)
            throw DomainError("beta", "analytic Dicke report requires finite beta");
        const RatioResult r = ratio_product(p, M);
        rep.ln_z_ratio = r.ln_value;
        rep.ln_z_total = free_lnz(p) + r.ln_value;
        auto lnz_of_beta = [&](double b) {
            ModelParams q = p;
            q.beta = b;
            return free_lnz(q) + ratio_product(q, M).ln_value;
        };
        rep.mean_energy = -d_dbeta(lnz_of_beta, p.beta);
        rep.entropy = rep.ln_z_total + p.beta * rep.mean_energy;
        rep.order_parameter = 0.0; // normal phase
        rep.truncation.frequency_cutoff = M;
        rep.truncation.tail_estimate = r.tail_estimate;
        break;
    }
    case Model::intensity_dependent: {
        if (!p.zero_temperature)
            throw DomainError("beta",
                              "finite-temperature intensity model has no closed form; "
                              "use the exact-diagonalization oracle");
        const RatioResult r = intensity_zero_t_ratio(p, M);
        rep.ln_z_ratio = r.ln_value;
        rep.ln_z_total = r.ln_value; // ln Z0 diverges at zero T; ratio only
        rep.mean_energy = 0.0;
        rep.entropy = 0.0;
        rep.order_parameter = 0.0;
        rep.truncation.frequency_cutoff = M;
        rep.truncation.tail_estimate = r.tail_estimate;
        break;
    }
    }
    return rep;
}

} // namespace spinboson::thermo
