#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wwbie/quadrature.hpp"

namespace wwbie {

namespace detail {

// Bisection bracket refined by Newton; falls back to bisection whenever the
// Newton step leaves the bracket. The bracket must contain a sign change.
template <class F, class DF>
double newton_bisect(F&& f, DF&& df, double lo, double hi) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw std::domain_error("newton_bisect: no sign change in bracket");
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx > 0) == (fhi > 0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        double d = df(x);
        double step = (d != 0.0) ? fx / d : 0.0;
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < 1e-17 * std::max(1.0, std::abs(x))) return xn;
        x = xn;
    }
    return x;
}

}  // namespace detail

/// Positive root k of the surface dispersion relation k*tanh(k) = nu.
inline double solve_dispersion(double nu) {
    if (!(nu > 0)) throw std::domain_error("solve_dispersion: nu must be positive");
    auto f = [nu](double k) { return k * std::tanh(k) - nu; };
    auto df = [](double k) {
        double t = std::tanh(k);
        return t + k * (1.0 - t * t);
    };
    double hi = std::max(2.0, nu + 2.0);
    return detail::newton_bisect(f, df, 1e-300, hi);
}

/// n-th evanescent wavenumber: gamma*tan(gamma) = -nu with
/// gamma in (n*pi - pi/2, n*pi).
inline double solve_evanescent(double nu, int n) {
    if (!(nu > 0)) throw std::domain_error("solve_evanescent: nu must be positive");
    if (n < 1) throw std::domain_error("solve_evanescent: mode index must be >= 1");
    auto f = [nu](double g) { return g * std::tan(g) + nu; };
    auto df = [](double g) {
        double t = std::tan(g);
        double c = std::cos(g);
        return t + g / (c * c);
    };
    const double lo = n * M_PI - 0.5 * M_PI, hi = n * M_PI;
    const double eps = 1e-12 * (hi - lo);
    // f -> -inf at the left end, f -> nu > 0 at the right end; widen the
    // left margin until the sign change is inside the numeric bracket.
    double a = lo + eps;
    while (f(a) > 0 && a < hi) a = lo + 2.0 * (a - lo);
    return detail::newton_bisect(f, df, a, hi - eps);
}

/// Frequency parameter nu with the derived wavenumbers and the transverse
/// mode normalization constants. Immutable after construction.
struct WaveParams {
    double nu = 0;
    double k = 0;                 // propagating wavenumber, k*tanh(k) = nu
    std::vector<double> gammas;   // evanescent wavenumbers, 1-based mode index
    double a0 = 0;                // normalization of the cosh mode
    std::vector<double> an;       // normalizations of the cos modes

    static WaveParams make(double nu, int n_evanescent = 8) {
        WaveParams p;
        p.nu = nu;
        p.k = solve_dispersion(nu);
        p.gammas.resize(n_evanescent);
        p.an.resize(n_evanescent);
        // closed forms of (int_{-1}^{0} u^2)^{-1/2} for u = cosh(k(x2+1))
        // and u = cos(gamma(x2+1))
        p.a0 = 1.0 / std::sqrt(0.5 + std::sinh(2.0 * p.k) / (4.0 * p.k));
        for (int n = 1; n <= n_evanescent; ++n) {
            double g = solve_evanescent(nu, n);
            p.gammas[n - 1] = g;
            p.an[n - 1] = 1.0 / std::sqrt(0.5 + std::sin(2.0 * g) / (4.0 * g));
        }
        return p;
    }

    double gamma(int n) const { return gammas.at(n - 1); }
    double wavelength() const { return 2.0 * M_PI / k; }
};

/// Orthonormal transverse mode u_n evaluated at depth x2 in [-1,0].
inline double mode_value(const WaveParams& p, int n, double x2) {
    if (x2 < -1.0 || x2 > 0.0)
        throw std::domain_error("mode_value: x2 outside [-1,0]");
    if (n == 0) return p.a0 * std::cosh(p.k * (x2 + 1.0));
    return p.an.at(n - 1) * std::cos(p.gamma(n) * (x2 + 1.0));
}

struct ModalExpansion {
    enum class Side { left, right };
    Side side = Side::right;
    double L = 0;                      // matching abscissa
    std::vector<Complex> amplitudes;   // A_0 .. A_N
};

/// Projects a transverse trace onto the first N+1 modes by adaptive
/// quadrature of the L^2([-1,0]) inner products.
inline ModalExpansion modal_amplitudes(const std::function<Complex(double)>& field,
                                       const WaveParams& p, int N,
                                       double tol = 1e-12,
                                       ModalExpansion::Side side = ModalExpansion::Side::right,
                                       double L = 0.0) {
    if (N < 0) throw std::domain_error("modal_amplitudes: N must be >= 0");
    ModalExpansion exp;
    exp.side = side;
    exp.L = L;
    exp.amplitudes.resize(N + 1);
    for (int n = 0; n <= N; ++n) {
        auto integrand = [&](double x2) { return field(x2) * mode_value(p, n, x2); };
        exp.amplitudes[n] = adaptive_integrate(integrand, -1.0, 0.0, tol);
    }
    return exp;
}

/// Exact wavemaker solution: right-going propagating mode plus the first
/// evanescent mode, both with unit trace at the surface origin. Accepts a
/// complex first coordinate so it can be compared against the complexified
/// numerical solution inside the PML.
inline Complex wavemaker_reference(const WaveParams& p, Complex x1, double x2) {
    const Complex I(0.0, 1.0);
    double g1 = p.gamma(1);
    Complex prop = std::cosh(p.k * (x2 + 1.0)) / std::cosh(p.k) * std::exp(I * p.k * x1);
    Complex evan = std::cos(g1 * (x2 + 1.0)) / std::cos(g1) * std::exp(-g1 * x1);
    return prop + evan;
}

/// Neumann trace of the wavemaker reference on the lateral wall {0}x[-1,0]
/// with inward normal (1,0).
inline Complex wavemaker_wall_neumann(const WaveParams& p, double x2) {
    const Complex I(0.0, 1.0);
    double g1 = p.gamma(1);
    Complex prop = I * p.k * std::cosh(p.k * (x2 + 1.0)) / std::cosh(p.k);
    Complex evan = -g1 * std::cos(g1 * (x2 + 1.0)) / std::cos(g1);
    return prop + evan;
}

}  // namespace wwbie
