#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "wwbie/quadrature.hpp"

namespace wwbie {

enum class StretchKind { identity, linear, two_layer };

/// Complex stretching path tau of the first coordinate. The map is the
/// identity on |x1| < a, gains an imaginary part of slope c beyond a, and
/// (for the two-layer variant) an additional real stretch by stretch_factor
/// beyond b. Odd in the sense Im(tau(-x)) = -Im(tau(x)), so outgoing waves
/// decay on both sides.
struct StretchingPath {
    StretchKind kind = StretchKind::identity;
    double a = 1.0;               // start of the complex layer
    double c = 1.0;               // imaginary slope
    double b = 0.0;               // start of the real layer (two_layer only)
    double stretch_factor = 1.0;  // real stretch rate (two_layer only)

    static StretchingPath identity() { return StretchingPath{}; }

    static StretchingPath linear(double a, double c = 1.0) {
        check_slope(c);
        if (!(a > 0)) throw std::domain_error("StretchingPath: a must be positive");
        StretchingPath p;
        p.kind = StretchKind::linear;
        p.a = a;
        p.c = c;
        return p;
    }

    static StretchingPath two_layer(double a, double b, double stretch_factor,
                                    double c = 1.0) {
        check_slope(c);
        if (!(a > 0)) throw std::domain_error("StretchingPath: a must be positive");
        if (!(b > a)) throw std::domain_error("StretchingPath: need a < b");
        if (!(stretch_factor > 0))
            throw std::domain_error("StretchingPath: stretch factor must be positive");
        StretchingPath p;
        p.kind = StretchKind::two_layer;
        p.a = a;
        p.c = c;
        p.b = b;
        p.stretch_factor = stretch_factor;
        return p;
    }

    Complex tau(double x1) const {
        switch (kind) {
            case StretchKind::identity:
                return Complex(x1, 0.0);
            case StretchKind::linear:
                return linear_tau(x1);
            case StretchKind::two_layer: {
                double s = (x1 < 0) ? -1.0 : 1.0;
                double r = std::abs(x1);
                if (r <= b) return linear_tau(x1);
                Complex shifted = linear_tau(stretch_factor * r) -
                                  linear_tau(stretch_factor * b) + linear_tau(b);
                return s * shifted;
            }
        }
        return Complex(x1, 0.0);
    }

    /// Piecewise-constant derivative; at a breakpoint the value from the
    /// side of larger |x1| is returned.
    Complex tau_prime(double x1) const {
        switch (kind) {
            case StretchKind::identity:
                return Complex(1.0, 0.0);
            case StretchKind::linear:
                return (std::abs(x1) >= a) ? Complex(1.0, c) : Complex(1.0, 0.0);
            case StretchKind::two_layer: {
                double r = std::abs(x1);
                if (r >= b) return stretch_factor * Complex(1.0, c);
                if (r >= a) return Complex(1.0, c);
                return Complex(1.0, 0.0);
            }
        }
        return Complex(1.0, 0.0);
    }

private:
    Complex linear_tau(double x1) const {
        if (x1 >= a) return Complex(x1, c * (x1 - a));
        if (x1 <= -a) return Complex(x1, c * (x1 + a));
        return Complex(x1, 0.0);
    }

    static void check_slope(double c) {
        // principal-branch safety: slopes beyond 2 are not supported
        if (!(c > 0) || c > 2.0)
            throw std::domain_error("StretchingPath: slope c must be in (0,2], got " +
                                    std::to_string(c));
    }
};

/// Start of the real-stretch layer equalizing the residual decay of the
/// propagating mode, exp(-c*k*(b-a)), with that of the slowest evanescent
/// mode, exp(-gamma1*nu*(M-b)).
inline double choose_b(double a, double M, double c, double k, double gamma1,
                       double nu) {
    if (!(M > a)) throw std::domain_error("choose_b: need M > a");
    double ck = c * k, gn = gamma1 * nu;
    if (!(ck > 0) || !(gn > 0))
        throw std::domain_error("choose_b: decay rates must be positive");
    return (ck * a + gn * M) / (ck + gn);
}

/// Diagonal of the transformed-PDE coefficient matrix diag(1/tau', tau').
struct CoefficientMatrix {
    Complex a11, a22;
};

inline CoefficientMatrix coefficient_matrix(const StretchingPath& path, double x1) {
    Complex tp = path.tau_prime(x1);
    return CoefficientMatrix{1.0 / tp, tp};
}

}  // namespace wwbie
