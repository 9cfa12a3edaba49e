#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "wwbie/boundary_quadrature.hpp"
#include "wwbie/geometry.hpp"
#include "wwbie/pml.hpp"
#include "wwbie/quadrature.hpp"

namespace wwbie {

/// A boundary or volume point with the complexified abscissa, stretching
/// derivative, fluid-side normal and Robin coefficient attached.
struct KernelPoint {
    Vec2 x;
    Complex tau;        // stretched first coordinate
    Complex tau_prime;  // stretching derivative at x1
    Vec2 n = Vec2::Zero();
    double alpha = 0.0;  // nu on the free surface, 0 elsewhere
};

inline KernelPoint kernel_point(const BoundaryQuadrature::Node& node, double nu) {
    return KernelPoint{node.x, node.tau, node.tau_prime, node.n,
                       node.tag == PartTag::free_surface ? nu : 0.0};
}

inline KernelPoint kernel_point(const Vec2& x, const StretchingPath& path) {
    return KernelPoint{x, path.tau(x.x()), path.tau_prime(x.x()), Vec2::Zero(), 0.0};
}

inline KernelPoint source_point(const Panel& panel, double u, const StretchingPath& path,
                                double nu) {
    Vec2 x = panel.chi(u);
    return KernelPoint{x, path.tau(x.x()), path.tau_prime(x.x()), panel.normal(u),
                       panel.tag == PartTag::free_surface ? nu : 0.0};
}

namespace detail {

// squared complexified distance; nonzero for x != y because Re(tau) is
// strictly increasing
inline Complex stretched_distance_sq(const KernelPoint& x, const KernelPoint& y) {
    Complex dz = x.tau - y.tau;
    double dy = x.x.y() - y.x.y();
    return dz * dz + dy * dy;
}

}  // namespace detail

/// Complex-scaled free-space Green's function
/// -log((tau(x1)-tau(y1))^2 + (x2-y2)^2) / (4 pi), principal branch.
inline Complex green(const KernelPoint& x, const KernelPoint& y) {
    Complex z = detail::stretched_distance_sq(x, y);
    if (z == Complex(0.0, 0.0))
        throw std::domain_error("green: coincident points");
    return -std::log(z) / (4.0 * M_PI);
}

/// Conormal double-layer kernel grad_y G~ . A(y) n(y). Reduces to the
/// classical Laplace double-layer kernel for the identity stretching and to
/// tau' times the complexified kernel wherever the boundary in the PML is
/// horizontal. Bounded as y -> x along a smooth panel; singular only at
/// corners.
inline Complex double_layer_kernel(const KernelPoint& x, const KernelPoint& y) {
    Complex z = detail::stretched_distance_sq(x, y);
    if (z == Complex(0.0, 0.0))
        throw std::domain_error("double_layer_kernel: coincident points");
    Complex num = (x.tau - y.tau) * y.n.x() + y.tau_prime * (x.x.y() - y.x.y()) * y.n.y();
    return num / (2.0 * M_PI * z);
}

/// Finite coincidence value of the double-layer kernel at parameter u of a
/// smooth panel (tau' is constant over a panel by breakpoint alignment).
inline Complex double_layer_coincidence(const Panel& panel, double u,
                                        const StretchingPath& path) {
    Vec2 d1 = panel.dchi(u), d2 = panel.d2chi(u), n = panel.normal(u);
    Complex tp = path.tau_prime(panel.chi(u).x());
    Complex denom = tp * tp * d1.x() * d1.x() + d1.y() * d1.y();
    return tp * d2.dot(n) / (4.0 * M_PI * denom);
}

/// Combined Nystrom kernel K(x,y) = DL(x,y) + alpha(y) tau'(y) G~(x,y).
inline Complex nystrom_kernel(const KernelPoint& x, const KernelPoint& y) {
    Complex k = double_layer_kernel(x, y);
    if (y.alpha != 0.0) k += y.alpha * y.tau_prime * green(x, y);
    return k;
}

/// Single-layer kernel with the stretching weight, tau'(y) G~(x,y); used for
/// the right-hand side and the eigenvalue problem's B operator.
inline Complex weighted_single_layer_kernel(const KernelPoint& x, const KernelPoint& y) {
    return y.tau_prime * green(x, y);
}

/// Angular identity of the complex-scaled fundamental solution:
/// (1/2pi) int_0^{2pi} alpha / (alpha^2 cos^2 + sin^2) dtheta = 1 whenever
/// Re(alpha) > 0.
inline Complex fundamental_identity(Complex alpha, double tol = 1e-12) {
    auto integrand = [alpha](double th) {
        double ct = std::cos(th), st = std::sin(th);
        return alpha / (alpha * alpha * ct * ct + st * st);
    };
    return adaptive_integrate(integrand, 0.0, 2.0 * M_PI, tol) / (2.0 * M_PI);
}

/// Evaluates the identity above with alpha = tau'(x1); the result should be 1.
inline Complex verify_fundamental_solution(const StretchingPath& path, double x1,
                                           double tol = 1e-12) {
    return fundamental_identity(path.tau_prime(x1), tol);
}

}  // namespace wwbie
