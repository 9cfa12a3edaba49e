#pragma once

#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wwbie {

using Complex = std::complex<double>;

/// P-point Gauss-Legendre rule on the reference segment [0,1].
struct ReferenceRule {
    int order = 0;
    std::vector<double> nodes;    // strictly inside (0,1), ascending
    std::vector<double> weights;  // positive, sum to 1
};

/// Nodes/weights by Newton iteration on the Legendre polynomial, then mapped
/// from [-1,1] to [0,1]. Supported orders: 1 <= P <= 64.
inline ReferenceRule gauss_legendre(int P) {
    if (P < 1 || P > 64)
        throw std::domain_error("gauss_legendre: order must be in [1,64], got " + std::to_string(P));
    ReferenceRule rule;
    rule.order = P;
    rule.nodes.resize(P);
    rule.weights.resize(P);
    const int m = (P + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (P + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < P; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            dp = P * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = 0.5 * (1.0 - x);  // x descends, so this ascends
        rule.nodes[P - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[i] = 0.5 * w;
        rule.weights[P - 1 - i] = 0.5 * w;
    }
    return rule;
}

/// Thrown when the adaptive integrator exhausts its subdivision budget.
/// Carries the best estimate accumulated so far and a bound on its error.
class AdaptiveQuadratureError : public std::runtime_error {
public:
    AdaptiveQuadratureError(const std::string& what, Complex best, double bound)
        : std::runtime_error(what), best_estimate(best), error_bound(bound) {}
    Complex best_estimate;
    double error_bound;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK dqk15).
inline constexpr double gk15_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double gk15_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk15_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double adaptive_norm(double v) { return std::abs(v); }
inline double adaptive_norm(const Complex& v) { return std::abs(v); }
inline double adaptive_norm(const Eigen::VectorXcd& v) {
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

template <class T>
inline Complex adaptive_scalar(const T&) { return Complex(0, 0); }
inline Complex adaptive_scalar(double v) { return Complex(v, 0); }
inline Complex adaptive_scalar(const Complex& v) { return v; }

template <class F, class T>
void gk15_apply(F&& f, double a, double b, T& kronrod, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    T fc = f(c);
    T resk = gk15_wk[7] * fc;
    T resg = gk15_wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = h * gk15_x[j];
        T sum = f(c - dx);
        sum += f(c + dx);
        resk += gk15_wk[j] * sum;
        if (j % 2 == 1) resg += gk15_wg[j / 2] * sum;
    }
    kronrod = h * resk;
    T diff = h * (resk - resg);
    err = adaptive_norm(diff);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (embedded 7-15 pair, global worst-first interval
/// heap) on [a,b] to absolute tolerance tol. The integrand may have a
/// logarithmic singularity at the interval ends. Works for double, complex
/// and Eigen::VectorXcd values. Returns the value and the accumulated error
/// estimate.
template <class F>
auto adaptive_integrate_with_error(F&& f, double a, double b, double tol,
                                   int max_subdivisions = 10000)
    -> std::pair<decltype(f(a)), double> {
    using T = decltype(f(a));
    struct Interval {
        double a, b, err;
        T value;
        bool operator<(const Interval& o) const { return err < o.err; }
    };
    if (a == b) return {f(a) * 0.0, 0.0};

    std::priority_queue<Interval> heap;
    Interval whole;
    whole.a = a;
    whole.b = b;
    detail::gk15_apply(f, a, b, whole.value, whole.err);
    double total_err = whole.err;
    T total = whole.value;
    heap.push(whole);

    // roundoff guard: deeply refined intervals whose split no longer improves
    // the estimate are frozen instead of being chased forever
    double frozen_err = 0.0;
    const double deep = 1e-5 * std::abs(b - a);

    int splits = 0;
    while (total_err + frozen_err > tol) {
        if (splits >= max_subdivisions || heap.empty())
            throw AdaptiveQuadratureError(
                "adaptive_integrate: tolerance not reachable (error bound " +
                    std::to_string(total_err + frozen_err) + ")",
                detail::adaptive_scalar(total), total_err + frozen_err);
        Interval worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            frozen_err += worst.err;
            total_err -= worst.err;
            continue;
        }
        Interval left, right;
        left.a = worst.a;
        left.b = mid;
        right.a = mid;
        right.b = worst.b;
        detail::gk15_apply(f, left.a, left.b, left.value, left.err);
        detail::gk15_apply(f, right.a, right.b, right.value, right.err);
        total += left.value + right.value - worst.value;
        ++splits;
        if (left.err + right.err >= 0.999 * worst.err && (worst.b - worst.a) < deep) {
            frozen_err += left.err + right.err;
            total_err -= worst.err;
            continue;
        }
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    return {total, total_err + frozen_err};
}

template <class F>
auto adaptive_integrate(F&& f, double a, double b, double tol,
                        int max_subdivisions = 10000) -> decltype(f(a)) {
    return adaptive_integrate_with_error(f, a, b, tol, max_subdivisions).first;
}

}  // namespace wwbie
