#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "wwbie/boundary_quadrature.hpp"
#include "wwbie/kernels.hpp"

namespace wwbie {

struct AssemblyOptions {
    double near_threshold = 1.0;  // distance / panel length triggering correction
    double quad_tol = 1e-10;      // absolute tolerance of the corrected integrals
};

/// Lagrange basis over the reference Gauss nodes, evaluated in barycentric
/// form. eval(u) returns all P basis values.
struct LagrangeBasis {
    std::vector<double> nodes;
    std::vector<double> bary;

    explicit LagrangeBasis(const ReferenceRule& rule) : nodes(rule.nodes) {
        const std::size_t P = nodes.size();
        bary.assign(P, 1.0);
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t q = 0; q < P; ++q)
                if (q != p) bary[p] /= (nodes[p] - nodes[q]);
    }

    Eigen::VectorXd eval(double u) const {
        const std::size_t P = nodes.size();
        Eigen::VectorXd ell(P);
        double denom = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            double d = u - nodes[p];
            if (std::abs(d) < 1e-14) {
                ell.setZero();
                ell[Eigen::Index(p)] = 1.0;
                return ell;
            }
            ell[Eigen::Index(p)] = bary[p] / d;
            denom += bary[p] / d;
        }
        return ell / denom;
    }
};

namespace detail {

inline double panel_distance(const Vec2& x, const BoundaryQuadrature& quad,
                             std::size_t panel) {
    const Panel& p = quad.panels[panel];
    double d = std::min((x - p.start).norm(), (x - p.end).norm());
    for (int q = 0; q < quad.order(); ++q)
        d = std::min(d, (x - quad.nodes[quad.index(panel, q)].x).norm());
    return d;
}

// collects the first failure inside an OpenMP region so it can be rethrown
// on the calling thread
class DeferredError {
public:
    bool armed() const {
        bool f;
#pragma omp atomic read
        f = flag_;
        return f;
    }
    void arm(const std::string& message) {
#pragma omp critical(wwbie_deferred_error)
        {
            if (!flag_) message_ = message;
        }
#pragma omp atomic write
        flag_ = true;
    }
    void rethrow() const {
        if (flag_) throw std::runtime_error(message_);
    }

private:
    bool flag_ = false;
    std::string message_;
};

}  // namespace detail

/// Corrected quadrature weights for one (target, panel) pair: the integrals
/// of kernel(target, .) against the panel's Lagrange basis, computed
/// adaptively. For a target lying on the panel (self_local >= 0) the
/// parameter interval is split at the target's preimage so each side is
/// smooth up to the endpoint singularity.
template <class KernelFn>
Eigen::VectorXcd corrected_weights(const KernelPoint& target, const Panel& panel,
                                   const ReferenceRule& rule, const LagrangeBasis& basis,
                                   const StretchingPath& path, double nu,
                                   KernelFn&& kernel, double tol, int self_local = -1) {
    const Eigen::Index P = Eigen::Index(rule.nodes.size());
    auto integrand = [&](double u) -> Eigen::VectorXcd {
        KernelPoint y = source_point(panel, u, path, nu);
        // evaluations that round onto the singular point contribute nothing
        // to the (integrable) integral; drop them instead of propagating inf
        Complex k;
        try {
            k = kernel(target, y) * panel.dchi(u).norm();
        } catch (const std::domain_error&) {
            return Eigen::VectorXcd::Zero(P);
        }
        if (!std::isfinite(k.real()) || !std::isfinite(k.imag()))
            return Eigen::VectorXcd::Zero(P);
        return k * basis.eval(u).cast<Complex>();
    };
    if (self_local >= 0) {
        const double us = rule.nodes[self_local];
        Eigen::VectorXcd left = adaptive_integrate(integrand, 0.0, us, 0.5 * tol);
        Eigen::VectorXcd right = adaptive_integrate(integrand, us, 1.0, 0.5 * tol);
        return left + right;
    }
    return adaptive_integrate(integrand, 0.0, 1.0, tol);
}

/// Corrected weights of the combined kernel K = DL + alpha tau' G on the
/// target's own panel. The bounded double-layer part and the log-singular
/// Robin part are integrated separately: chasing the log singularity with
/// the 0/0 double-layer expression in the integrand would otherwise drown
/// the estimates in rounding noise near the preimage of the target.
inline Eigen::VectorXcd nystrom_self_weights(const KernelPoint& target, const Panel& panel,
                                             const ReferenceRule& rule,
                                             const LagrangeBasis& basis,
                                             const StretchingPath& path, double nu,
                                             double tol, int self_local) {
    Eigen::VectorXcd w = corrected_weights(
        target, panel, rule, basis, path, nu,
        [](const KernelPoint& x, const KernelPoint& y) { return double_layer_kernel(x, y); },
        tol, self_local);
    const double alpha = panel.tag == PartTag::free_surface ? nu : 0.0;
    if (alpha != 0.0)
        w += alpha * corrected_weights(
                         target, panel, rule, basis, path, nu,
                         [](const KernelPoint& x, const KernelPoint& y) {
                             return weighted_single_layer_kernel(x, y);
                         },
                         tol, self_local);
    return w;
}

/// Dense Nystrom discretization of a boundary integral operator with
/// Lagrange-interpolant corrections for self and near interactions. Columns
/// belonging to panels for which `support` is false are left zero. The
/// `corrected` policy supplies the corrected weights of one (target, panel)
/// pair; self_local is the target's local node index or -1 off-panel.
template <class KernelFn, class SupportFn, class CorrectedFn>
Eigen::MatrixXcd assemble_operator(const BoundaryQuadrature& quad,
                                   const StretchingPath& path, double nu,
                                   KernelFn&& kernel, SupportFn&& support,
                                   CorrectedFn&& corrected, const AssemblyOptions& opt) {
    const std::size_t n = quad.size();
    const int P = quad.order();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);

    std::vector<KernelPoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = kernel_point(quad.nodes[i], nu);

    detail::DeferredError deferred;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t ii = 0; ii < std::int64_t(n); ++ii) {
        if (deferred.armed()) continue;
        const std::size_t i = std::size_t(ii);
        for (std::size_t pan = 0; pan < quad.panels.size(); ++pan) {
            if (!support(quad.panels[pan].tag)) continue;
            const bool self = quad.panel_of(i) == pan;
            const double dist = detail::panel_distance(pts[i].x, quad, pan);
            if (!self && dist > opt.near_threshold * quad.panels[pan].length) {
                for (int p = 0; p < P; ++p) {
                    const std::size_t j = quad.index(pan, p);
                    A(ii, Eigen::Index(j)) = kernel(pts[i], pts[j]) * quad.nodes[j].w;
                }
            } else {
                try {
                    Eigen::VectorXcd w = corrected(pts[i], pan, self ? quad.local_of(i) : -1);
                    for (int p = 0; p < P; ++p)
                        A(ii, Eigen::Index(quad.index(pan, p))) = w[p];
                } catch (const std::exception& e) {
                    deferred.arm("assemble: target " + std::to_string(i) + ", panel " +
                                 std::to_string(pan) + ": " + e.what());
                }
            }
        }
    }
    deferred.rethrow();
    return A;
}

/// Convenience overload: corrected weights use the same kernel as the far
/// field (adequate whenever the kernel has a single singularity type).
template <class KernelFn, class SupportFn>
Eigen::MatrixXcd assemble_operator(const BoundaryQuadrature& quad,
                                   const StretchingPath& path, double nu,
                                   KernelFn&& kernel, SupportFn&& support,
                                   const AssemblyOptions& opt = {}) {
    LagrangeBasis basis(quad.rule);
    auto corrected = [&](const KernelPoint& target, std::size_t pan, int self_local) {
        return corrected_weights(target, quad.panels[pan], quad.rule, basis, path, nu,
                                 kernel, opt.quad_tol, self_local);
    };
    return assemble_operator(quad, path, nu, kernel, support, corrected, opt);
}

/// Full Nystrom matrix of the truncated BIE: -I/2 plus the combined-kernel
/// operator (double layer plus the Robin single-layer term).
inline Eigen::MatrixXcd assemble_matrix(const BoundaryQuadrature& quad,
                                        const StretchingPath& path, double nu,
                                        const AssemblyOptions& opt = {}) {
    LagrangeBasis basis(quad.rule);
    auto kernel = [](const KernelPoint& x, const KernelPoint& y) { return nystrom_kernel(x, y); };
    auto corrected = [&](const KernelPoint& target, std::size_t pan, int self_local) {
        if (self_local >= 0)
            return nystrom_self_weights(target, quad.panels[pan], quad.rule, basis, path, nu,
                                        opt.quad_tol, self_local);
        return corrected_weights(target, quad.panels[pan], quad.rule, basis, path, nu, kernel,
                                 opt.quad_tol, -1);
    };
    Eigen::MatrixXcd A = assemble_operator(quad, path, nu, kernel,
                                           [](PartTag) { return true; }, corrected, opt);
    A.diagonal().array() -= 0.5;
    return A;
}

/// Boundary data evaluated at a quadrature node. Implementations must return
/// the analytic continuation (data at the stretched point) whenever the
/// support reaches into the PML.
using BoundaryData = std::function<Complex(const BoundaryQuadrature::Node&)>;

/// Right-hand side S[tau' f] at the quadrature nodes, with the same
/// near/self corrections as the matrix. Row accumulation, no operator stored.
inline Eigen::VectorXcd assemble_rhs(const BoundaryQuadrature& quad,
                                     const StretchingPath& path, double nu,
                                     const BoundaryData& f, const AssemblyOptions& opt = {}) {
    const std::size_t n = quad.size();
    const int P = quad.order();
    LagrangeBasis basis(quad.rule);

    Eigen::VectorXcd fv(n);
    for (std::size_t j = 0; j < n; ++j) fv[Eigen::Index(j)] = f(quad.nodes[j]);

    std::vector<KernelPoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = kernel_point(quad.nodes[i], nu);

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    detail::DeferredError deferred;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t ii = 0; ii < std::int64_t(n); ++ii) {
        if (deferred.armed()) continue;
        const std::size_t i = std::size_t(ii);
        Complex acc(0.0, 0.0);
        for (std::size_t pan = 0; pan < quad.panels.size(); ++pan) {
            bool active = false;
            for (int p = 0; p < P; ++p)
                if (fv[Eigen::Index(quad.index(pan, p))] != Complex(0.0, 0.0)) {
                    active = true;
                    break;
                }
            if (!active) continue;
            const bool self = quad.panel_of(i) == pan;
            const double dist = detail::panel_distance(pts[i].x, quad, pan);
            if (!self && dist > opt.near_threshold * quad.panels[pan].length) {
                for (int p = 0; p < P; ++p) {
                    const std::size_t j = quad.index(pan, p);
                    acc += weighted_single_layer_kernel(pts[i], pts[j]) * quad.nodes[j].w *
                           fv[Eigen::Index(j)];
                }
            } else {
                try {
                    Eigen::VectorXcd w = corrected_weights(
                        pts[i], quad.panels[pan], quad.rule, basis, path, nu,
                        [](const KernelPoint& x, const KernelPoint& y) {
                            return weighted_single_layer_kernel(x, y);
                        },
                        opt.quad_tol, self ? quad.local_of(i) : -1);
                    for (int p = 0; p < P; ++p)
                        acc += w[p] * fv[Eigen::Index(quad.index(pan, p))];
                } catch (const std::exception& e) {
                    deferred.arm("assemble_rhs: target " + std::to_string(i) + ", panel " +
                                 std::to_string(pan) + ": " + e.what());
                }
            }
        }
        rhs[ii] = acc;
    }
    deferred.rethrow();
    return rhs;
}

/// Raw dump of a complex matrix: row-major entries, each as two little-endian
/// 64-bit floats (re, im).
inline void write_matrix_binary(const Eigen::MatrixXcd& A, const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("write_matrix_binary: cannot open " + file);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            double re = A(i, j).real(), im = A(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof(double));
            out.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
}

}  // namespace wwbie
