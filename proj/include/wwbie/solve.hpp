#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "wwbie/assembly.hpp"

namespace wwbie {

struct DensitySolution {
    Eigen::VectorXcd phi;
    double residual = 0.0;  // achieved relative residual
    int iterations = 0;
    bool direct_fallback = false;
};

/// Unrestarted GMRES (modified Gram-Schmidt Arnoldi, Givens rotations) with
/// zero initial guess, to relative residual tol. Falls back to a dense LU
/// solve if the iteration count reaches the matrix dimension.
inline DensitySolution solve_system(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b,
                                    double tol = 1e-10) {
    using Eigen::Index;
    const Index n = A.rows();
    if (A.cols() != n || b.size() != n)
        throw std::invalid_argument("solve_system: dimension mismatch");
    DensitySolution sol;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        sol.phi = Eigen::VectorXcd::Zero(n);
        return sol;
    }

    const Index maxit = n;
    Index cap = std::min<Index>(n + 1, 129);
    Eigen::MatrixXcd V(n, cap);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(maxit + 1, maxit);
    Eigen::VectorXcd cs(maxit), sn(maxit), g = Eigen::VectorXcd::Zero(maxit + 1);
    V.col(0) = b / bnorm;
    g[0] = bnorm;

    Index j = 0;
    double res = 1.0;
    for (; j < maxit; ++j) {
        if (j + 2 > cap) {
            cap = std::min<Index>(n + 1, 2 * cap);
            V.conservativeResize(Eigen::NoChange, cap);
        }
        Eigen::VectorXcd w = A * V.col(j);
        for (Index i = 0; i <= j; ++i) {
            H(i, j) = V.col(i).dot(w);  // conjugated dot
            w -= H(i, j) * V.col(i);
        }
        H(j + 1, j) = w.norm();
        const bool breakdown = std::abs(H(j + 1, j)) < 1e-300;
        if (!breakdown) V.col(j + 1) = w / H(j + 1, j);

        for (Index i = 0; i < j; ++i) {
            Complex t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
            H(i + 1, j) = -std::conj(sn[i]) * H(i, j) + std::conj(cs[i]) * H(i + 1, j);
            H(i, j) = t;
        }
        double denom = std::sqrt(std::norm(H(j, j)) + std::norm(H(j + 1, j)));
        if (denom == 0.0) denom = 1.0;
        cs[j] = std::conj(H(j, j)) / denom;
        sn[j] = std::conj(H(j + 1, j)) / denom;
        H(j, j) = cs[j] * H(j, j) + sn[j] * H(j + 1, j);
        H(j + 1, j) = 0.0;
        g[j + 1] = -std::conj(sn[j]) * g[j];
        g[j] = cs[j] * g[j];
        res = std::abs(g[j + 1]) / bnorm;
        if (res <= tol || breakdown) {
            ++j;
            break;
        }
    }

    if (res <= tol || j >= 1) {
        // back substitution on the j x j triangular system
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(j);
        for (Index i = j - 1; i >= 0; --i) {
            Complex s = g[i];
            for (Index l = i + 1; l < j; ++l) s -= H(i, l) * y[l];
            y[i] = s / H(i, i);
        }
        sol.phi = V.leftCols(j) * y;
        sol.iterations = int(j);
        sol.residual = (A * sol.phi - b).norm() / bnorm;
        if (sol.residual <= tol) return sol;
    }

    // stagnation or iteration budget exhausted
    sol.phi = Eigen::PartialPivLU<Eigen::MatrixXcd>(A).solve(b);
    sol.direct_fallback = true;
    sol.iterations = int(j);
    sol.residual = (A * sol.phi - b).norm() / bnorm;
    if (!(sol.residual < 1e-6))
        throw std::runtime_error("solve_system: direct fallback residual " +
                                 std::to_string(sol.residual));
    return sol;
}

/// Representation-formula field evaluation at volume targets:
/// phi(x) = sum_j [K(x,y_j) phi_j - tau'(y_j) G(x,y_j) f_j] w_j with
/// Lagrange-corrected panel integrals when a target sits within
/// near_threshold panel lengths of the boundary.
inline std::vector<Complex> evaluate_field(const BoundaryQuadrature& quad,
                                           const StretchingPath& path, double nu,
                                           const Eigen::VectorXcd& phi,
                                           const Eigen::VectorXcd& f,
                                           const std::vector<Vec2>& targets,
                                           const AssemblyOptions& opt = {}) {
    const std::size_t n = quad.size();
    if (std::size_t(phi.size()) != n || std::size_t(f.size()) != n)
        throw std::invalid_argument("evaluate_field: density/data size mismatch");
    const int P = quad.order();
    LagrangeBasis basis(quad.rule);

    std::vector<KernelPoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = kernel_point(quad.nodes[i], nu);

    std::vector<Complex> out(targets.size());
    detail::DeferredError deferred;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t ti = 0; ti < std::int64_t(targets.size()); ++ti) {
        if (deferred.armed()) continue;
        KernelPoint x = kernel_point(targets[std::size_t(ti)], path);
        Complex acc(0.0, 0.0);
        try {
            for (std::size_t pan = 0; pan < quad.panels.size(); ++pan) {
                const double dist = detail::panel_distance(x.x, quad, pan);
                if (dist < 1e-12)
                    throw std::domain_error("target on the boundary");
                if (dist > opt.near_threshold * quad.panels[pan].length) {
                    for (int p = 0; p < P; ++p) {
                        const std::size_t j = quad.index(pan, p);
                        const double w = quad.nodes[j].w;
                        acc += nystrom_kernel(x, pts[j]) * w * phi[Eigen::Index(j)];
                        acc -= weighted_single_layer_kernel(x, pts[j]) * w * f[Eigen::Index(j)];
                    }
                } else {
                    Eigen::VectorXcd wk = corrected_weights(
                        x, quad.panels[pan], quad.rule, basis, path, nu,
                        [](const KernelPoint& a, const KernelPoint& b) {
                            return nystrom_kernel(a, b);
                        },
                        opt.quad_tol);
                    Eigen::VectorXcd ws = corrected_weights(
                        x, quad.panels[pan], quad.rule, basis, path, nu,
                        [](const KernelPoint& a, const KernelPoint& b) {
                            return weighted_single_layer_kernel(a, b);
                        },
                        opt.quad_tol);
                    for (int p = 0; p < P; ++p) {
                        const std::size_t j = quad.index(pan, p);
                        acc += wk[p] * phi[Eigen::Index(j)] - ws[p] * f[Eigen::Index(j)];
                    }
                }
            }
        } catch (const std::exception& e) {
            deferred.arm("evaluate_field: target " + std::to_string(ti) + ": " + e.what());
        }
        out[std::size_t(ti)] = acc;
    }
    deferred.rethrow();
    return out;
}

/// Max-norm error over aligned value lists.
inline double error_metric(const std::vector<Complex>& values,
                           const std::vector<Complex>& reference) {
    if (values.size() != reference.size())
        throw std::invalid_argument("error_metric: length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        e = std::max(e, std::abs(values[i] - reference[i]));
    return e;
}

/// Indices of the sweep entries used for rate fitting: points before the
/// decay stalls (successive errors differing by less than 10%) and, once a
/// plateau exists, above 10x the plateau floor.
inline std::vector<std::size_t> pre_plateau_indices(const std::vector<double>& E) {
    std::size_t plateau = E.size();
    for (std::size_t i = 0; i + 1 < E.size(); ++i)
        if (E[i + 1] > 0.9 * E[i]) {
            plateau = i + 1;
            break;
        }
    std::vector<std::size_t> idx;
    const bool has_plateau = plateau < E.size();
    const double floor = *std::min_element(E.begin(), E.end());
    for (std::size_t i = 0; i < plateau; ++i) {
        if (has_plateau && E[i] < 10.0 * floor) continue;
        idx.push_back(i);
    }
    if (idx.empty()) idx.push_back(0);
    return idx;
}

namespace detail {

inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double windowed_rate(const std::vector<double>& x, const std::vector<double>& E,
                            int window, bool log_x) {
    if (x.size() != E.size() || E.size() < 2)
        throw std::invalid_argument("rate fit: need at least two points");
    auto idx = pre_plateau_indices(E);
    if (idx.size() < 2) idx.assign({0, 1});
    std::size_t first = idx.size() > std::size_t(window) ? idx.size() - window : 0;
    std::vector<double> xs, ys;
    for (std::size_t q = first; q < idx.size(); ++q) {
        xs.push_back(log_x ? std::log(x[idx[q]]) : x[idx[q]]);
        ys.push_back(std::log(E[idx[q]]));
    }
    return lsq_slope(xs, ys);
}

}  // namespace detail

/// Exponential decay rate r of E ~ C exp(-r x), least squares over the last
/// `window` pre-plateau points.
inline double fit_exponential_rate(const std::vector<double>& x,
                                   const std::vector<double>& E, int window = 3) {
    return -detail::windowed_rate(x, E, window, false);
}

/// Algebraic order p of E ~ C h^p, least squares of log E against log h.
inline double fit_algebraic_order(const std::vector<double>& h,
                                  const std::vector<double>& E, int window = 3) {
    return detail::windowed_rate(h, E, window, true);
}

}  // namespace wwbie
