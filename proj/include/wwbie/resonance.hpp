#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wwbie/assembly.hpp"

extern "C" {
void zggev_(const char* jobvl, const char* jobvr, const int* n, std::complex<double>* a,
            const int* lda, std::complex<double>* b, const int* ldb,
            std::complex<double>* alpha, std::complex<double>* beta,
            std::complex<double>* vl, const int* ldvl, std::complex<double>* vr,
            const int* ldvr, std::complex<double>* work, const int* lwork, double* rwork,
            int* info);
}

namespace wwbie {

/// Matrices of the generalized eigenvalue problem A phi = nu B phi with
/// A = -I/2 + D and B = -S_{free surface}[tau' . ]. Columns of B away from
/// the free surface are identically zero.
inline std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> assemble_eigen_pair(
    const BoundaryQuadrature& quad, const StretchingPath& path,
    const AssemblyOptions& opt = {}) {
    Eigen::MatrixXcd A = assemble_matrix(quad, path, 0.0, opt);
    Eigen::MatrixXcd B = assemble_operator(
        quad, path, 0.0,
        [](const KernelPoint& x, const KernelPoint& y) {
            return -weighted_single_layer_kernel(x, y);
        },
        [](PartTag tag) { return tag == PartTag::free_surface; }, opt);
    return {std::move(A), std::move(B)};
}

struct ComplexRegion {
    double re_min = -0.5, re_max = 20.5;
    double im_min = -20.5, im_max = 0.5;
    bool contains(Complex z) const {
        return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min &&
               z.imag() <= im_max;
    }
};

struct SpectrumResult {
    std::vector<Complex> eigenvalues;
    Eigen::MatrixXcd eigenvectors;   // columns aligned with eigenvalues
    std::vector<double> residuals;   // ||A v - nu B v|| / ||v|| per pair
    std::vector<char> pml_branch;    // set by classify_pml_branch
};

/// Dense QZ solve of the generalized problem, keeping the eigenvalues that
/// fall inside `region` (finite pairs only). Eigenvectors are normalized to
/// unit max-norm on the boundary nodes.
inline SpectrumResult solve_generalized_eig(const Eigen::MatrixXcd& A,
                                            const Eigen::MatrixXcd& B,
                                            const ComplexRegion& region = {}) {
    const int n = int(A.rows());
    if (A.cols() != n || B.rows() != n || B.cols() != n)
        throw std::invalid_argument("solve_generalized_eig: dimension mismatch");
    Eigen::MatrixXcd a = A, b = B, vr(n, n);
    Eigen::VectorXcd alpha(n), beta(n);
    std::vector<double> rwork(std::size_t(8 * n));
    int info = 0, lwork = -1, one = 1;
    Complex wquery;
    zggev_("N", "V", &n, a.data(), &n, b.data(), &n, alpha.data(), beta.data(), nullptr,
           &one, vr.data(), &n, &wquery, &lwork, rwork.data(), &info);
    lwork = int(wquery.real()) + 1;
    std::vector<Complex> work(std::size_t(lwork));
    zggev_("N", "V", &n, a.data(), &n, b.data(), &n, alpha.data(), beta.data(), nullptr,
           &one, vr.data(), &n, work.data(), &lwork, rwork.data(), &info);
    if (info != 0)
        throw std::runtime_error("solve_generalized_eig: zggev failed, info = " +
                                 std::to_string(info));

    SpectrumResult out;
    std::vector<int> keep;
    for (int j = 0; j < n; ++j) {
        if (std::abs(beta[j]) < 1e-12 * std::max(1.0, std::abs(alpha[j]))) continue;
        Complex nu = alpha[j] / beta[j];
        if (region.contains(nu)) keep.push_back(j);
    }
    std::sort(keep.begin(), keep.end(), [&](int i, int j) {
        Complex a1 = alpha[i] / beta[i], a2 = alpha[j] / beta[j];
        return a1.real() != a2.real() ? a1.real() < a2.real() : a1.imag() < a2.imag();
    });
    out.eigenvectors.resize(n, Eigen::Index(keep.size()));
    for (std::size_t q = 0; q < keep.size(); ++q) {
        int j = keep[q];
        Complex nu = alpha[j] / beta[j];
        Eigen::VectorXcd v = vr.col(j);
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        v /= v[imax];  // unit max-norm, deterministic phase
        out.eigenvalues.push_back(nu);
        out.eigenvectors.col(Eigen::Index(q)) = v;
        out.residuals.push_back((A * v - nu * (B * v)).norm() / v.norm());
    }
    out.pml_branch.assign(out.eigenvalues.size(), 0);
    return out;
}

/// Flags eigenvalues that have no counterpart (within relative distance
/// rel_tol) in a spectrum computed with perturbed PML parameters. Stable
/// eigenvalues are physical; the unstable ones belong to the complex-scaled
/// continuous spectrum.
inline std::vector<char> classify_pml_branch(const std::vector<Complex>& spectrum,
                                             const std::vector<Complex>& perturbed,
                                             double rel_tol = 1e-2) {
    std::vector<char> flags(spectrum.size(), 1);
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Complex& z : perturbed)
            best = std::min(best, std::abs(spectrum[i] - z));
        double scale = std::max(std::abs(spectrum[i]), 1e-30);
        flags[i] = best / scale > rel_tol ? 1 : 0;
    }
    return flags;
}

}  // namespace wwbie
