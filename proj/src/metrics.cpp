#include "tbe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tbe {

void MetricsReport::validate() const {
    const double tol = 1e-8;
    const double smax = 2 * std::sqrt(2.0);
    if (concurrence < -tol || concurrence > 1 + tol) throw std::invalid_argument("metrics invariant violated: concurrence range");
    if (fidelity_phi_plus < -tol || fidelity_phi_plus > 1 + tol) throw std::invalid_argument("metrics invariant violated: fidelity range");
    if (chsh_s < -tol || chsh_s > smax + tol) throw std::invalid_argument("metrics invariant violated: chsh range");
    if (purity < 0.25 - tol || purity > 1 + tol) throw std::invalid_argument("metrics invariant violated: purity range");
}

// sigma_y x sigma_y in the fixed basis: antidiagonal (-1, 1, 1, -1)
static Mat4 sy_sy() {
    Mat4 m;
    m(0, 3) = -1;
    m(1, 2) = 1;
    m(2, 1) = 1;
    m(3, 0) = -1;
    return m;
}

double concurrence(const DensityMatrix& rho) {
    Mat4 yy = sy_sy();
    Mat4 rho_tilde = yy * conjugate(rho.m) * yy;
    // the spectrum of rho*rho_tilde equals that of the Hermitian PSD matrix
    // sqrt(rho)*rho_tilde*sqrt(rho), which the Jacobi solver handles to
    // machine precision even for the clustered near-zero eigenvalues of
    // near-pure states
    Mat4 root = sqrt_psd(rho.m);
    auto lam = eig_hermitian(root * rho_tilde * root, 1e-6);
    for (double& l : lam) {
        if (l < -1e-6) throw std::invalid_argument("concurrence: invalid state (negative spin-flip eigenvalue)");
        l = std::max(0.0, l);
    }
    double c = std::sqrt(lam[0]) - std::sqrt(lam[1]) - std::sqrt(lam[2]) - std::sqrt(lam[3]);
    return std::max(0.0, c);
}

std::array<std::array<double, 3>, 3> correlation_matrix(const DensityMatrix& rho) {
    // Pauli matrices
    Cplx i1(0, 1);
    std::array<std::array<Cplx, 4>, 3> sigma = {{
        {Cplx(0), Cplx(1), Cplx(1), Cplx(0)},    // x, row-major 2x2
        {Cplx(0), -i1, i1, Cplx(0)},             // y
        {Cplx(1), Cplx(0), Cplx(0), Cplx(-1)},   // z
    }};
    std::array<std::array<double, 3>, 3> t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Mat4 op;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d)
                            op(a * 2 + c, b * 2 + d) =
                                sigma[size_t(i)][size_t(a * 2 + b)] * sigma[size_t(j)][size_t(c * 2 + d)];
            t[size_t(i)][size_t(j)] = trace(rho.m * op).real();
        }
    return t;
}

double chsh_s(const DensityMatrix& rho) {
    auto t = correlation_matrix(rho);
    // equatorial restriction: both analyzers in the xy plane; the maximum is
    // 2 sqrt(s1^2 + s2^2) = 2 * Frobenius norm of the 2x2 xy block
    double f2 = t[0][0] * t[0][0] + t[0][1] * t[0][1] + t[1][0] * t[1][0] + t[1][1] * t[1][1];
    return 2 * std::sqrt(f2);
}

double chsh_horodecki(const DensityMatrix& rho) {
    auto t = correlation_matrix(rho);
    // eigenvalues of T^T T (3x3 symmetric PSD) via the closed-form cubic
    double m[3][3]{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) m[i][j] += t[size_t(k)][size_t(i)] * t[size_t(k)][size_t(j)];

    double p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    double q = (m[0][0] + m[1][1] + m[2][2]) / 3;
    double p2 = 0;
    for (int i = 0; i < 3; ++i) p2 += (m[i][i] - q) * (m[i][i] - q);
    p2 += 2 * p1;
    double lam0, lam1, lam2;
    if (p2 < 1e-30) {
        lam0 = lam1 = lam2 = q;
    } else {
        double p = std::sqrt(p2 / 6);
        double b[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b[i][j] = (m[i][j] - (i == j ? q : 0)) / p;
        double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                      b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                      b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        double r = std::clamp(detb / 2, -1.0, 1.0);
        double phi = std::acos(r) / 3;
        lam0 = q + 2 * p * std::cos(phi);
        lam2 = q + 2 * p * std::cos(phi + 2 * M_PI / 3);
        lam1 = 3 * q - lam0 - lam2;
    }
    std::array<double, 3> lam{lam0, lam1, lam2};
    std::sort(lam.begin(), lam.end(), std::greater<>());
    return 2 * std::sqrt(std::max(0.0, lam[0] + lam[1]));
}

double purity(const DensityMatrix& rho) { return trace(rho.m * rho.m).real(); }

MetricsReport compute_metrics(const DensityMatrix& rho) {
    MetricsReport r;
    r.concurrence = concurrence(rho);
    r.fidelity_phi_plus = fidelity_pure(rho, ket_phi_plus());
    r.chsh_s = chsh_s(rho);
    r.purity = purity(rho);
    r.validate();
    return r;
}

}  // namespace tbe
