#pragma once
// Entanglement / nonlocality figures of merit for two-qubit states.

#include "tbe/qcore.hpp"

namespace tbe {

struct MetricsReport {
    double concurrence = 0;
    double fidelity_phi_plus = 0;
    double chsh_s = 0;
    double purity = 0;
    void validate() const;  // range checks, throws on violation
};

// Wootters concurrence: C = max(0, sqrt(l1)-sqrt(l2)-sqrt(l3)-sqrt(l4)) with
// l_i the descending eigenvalues of rho*(sy x sy)*conj(rho)*(sy x sy).
double concurrence(const DensityMatrix& rho);

// Maximal CHSH expectation for phase-type (equatorial) analyzers:
// S = 2*sqrt(s1^2 + s2^2) with s_i the singular values of the xy block of the
// correlation matrix T_ij = tr(rho sigma_i x sigma_j).
double chsh_s(const DensityMatrix& rho);

// Full Horodecki criterion S = 2*sqrt(m1+m2), m_i the two largest eigenvalues
// of T^T T; upper-bounds chsh_s and is invariant under all local unitaries.
double chsh_horodecki(const DensityMatrix& rho);

double purity(const DensityMatrix& rho);

// correlation matrix T_ij = tr(rho sigma_i x sigma_j), i,j in {x,y,z}
std::array<std::array<double, 3>, 3> correlation_matrix(const DensityMatrix& rho);

MetricsReport compute_metrics(const DensityMatrix& rho);

}  // namespace tbe
