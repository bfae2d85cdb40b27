#pragma once
// Density-matrix reconstruction from projection records: linear inversion,
// maximum-likelihood estimation, Monte Carlo uncertainty propagation.

#include <array>
#include <cstdint>
#include <vector>

#include "tbe/coincidence.hpp"
#include "tbe/metrics.hpp"
#include "tbe/qcore.hpp"

namespace tbe {

struct LinearResult {
    Mat4 rho;            // Hermitian-symmetrized least-squares solution; no PSD guarantee
    int rank = 0;        // of the projector system (16 = informationally complete)
    bool rank_warning = false;
    double scale = 0;    // fitted overall N
};

// Least-squares solve of n_nu = N w_nu tr(rho P_nu); minimum-norm on
// rank-deficient systems (rank_warning set).
LinearResult linear_reconstruct(const ProjectionRecords& records);

struct MleOptions {
    int max_iterations = 4000;    // BFGS iterations per start
    int starts = 4;               // identity, linear-seeded, rest random
    uint64_t seed = 12345;        // for the random starts
    bool poisson_nll = false;     // exact Poisson log-likelihood instead of Gaussian cost
    double epsilon = 0.5;         // count floor in the Gaussian cost denominator; records
                                  // with zero observed counts use the exact pred/2 limit
    bool use_start_hint = false;  // seed from start_hint (Monte Carlo resamples)
    std::array<double, 16> start_hint{};
};

struct OptimizerReport {
    int iterations = 0;        // of the winning start
    double final_cost = 0;     // mle_cost of the returned t_params on the input records
    bool converged = false;
};

struct MetricInterval {
    double lower = 0, upper = 0;
};

struct TomographyResult {
    DensityMatrix rho_mle = DensityMatrix::maximally_mixed();
    Mat4 rho_linear;
    bool linear_rank_warning = false;
    MetricsReport metrics;
    MetricInterval concurrence_iv, fidelity_iv, chsh_iv, purity_iv;
    int mc_samples = 0;
    uint64_t seed = 0;
    OptimizerReport optimizer;
    std::array<double, 16> t_params{};   // optimum, rho = T^dagger T / tr
    // raw Monte Carlo samples (filled when monte_carlo(..., keep_samples))
    std::vector<double> mc_concurrence, mc_fidelity, mc_chsh, mc_purity;
};

// rho(t) = T^dagger T / tr(T^dagger T); T lower triangular, 4 real diagonal
// entries t[0..3], off-diagonals (r,c) r>c as t[2k]+i t[2k+1].
Mat4 params_to_rho(const std::array<double, 16>& t);
Mat4 params_to_unnormalized(const std::array<double, 16>& t);
// reverse-Cholesky factorization of a PSD matrix into the 16 parameters
std::array<double, 16> rho_to_params(const Mat4& psd, double scale = 1.0);

// Gaussian-approximation cost (or Poisson NLL per opts) over unnormalized
// M = T^dagger T: sum_nu (w tr(M P) - n)^2 / (2 max(w tr(M P), eps)).
double mle_cost(const std::array<double, 16>& t, const ProjectionRecords& records,
                const MleOptions& opts);

// Multi-start BFGS with central-difference gradients. Records are canonically
// sorted internally, so record order never affects the result.
TomographyResult mle_reconstruct(const ProjectionRecords& records, const MleOptions& opts = {});

// Poisson-resamples the measured counts n_samples times, re-runs the MLE per
// sample (seeded from the base optimum) and fills central 68% percentile
// intervals for all metrics. Deterministic per (seed, sample index); the
// parallel path is bitwise identical to serial.
TomographyResult monte_carlo(const ProjectionRecords& records, int n_samples, uint64_t seed,
                             const MleOptions& opts = {}, bool parallel = true,
                             bool keep_samples = false);

}  // namespace tbe
