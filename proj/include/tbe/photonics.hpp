#pragma once
// Optical mode-overlap / coupling-loss computations plus scalar loss and rate
// budgets and spectra-derived figures (PER, filter suppression).

#include <optional>
#include <string>
#include <vector>

#include "tbe/qcore.hpp"

namespace tbe {

struct ModeField {
    int nx = 0, ny = 0;
    double dx = 0, dy = 0;        // um
    std::vector<Cplx> amps;       // row-major over x index major
    Cplx& at(int ix, int iy) { return amps[size_t(ix) * size_t(ny) + size_t(iy)]; }
    Cplx at(int ix, int iy) const { return amps[size_t(ix) * size_t(ny) + size_t(iy)]; }
    // grid centered on the mode: x_i = (i - (nx-1)/2) dx
    double x(int ix) const { return (ix - 0.5 * (nx - 1)) * dx; }
    double y(int iy) const { return (iy - 0.5 * (ny - 1)) * dy; }
    double power() const;         // trapezoid integral of |E|^2
};

struct ModeModel {
    enum class Kind { Gaussian, TwoLobe } kind = Kind::Gaussian;
    // Gaussian: intensity 1/e^2 diameter
    double d_1e2 = 3.9;                    // um
    // TwoLobe: two vertically displaced elliptical Gaussian lobes
    double lobe_wx = 0, lobe_wy = 0;       // 1/e^2 field radii, um
    double separation = 0;                  // center-to-center, um
    double weight1 = 1, weight2 = 1;
    std::string polarization = "TE";
    std::optional<double> n_eff;

    static ModeModel gaussian(double d_1e2_um);
    static ModeModel two_lobe(double wx, double wy, double separation,
                              double w1 = 1, double w2 = 1);
};

// Rasterize a model; extent defaults to >= 3x the mode 1/e^2 diameter.
ModeField synthesize(const ModeModel& m, double step_um = 0.05, double extent_um = 0);

struct OverlapResult {
    double eta = 0;       // |integral E_a* E_b|^2 / (P_a P_b), in [0,1]
    double loss_db = 0;   // -10 log10(eta)
    bool disjoint_warning = false;
};

// Bilinear resampling of b shifted by (dx, dy) onto a's grid, trapezoidal
// quadrature.
OverlapResult overlap(const ModeField& a, const ModeField& b, double dx = 0, double dy = 0);

// closed forms used by calibration and tests (1/e^2 field radii, um)
double gaussian_overlap_eta(double wa, double wb, double delta);
double loss_db_from_eta(double eta);

struct ScanResult {
    int nx = 0, ny = 0;
    double x0 = 0, y0 = 0, step = 0;
    std::vector<double> loss_db;          // row-major, x major
    double min_loss_db = 0;
    double min_x = 0, min_y = 0;          // refined continuous optimum
    double grid_min_x = 0, grid_min_y = 0;
    // half-widths of the +1 dB / +3 dB contours along each axis through the optimum
    double tol1_x = 0, tol1_y = 0, tol3_x = 0, tol3_y = 0;
};

ScanResult scan_displacement(const ModeField& a, const ModeField& b,
                             double x_half_range, double y_half_range, double step,
                             bool parallel = true);

// Solve TwoLobe parameters so that the on-axis overlap against a Gaussian of
// diameter gauss_d1e2 equals target_eta and the +1 dB displacement tolerances
// match (tol1_x, tol1_y). Deterministic Newton solve on closed forms.
ModeModel calibrate_two_lobe(double target_eta = 0.55, double tol1_x = 1.1,
                             double tol1_y = 0.7, double gauss_d1e2 = 3.9);

struct Spectrum {
    std::vector<double> lambda_nm;
    std::vector<double> value_db;
};

struct SpectrumSummary {
    Spectrum curve;
    double band_min_db = 0;      // minimum over the common band
    double band_max_db = 0;
    double max_at_nm = 0;        // wavelength of the maximum
};

// pointwise favored - orthogonal (dB) on the common wavelength band
SpectrumSummary per_from_spectra(const Spectrum& favored, const Spectrum& orthogonal);
// pointwise reference - filtered (dB); band summary over [band_lo, band_hi] if given
SpectrumSummary suppression_from_spectra(const Spectrum& reference, const Spectrum& filtered,
                                         double band_lo_nm = 0, double band_hi_nm = 0);

struct LossBudget {
    struct Entry {
        std::string name;
        double loss_db;
    };
    std::vector<Entry> entries;
    double total_db() const;
};

struct RateBudget {
    double corrected_rate = 0;   // measured / (T_A T_B)
    double predicted_rate = 0;   // source x product of efficiencies
};

// corrected coincidence rate from measured rate and arm transmissions;
// predicted detected rate from a source rate and per-photon efficiencies.
RateBudget rate_budget(double measured_rate, double t_alice, double t_bob,
                       double source_rate = 0, const std::vector<double>& efficiencies = {});

}  // namespace tbe
