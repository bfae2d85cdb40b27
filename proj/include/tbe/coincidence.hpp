#pragma once
// Triple-coincidence histogramming, antidiagonal peak extraction and
// projection-record assembly.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "tbe/qcore.hpp"
#include "tbe/simulator.hpp"

namespace tbe {

struct CoincidenceHistogram2D {
    double bin_width = 200e-12;   // s
    double origin = 0;            // s, offset of bin (0,0) lower edge
    int nx = 0, ny = 0;           // tA, tB axes
    std::vector<int64_t> counts;  // row-major, tA major
    double integration_time = 0;  // s

    int64_t& at(int ix, int iy) { return counts[size_t(ix) * size_t(ny) + size_t(iy)]; }
    int64_t at(int ix, int iy) const { return counts[size_t(ix) * size_t(ny) + size_t(iy)]; }
    int64_t total() const;
};

// For each trigger, the first Alice and first Bob events in
// [t - window/2, t + window] form a triple; offsets are binned at bin_width
// over that same span. Multiple triggers never consume events (an event may
// serve a later trigger as well). Throws on per-channel time disorder.
CoincidenceHistogram2D build_histogram(const std::vector<TimeTagEvent>& events,
                                       double bin_width, double window,
                                       double integration_time = 0);

// Parallel variant sharding the trigger list across threads; results are
// bitwise identical to build_histogram.
CoincidenceHistogram2D build_histogram_parallel(const std::vector<TimeTagEvent>& events,
                                                double bin_width, double window,
                                                double integration_time = 0);

struct PeakCounts {
    std::array<int64_t, 5> peak{};       // antidiagonal sums, index 0 = peak 1
    int64_t cell[3][3]{};                // [tA+1][tB+1]
    int64_t at(int ta, int tb) const { return cell[ta + 1][tb + 1]; }
    int64_t& at(int ta, int tb) { return cell[ta + 1][tb + 1]; }
    void refresh_peaks();                // recompute antidiagonal sums from cells
};

// Sums counts in +-cell_halfwidth squares around the nine cell centers
// {0, bin_delay, 2 bin_delay}^2. Errors: bin_delay/bin_width < 5, overlapping
// windows (cell_halfwidth >= bin_delay/2).
PeakCounts extract_peaks(const CoincidenceHistogram2D& h, double bin_delay,
                         double cell_halfwidth = 0.5e-9);

enum class Setting { PP = 0, PL = 1, LP = 2, LL = 3 };
const char* setting_name(Setting s);             // "++", "+L", "L+", "LL"
std::optional<Setting> setting_from_name(const std::string& name);
// analyzer phases (alpha, beta) realizing the setting: + -> 0, L -> pi/2
std::pair<double, double> setting_phases(Setting s);

struct ProjectionRecord {
    Ket4 projector;        // ket; the projector is |k><k|
    int64_t count = 0;
    Setting setting = Setting::PP;
    int peak = 0;          // source peak id 1..5
    int cell_ta = 0, cell_tb = 0;
    double weight = 1;     // relative efficiency: interfering paths per cell
};

using ProjectionRecords = std::vector<ProjectionRecord>;

// Converts per-setting cell counts into projection records. Center cell maps
// to |xi_a xi_b>, sides to |1 xi>, |xi 1>, |xi 2>, |2 xi>, corners to |11>,
// |22>. With include_forbidden (default) the (-1,+1)/(+1,-1) cells contribute
// |12>, |21> records, completing the 16-projector product basis.
ProjectionRecords assemble_projections(const std::array<PeakCounts, 4>& per_setting,
                                       bool include_forbidden = true);

}  // namespace tbe
