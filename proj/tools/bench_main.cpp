// Wall-clock comparison of the OpenMP kernels against their serial reference
// paths: coincidence histogramming, displacement scans, Monte Carlo
// tomography resampling. Each kernel's outputs are checked for bitwise
// equality between the two paths before the timing is reported.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "tbe/coincidence.hpp"
#include "tbe/photonics.hpp"
#include "tbe/rng.hpp"
#include "tbe/simulator.hpp"
#include "tbe/tomography.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace tbe;

namespace {

template <typename F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt < best) best = dt;
    }
    return best;
}

void row(const char* name, double serial, double parallel) {
    std::printf("%-34s %10.4f s %10.4f s %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    std::printf("%-34s %12s %12s %9s\n", "kernel", "serial", "parallel", "speedup");

    // --- coincidence histogram over a dense sampled stream
    ExperimentConfig cfg;
    cfg.pair_prob = 5e-3;
    cfg.transmission_alice = cfg.transmission_bob = 0.5;
    cfg.background_rate = 2e4;
    cfg.integration_time = 1.0;
    auto ev = simulate_stream(cfg);

    CoincidenceHistogram2D hs, hp;
    double t_ser = best_of(3, [&] { hs = build_histogram(ev, 200e-12, 8e-9); });
    double t_par = best_of(3, [&] { hp = build_histogram_parallel(ev, 200e-12, 8e-9); });
    if (hs.counts != hp.counts) {
        std::fprintf(stderr, "histogram mismatch between serial and parallel paths\n");
        return 1;
    }
    char label[64];
    std::snprintf(label, sizeof label, "histogram (%zu events)", ev.size());
    row(label, t_ser, t_par);

    // --- displacement scan of the calibrated two-lobe mode vs the probe
    auto mode = synthesize(calibrate_two_lobe(), 0.08);
    auto probe = synthesize(ModeModel::gaussian(3.9), 0.08);
    ScanResult ss, sp;
    t_ser = best_of(2, [&] { ss = scan_displacement(mode, probe, 2.2, 1.4, 0.1, false); });
    t_par = best_of(2, [&] { sp = scan_displacement(mode, probe, 2.2, 1.4, 0.1, true); });
    if (ss.loss_db != sp.loss_db) {
        std::fprintf(stderr, "scan mismatch between serial and parallel paths\n");
        return 1;
    }
    std::snprintf(label, sizeof label, "displacement scan (%dx%d)", ss.nx, ss.ny);
    row(label, t_ser, t_par);

    // --- Monte Carlo tomography resampling
    std::array<PeakCounts, 4> zero{};
    auto recs = assemble_projections(zero);
    auto state = configured_state(cfg);
    auto rng = make_stream(1, 1);
    for (auto& r : recs) {
        double mean = 2e3 * r.weight * std::max(0.0, expval(state.m, r.projector).real());
        r.count = mean > 0 ? std::poisson_distribution<int64_t>(mean)(rng) : 0;
    }
    const int n_samples = 200;
    TomographyResult rs, rp;
    t_ser = best_of(1, [&] { rs = monte_carlo(recs, n_samples, 42, {}, false, true); });
    t_par = best_of(1, [&] { rp = monte_carlo(recs, n_samples, 42, {}, true, true); });
    if (rs.mc_concurrence != rp.mc_concurrence) {
        std::fprintf(stderr, "monte carlo mismatch between serial and parallel paths\n");
        return 1;
    }
    std::snprintf(label, sizeof label, "monte carlo (%d resamples)", n_samples);
    row(label, t_ser, t_par);
    return 0;
}
