#pragma once
// Monte Carlo model of the time-bin entanglement apparatus: a pulsed pair
// source (|11> + e^{i phi_p}|22>)/sqrt(2) analyzed by two unbalanced
// interferometers with per-pass amplitude 1/sqrt(2) and phases alpha, beta.

#include <cstdint>
#include <vector>

#include "tbe/qcore.hpp"

namespace tbe {

struct ExperimentConfig {
    double rep_rate = 76e6;              // Hz
    double bin_delay = 3e-9;             // s, interferometer arm imbalance
    double pair_prob = 1.2e-4;           // pair emission probability per pulse
    double pump_phase = 0.0;             // phi_p, rad
    double alice_phase = 0.0;            // alpha, rad
    double bob_phase = 0.0;              // beta, rad
    double visibility = 1.0;             // damping of the interference term
    double detector_jitter_sigma = 40e-12;  // s
    double tagger_jitter_rms = 10e-12;      // s
    double dead_time = 2e-9;             // s, per channel
    double det_efficiency_alice = 0.6;
    double det_efficiency_bob = 0.6;
    double transmission_alice = 0.06;    // bulk interferometer transmission
    double transmission_bob = 0.06;
    double background_rate = 0.0;        // Hz per detector
    double integration_time = 1.0;       // s
    uint64_t rng_seed = 1;
    int trigger_decimation = 1;          // record every d-th cycle (ungated mode)
    bool gated_triggers = true;          // trigger records only for photon-bearing cycles
    bool fold_pump_phase = false;        // lock phi_p = 0 (folded interferometer studies)
    bool double_pairs = false;           // add uncorrelated double-pair accidentals

    double effective_pump_phase() const { return fold_pump_phase ? 0.0 : pump_phase; }
    // throws std::invalid_argument naming the offending field
    void validate() const;
};

enum class Channel : uint8_t { Trigger = 0, Alice = 1, Bob = 2 };

struct TimeTagEvent {
    Channel channel;
    uint64_t timestamp_ps;
};

// Monitored-port coincidence rates per (tA, tB) cell, tA/tB in {-1,0,+1},
// in the post-selected convention where each corner cell carries 1/8 of the
// detected-pair rate and the central cell (1/4)(1 + V cos(alpha+beta-phi_p)).
// central_complement is the anti-fringe of the unmonitored central outcome,
// (1/4)(1 - V cos(...)): sum of all cells plus it is phase independent.
struct CellRates {
    double rate[3][3]{};                 // [tA+1][tB+1], Hz
    double central_complement = 0;       // Hz
    double at(int ta, int tb) const { return rate[ta + 1][tb + 1]; }
    double total() const;
};

CellRates expected_cell_rates(const ExperimentConfig& cfg);

// Joint detection probabilities over (port, bin) x (port, bin); port 0 is the
// monitored output. Sums to exactly 1 for any visibility. Used by the sampler
// and exposed for tests.
struct JointOutcomeTable {
    // p[portA][binA][portB][binB], bins indexed 0,1,2 for t=-1,0,+1
    double p[2][3][2][3]{};
    double sum() const;
};
JointOutcomeTable joint_outcomes(const ExperimentConfig& cfg);

// Sampled time-tag stream, globally time-ordered, dead-time filtered.
std::vector<TimeTagEvent> simulate_stream(const ExperimentConfig& cfg);

struct FringePoint {
    double phase;
    double value;   // Hz in analytic mode, counts in sampled mode
    double sigma;   // Poisson error in sampled mode, 0 analytic
};

struct FringeFit {
    double visibility = 0;
    double visibility_sigma = 0;
    double phase_offset = 0;
    double amplitude = 0;       // A in A(1 + V cos(phase - phase0))
    std::vector<FringePoint> points;
};

enum class FringeMode { Analytic, Sampled };

// Scans alice_phase over `phases`, extracts the central-cell rate/counts and
// fits A(1 + V cos(phase - phase0)) by (weighted) linear least squares.
FringeFit fringe_scan(const ExperimentConfig& cfg, const std::vector<double>& phases,
                      FringeMode mode = FringeMode::Analytic);

// The two-qubit state the configured source+visibility corresponds to:
// (|11><11| + |22><22|)/2 + (V/2)(e^{-i phi_p}|11><22| + h.c.)
DensityMatrix configured_state(const ExperimentConfig& cfg);

}  // namespace tbe
