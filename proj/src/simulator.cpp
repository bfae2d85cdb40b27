#include "tbe/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "tbe/coincidence.hpp"
#include "tbe/rng.hpp"

namespace tbe {

void ExperimentConfig::validate() const {
    auto bad = [](const std::string& field) {
        throw std::invalid_argument("invalid config field: " + field);
    };
    if (!(rep_rate > 0) || rep_rate > 1e12) bad("rep_rate");
    if (!(bin_delay > 0)) bad("bin_delay");
    if (!(pair_prob >= 0) || pair_prob > 0.1) bad("pair_prob (pair_prob*rep_rate beyond the p<<1 regime)");
    if (!(visibility >= 0) || visibility > 1) bad("visibility");
    if (!(detector_jitter_sigma >= 0)) bad("detector_jitter_sigma");
    if (!(tagger_jitter_rms >= 0)) bad("tagger_jitter_rms");
    if (!(bin_delay > 3 * detector_jitter_sigma)) bad("bin_delay (must exceed 3x detector jitter)");
    if (!(dead_time >= 0)) bad("dead_time");
    if (!(det_efficiency_alice >= 0) || det_efficiency_alice > 1) bad("det_efficiency_alice");
    if (!(det_efficiency_bob >= 0) || det_efficiency_bob > 1) bad("det_efficiency_bob");
    if (!(transmission_alice >= 0) || transmission_alice > 1) bad("transmission_alice");
    if (!(transmission_bob >= 0) || transmission_bob > 1) bad("transmission_bob");
    if (!(background_rate >= 0)) bad("background_rate");
    if (!(integration_time >= 0)) bad("integration_time");
    if (trigger_decimation < 1) bad("trigger_decimation");
    if (!std::isfinite(pump_phase) || !std::isfinite(alice_phase) || !std::isfinite(bob_phase)) bad("phase");
}

double CellRates::total() const {
    double s = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += rate[i][j];
    return s;
}

// Per-photon analyzer coefficients c[input][port][bin]: input time bin |1> or
// |2> mapped through the unbalanced interferometer. Port 0 is monitored:
// |1> -> (|T-1> + e^{ia}|T0>)/2, |2> -> (|T0> + e^{ia}|T1>)/2; the unmonitored
// port carries the sign-flipped long-arm component (isometry).
static void analyzer_coeffs(double phase, Cplx c[2][2][3]) {
    for (int i = 0; i < 2; ++i)
        for (int p = 0; p < 2; ++p)
            for (int b = 0; b < 3; ++b) c[i][p][b] = 0;
    Cplx e = std::exp(Cplx(0, phase)) * 0.5;
    c[0][0][0] = 0.5;  // |1>, monitored, T-1
    c[0][0][1] = e;    // |1>, monitored, T0
    c[0][1][0] = 0.5;
    c[0][1][1] = -e;
    c[1][0][1] = 0.5;  // |2>, monitored, T0
    c[1][0][2] = e;    // |2>, monitored, T+1
    c[1][1][1] = 0.5;
    c[1][1][2] = -e;
}

JointOutcomeTable joint_outcomes(const ExperimentConfig& cfg) {
    Cplx ca[2][2][3], cb[2][2][3];
    analyzer_coeffs(cfg.alice_phase, ca);
    analyzer_coeffs(cfg.bob_phase, cb);
    Cplx pump = std::exp(Cplx(0, cfg.effective_pump_phase()));
    double v = cfg.visibility;

    JointOutcomeTable t;
    const double half = 0.5;  // |amp|^2 carries the 1/sqrt(2) state normalization
    for (int pa = 0; pa < 2; ++pa)
        for (int ba = 0; ba < 3; ++ba)
            for (int pb = 0; pb < 2; ++pb)
                for (int bb = 0; bb < 3; ++bb) {
                    Cplx t1 = ca[0][pa][ba] * cb[0][pb][bb];         // |11> path
                    Cplx t2 = pump * ca[1][pa][ba] * cb[1][pb][bb];  // |22> path
                    double p = std::norm(t1) + std::norm(t2) + 2 * v * (t1 * std::conj(t2)).real();
                    t.p[pa][ba][pb][bb] = half * p;
                }
    return t;
}

double JointOutcomeTable::sum() const {
    double s = 0;
    for (int pa = 0; pa < 2; ++pa)
        for (int ba = 0; ba < 3; ++ba)
            for (int pb = 0; pb < 2; ++pb)
                for (int bb = 0; bb < 3; ++bb) s += p[pa][ba][pb][bb];
    return s;
}

CellRates expected_cell_rates(const ExperimentConfig& cfg) {
    cfg.validate();
    auto t = joint_outcomes(cfg);
    double k = cfg.rep_rate * cfg.pair_prob * cfg.transmission_alice * cfg.det_efficiency_alice *
               cfg.transmission_bob * cfg.det_efficiency_bob;
    // post-selected convention: x4 so corner cells sit at K/8 and the central
    // cell at (K/4)(1 + V cos(alpha + beta - phi_p))
    CellRates r;
    for (int ba = 0; ba < 3; ++ba)
        for (int bb = 0; bb < 3; ++bb) r.rate[ba][bb] = 4 * k * t.p[0][ba][0][bb];
    r.central_complement = 4 * k * t.p[0][1][1][1];
    return r;
}

DensityMatrix configured_state(const ExperimentConfig& cfg) {
    Mat4 m;
    m(0, 0) = 0.5;
    m(3, 3) = 0.5;
    Cplx coh = 0.5 * cfg.visibility * std::exp(Cplx(0, -cfg.effective_pump_phase()));
    m(0, 3) = coh;
    m(3, 0) = std::conj(coh);
    return DensityMatrix::from(m);
}

std::vector<TimeTagEvent> simulate_stream(const ExperimentConfig& cfg) {
    cfg.validate();
    const double period_ps = 1e12 / cfg.rep_rate;
    const uint64_t n_cycles = uint64_t(cfg.integration_time * cfg.rep_rate);
    const double photon_sigma_ps =
        1e12 * std::hypot(cfg.detector_jitter_sigma, cfg.tagger_jitter_rms);
    const double trigger_sigma_ps = 1e12 * cfg.tagger_jitter_rms;
    const double delay_ps = 1e12 * cfg.bin_delay;
    const uint64_t dead_ps = uint64_t(std::llround(1e12 * cfg.dead_time));
    // origin shifted by one period so jitter cannot underflow cycle 0
    auto cycle_t0 = [&](uint64_t cyc) { return (double(cyc) + 1.0) * period_ps; };

    auto table = joint_outcomes(cfg);
    // flattened cumulative distribution over the 36 outcomes
    std::array<double, 36> cdf{};
    {
        double acc = 0;
        int idx = 0;
        for (int pa = 0; pa < 2; ++pa)
            for (int ba = 0; ba < 3; ++ba)
                for (int pb = 0; pb < 2; ++pb)
                    for (int bb = 0; bb < 3; ++bb) {
                        acc += table.p[pa][ba][pb][bb];
                        cdf[size_t(idx++)] = acc;
                    }
        cdf[35] = 1.0;  // guard against roundoff
    }
    // marginals for uncorrelated double-pair accidentals
    std::array<double, 6> cdf_a{}, cdf_b{};
    {
        double aa = 0, ab = 0;
        for (int p = 0; p < 2; ++p)
            for (int b = 0; b < 3; ++b) {
                double ma = 0, mb = 0;
                for (int p2 = 0; p2 < 2; ++p2)
                    for (int b2 = 0; b2 < 3; ++b2) {
                        ma += table.p[p][b][p2][b2];
                        mb += table.p[p2][b2][p][b];
                    }
                aa += ma;
                ab += mb;
                cdf_a[size_t(p * 3 + b)] = aa;
                cdf_b[size_t(p * 3 + b)] = ab;
            }
        cdf_a[5] = cdf_b[5] = 1.0;
    }

    std::vector<TimeTagEvent> events;
    std::vector<uint64_t> photon_cycles;  // cycles with a recorded photon (gated triggers)

    auto pair_rng = make_stream(cfg.rng_seed, 1);
    std::normal_distribution<double> jit(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto emit_photon = [&](Channel ch, uint64_t cyc, int bin, int port, double survival,
                           std::mt19937_64& rng) {
        if (port != 0) return false;
        if (uni(rng) >= survival) return false;
        double t = cycle_t0(cyc) + bin * delay_ps + photon_sigma_ps * jit(rng);
        events.push_back({ch, uint64_t(std::llround(std::max(0.0, t)))});
        return true;
    };

    const double surv_a = cfg.transmission_alice * cfg.det_efficiency_alice;
    const double surv_b = cfg.transmission_bob * cfg.det_efficiency_bob;

    auto draw_pairs = [&](double lambda, const std::array<double, 36>* joint_cdf) {
        if (lambda <= 0) return;
        std::poisson_distribution<uint64_t> pd(lambda);
        uint64_t n_pairs = pd(pair_rng);
        std::uniform_int_distribution<uint64_t> cyc_dist(0, n_cycles ? n_cycles - 1 : 0);
        for (uint64_t i = 0; i < n_pairs; ++i) {
            uint64_t cyc = cyc_dist(pair_rng);
            int pa, ba, pb, bb;
            if (joint_cdf) {
                double u = uni(pair_rng);
                int idx = int(std::lower_bound(joint_cdf->begin(), joint_cdf->end(), u) -
                              joint_cdf->begin());
                idx = std::min(idx, 35);
                pa = idx / 18;
                ba = (idx / 6) % 3;
                pb = (idx % 6) / 3;
                bb = idx % 3;
            } else {
                // double-pair accidental: independent marginals
                double ua = uni(pair_rng), ub = uni(pair_rng);
                int ia = int(std::lower_bound(cdf_a.begin(), cdf_a.end(), ua) - cdf_a.begin());
                int ib = int(std::lower_bound(cdf_b.begin(), cdf_b.end(), ub) - cdf_b.begin());
                ia = std::min(ia, 5);
                ib = std::min(ib, 5);
                pa = ia / 3;
                ba = ia % 3;
                pb = ib / 3;
                bb = ib % 3;
            }
            bool got_a = emit_photon(Channel::Alice, cyc, ba, pa, surv_a, pair_rng);
            bool got_b = emit_photon(Channel::Bob, cyc, bb, pb, surv_b, pair_rng);
            if (got_a || got_b) photon_cycles.push_back(cyc);
        }
    };

    draw_pairs(double(n_cycles) * cfg.pair_prob, &cdf);
    if (cfg.double_pairs) draw_pairs(double(n_cycles) * cfg.pair_prob * cfg.pair_prob, nullptr);

    // uniform background per detector
    for (Channel ch : {Channel::Alice, Channel::Bob}) {
        double lambda = cfg.background_rate * cfg.integration_time;
        if (lambda <= 0) continue;
        auto rng = make_stream(cfg.rng_seed, ch == Channel::Alice ? 2 : 3);
        std::poisson_distribution<uint64_t> pd(lambda);
        uint64_t n = pd(rng);
        double span_ps = cycle_t0(n_cycles);
        for (uint64_t i = 0; i < n; ++i)
            events.push_back({ch, uint64_t(uni(rng) * span_ps)});
    }

    // trigger records
    {
        auto rng = make_stream(cfg.rng_seed, 4);
        auto emit_trigger = [&](uint64_t cyc) {
            double t = cycle_t0(cyc) + trigger_sigma_ps * jit(rng);
            events.push_back({Channel::Trigger, uint64_t(std::llround(std::max(0.0, t)))});
        };
        if (cfg.gated_triggers) {
            std::sort(photon_cycles.begin(), photon_cycles.end());
            photon_cycles.erase(std::unique(photon_cycles.begin(), photon_cycles.end()),
                                photon_cycles.end());
            for (uint64_t cyc : photon_cycles) emit_trigger(cyc);
        } else {
            for (uint64_t cyc = 0; cyc < n_cycles; cyc += uint64_t(cfg.trigger_decimation))
                emit_trigger(cyc);
        }
    }

    std::sort(events.begin(), events.end(), [](const TimeTagEvent& a, const TimeTagEvent& b) {
        if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
        return uint8_t(a.channel) < uint8_t(b.channel);
    });

    // per-channel dead time
    std::vector<TimeTagEvent> filtered;
    filtered.reserve(events.size());
    uint64_t last[3];
    bool seen[3] = {false, false, false};
    for (const auto& ev : events) {
        int ch = int(ev.channel);
        if (seen[ch] && ev.timestamp_ps - last[ch] < dead_ps) continue;
        seen[ch] = true;
        last[ch] = ev.timestamp_ps;
        filtered.push_back(ev);
    }
    return filtered;
}

FringeFit fringe_scan(const ExperimentConfig& cfg, const std::vector<double>& phases,
                      FringeMode mode) {
    if (phases.size() < 5) throw std::invalid_argument("fringe_scan: need >= 5 phase points");
    auto [mn, mx] = std::minmax_element(phases.begin(), phases.end());
    if (*mx - *mn < 2 * M_PI - 1e-9)
        throw std::invalid_argument("fringe_scan: phases must span >= 2 pi");

    FringeFit fit;
    for (size_t i = 0; i < phases.size(); ++i) {
        ExperimentConfig c = cfg;
        c.alice_phase = phases[i];
        FringePoint pt{phases[i], 0, 0};
        if (mode == FringeMode::Analytic) {
            pt.value = expected_cell_rates(c).at(0, 0);
        } else {
            c.rng_seed = splitmix64(cfg.rng_seed ^ (0xf1u + i));
            auto ev = simulate_stream(c);
            auto h = build_histogram(ev, 200e-12, 8e-9, c.integration_time);
            auto peaks = extract_peaks(h, c.bin_delay);
            pt.value = double(peaks.at(0, 0));
            pt.sigma = std::sqrt(std::max(1.0, pt.value));
        }
        fit.points.push_back(pt);
    }

    // weighted LS for y = a0 + a1 cos(phi) + a2 sin(phi)
    double m[3][3]{}, rhs[3]{};
    for (auto& pt : fit.points) {
        double w = (mode == FringeMode::Analytic) ? 1.0 : 1.0 / (pt.sigma * pt.sigma);
        double x[3] = {1.0, std::cos(pt.phase), std::sin(pt.phase)};
        for (int i = 0; i < 3; ++i) {
            rhs[i] += w * x[i] * pt.value;
            for (int j = 0; j < 3; ++j) m[i][j] += w * x[i] * x[j];
        }
    }
    // 3x3 solve with partial pivoting; keep the inverse for error propagation
    double inv[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    double a[3][3];
    std::copy(&m[0][0], &m[0][0] + 9, &a[0][0]);
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-12) throw std::runtime_error("fringe_scan: degenerate fit");
        std::swap(a[col], a[piv]);
        std::swap(inv[col], inv[piv]);
        double d = a[col][col];
        for (int j = 0; j < 3; ++j) {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double f = a[r][col];
            for (int j = 0; j < 3; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    double coef[3];
    for (int i = 0; i < 3; ++i)
        coef[i] = inv[i][0] * rhs[0] + inv[i][1] * rhs[1] + inv[i][2] * rhs[2];

    double a0 = coef[0], a1 = coef[1], a2 = coef[2];
    if (a0 <= 0) throw std::runtime_error("fringe_scan: degenerate fit (non-positive offset)");
    double amp = std::sqrt(a1 * a1 + a2 * a2);
    fit.amplitude = a0;
    fit.visibility = amp / a0;
    fit.phase_offset = std::atan2(a2, a1);

    if (mode == FringeMode::Sampled && amp > 0) {
        // delta method on V = sqrt(a1^2+a2^2)/a0 with Cov = inv(X^T W X)
        double g[3] = {-fit.visibility / a0, a1 / (a0 * amp), a2 / (a0 * amp)};
        double var = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) var += g[i] * inv[i][j] * g[j];
        fit.visibility_sigma = std::sqrt(std::max(0.0, var));
    }
    return fit;
}

}  // namespace tbe
