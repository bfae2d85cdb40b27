#include "tbe/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tbe {

int64_t CoincidenceHistogram2D::total() const {
    int64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

namespace {

struct SplitStream {
    std::vector<uint64_t> trig, alice, bob;
};

SplitStream split_and_check(const std::vector<TimeTagEvent>& events) {
    SplitStream s;
    uint64_t last[3] = {0, 0, 0};
    bool seen[3] = {false, false, false};
    for (const auto& ev : events) {
        int ch = int(ev.channel);
        if (ch < 0 || ch > 2) throw std::invalid_argument("build_histogram: unknown channel");
        if (seen[ch] && ev.timestamp_ps < last[ch])
            throw std::invalid_argument("build_histogram: stream not time-ordered per channel");
        seen[ch] = true;
        last[ch] = ev.timestamp_ps;
        switch (ev.channel) {
            case Channel::Trigger: s.trig.push_back(ev.timestamp_ps); break;
            case Channel::Alice: s.alice.push_back(ev.timestamp_ps); break;
            case Channel::Bob: s.bob.push_back(ev.timestamp_ps); break;
        }
    }
    return s;
}

// first event in [t_lo, t_hi]; cursor only ever advances (t_lo monotonic in t)
inline bool first_in_window(const std::vector<uint64_t>& v, size_t& cur, double t_lo, double t_hi,
                            double& out) {
    while (cur < v.size() && double(v[cur]) < t_lo) ++cur;
    if (cur < v.size() && double(v[cur]) <= t_hi) {
        out = double(v[cur]);
        return true;
    }
    return false;
}

void fill_range(const SplitStream& s, size_t t_begin, size_t t_end, double window,
                CoincidenceHistogram2D& h) {
    const double bw_ps = h.bin_width * 1e12;
    const double origin_ps = h.origin * 1e12;
    const double half_ps = window * 0.5e12;
    const double full_ps = window * 1e12;
    size_t ca = 0, cb = 0;
    if (t_begin > 0) {
        // position cursors for the shard start
        double t0 = double(s.trig[t_begin]) - half_ps;
        ca = size_t(std::lower_bound(s.alice.begin(), s.alice.end(), uint64_t(std::max(0.0, t0))) -
                    s.alice.begin());
        cb = size_t(std::lower_bound(s.bob.begin(), s.bob.end(), uint64_t(std::max(0.0, t0))) -
                    s.bob.begin());
    }
    for (size_t it = t_begin; it < t_end; ++it) {
        double t = double(s.trig[it]);
        double ta, tb;
        size_t ca2 = ca, cb2 = cb;
        bool got_a = first_in_window(s.alice, ca2, t - half_ps, t + full_ps, ta);
        ca = ca2;
        bool got_b = first_in_window(s.bob, cb2, t - half_ps, t + full_ps, tb);
        cb = cb2;
        if (!got_a || !got_b) continue;
        int ix = int(std::floor((ta - t - origin_ps) / bw_ps));
        int iy = int(std::floor((tb - t - origin_ps) / bw_ps));
        if (ix < 0 || ix >= h.nx || iy < 0 || iy >= h.ny) continue;
        h.at(ix, iy) += 1;
    }
}

CoincidenceHistogram2D make_grid(double bin_width, double window, double integration_time) {
    if (!(bin_width > 0) || !(window > 0))
        throw std::invalid_argument("build_histogram: bin_width and window must be positive");
    CoincidenceHistogram2D h;
    h.bin_width = bin_width;
    h.origin = -window / 2;
    h.integration_time = integration_time;
    int n = int(std::ceil(1.5 * window / bin_width));
    h.nx = h.ny = n;
    h.counts.assign(size_t(n) * size_t(n), 0);
    return h;
}

}  // namespace

CoincidenceHistogram2D build_histogram(const std::vector<TimeTagEvent>& events, double bin_width,
                                       double window, double integration_time) {
    auto h = make_grid(bin_width, window, integration_time);
    auto s = split_and_check(events);
    fill_range(s, 0, s.trig.size(), window, h);
    return h;
}

CoincidenceHistogram2D build_histogram_parallel(const std::vector<TimeTagEvent>& events,
                                                double bin_width, double window,
                                                double integration_time) {
    auto h = make_grid(bin_width, window, integration_time);
    auto s = split_and_check(events);
    int n_shards = 1;
#ifdef _OPENMP
    n_shards = std::max(1, omp_get_max_threads());
#endif
    if (s.trig.size() < 1024 || n_shards == 1) {
        fill_range(s, 0, s.trig.size(), window, h);
        return h;
    }
    std::vector<CoincidenceHistogram2D> parts(size_t(n_shards), h);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_shards; ++i) {
        size_t lo = s.trig.size() * size_t(i) / size_t(n_shards);
        size_t hi = s.trig.size() * size_t(i + 1) / size_t(n_shards);
        fill_range(s, lo, hi, window, parts[size_t(i)]);
    }
    for (auto& p : parts)
        for (size_t i = 0; i < h.counts.size(); ++i) h.counts[i] += p.counts[i];
    return h;
}

void PeakCounts::refresh_peaks() {
    peak[0] = at(-1, -1);
    peak[1] = at(-1, 0) + at(0, -1);
    peak[2] = at(0, 0) + at(-1, +1) + at(+1, -1);
    peak[3] = at(0, +1) + at(+1, 0);
    peak[4] = at(+1, +1);
}

PeakCounts extract_peaks(const CoincidenceHistogram2D& h, double bin_delay,
                         double cell_halfwidth) {
    if (bin_delay / h.bin_width < 5)
        throw std::invalid_argument("extract_peaks: bin_delay/bin_width must be >= 5");
    if (cell_halfwidth >= bin_delay / 2)
        throw std::invalid_argument("extract_peaks: cell windows overlap (halfwidth >= bin_delay/2)");

    PeakCounts pc;
    for (int ix = 0; ix < h.nx; ++ix) {
        double tx = h.origin + (ix + 0.5) * h.bin_width;
        int ta = 10;
        for (int k = -1; k <= 1; ++k)
            if (std::abs(tx - (k + 1) * bin_delay) <= cell_halfwidth) ta = k;
        if (ta == 10) continue;
        for (int iy = 0; iy < h.ny; ++iy) {
            double ty = h.origin + (iy + 0.5) * h.bin_width;
            int tb = 10;
            for (int k = -1; k <= 1; ++k)
                if (std::abs(ty - (k + 1) * bin_delay) <= cell_halfwidth) tb = k;
            if (tb == 10) continue;
            pc.at(ta, tb) += h.at(ix, iy);
        }
    }
    pc.refresh_peaks();
    return pc;
}

const char* setting_name(Setting s) {
    switch (s) {
        case Setting::PP: return "++";
        case Setting::PL: return "+L";
        case Setting::LP: return "L+";
        case Setting::LL: return "LL";
    }
    return "?";
}

std::optional<Setting> setting_from_name(const std::string& name) {
    if (name == "++" || name == "pp" || name == "PP") return Setting::PP;
    if (name == "+L" || name == "pl" || name == "PL") return Setting::PL;
    if (name == "L+" || name == "lp" || name == "LP") return Setting::LP;
    if (name == "LL" || name == "ll") return Setting::LL;
    return std::nullopt;
}

std::pair<double, double> setting_phases(Setting s) {
    double a = (s == Setting::LP || s == Setting::LL) ? M_PI / 2 : 0.0;
    double b = (s == Setting::PL || s == Setting::LL) ? M_PI / 2 : 0.0;
    return {a, b};
}

ProjectionRecords assemble_projections(const std::array<PeakCounts, 4>& per_setting,
                                       bool include_forbidden) {
    ProjectionRecords out;
    for (int si = 0; si < 4; ++si) {
        auto s = Setting(si);
        const auto& pc = per_setting[size_t(si)];
        for (int ta = -1; ta <= 1; ++ta)
            for (int tb = -1; tb <= 1; ++tb) {
                bool forbidden = (ta == -1 && tb == +1) || (ta == +1 && tb == -1);
                if (forbidden && !include_forbidden) continue;
                int64_t n = pc.at(ta, tb);
                if (n < 0) throw std::invalid_argument("assemble_projections: negative count");

                // analysis ket per photon: early -> |1>, late -> |2>, center ->
                // |xi> = (|1> + e^{i phase}|2>)/sqrt(2)
                auto photon_ket = [](int t, double phase) {
                    if (t == -1) return ket_1();
                    if (t == +1) return ket_2();
                    Ket2 k;
                    k.a[0] = 1.0 / std::sqrt(2.0);
                    k.a[1] = std::exp(Cplx(0, phase)) / std::sqrt(2.0);
                    return k;
                };
                auto [alpha, beta] = setting_phases(s);
                ProjectionRecord rec;
                rec.projector = tensor(photon_ket(ta, alpha), photon_ket(tb, beta));
                rec.count = n;
                rec.setting = s;
                rec.cell_ta = ta;
                rec.cell_tb = tb;
                rec.peak = 3 + ta + tb;                     // antidiagonal index 1..5
                int paths = ((ta == 0) ? 2 : 1) * ((tb == 0) ? 2 : 1);
                rec.weight = double(paths);
                out.push_back(rec);
            }
    }
    return out;
}

}  // namespace tbe
