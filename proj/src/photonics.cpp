#include "tbe/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tbe {

namespace {

double trap_w(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

}  // namespace

double ModeField::power() const {
    double p = 0;
    for (int ix = 0; ix < nx; ++ix) {
        double wx = trap_w(ix, nx);
        for (int iy = 0; iy < ny; ++iy) p += wx * trap_w(iy, ny) * std::norm(at(ix, iy));
    }
    return p * dx * dy;
}

ModeModel ModeModel::gaussian(double d_1e2_um) {
    ModeModel m;
    m.kind = Kind::Gaussian;
    m.d_1e2 = d_1e2_um;
    return m;
}

ModeModel ModeModel::two_lobe(double wx, double wy, double separation, double w1, double w2) {
    ModeModel m;
    m.kind = Kind::TwoLobe;
    m.lobe_wx = wx;
    m.lobe_wy = wy;
    m.separation = separation;
    m.weight1 = w1;
    m.weight2 = w2;
    return m;
}

ModeField synthesize(const ModeModel& m, double step_um, double extent_um) {
    if (!(step_um > 0)) throw std::invalid_argument("synthesize: step must be positive");
    double dia;
    if (m.kind == ModeModel::Kind::Gaussian) {
        if (!(m.d_1e2 > 0)) throw std::invalid_argument("synthesize: d_1e2 must be positive");
        dia = m.d_1e2;
    } else {
        if (!(m.lobe_wx > 0) || !(m.lobe_wy > 0) || !(m.separation >= 0))
            throw std::invalid_argument("synthesize: invalid two-lobe geometry");
        dia = std::max(2 * m.lobe_wx, m.separation + 2 * m.lobe_wy);
    }
    double extent = (extent_um > 0) ? extent_um : 3 * dia;
    int half = std::max(1, int(std::ceil(extent / (2 * step_um))));
    int n = 2 * half + 1;

    ModeField f;
    f.nx = f.ny = n;
    f.dx = f.dy = step_um;
    f.amps.assign(size_t(n) * size_t(n), Cplx(0, 0));
    for (int ix = 0; ix < n; ++ix) {
        double x = f.x(ix);
        for (int iy = 0; iy < n; ++iy) {
            double y = f.y(iy);
            double e;
            if (m.kind == ModeModel::Kind::Gaussian) {
                double w = m.d_1e2 / 2;  // intensity 1/e^2 radius = field radius
                e = std::exp(-(x * x + y * y) / (w * w));
            } else {
                double gx = std::exp(-(x * x) / (m.lobe_wx * m.lobe_wx));
                double y1 = y - m.separation / 2, y2 = y + m.separation / 2;
                e = gx * (m.weight1 * std::exp(-(y1 * y1) / (m.lobe_wy * m.lobe_wy)) +
                          m.weight2 * std::exp(-(y2 * y2) / (m.lobe_wy * m.lobe_wy)));
            }
            f.at(ix, iy) = e;
        }
    }
    return f;
}

namespace {

Cplx sample_bilinear(const ModeField& f, double xq, double yq) {
    double fx = xq / f.dx + 0.5 * (f.nx - 1);
    double fy = yq / f.dy + 0.5 * (f.ny - 1);
    if (fx < 0 || fy < 0 || fx > f.nx - 1 || fy > f.ny - 1) return {0, 0};
    int i0 = std::min(int(fx), f.nx - 2);
    int j0 = std::min(int(fy), f.ny - 2);
    double tx = fx - i0, ty = fy - j0;
    return (1 - tx) * (1 - ty) * f.at(i0, j0) + tx * (1 - ty) * f.at(i0 + 1, j0) +
           (1 - tx) * ty * f.at(i0, j0 + 1) + tx * ty * f.at(i0 + 1, j0 + 1);
}

}  // namespace

OverlapResult overlap(const ModeField& a, const ModeField& b, double dx, double dy) {
    if (a.nx < 2 || a.ny < 2 || b.nx < 2 || b.ny < 2)
        throw std::invalid_argument("overlap: fields must be at least 2x2");
    double pa = a.power(), pb = b.power();
    OverlapResult out;
    if (!(pa > 0) || !(pb > 0)) {
        out.disjoint_warning = true;
        out.loss_db = std::numeric_limits<double>::infinity();
        return out;
    }
    Cplx acc(0, 0);
    for (int ix = 0; ix < a.nx; ++ix) {
        double wx = trap_w(ix, a.nx);
        double x = a.x(ix);
        for (int iy = 0; iy < a.ny; ++iy) {
            Cplx bv = sample_bilinear(b, x - dx, a.y(iy) - dy);
            if (bv == Cplx(0, 0)) continue;
            acc += wx * trap_w(iy, a.ny) * std::conj(a.at(ix, iy)) * bv;
        }
    }
    acc *= a.dx * a.dy;
    out.eta = std::norm(acc) / (pa * pb);
    if (out.eta > 1) out.eta = 1;  // quadrature rounding
    if (!(out.eta > 0)) {
        out.eta = 0;
        out.disjoint_warning = true;
        out.loss_db = std::numeric_limits<double>::infinity();
    } else {
        out.loss_db = loss_db_from_eta(out.eta);
    }
    return out;
}

double gaussian_overlap_eta(double wa, double wb, double delta) {
    if (!(wa > 0) || !(wb > 0))
        throw std::invalid_argument("gaussian_overlap_eta: radii must be positive");
    double s = wa * wa + wb * wb;
    double ax = 2 * wa * wb / s;
    return ax * ax * std::exp(-2 * delta * delta / s);
}

double loss_db_from_eta(double eta) {
    if (!(eta > 0)) return std::numeric_limits<double>::infinity();
    return 0.0 - 10 * std::log10(std::min(eta, 1.0));  // +0.0 at unit efficiency
}

namespace {

// parabolic sub-grid interpolation of a minimum along one axis
double refine_parabolic(double lm, double l0, double lp) {
    double denom = lm - 2 * l0 + lp;
    if (!(denom > 0)) return 0;
    double d = 0.5 * (lm - lp) / denom;
    return std::clamp(d, -0.5, 0.5);
}

// half-width where loss(u) first exceeds base + rise, marching both ways from
// the optimum in steps of `fine` with linear interpolation at the crossing
double crossing_half_width(const ModeField& a, const ModeField& b, double cx, double cy,
                           bool along_x, double base, double rise, double fine) {
    double widths[2] = {0, 0};
    for (int dir = 0; dir < 2; ++dir) {
        double sign = dir == 0 ? 1.0 : -1.0;
        double prev_u = 0, prev_l = base;
        double found = 0;
        for (int k = 1; k <= 1200; ++k) {
            double u = sign * fine * k;
            double l = along_x ? overlap(a, b, cx + u, cy).loss_db
                               : overlap(a, b, cx, cy + u).loss_db;
            if (l >= base + rise) {
                double fr = (base + rise - prev_l) / std::max(l - prev_l, 1e-300);
                found = std::abs(prev_u) + fr * fine;
                break;
            }
            prev_u = u;
            prev_l = l;
            found = std::abs(u);  // saturate if never crossed
        }
        widths[dir] = found;
    }
    return 0.5 * (widths[0] + widths[1]);
}

}  // namespace

ScanResult scan_displacement(const ModeField& a, const ModeField& b, double x_half_range,
                             double y_half_range, double step, bool parallel) {
    if (!(step > 0)) throw std::invalid_argument("scan_displacement: step must be positive");
    if (x_half_range < 0 || y_half_range < 0)
        throw std::invalid_argument("scan_displacement: ranges must be non-negative");
    (void)parallel;
    int hx = int(std::lround(x_half_range / step));
    int hy = int(std::lround(y_half_range / step));
    ScanResult r;
    r.nx = 2 * hx + 1;
    r.ny = 2 * hy + 1;
    r.step = step;
    r.x0 = -hx * step;
    r.y0 = -hy * step;
    r.loss_db.assign(size_t(r.nx) * size_t(r.ny), 0.0);

#pragma omp parallel for schedule(static) if (parallel)
    for (int ix = 0; ix < r.nx; ++ix) {
        for (int iy = 0; iy < r.ny; ++iy) {
            double l = overlap(a, b, r.x0 + ix * step, r.y0 + iy * step).loss_db;
            r.loss_db[size_t(ix) * size_t(r.ny) + size_t(iy)] = l;
        }
    }

    int bix = 0, biy = 0;
    double bl = r.loss_db[0];
    for (int ix = 0; ix < r.nx; ++ix)
        for (int iy = 0; iy < r.ny; ++iy) {
            double l = r.loss_db[size_t(ix) * size_t(r.ny) + size_t(iy)];
            if (l < bl) {
                bl = l;
                bix = ix;
                biy = iy;
            }
        }
    r.grid_min_x = r.x0 + bix * step;
    r.grid_min_y = r.y0 + biy * step;

    auto at = [&](int ix, int iy) { return r.loss_db[size_t(ix) * size_t(r.ny) + size_t(iy)]; };
    double ddx = 0, ddy = 0;
    if (bix > 0 && bix < r.nx - 1)
        ddx = refine_parabolic(at(bix - 1, biy), at(bix, biy), at(bix + 1, biy));
    if (biy > 0 && biy < r.ny - 1)
        ddy = refine_parabolic(at(bix, biy - 1), at(bix, biy), at(bix, biy + 1));
    r.min_x = r.grid_min_x + ddx * step;
    r.min_y = r.grid_min_y + ddy * step;
    double refined = overlap(a, b, r.min_x, r.min_y).loss_db;
    if (refined <= bl) {
        r.min_loss_db = refined;
    } else {
        r.min_x = r.grid_min_x;
        r.min_y = r.grid_min_y;
        r.min_loss_db = bl;
    }

    double fine = step / 4;
    r.tol1_x = crossing_half_width(a, b, r.min_x, r.min_y, true, r.min_loss_db, 1.0, fine);
    r.tol1_y = crossing_half_width(a, b, r.min_x, r.min_y, false, r.min_loss_db, 1.0, fine);
    r.tol3_x = crossing_half_width(a, b, r.min_x, r.min_y, true, r.min_loss_db, 3.0, fine);
    r.tol3_y = crossing_half_width(a, b, r.min_x, r.min_y, false, r.min_loss_db, 3.0, fine);
    return r;
}

namespace {

// separable closed forms for a two-lobe mode probed by a circular Gaussian of
// field radius wp; x and y factor independently
double eta_x_axis(double wx, double wp) { return 2 * wx * wp / (wx * wx + wp * wp); }

double eta_y_two_lobe(double wy, double s, double wp, double delta) {
    double s2 = wy * wy + wp * wp;
    double u1 = delta - s / 2, u2 = delta + s / 2;
    double num = std::exp(-u1 * u1 / s2) + std::exp(-u2 * u2 / s2);
    double integral = std::sqrt(M_PI) * wy * wp / std::sqrt(s2) * num;
    double pb = wy * std::sqrt(M_PI / 2) * (2 + 2 * std::exp(-s * s / (2 * wy * wy)));
    double pa = wp * std::sqrt(M_PI / 2);
    return integral * integral / (pb * pa);
}

}  // namespace

ModeModel calibrate_two_lobe(double target_eta, double tol1_x, double tol1_y, double gauss_d1e2) {
    if (!(target_eta > 0) || !(target_eta < 1))
        throw std::invalid_argument("calibrate_two_lobe: target_eta must be in (0,1)");
    if (!(tol1_x > 0) || !(tol1_y > 0) || !(gauss_d1e2 > 0))
        throw std::invalid_argument("calibrate_two_lobe: geometry inputs must be positive");
    double wp = gauss_d1e2 / 2;
    // +1 dB at tol1_x fixes the shared horizontal width:
    // 10 log10(e) * 2 d^2/(wx^2+wp^2) = 1
    double sx = 20.0 * std::log10(std::exp(1.0)) * tol1_x * tol1_x;
    double wx2 = sx - wp * wp;
    if (!(wx2 > 0))
        throw std::invalid_argument("calibrate_two_lobe: tol1_x too small for the probe size");
    double wx = std::sqrt(wx2);
    double ex0 = eta_x_axis(wx, wp);
    if (!(ex0 > target_eta))
        throw std::invalid_argument("calibrate_two_lobe: target_eta unreachable along x");

    // damped Newton on (wy, s): on-axis overlap and vertical +1 dB tolerance
    double wy = 0.5 * tol1_y, s = tol1_y;
    auto resid = [&](double wyv, double sv, double& r1, double& r2) {
        double ey0 = eta_y_two_lobe(wyv, sv, wp, 0);
        double eyd = eta_y_two_lobe(wyv, sv, wp, tol1_y);
        r1 = ex0 * ey0 - target_eta;
        r2 = -10 * std::log10(eyd / ey0) - 1.0;
    };
    double r1, r2;
    resid(wy, s, r1, r2);
    bool done = false;
    for (int iter = 0; iter < 200; ++iter) {
        if (std::abs(r1) + std::abs(r2) < 1e-12) {
            done = true;
            break;
        }
        double hw = 1e-7 * (1 + wy), hs = 1e-7 * (1 + s);
        double a1, a2, b1, b2, c1, c2, d1, d2;
        resid(wy + hw, s, a1, a2);
        resid(wy - hw, s, b1, b2);
        resid(wy, s + hs, c1, c2);
        resid(wy, s - hs, d1, d2);
        double j11 = (a1 - b1) / (2 * hw), j12 = (c1 - d1) / (2 * hs);
        double j21 = (a2 - b2) / (2 * hw), j22 = (c2 - d2) / (2 * hs);
        double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-30)
            throw std::runtime_error("calibrate_two_lobe: singular Jacobian");
        double dwy = -(j22 * r1 - j12 * r2) / det;
        double ds = -(-j21 * r1 + j11 * r2) / det;
        double lam = 1.0;
        double base = std::abs(r1) + std::abs(r2);
        for (int k = 0; k < 30; ++k) {
            double nwy = std::max(wy + lam * dwy, 1e-4);
            double ns = std::max(s + lam * ds, 1e-4);
            double n1, n2;
            resid(nwy, ns, n1, n2);
            if (std::abs(n1) + std::abs(n2) < base) {
                wy = nwy;
                s = ns;
                r1 = n1;
                r2 = n2;
                break;
            }
            lam *= 0.5;
            if (k == 29) throw std::runtime_error("calibrate_two_lobe: line search failed");
        }
    }
    if (!done && std::abs(r1) + std::abs(r2) >= 1e-10)
        throw std::runtime_error("calibrate_two_lobe: Newton did not converge");
    return ModeModel::two_lobe(wx, wy, s);
}

namespace {

void check_spectrum(const Spectrum& s, const char* who) {
    if (s.lambda_nm.size() != s.value_db.size())
        throw std::invalid_argument(std::string(who) + ": wavelength/value size mismatch");
    if (s.lambda_nm.size() < 2)
        throw std::invalid_argument(std::string(who) + ": need at least two points");
    for (size_t i = 1; i < s.lambda_nm.size(); ++i)
        if (!(s.lambda_nm[i] > s.lambda_nm[i - 1]))
            throw std::invalid_argument(std::string(who) +
                                        ": wavelengths must be strictly increasing");
}

double interp_db(const Spectrum& s, double lam) {
    auto it = std::upper_bound(s.lambda_nm.begin(), s.lambda_nm.end(), lam);
    size_t hi = std::min(size_t(it - s.lambda_nm.begin()), s.lambda_nm.size() - 1);
    size_t lo = hi > 0 ? hi - 1 : 0;
    if (hi == lo) return s.value_db[lo];
    double t = (lam - s.lambda_nm[lo]) / (s.lambda_nm[hi] - s.lambda_nm[lo]);
    return s.value_db[lo] + t * (s.value_db[hi] - s.value_db[lo]);
}

SpectrumSummary diff_spectra(const Spectrum& a, const Spectrum& b, const char* who,
                             double band_lo, double band_hi) {
    check_spectrum(a, who);
    check_spectrum(b, who);
    double lo = std::max(a.lambda_nm.front(), b.lambda_nm.front());
    double hi = std::min(a.lambda_nm.back(), b.lambda_nm.back());
    if (!(lo < hi)) throw std::invalid_argument(std::string(who) + ": disjoint wavelength ranges");

    SpectrumSummary out;
    auto push = [&](double lam) {
        out.curve.lambda_nm.push_back(lam);
        out.curve.value_db.push_back(interp_db(a, lam) - interp_db(b, lam));
    };
    push(lo);
    for (double lam : a.lambda_nm)
        if (lam > lo && lam < hi) push(lam);
    push(hi);

    double slo = lo, shi = hi;
    if (band_hi > band_lo) {
        slo = std::max(lo, band_lo);
        shi = std::min(hi, band_hi);
        if (!(slo <= shi))
            throw std::invalid_argument(std::string(who) + ": requested band outside the data");
    }
    bool any = false;
    for (size_t i = 0; i < out.curve.lambda_nm.size(); ++i) {
        double lam = out.curve.lambda_nm[i], v = out.curve.value_db[i];
        if (lam < slo || lam > shi) continue;
        if (!any || v < out.band_min_db) out.band_min_db = v;
        if (!any || v > out.band_max_db) {
            out.band_max_db = v;
            out.max_at_nm = lam;
        }
        any = true;
    }
    if (!any) throw std::invalid_argument(std::string(who) + ": requested band outside the data");
    return out;
}

}  // namespace

SpectrumSummary per_from_spectra(const Spectrum& favored, const Spectrum& orthogonal) {
    return diff_spectra(favored, orthogonal, "per_from_spectra", 0, 0);
}

SpectrumSummary suppression_from_spectra(const Spectrum& reference, const Spectrum& filtered,
                                         double band_lo_nm, double band_hi_nm) {
    return diff_spectra(reference, filtered, "suppression_from_spectra", band_lo_nm, band_hi_nm);
}

double LossBudget::total_db() const {
    double t = 0;
    for (const auto& e : entries) t += e.loss_db;
    return t;
}

RateBudget rate_budget(double measured_rate, double t_alice, double t_bob, double source_rate,
                       const std::vector<double>& efficiencies) {
    if (!(t_alice > 0) || !(t_bob > 0))
        throw std::invalid_argument("rate_budget: transmissions must be positive");
    if (measured_rate < 0) throw std::invalid_argument("rate_budget: negative measured rate");
    RateBudget rb;
    rb.corrected_rate = measured_rate / (t_alice * t_bob);
    double p = source_rate;
    for (double e : efficiencies) p *= e;
    rb.predicted_rate = p;
    return rb;
}

}  // namespace tbe
