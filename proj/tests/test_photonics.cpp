#include "tbe/photonics.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

using namespace tbe;

namespace {

Spectrum flat(double lo, double hi, int n, double level_db) {
    Spectrum s;
    for (int i = 0; i < n; ++i) {
        s.lambda_nm.push_back(lo + (hi - lo) * i / (n - 1));
        s.value_db.push_back(level_db);
    }
    return s;
}

}  // namespace

TEST_CASE("identical modes couple without loss") {
    auto f = synthesize(ModeModel::gaussian(3.9));
    auto r = overlap(f, f);
    CHECK(r.eta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.loss_db == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(!r.disjoint_warning);
}

TEST_CASE("closed-form gaussian overlap") {
    // equal waists: eta = exp(-delta^2 / w^2)
    for (double d : {0.0, 0.4, 1.3})
        CHECK(gaussian_overlap_eta(1.95, 1.95, d) ==
              doctest::Approx(std::exp(-d * d / (1.95 * 1.95))).epsilon(1e-12));
    // mismatched waists on axis: (2 wa wb / (wa^2 + wb^2))^2
    double wa = 1.2, wb = 2.0, s = wa * wa + wb * wb;
    CHECK(gaussian_overlap_eta(wa, wb, 0) ==
          doctest::Approx(std::pow(2 * wa * wb / s, 2)).epsilon(1e-12));
    CHECK_THROWS_AS(gaussian_overlap_eta(0, 1, 0), std::invalid_argument);

    CHECK(loss_db_from_eta(0.55) == doctest::Approx(2.596373).epsilon(1e-6));
    CHECK(std::isinf(loss_db_from_eta(0.0)));
}

TEST_CASE("raster overlap matches the closed form for displaced gaussians") {
    auto a = synthesize(ModeModel::gaussian(3.9), 0.05);
    auto b = synthesize(ModeModel::gaussian(5.0), 0.05);
    for (double dx : {0.0, 0.8, 1.6}) {
        double want = gaussian_overlap_eta(3.9 / 2, 5.0 / 2, dx);
        CHECK(overlap(a, b, dx, 0).eta == doctest::Approx(want).epsilon(1e-4));
        CHECK(overlap(a, b, 0, dx).eta == doctest::Approx(want).epsilon(1e-4));
    }
    // circular symmetry: only the displacement magnitude matters
    double want = gaussian_overlap_eta(3.9 / 2, 5.0 / 2, std::hypot(0.5, 0.9));
    CHECK(overlap(a, b, 0.5, 0.9).eta == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("overlap is symmetric, scale and phase invariant, bounded by one") {
    auto a = synthesize(ModeModel::gaussian(3.9), 0.04);
    auto b = synthesize(ModeModel::gaussian(3.0), 0.04);
    auto r_ab = overlap(a, b, 0.7, -0.3);
    auto r_ba = overlap(b, a, -0.7, 0.3);
    CHECK(r_ab.eta == doctest::Approx(r_ba.eta).epsilon(1e-4));

    auto scaled = b;
    for (auto& c : scaled.amps) c *= Cplx(0.21, 0.28);  // 0.35 e^{i phi}
    CHECK(overlap(a, scaled, 0.7, -0.3).eta == doctest::Approx(r_ab.eta).epsilon(1e-12));

    for (double dx : {0.0, 0.3, 1.1, 2.7}) CHECK(overlap(a, b, dx, 0.2).eta <= 1.0);
}

TEST_CASE("degenerate rasters are diagnosed") {
    CHECK_THROWS_WITH_AS(synthesize(ModeModel::gaussian(3.9), 0.0), doctest::Contains("step"),
                         std::invalid_argument);
    CHECK_THROWS_AS(synthesize(ModeModel::gaussian(-1.0)), std::invalid_argument);
    CHECK_THROWS_AS(synthesize(ModeModel::two_lobe(0, 0.3, 0.8)), std::invalid_argument);

    ModeField tiny;
    tiny.nx = tiny.ny = 1;
    tiny.dx = tiny.dy = 0.1;
    tiny.amps = {Cplx(1, 0)};
    CHECK_THROWS_WITH_AS(overlap(tiny, tiny), doctest::Contains("2x2"), std::invalid_argument);

    auto f = synthesize(ModeModel::gaussian(3.9));
    auto far = overlap(f, f, 50.0, 0.0);
    CHECK(far.disjoint_warning);
    CHECK(std::isinf(far.loss_db));
}

TEST_CASE("a merged two-lobe mode reduces to a gaussian") {
    double w = 1.4;
    auto lobe = synthesize(ModeModel::two_lobe(w, w, 0.0), 0.05);
    for (double dx : {0.0, 0.9}) {
        double want = gaussian_overlap_eta(w, 1.95, dx);
        CHECK(overlap(lobe, synthesize(ModeModel::gaussian(3.9), 0.05), dx, 0).eta ==
              doctest::Approx(want).epsilon(2e-4));
    }
}

TEST_CASE("two-lobe calibration reproduces the pinned geometry") {
    auto m = calibrate_two_lobe(0.55, 1.1, 0.7, 3.9);
    CHECK(m.kind == ModeModel::Kind::TwoLobe);
    CHECK(m.lobe_wx == doctest::Approx(2.589870).epsilon(1e-4));
    CHECK(m.lobe_wy == doctest::Approx(0.326921).epsilon(1e-4));
    CHECK(m.separation == doctest::Approx(0.799438).epsilon(1e-4));

    // rasterized on-axis coupling hits the calibration target
    auto mode = synthesize(m, 0.02);
    auto probe = synthesize(ModeModel::gaussian(3.9), 0.02);
    auto r = overlap(mode, probe);
    CHECK(r.eta == doctest::Approx(0.55).epsilon(2e-3));
    CHECK(r.loss_db == doctest::Approx(2.596).epsilon(2e-3));

    CHECK_THROWS_AS(calibrate_two_lobe(1.2, 1.1, 0.7, 3.9), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_two_lobe(0.55, 0.3, 0.7, 3.9), std::invalid_argument);
}

TEST_CASE("displacement scan recovers the calibrated tolerances") {
    auto m = calibrate_two_lobe(0.55, 1.1, 0.7, 3.9);
    auto mode = synthesize(m, 0.08);
    auto probe = synthesize(ModeModel::gaussian(3.9), 0.08);
    auto sc = scan_displacement(mode, probe, 2.2, 1.2, 0.1);

    CHECK(sc.min_loss_db == doctest::Approx(2.596).epsilon(0.02));
    CHECK(std::abs(sc.min_x) < 0.05);
    CHECK(std::abs(sc.min_y) < 0.05);
    CHECK(sc.tol1_x == doctest::Approx(1.1).epsilon(0.05));
    CHECK(sc.tol1_y == doctest::Approx(0.7).epsilon(0.05));
    // the x profile is gaussian, so the +3 dB half-width is sqrt(3) larger
    CHECK(sc.tol3_x == doctest::Approx(std::sqrt(3.0) * sc.tol1_x).epsilon(0.05));
    CHECK(sc.tol3_y > sc.tol1_y);

    auto ser = scan_displacement(mode, probe, 2.2, 1.2, 0.1, false);
    CHECK(ser.loss_db == sc.loss_db);
    CHECK(ser.min_loss_db == sc.min_loss_db);
    CHECK(ser.tol1_x == sc.tol1_x);

    CHECK_THROWS_AS(scan_displacement(mode, probe, 2.2, 1.2, 0.0), std::invalid_argument);
}

TEST_CASE("spectra differences and band summaries") {
    auto fav = flat(1520, 1570, 6, -10);
    auto orth = flat(1515, 1573, 30, -40);
    auto per = per_from_spectra(fav, orth);
    CHECK(per.curve.lambda_nm.front() == doctest::Approx(1520.0));
    CHECK(per.curve.lambda_nm.back() == doctest::Approx(1570.0));
    for (double v : per.curve.value_db) CHECK(v == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(per.band_min_db == doctest::Approx(30.0));
    CHECK(per.band_max_db == doctest::Approx(30.0));

    auto same = per_from_spectra(fav, fav);
    CHECK(same.band_max_db == doctest::Approx(0.0));

    // a notch filter: suppression peaks where the filtered trace dips
    Spectrum ref = flat(784.5, 785.5, 101, 0.0);
    Spectrum filt = ref;
    for (size_t i = 0; i < filt.lambda_nm.size(); ++i) {
        double d = (filt.lambda_nm[i] - 785.05) / 0.1;
        filt.value_db[i] = -45.0 * std::exp(-d * d);
    }
    auto sup = suppression_from_spectra(ref, filt, 785.0, 785.1);
    CHECK(sup.max_at_nm == doctest::Approx(785.05).epsilon(1e-6));
    CHECK(sup.band_max_db > 40.0);
    CHECK(sup.band_min_db > 0.0);

    CHECK_THROWS_WITH_AS(suppression_from_spectra(ref, filt, 790.0, 791.0),
                         doctest::Contains("band"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(per_from_spectra(flat(100, 200, 5, 0), flat(300, 400, 5, 0)),
                         doctest::Contains("disjoint"), std::invalid_argument);

    Spectrum bad = fav;
    std::swap(bad.lambda_nm[1], bad.lambda_nm[2]);
    CHECK_THROWS_WITH_AS(per_from_spectra(bad, orth), doctest::Contains("increasing"),
                         std::invalid_argument);
    bad = fav;
    bad.value_db.pop_back();
    CHECK_THROWS_AS(per_from_spectra(bad, orth), std::invalid_argument);
}

TEST_CASE("loss and rate budgets") {
    LossBudget lb;
    lb.entries = {{"splice", 0.1}, {"coupling", 2.6}, {"filter", 1.2}};
    CHECK(lb.total_db() == doctest::Approx(3.9));

    auto rb = rate_budget(1.4, 0.05, 0.05);
    CHECK(rb.corrected_rate == doctest::Approx(560.0));
    CHECK(rate_budget(1.4, 0.07, 0.07).corrected_rate == doctest::Approx(1.4 / 0.0049));

    auto pred = rate_budget(1.4, 0.05, 0.05, 1e6, {0.5, 0.2});
    CHECK(pred.predicted_rate == doctest::Approx(1e5));

    CHECK_THROWS_WITH_AS(rate_budget(1.0, 0.0, 0.5), doctest::Contains("transmissions"),
                         std::invalid_argument);
    CHECK_THROWS_AS(rate_budget(-1.0, 0.5, 0.5), std::invalid_argument);
}
