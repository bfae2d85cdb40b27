#include "tbe/qcore.hpp"

#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracle.hpp"
#include "tbe/io.hpp"

using namespace tbe;

TEST_CASE("kets and tensor products") {
    CHECK(ket_1().norm() == doctest::Approx(1.0));
    CHECK(ket_plus().norm() == doctest::Approx(1.0));
    CHECK(ket_L().norm() == doctest::Approx(1.0));

    // |+>|L> = (1/2)(1, i, 1, i) in {|11>,|12>,|21>,|22>}
    Ket4 pl = tensor(ket_plus(), ket_L());
    CHECK(std::abs(pl.a[0] - Cplx(0.5, 0)) < 1e-15);
    CHECK(std::abs(pl.a[1] - Cplx(0, 0.5)) < 1e-15);
    CHECK(std::abs(pl.a[2] - Cplx(0.5, 0)) < 1e-15);
    CHECK(std::abs(pl.a[3] - Cplx(0, 0.5)) < 1e-15);
    CHECK(pl.norm() == doctest::Approx(1.0));

    // bilinearity: tensor(a x + b y, z) = a tensor(x,z) + b tensor(y,z)
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        Ket2 x, y, z;
        for (int i = 0; i < 2; ++i) {
            x.a[size_t(i)] = Cplx(nd(rng), nd(rng));
            y.a[size_t(i)] = Cplx(nd(rng), nd(rng));
            z.a[size_t(i)] = Cplx(nd(rng), nd(rng));
        }
        Cplx a(nd(rng), nd(rng)), b(nd(rng), nd(rng));
        Ket2 mix;
        mix.a[0] = a * x.a[0] + b * y.a[0];
        mix.a[1] = a * x.a[1] + b * y.a[1];
        Ket4 lhs = tensor(mix, z);
        Ket4 t1 = tensor(x, z), t2 = tensor(y, z);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(lhs.a[size_t(i)] - (a * t1.a[size_t(i)] + b * t2.a[size_t(i)])) <
                  1e-12);
    }
}

TEST_CASE("matrix algebra basics") {
    std::mt19937_64 rng(11);
    Mat4 m = random_matrix(rng);
    Mat4 id = Mat4::identity();
    CHECK(max_abs_diff(m * id, m) < 1e-15);
    CHECK(max_abs_diff(id * m, m) < 1e-15);
    CHECK(std::abs(trace(m + m) - 2.0 * trace(m)) < 1e-12);
    // (AB)^dagger = B^dagger A^dagger
    Mat4 a = random_matrix(rng), b = random_matrix(rng);
    CHECK(max_abs_diff(adjoint(a * b), adjoint(b) * adjoint(a)) < 1e-12);
    // expval matches explicit sandwich
    Ket4 k = tensor(ket_plus(), ket_L());
    Cplx acc = 0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) acc += std::conj(k.a[size_t(r)]) * m(r, c) * k.a[size_t(c)];
    CHECK(std::abs(expval(m, k) - acc) < 1e-12);
}

TEST_CASE("hermitian eigensolver on fixed examples") {
    // diagonal
    Mat4 d = Mat4::diag(0.1, 0.7, 0.15, 0.05);
    auto ed = eig_hermitian(d);
    CHECK(ed[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(ed[1] == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(ed[2] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ed[3] == doctest::Approx(0.05).epsilon(1e-12));

    // |phi+><phi+| has spectrum {1, 0, 0, 0}
    auto ep = eig_hermitian(Mat4::outer(ket_phi_plus()));
    CHECK(ep[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ep[1]) < 1e-12);
    CHECK(std::abs(ep[3]) < 1e-12);

    // sigma_x tensor id: eigenvalues (1, 1, -1, -1)
    Mat4 sx;
    sx(0, 2) = 1;
    sx(2, 0) = 1;
    sx(1, 3) = 1;
    sx(3, 1) = 1;
    auto ex = eig_hermitian(sx);
    CHECK(ex[0] == doctest::Approx(1.0));
    CHECK(ex[1] == doctest::Approx(1.0));
    CHECK(ex[2] == doctest::Approx(-1.0));
    CHECK(ex[3] == doctest::Approx(-1.0));
}

TEST_CASE("hermitian eigensolver against the independent oracle") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Mat4 m = random_hermitian(rng);
        auto mine = eig_hermitian_full(m);
        auto ref = oracle::eigenvalues(m);
        for (int i = 0; i < 4; ++i) {
            CHECK(std::abs(ref[size_t(i)].imag()) < 1e-8);
            CHECK(mine.values[size_t(i)] == doctest::Approx(ref[size_t(i)].real()).epsilon(1e-9));
        }
        // eigenpair residuals and orthonormality
        for (int i = 0; i < 4; ++i) {
            Ket4 v;
            for (int r = 0; r < 4; ++r) v.a[size_t(r)] = mine.vectors(r, i);
            CHECK(oracle::eigpair_residual(m, v, mine.values[size_t(i)]) < 1e-10);
            CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("general eigensolver leaves no characteristic-polynomial residual") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        Mat4 m = random_matrix(rng);
        auto eg = eig_general(m);
        REQUIRE(eg.converged);
        auto cp = oracle::char_poly(m);
        double scale = std::max(1.0, frobenius_norm(m));
        double bound = 1e-6 * scale * scale * scale * scale;
        for (const auto& z : eg.values) CHECK(std::abs(oracle::eval_quartic(cp, z)) < bound);
        // and the value sets agree (greedy match)
        auto ref = oracle::eigenvalues(m);
        for (const auto& z : eg.values) {
            double best = 1e300;
            for (const auto& w : ref) best = std::min(best, std::abs(z - w));
            CHECK(best < 1e-6 * scale);
        }
    }
}

TEST_CASE("sqrt_psd squares back") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        Mat4 rho = random_density(rng);
        Mat4 s = sqrt_psd(rho);
        CHECK(max_abs_diff(s * s, rho) < 1e-10);
        CHECK(is_hermitian(s, 1e-10));
    }
}

TEST_CASE("density matrix invariants are enforced") {
    CHECK_NOTHROW(DensityMatrix::from(Mat4::diag(0.25, 0.25, 0.25, 0.25)));

    Mat4 nh = Mat4::diag(0.5, 0.5, 0, 0);
    nh(0, 1) = Cplx(0.2, 0);
    nh(1, 0) = Cplx(0.0, 0.2);  // not the conjugate
    CHECK_THROWS_WITH_AS(DensityMatrix::from(nh),
                         doctest::Contains("hermiticity"), std::invalid_argument);

    CHECK_THROWS_WITH_AS(DensityMatrix::from(Mat4::diag(0.5, 0.5, 0.5, 0.5)),
                         doctest::Contains("unit trace"), std::invalid_argument);

    CHECK_THROWS_WITH_AS(DensityMatrix::from(Mat4::diag(1.5, -0.5, 0, 0)),
                         doctest::Contains("positivity"), std::invalid_argument);
}

TEST_CASE("reference reconstructed state: spectrum and fidelity") {
    Mat4 g = io::read_matrix(data_dir() + "/golden_state.json");
    auto rho = DensityMatrix::from(g, 1e-9, 1e-9);
    auto ev = eig_hermitian(rho.m);
    CHECK(std::abs(ev[0] - 9.99999910e-01) < 1e-6);
    CHECK(std::abs(ev[1] - 9.02487908e-08) < 1e-6);
    CHECK(std::abs(ev[2] - 1.11913599e-10) < 1e-6);
    CHECK(std::abs(ev[3] - 1.22826754e-13) < 1e-6);
    // eigenvalues cross-checked against the independent oracle; the oracle's
    // polynomial root finder carries ~1e-7 noise on this clustered spectrum
    auto ref = oracle::eigenvalues(rho.m);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(ev[size_t(i)] - ref[size_t(i)].real()) < 1e-6);

    CHECK(std::abs(fidelity_pure(rho, ket_phi_plus()) - 0.9584) < 5e-4);
    CHECK(fidelity_pure(DensityMatrix::phi_plus(), ket_phi_plus()) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // orthogonal state: psi- = (|12> - |21>)/sqrt(2) has zero overlap with phi+
    Ket4 psim;
    psim.a[1] = 1 / std::sqrt(2.0);
    psim.a[2] = -1 / std::sqrt(2.0);
    CHECK(fidelity_pure(DensityMatrix::phi_plus(), psim) < 1e-12);
}

TEST_CASE("printed-precision matrix round-trips through JSON at 4 decimals") {
    Mat4 p = io::read_matrix(data_dir() + "/golden_state_printed.json");
    CHECK(is_hermitian(p, 1e-12));
    // the 4-decimal truncation breaks the unit-trace invariant at tight tolerance
    CHECK_THROWS_AS(DensityMatrix::from(p, 1e-10, 1e-10), std::invalid_argument);
    // but is accepted with a tolerance matching the print precision
    CHECK_NOTHROW(DensityMatrix::from(p, 1e-3, 1e-3, -1e-3));

    std::string text = io::matrix_to_json(p);
    Mat4 q = io::matrix_from_json(text);
    CHECK(max_abs_diff(p, q) == 0.0);
    // against the full-precision file: equal at print precision
    Mat4 g = io::read_matrix(data_dir() + "/golden_state.json");
    CHECK(max_abs_diff(p, g) < 5.1e-5);
}
