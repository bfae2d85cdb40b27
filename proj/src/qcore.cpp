#include "tbe/qcore.hpp"

#include <algorithm>
#include <cmath>

namespace tbe {

double Ket2::norm() const { return std::sqrt(std::norm(a[0]) + std::norm(a[1])); }
void Ket2::normalize() {
    double n = norm();
    if (n == 0) throw std::invalid_argument("cannot normalize zero ket");
    a[0] /= n;
    a[1] /= n;
}

double Ket4::norm() const {
    double s = 0;
    for (auto& c : a) s += std::norm(c);
    return std::sqrt(s);
}
void Ket4::normalize() {
    double n = norm();
    if (n == 0) throw std::invalid_argument("cannot normalize zero ket");
    for (auto& c : a) c /= n;
}

Mat4 Mat4::identity() {
    Mat4 m;
    for (int i = 0; i < 4; ++i) m(i, i) = 1;
    return m;
}

Mat4 Mat4::outer(const Ket4& k) {
    Mat4 m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = k.a[size_t(i)] * std::conj(k.a[size_t(j)]);
    return m;
}

Mat4 Mat4::diag(double a, double b, double c, double d) {
    Mat4 m;
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    m(3, 3) = d;
    return m;
}

Mat4 operator+(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (size_t i = 0; i < 16; ++i) r.e[i] = x.e[i] + y.e[i];
    return r;
}

Mat4 operator-(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (size_t i = 0; i < 16; ++i) r.e[i] = x.e[i] - y.e[i];
    return r;
}

Mat4 operator*(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            Cplx xik = x(i, k);
            if (xik == Cplx(0)) continue;
            for (int j = 0; j < 4; ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

Mat4 operator*(Cplx s, const Mat4& x) {
    Mat4 r;
    for (size_t i = 0; i < 16; ++i) r.e[i] = s * x.e[i];
    return r;
}

Mat4 operator*(double s, const Mat4& x) { return Cplx(s, 0) * x; }

Ket4 operator*(const Mat4& x, const Ket4& k) {
    Ket4 r;
    for (int i = 0; i < 4; ++i) {
        Cplx s = 0;
        for (int j = 0; j < 4; ++j) s += x(i, j) * k.a[size_t(j)];
        r.a[size_t(i)] = s;
    }
    return r;
}

Mat4 adjoint(const Mat4& m) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = std::conj(m(j, i));
    return r;
}

Mat4 transpose(const Mat4& m) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = m(j, i);
    return r;
}

Mat4 conjugate(const Mat4& m) {
    Mat4 r;
    for (size_t i = 0; i < 16; ++i) r.e[i] = std::conj(m.e[i]);
    return r;
}

Cplx trace(const Mat4& m) { return m(0, 0) + m(1, 1) + m(2, 2) + m(3, 3); }

double frobenius_norm(const Mat4& m) {
    double s = 0;
    for (auto& c : m.e) s += std::norm(c);
    return std::sqrt(s);
}

double max_abs_diff(const Mat4& x, const Mat4& y) {
    double d = 0;
    for (size_t i = 0; i < 16; ++i) d = std::max(d, std::abs(x.e[i] - y.e[i]));
    return d;
}

bool is_hermitian(const Mat4& m, double tol) {
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
    return true;
}

Cplx expval(const Mat4& m, const Ket4& k) {
    Cplx s = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) s += std::conj(k.a[size_t(i)]) * m(i, j) * k.a[size_t(j)];
    return s;
}

static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

Ket2 ket_1() { return Ket2{{Cplx(1), Cplx(0)}}; }
Ket2 ket_2() { return Ket2{{Cplx(0), Cplx(1)}}; }
Ket2 ket_plus() { return Ket2{{Cplx(kInvSqrt2), Cplx(kInvSqrt2)}}; }
Ket2 ket_L() { return Ket2{{Cplx(kInvSqrt2), Cplx(0, kInvSqrt2)}}; }

Ket4 ket_phi_plus() {
    Ket4 k;
    k.a[0] = kInvSqrt2;
    k.a[3] = kInvSqrt2;
    return k;
}

Ket4 tensor(const Ket2& x, const Ket2& y) {
    Ket4 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.a[size_t(i * 2 + j)] = x.a[size_t(i)] * y.a[size_t(j)];
    return r;
}

DensityMatrix DensityMatrix::from(const Mat4& m, double herm_tol, double trace_tol,
                                  double eig_floor) {
    if (!is_hermitian(m, herm_tol)) throw std::invalid_argument("density matrix invariant violated: hermiticity");
    double tr = trace(m).real();
    if (std::abs(tr - 1.0) > trace_tol) throw std::invalid_argument("density matrix invariant violated: unit trace");
    auto ev = eig_hermitian(m, herm_tol);
    if (ev[3] < eig_floor) throw std::invalid_argument("density matrix invariant violated: positivity");
    DensityMatrix d;
    d.m = m;
    return d;
}

DensityMatrix DensityMatrix::phi_plus() {
    DensityMatrix d;
    d.m = Mat4::outer(ket_phi_plus());
    return d;
}

DensityMatrix DensityMatrix::maximally_mixed() {
    DensityMatrix d;
    d.m = 0.25 * Mat4::identity();
    return d;
}

double fidelity_pure(const DensityMatrix& rho, const Ket4& psi) {
    if (!is_hermitian(rho.m, 1e-8)) throw std::invalid_argument("fidelity_pure: non-Hermitian state");
    return expval(rho.m, psi).real();
}

// ---- eigensolvers ----

// Cyclic complex Jacobi. Each sweep zeroes the three upper off-diagonal pairs;
// convergence is quadratic, a handful of sweeps suffices at double precision.
EighResult eig_hermitian_full(const Mat4& m, double herm_tol) {
    if (!is_hermitian(m, herm_tol)) throw std::invalid_argument("eig_hermitian: non-Hermitian input");
    Mat4 a = 0.5 * (m + adjoint(m));  // symmetrize roundoff
    Mat4 v = Mat4::identity();

    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = 0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off += std::abs(a(p, q));
        if (off < 1e-15 * (1.0 + frobenius_norm(a))) break;

        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) {
                double r = std::abs(a(p, q));
                if (r < 1e-300) continue;
                Cplx phase = a(p, q) / r;  // e^{i phi}
                double app = a(p, p).real(), aqq = a(q, q).real();
                double tau = (aqq - app) / (2 * r);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1 + tau * tau));
                double c = 1 / std::sqrt(1 + t * t), s = t * c;
                // U: U(p,p)=c, U(q,q)=c, U(p,q)=s*phase, U(q,p)=-s*conj(phase)
                Cplx upq = s * phase, uqp = -s * std::conj(phase);
                // A <- U^dagger A U, V <- V U
                for (int k = 0; k < 4; ++k) {  // right multiply
                    Cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp * c + akq * uqp;
                    a(k, q) = akp * upq + akq * c;
                    Cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp * c + vkq * uqp;
                    v(k, q) = vkp * upq + vkq * c;
                }
                for (int k = 0; k < 4; ++k) {  // left multiply by U^dagger
                    Cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk + std::conj(uqp) * aqk;
                    a(q, k) = std::conj(upq) * apk + c * aqk;
                }
                a(p, q) = 0;  // exact zero by construction
                a(q, p) = 0;
            }
    }

    std::array<int, 4> order{0, 1, 2, 3};
    std::array<double, 4> d{};
    for (int i = 0; i < 4; ++i) d[size_t(i)] = a(i, i).real();
    std::sort(order.begin(), order.end(), [&](int x, int y) { return d[size_t(x)] > d[size_t(y)]; });

    EighResult res;
    for (int i = 0; i < 4; ++i) {
        res.values[size_t(i)] = d[size_t(order[size_t(i)])];
        for (int k = 0; k < 4; ++k) res.vectors(k, i) = v(k, order[size_t(i)]);
    }
    return res;
}

std::array<double, 4> eig_hermitian(const Mat4& m, double herm_tol) {
    return eig_hermitian_full(m, herm_tol).values;
}

// Faddeev-LeVerrier: coefficients of det(lambda I - A) = l^4 + c3 l^3 + ... + c0
static std::array<Cplx, 4> char_poly(const Mat4& a) {
    Mat4 m1 = a;
    Cplx c3 = -trace(m1);
    Mat4 m2 = a * (m1 + c3 * Mat4::identity());
    Cplx c2 = -trace(m2) * 0.5;
    Mat4 m3 = a * (m2 + c2 * Mat4::identity());
    Cplx c1 = -trace(m3) / 3.0;
    Mat4 m4 = a * (m3 + c1 * Mat4::identity());
    Cplx c0 = -trace(m4) * 0.25;
    return {c0, c1, c2, c3};
}

EigGenResult eig_general(const Mat4& m) {
    auto c = char_poly(m);
    auto p = [&](Cplx z) { return (((z + c[3]) * z + c[2]) * z + c[1]) * z + c[0]; };

    double scale = std::max(1.0, frobenius_norm(m));
    EigGenResult res;
    // Durand-Kerner from non-symmetric starting points
    std::array<Cplx, 4> z;
    Cplx w(0.4, 0.9);
    z[0] = scale * w;
    for (int i = 1; i < 4; ++i) z[size_t(i)] = z[size_t(i - 1)] * w;

    int it = 0;
    for (; it < 1000; ++it) {
        double shift = 0;
        for (int i = 0; i < 4; ++i) {
            Cplx den = 1;
            for (int j = 0; j < 4; ++j)
                if (j != i) den *= z[size_t(i)] - z[size_t(j)];
            if (std::abs(den) < 1e-300) den = 1e-300;
            Cplx dz = p(z[size_t(i)]) / den;
            z[size_t(i)] -= dz;
            shift = std::max(shift, std::abs(dz));
        }
        if (shift < 1e-15 * scale) {
            res.converged = true;
            break;
        }
    }
    res.iterations = it;
    if (!res.converged) {
        // multiple roots converge linearly; accept if residuals are small
        double worst = 0;
        for (auto& zi : z) worst = std::max(worst, std::abs(p(zi)));
        res.converged = worst < 1e-9 * std::pow(std::max(1.0, scale), 4);
    }
    std::sort(z.begin(), z.end(), [](Cplx a, Cplx b) { return a.real() > b.real(); });
    res.values = z;
    return res;
}

Mat4 sqrt_psd(const Mat4& m) {
    auto eg = eig_hermitian_full(m);
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        double lam = std::max(0.0, eg.values[size_t(i)]);
        double s = std::sqrt(lam);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) r(a, b) += s * eg.vectors(a, i) * std::conj(eg.vectors(b, i));
    }
    return r;
}

}  // namespace tbe
