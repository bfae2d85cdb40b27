#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

namespace {

tbe::Mat4 mul(const tbe::Mat4& a, const tbe::Mat4& b) {
    tbe::Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            C s = 0;
            for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

C tr(const tbe::Mat4& m) { return m(0, 0) + m(1, 1) + m(2, 2) + m(3, 3); }

// one Laguerre step for a monic polynomial given as high-to-low coefficient
// list (leading 1 implicit)
C laguerre(const std::vector<C>& a, C x) {
    int n = int(a.size());  // degree
    for (int it = 0; it < 200; ++it) {
        // evaluate p, p', p'' by Horner
        C p = 1, dp = 0, ddp = 0;
        for (int i = 0; i < n; ++i) {
            ddp = ddp * x + 2.0 * dp;
            dp = dp * x + p;
            p = p * x + a[size_t(i)];
        }
        ddp *= 0.5;
        if (std::abs(p) < 1e-300) return x;
        C g = dp / p;
        C h = g * g - 2.0 * ddp / p;
        C sq = std::sqrt(double(n - 1) * (double(n) * h - g * g));
        C d1 = g + sq, d2 = g - sq;
        C d = std::abs(d1) > std::abs(d2) ? d1 : d2;
        if (std::abs(d) < 1e-300) {
            x += 0.1;
            continue;
        }
        C dx = double(n) / d;
        x -= dx;
        if (std::abs(dx) < 1e-15 * (1 + std::abs(x))) return x;
    }
    return x;
}

}  // namespace

std::array<C, 4> char_poly(const tbe::Mat4& m) {
    // power sums p_k = tr(m^k), elementary symmetric via Newton's identities
    tbe::Mat4 m2 = mul(m, m);
    tbe::Mat4 m3 = mul(m2, m);
    tbe::Mat4 m4 = mul(m3, m);
    C p1 = tr(m), p2 = tr(m2), p3 = tr(m3), p4 = tr(m4);
    C e1 = p1;
    C e2 = (e1 * p1 - p2) / 2.0;
    C e3 = (e2 * p1 - e1 * p2 + p3) / 3.0;
    C e4 = (e3 * p1 - e2 * p2 + e1 * p3 - p4) / 4.0;
    // l^4 - e1 l^3 + e2 l^2 - e3 l + e4
    return {e4, -e3, e2, -e1};
}

C eval_quartic(const std::array<C, 4>& c, C z) {
    return ((z + c[3]) * z + c[2]) * z * z + c[1] * z + c[0];
}

std::array<C, 4> quartic_roots(const std::array<C, 4>& c) {
    std::vector<C> a = {c[3], c[2], c[1], c[0]};  // high-to-low tail, monic
    std::array<C, 4> roots{};
    int found = 0;
    while (int(a.size()) > 2) {
        C r = laguerre(a, C(0, 0));
        roots[size_t(found++)] = r;
        // synthetic division by (x - r): quotient tail c_i = a_i + r c_{i-1}
        std::vector<C> q(a.size() - 1);
        C prev = 1;
        for (size_t i = 0; i + 1 < a.size(); ++i) {
            q[i] = a[i] + prev * r;
            prev = q[i];
        }
        a = q;
    }
    // quadratic x^2 + a[0] x + a[1]
    C half = -a[0] / 2.0;
    C disc = std::sqrt(half * half - a[1]);
    roots[size_t(found++)] = half + disc;
    roots[size_t(found++)] = half - disc;
    // polish on the original quartic with plain Newton
    std::array<C, 4> cc = c;
    for (auto& r : roots) {
        for (int it = 0; it < 5; ++it) {
            C p = eval_quartic(cc, r);
            C dp = ((4.0 * r + 3.0 * cc[3]) * r + 2.0 * cc[2]) * r + cc[1];
            if (std::abs(dp) < 1e-300) break;
            r -= p / dp;
        }
    }
    return roots;
}

std::array<C, 4> eigenvalues(const tbe::Mat4& m) {
    auto roots = quartic_roots(char_poly(m));
    std::sort(roots.begin(), roots.end(),
              [](const C& x, const C& y) { return x.real() > y.real(); });
    return roots;
}

double eigpair_residual(const tbe::Mat4& m, const tbe::Ket4& v, double lambda) {
    double s = 0;
    for (int r = 0; r < 4; ++r) {
        C acc = 0;
        for (int c = 0; c < 4; ++c) acc += m(r, c) * v.a[size_t(c)];
        acc -= lambda * v.a[size_t(r)];
        s += std::norm(acc);
    }
    return std::sqrt(s);
}

}  // namespace oracle
