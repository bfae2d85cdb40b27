#pragma once
// shared bits for the unit tests

#include <cstdlib>
#include <random>
#include <string>

#include "tbe/qcore.hpp"

inline std::string data_dir() {
    const char* env = std::getenv("TBE_DATA_DIR");
    return env ? env : "data";
}

inline tbe::Mat4 random_hermitian(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    tbe::Mat4 m;
    for (int r = 0; r < 4; ++r) {
        m(r, r) = nd(rng);
        for (int c = r + 1; c < 4; ++c) {
            tbe::Cplx v(nd(rng), nd(rng));
            m(r, c) = v;
            m(c, r) = std::conj(v);
        }
    }
    return m;
}

inline tbe::Mat4 random_matrix(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    tbe::Mat4 m;
    for (auto& e : m.e) e = tbe::Cplx(nd(rng), nd(rng));
    return m;
}

// random density matrix through a PSD square
inline tbe::Mat4 random_density(std::mt19937_64& rng) {
    tbe::Mat4 a = random_matrix(rng);
    tbe::Mat4 p = tbe::adjoint(a) * a;
    return (1.0 / tbe::trace(p).real()) * p;
}
