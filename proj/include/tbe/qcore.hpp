#pragma once
// Complex linear algebra and two-qubit primitives, sized for 2x2/4x4 problems.
// Basis order everywhere: {|11>, |12>, |21>, |22>}.

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

namespace tbe {

using Cplx = std::complex<double>;

struct Ket2 {
    std::array<Cplx, 2> a{};
    double norm() const;
    void normalize();
};

struct Ket4 {
    std::array<Cplx, 4> a{};
    double norm() const;
    void normalize();
};

struct Mat4 {
    std::array<Cplx, 16> e{};
    Cplx& operator()(int r, int c) { return e[size_t(r) * 4 + size_t(c)]; }
    const Cplx& operator()(int r, int c) const { return e[size_t(r) * 4 + size_t(c)]; }

    static Mat4 zero() { return {}; }
    static Mat4 identity();
    static Mat4 outer(const Ket4& k);              // |k><k|
    static Mat4 diag(double a, double b, double c, double d);
};

Mat4 operator+(const Mat4& x, const Mat4& y);
Mat4 operator-(const Mat4& x, const Mat4& y);
Mat4 operator*(const Mat4& x, const Mat4& y);
Mat4 operator*(Cplx s, const Mat4& x);
Mat4 operator*(double s, const Mat4& x);
Ket4 operator*(const Mat4& x, const Ket4& k);

Mat4 adjoint(const Mat4& m);
Mat4 transpose(const Mat4& m);
Mat4 conjugate(const Mat4& m);
Cplx trace(const Mat4& m);
double frobenius_norm(const Mat4& m);
double max_abs_diff(const Mat4& x, const Mat4& y);
bool is_hermitian(const Mat4& m, double tol);

// expectation <k|m|k>
Cplx expval(const Mat4& m, const Ket4& k);

// fixed kets of the analysis bases
Ket2 ket_1();
Ket2 ket_2();
Ket2 ket_plus();   // (|1> + |2>)/sqrt(2)
Ket2 ket_L();      // (|1> + i|2>)/sqrt(2)
Ket4 ket_phi_plus();

// Kronecker product in the fixed basis order; bilinear (no renormalization:
// norm multiplies, so normalized inputs give a normalized output).
Ket4 tensor(const Ket2& x, const Ket2& y);

// Validated density matrix. Construction checks hermiticity, unit trace and
// positivity; tolerances per reconstructed-matrix use.
struct DensityMatrix {
    Mat4 m;
    // throws std::invalid_argument naming the violated invariant
    static DensityMatrix from(const Mat4& m, double herm_tol = 1e-10,
                              double trace_tol = 1e-10, double eig_floor = -1e-8);
    static DensityMatrix phi_plus();
    static DensityMatrix maximally_mixed();
};

// <psi|rho|psi>, real in [0,1] up to numerical noise; rejects non-Hermitian rho.
double fidelity_pure(const DensityMatrix& rho, const Ket4& psi);

struct EighResult {
    std::array<double, 4> values{};  // descending
    Mat4 vectors;                    // columns, matching values order
};

// Cyclic Jacobi for 4x4 complex Hermitian matrices.
EighResult eig_hermitian_full(const Mat4& m, double herm_tol = 1e-8);
std::array<double, 4> eig_hermitian(const Mat4& m, double herm_tol = 1e-8);

struct EigGenResult {
    std::array<Cplx, 4> values{};
    bool converged = false;
    int iterations = 0;
};

// General 4x4 eigenvalues: Faddeev-LeVerrier characteristic polynomial +
// Durand-Kerner root iteration.
EigGenResult eig_general(const Mat4& m);

// principal square root of a PSD Hermitian matrix (eigen route)
Mat4 sqrt_psd(const Mat4& m);

}  // namespace tbe
