#pragma once

#include <span>
#include <vector>

#include "dtmm/frame.hpp"

namespace dtmm {

/// Dense complex matrix, row-major. Small orders only (n <= 16 in this
/// library); everything is value-semantic and safe to share across threads.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(std::size_t(rows) * cols) {}

    static CMatrix identity(int n);
    static CMatrix diagonal(std::span<const cplx> d);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    cplx& operator()(int i, int j) { return a_[std::size_t(i) * cols_ + j]; }
    const cplx& operator()(int i, int j) const { return a_[std::size_t(i) * cols_ + j]; }

    CMatrix operator+(const CMatrix& o) const;
    CMatrix operator-(const CMatrix& o) const;
    CMatrix operator*(const CMatrix& o) const;
    CMatrix operator*(cplx s) const;
    CMatrix& operator+=(const CMatrix& o);

    /// Largest entry magnitude.
    double max_abs() const;
    /// Max entrywise |this - o|.
    double max_abs_diff(const CMatrix& o) const;
    /// 1-norm (max column sum).
    double norm1() const;
    cplx trace() const;
    bool finite() const;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<cplx> a_;
};

/// Solve A X = B by partial-pivot LU. Throws NumericError if A is singular.
CMatrix lu_solve(const CMatrix& A, const CMatrix& B);

/// Determinant by LU.
cplx det(const CMatrix& A);

/// Matrix exponential by Pade scaling-and-squaring; relative accuracy near
/// machine precision for the orders used here. Throws NumericError when
/// entries overflow.
CMatrix mat_exp(const CMatrix& M);

/// Exact 2x2 exponential: with A = M - (tr M/2) I and delta = sqrt(det A),
/// exp(M) = exp(tr M/2) (cos(delta) I + sinc(delta) A). Cayley-Hamilton gives
/// A^2 = -det(A) I for traceless A, so the argument of cos/sinc is sqrt(det A);
/// the branch does not matter since both are even. A series guard handles
/// delta near 0.
CMatrix mat_exp_2x2(const CMatrix& M);

/// D_ij = k_j^(i-1) and C_ij = (i-1) k_j^(i-2) (first row of C is zero).
struct VandermondePair {
    CMatrix D, C;
};
VandermondePair vandermonde(std::span<const cplx> roots);
VandermondePair vandermonde(const RootFrame& fr);

/// Inverse of the Vandermonde matrix by expanding the Lagrange interpolation
/// polynomials Gamma_i(t) = prod_{j!=i} (t - k_j)/(k_i - k_j) into monomial
/// coefficients gamma_ij. Throws DegeneracyError on a repeated root.
CMatrix vandermonde_inverse(std::span<const cplx> roots);
CMatrix vandermonde_inverse(const RootFrame& fr);

}  // namespace dtmm
