#include "dtmm/cmatrix.hpp"

#include <cmath>

#include "dtmm/errors.hpp"

namespace dtmm {

CMatrix CMatrix::identity(int n) {
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = cplx(1, 0);
    return m;
}

CMatrix CMatrix::diagonal(std::span<const cplx> d) {
    CMatrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (int i = 0; i < m.rows(); ++i) m(i, i) = d[static_cast<std::size_t>(i)];
    return m;
}

CMatrix CMatrix::operator+(const CMatrix& o) const {
    CMatrix r = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
    return r;
}

CMatrix CMatrix::operator-(const CMatrix& o) const {
    CMatrix r = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
    return r;
}

CMatrix CMatrix::operator*(const CMatrix& o) const {
    CMatrix r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
        for (int k = 0; k < cols_; ++k) {
            cplx v = (*this)(i, k);
            if (v == cplx(0, 0)) continue;
            for (int j = 0; j < o.cols_; ++j) r(i, j) += v * o(k, j);
        }
    return r;
}

CMatrix CMatrix::operator*(cplx s) const {
    CMatrix r = *this;
    for (auto& v : r.a_) v *= s;
    return r;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

double CMatrix::max_abs() const {
    double m = 0.0;
    for (const auto& v : a_) m = std::max(m, std::abs(v));
    return m;
}

double CMatrix::max_abs_diff(const CMatrix& o) const {
    double m = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) m = std::max(m, std::abs(a_[i] - o.a_[i]));
    return m;
}

double CMatrix::norm1() const {
    double m = 0.0;
    for (int j = 0; j < cols_; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
        m = std::max(m, s);
    }
    return m;
}

cplx CMatrix::trace() const {
    cplx t(0, 0);
    for (int i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
}

bool CMatrix::finite() const {
    for (const auto& v : a_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

// ---------------------------------------------------------------------------
// LU
// ---------------------------------------------------------------------------

namespace {

struct Lu {
    CMatrix m;
    std::vector<int> perm;
    int sign = 1;
};

Lu lu_factor(const CMatrix& A) {
    if (A.rows() != A.cols()) throw NumericError("LU factorization needs a square matrix");
    const int n = A.rows();
    Lu lu{A, std::vector<int>(static_cast<std::size_t>(n)), 1};
    for (int i = 0; i < n; ++i) lu.perm[static_cast<std::size_t>(i)] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(lu.m(k, k));
        for (int i = k + 1; i < n; ++i)
            if (std::abs(lu.m(i, k)) > best) {
                best = std::abs(lu.m(i, k));
                piv = i;
            }
        if (best == 0.0) throw NumericError("singular matrix in LU solve");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(lu.m(piv, j), lu.m(k, j));
            std::swap(lu.perm[static_cast<std::size_t>(piv)],
                      lu.perm[static_cast<std::size_t>(k)]);
            lu.sign = -lu.sign;
        }
        for (int i = k + 1; i < n; ++i) {
            lu.m(i, k) /= lu.m(k, k);
            cplx f = lu.m(i, k);
            for (int j = k + 1; j < n; ++j) lu.m(i, j) -= f * lu.m(k, j);
        }
    }
    return lu;
}

}  // namespace

CMatrix lu_solve(const CMatrix& A, const CMatrix& B) {
    Lu lu = lu_factor(A);
    const int n = A.rows(), m = B.cols();
    CMatrix X(n, m);
    for (int c = 0; c < m; ++c) {
        // Forward substitution on the permuted right-hand side.
        for (int i = 0; i < n; ++i) {
            cplx s = B(lu.perm[static_cast<std::size_t>(i)], c);
            for (int j = 0; j < i; ++j) s -= lu.m(i, j) * X(j, c);
            X(i, c) = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            cplx s = X(i, c);
            for (int j = i + 1; j < n; ++j) s -= lu.m(i, j) * X(j, c);
            X(i, c) = s / lu.m(i, i);
        }
    }
    return X;
}

cplx det(const CMatrix& A) {
    if (A.rows() != A.cols()) throw NumericError("det needs a square matrix");
    try {
        Lu lu = lu_factor(A);
        cplx d(static_cast<double>(lu.sign), 0.0);
        for (int i = 0; i < A.rows(); ++i) d *= lu.m(i, i);
        return d;
    } catch (const NumericError&) {
        return cplx(0, 0);  // exactly singular
    }
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

CMatrix mat_exp(const CMatrix& M) {
    if (M.rows() != M.cols()) throw NumericError("mat_exp needs a square matrix");
    if (!M.finite()) throw NumericError("mat_exp of a non-finite matrix");
    const int n = M.rows();

    // Pade(13,13) with scaling and squaring (Higham 2005).
    static const double b[14] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
        33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0};
    const double theta13 = 5.371920351148152;

    double nrm = M.norm1();
    int s = 0;
    if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    if (s > 1024) throw NumericError("mat_exp overflow: matrix norm too large");
    CMatrix A = M * cplx(std::ldexp(1.0, -s), 0.0);

    CMatrix I = CMatrix::identity(n);
    CMatrix A2 = A * A;
    CMatrix A4 = A2 * A2;
    CMatrix A6 = A2 * A4;

    CMatrix W1 = A6 * b[13] + A4 * b[11] + A2 * b[9];
    CMatrix W2 = A6 * W1 + A6 * b[7] + A4 * b[5] + A2 * b[3] + I * b[1];
    CMatrix U = A * W2;
    CMatrix Z1 = A6 * b[12] + A4 * b[10] + A2 * b[8];
    CMatrix V = A6 * Z1 + A6 * b[6] + A4 * b[4] + A2 * b[2] + I * b[0];

    CMatrix F = lu_solve(V - U, V + U);
    for (int i = 0; i < s; ++i) F = F * F;
    if (!F.finite()) throw NumericError("mat_exp overflow");
    return F;
}

CMatrix mat_exp_2x2(const CMatrix& M) {
    if (M.rows() != 2 || M.cols() != 2) throw NumericError("mat_exp_2x2 needs a 2x2 matrix");
    cplx half_tr = 0.5 * (M(0, 0) + M(1, 1));
    CMatrix A = M;
    A(0, 0) -= half_tr;
    A(1, 1) -= half_tr;
    cplx d = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);  // det of the traceless part

    // cos(delta) and sinc(delta) with delta^2 = d are entire in d, so they can
    // be evaluated without choosing a square-root branch when d is small.
    cplx cos_d, sinc_d;
    if (std::abs(d) < 1e-8) {
        cos_d = cplx(1, 0) - d / 2.0 + d * d / 24.0;
        sinc_d = cplx(1, 0) - d / 6.0 + d * d / 120.0;
    } else {
        cplx delta = std::sqrt(d);
        cos_d = std::cos(delta);
        sinc_d = std::sin(delta) / delta;
    }

    cplx scale = std::exp(half_tr);
    CMatrix R(2, 2);
    R(0, 0) = scale * (cos_d + sinc_d * A(0, 0));
    R(0, 1) = scale * sinc_d * A(0, 1);
    R(1, 0) = scale * sinc_d * A(1, 0);
    R(1, 1) = scale * (cos_d + sinc_d * A(1, 1));
    if (!R.finite()) throw NumericError("mat_exp_2x2 overflow");
    return R;
}

// ---------------------------------------------------------------------------
// Vandermonde structures
// ---------------------------------------------------------------------------

VandermondePair vandermonde(std::span<const cplx> roots) {
    const int n = static_cast<int>(roots.size());
    VandermondePair vp{CMatrix(n, n), CMatrix(n, n)};
    for (int j = 0; j < n; ++j) {
        cplx k = roots[static_cast<std::size_t>(j)];
        cplx p = cplx(1, 0);  // k^(i-1)
        for (int i = 0; i < n; ++i) {
            vp.D(i, j) = p;
            vp.C(i, j) = (i == 0) ? cplx(0, 0)
                                  : cplx(static_cast<double>(i), 0) *
                                        (i == 1 ? cplx(1, 0) : vp.D(i - 1, j));
            if (i + 1 < n) p *= k;
        }
    }
    return vp;
}

VandermondePair vandermonde(const RootFrame& fr) { return vandermonde(std::span(fr.roots)); }

CMatrix vandermonde_inverse(std::span<const cplx> roots) {
    const int n = static_cast<int>(roots.size());
    CMatrix G(n, n);
    for (int i = 0; i < n; ++i) {
        // Numerator of Gamma_i(t) as monomial coefficients, then the constant
        // denominator prod_{j!=i}(k_i - k_j).
        std::vector<cplx> num(1, cplx(1, 0));
        cplx den(1, 0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cplx kj = roots[static_cast<std::size_t>(j)];
            cplx diff = roots[static_cast<std::size_t>(i)] - kj;
            if (diff == cplx(0, 0))
                throw DegeneracyError("degenerate frame: repeated characteristic root", 0.0,
                                      i, j, 0.0);
            den *= diff;
            num.push_back(cplx(0, 0));
            for (std::size_t m = num.size() - 1; m > 0; --m)
                num[m] = num[m - 1] - kj * num[m];
            num[0] = -kj * num[0];
        }
        for (int j = 0; j < n; ++j) G(i, j) = num[static_cast<std::size_t>(j)] / den;
    }
    return G;
}

CMatrix vandermonde_inverse(const RootFrame& fr) {
    return vandermonde_inverse(std::span(fr.roots));
}

}  // namespace dtmm
