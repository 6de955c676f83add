#include "dtmm/jump.hpp"

#include <cmath>

#include "dtmm/errors.hpp"
#include "dtmm/roots.hpp"

namespace dtmm {

namespace {

void require_nondegenerate(const RootFrame& fr, const char* side) {
    if (fr.order() >= 2 && !(min_pairwise_gap(fr.roots) > 0.0))
        throw DegeneracyError(std::string("degenerate frame on side ") + side, fr.x, 0, 1,
                              0.0);
}

}  // namespace

CMatrix frame_transfer(const RootFrame& A, double x_a, const RootFrame& B, double x_b) {
    auto DA = vandermonde(A).D;
    auto DB = vandermonde(B).D;
    CMatrix Y = lu_solve(DB, DA);
    const int n = Y.rows();
    for (int i = 0; i < n; ++i) {
        cplx row = std::exp(-x_b * B.roots[std::size_t(i)]);
        for (int j = 0; j < n; ++j)
            Y(i, j) *= row * std::exp(x_a * A.roots[std::size_t(j)]);
    }
    if (!Y.finite()) throw NumericError("overflow in frame transfer", x_a);
    return Y;
}

TransferMatrix jump_matrix(const RootFrame& frameA, const RootFrame& frameB, double X) {
    require_nondegenerate(frameA, "A");
    require_nondegenerate(frameB, "B");
    return TransferMatrix{X, X, frame_transfer(frameA, X, frameB, X)};
}

cplx jump_det(const RootFrame& frameA, const RootFrame& frameB, double X) {
    require_nondegenerate(frameA, "A");
    require_nondegenerate(frameB, "B");
    const int n = frameA.order();
    cplx sumA(0, 0), sumB(0, 0);
    for (int i = 0; i < n; ++i) {
        sumA += frameA.roots[std::size_t(i)];
        sumB += frameB.roots[std::size_t(i)];
    }
    cplx prod(1, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            prod *= (frameA.roots[std::size_t(i)] - frameA.roots[std::size_t(j)]) /
                    (frameB.roots[std::size_t(i)] - frameB.roots[std::size_t(j)]);
    return std::exp(X * (sumA - sumB)) * prod;
}

TransferMatrix compose_transfers(std::span<const TransferMatrix> transfers) {
    if (transfers.empty()) throw Error("compose_transfers needs at least one transfer");
    CMatrix Q = transfers[0].Q;
    for (std::size_t i = 1; i < transfers.size(); ++i) {
        double gap = std::abs(transfers[i].x_from - transfers[i - 1].x_to);
        if (gap > 1e-12)
            throw ChainError("transfer endpoints do not chain between elements " +
                                 std::to_string(i - 1) + " and " + std::to_string(i),
                             i);
        Q = transfers[i].Q * Q;
    }
    return TransferMatrix{transfers.front().x_from, transfers.back().x_to, Q};
}

TransferMatrix layered_transfer(std::span<const Layer> layers) {
    if (layers.empty()) throw Error("layered_transfer needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!(layers[i].x_lo < layers[i].x_hi))
            throw Error("layer " + std::to_string(i) + " has an empty extent");
        if (i > 0 && std::abs(layers[i].x_lo - layers[i - 1].x_hi) > 1e-12)
            throw Error("layers are not contiguous at index " + std::to_string(i));
    }
    const int n = layers[0].frame.order();
    CMatrix Q = CMatrix::identity(n);
    for (std::size_t i = 1; i < layers.size(); ++i) {
        double X = layers[i].x_lo;
        Q = jump_matrix(layers[i - 1].frame, layers[i].frame, X).Q * Q;
    }
    return TransferMatrix{layers.front().x_lo, layers.back().x_hi, Q};
}

}  // namespace dtmm
