#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dtmm/jump.hpp"
#include "dtmm/errors.hpp"
#include "dtmm/roots.hpp"

using namespace dtmm;

namespace {

const cplx J(0, 1);

RootFrame frame_of(std::vector<cplx> roots, double x = 0.0) {
    RootFrame fr;
    fr.x = x;
    fr.roots = std::move(roots);
    fr.gap = min_pairwise_gap(fr.roots);
    return fr;
}

std::mt19937 rng(424242);

RootFrame random_frame(int n) {
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    for (;;) {
        std::vector<cplx> r(static_cast<std::size_t>(n));
        for (auto& k : r) k = cplx(u(rng), u(rng));
        if (min_pairwise_gap(r) > 0.25) return frame_of(std::move(r));
    }
}

std::vector<Layer> random_stack(int n, int layers, double x0 = 0.0) {
    std::uniform_real_distribution<double> w(0.3, 1.0);
    std::vector<Layer> out;
    double x = x0;
    for (int i = 0; i < layers; ++i) {
        double next = x + w(rng);
        out.push_back(Layer{x, next, random_frame(n)});
        x = next;
    }
    return out;
}

}  // namespace

TEST_CASE("jump between identical frames is the identity") {
    RootFrame fr = frame_of({-J, J});
    TransferMatrix Q = jump_matrix(fr, fr, 0.7);
    CHECK(Q.Q.max_abs_diff(CMatrix::identity(2)) < 1e-14);
    CHECK(std::abs(jump_det(fr, fr, 0.7) - cplx(1, 0)) < 1e-14);
}

TEST_CASE("reference 2x2 jump") {
    RootFrame A = frame_of({-J, J});
    RootFrame B = frame_of({-2.0 * J, 2.0 * J});
    TransferMatrix Q = jump_matrix(A, B, 0.0);
    CHECK(std::abs(Q.Q(0, 0) - cplx(0.75, 0)) < 1e-14);
    CHECK(std::abs(Q.Q(0, 1) - cplx(0.25, 0)) < 1e-14);
    CHECK(std::abs(Q.Q(1, 0) - cplx(0.25, 0)) < 1e-14);
    CHECK(std::abs(Q.Q(1, 1) - cplx(0.75, 0)) < 1e-14);
    CHECK(std::abs(det(Q.Q) - cplx(0.5, 0)) < 1e-14);
    CHECK(std::abs(jump_det(A, B, 0.0) - cplx(0.5, 0)) < 1e-14);

    // The defining interface condition: D_B exp(X K_B) Q = D_A exp(X K_A).
    auto DA = vandermonde(A).D;
    auto DB = vandermonde(B).D;
    CHECK((DB * Q.Q).max_abs_diff(DA) < 1e-13);
}

TEST_CASE("n=4 determinant product of root ratios") {
    // k^4 = -1 versus k^4 = -16: slot-matched roots scale by 2, so the
    // pair-difference ratios give (1/2)^6.
    std::vector<cplx> a(4), b(4);
    for (int m = 0; m < 4; ++m) {
        double th = (2 * m + 1) * std::numbers::pi / 4.0;
        a[std::size_t(m)] = std::polar(1.0, th);
        b[std::size_t(m)] = std::polar(2.0, th);
    }
    RootFrame A = frame_of(a), B = frame_of(b);
    cplx d = jump_det(A, B, 0.0);
    CHECK(std::abs(d - cplx(1.0 / 64.0, 0)) < 1e-12);
    CHECK(std::abs(det(jump_matrix(A, B, 0.0).Q) - d) < 1e-12);
}

TEST_CASE("jump_det matches the numeric determinant on random frames") {
    for (int rep = 0; rep < 30; ++rep) {
        int n = 2 + rep % 3;
        RootFrame A = random_frame(n), B = random_frame(n);
        double X = (rep % 5) * 0.3 - 0.6;
        cplx closed = jump_det(A, B, X);
        cplx numeric = det(jump_matrix(A, B, X).Q);
        CHECK(std::abs(closed - numeric) < 1e-10 * std::abs(closed));
    }
}

TEST_CASE("compose_transfers") {
    RootFrame A = random_frame(2), B = random_frame(2), C = random_frame(2);
    TransferMatrix q1 = jump_matrix(A, B, 0.5);
    TransferMatrix q2 = jump_matrix(B, C, 0.5);
    SUBCASE("single element passes through") {
        std::vector<TransferMatrix> one{q1};
        TransferMatrix r = compose_transfers(one);
        CHECK(r.Q.max_abs_diff(q1.Q) == 0.0);
    }
    SUBCASE("chained product and inversion") {
        std::vector<TransferMatrix> chain{q1, q2};
        TransferMatrix rs = compose_transfers(chain);
        TransferMatrix back1 = jump_matrix(C, B, 0.5);
        TransferMatrix back2 = jump_matrix(B, A, 0.5);
        std::vector<TransferMatrix> rev{back1, back2};
        TransferMatrix sr = compose_transfers(rev);
        CHECK((sr.Q * rs.Q).max_abs_diff(CMatrix::identity(2)) < 1e-10);
    }
    SUBCASE("endpoint mismatch is a chaining error") {
        TransferMatrix far = jump_matrix(B, C, 0.9);
        std::vector<TransferMatrix> bad{q1, far};
        CHECK_THROWS_AS(compose_transfers(bad), ChainError);
    }
}

TEST_CASE("layered_transfer basics") {
    auto stack = random_stack(2, 1);
    CHECK(layered_transfer(stack).Q.max_abs_diff(CMatrix::identity(2)) < 1e-15);

    // Two layers reduce to the single interface jump.
    RootFrame A = frame_of({-J, J});
    RootFrame B = frame_of({-2.0 * J, 2.0 * J});
    std::vector<Layer> two{Layer{-1.0, 0.0, A}, Layer{0.0, 1.0, B}};
    TransferMatrix direct = jump_matrix(A, B, 0.0);
    CHECK(layered_transfer(two).Q.max_abs_diff(direct.Q) < 1e-14);

    // Equal frames everywhere: all jumps are identities.
    std::vector<Layer> same{Layer{0, 1, A}, Layer{1, 2, A}, Layer{2, 3, A}};
    CHECK(layered_transfer(same).Q.max_abs_diff(CMatrix::identity(2)) < 1e-14);
}

TEST_CASE("transfer-matrix properties on random stacks") {
    for (int n : {2, 3, 4}) {
        auto stack = random_stack(n, 4);
        TransferMatrix Q = layered_transfer(stack);

        // Inversion: traverse the reversed stack.
        CMatrix Qr = CMatrix::identity(n);
        for (std::size_t i = stack.size(); i-- > 1;)
            Qr = jump_matrix(stack[i].frame, stack[i - 1].frame, stack[i].x_lo).Q * Qr;
        CHECK((Qr * Q.Q).max_abs_diff(CMatrix::identity(n)) < 1e-10);

        // Decomposition at an interior interface.
        std::vector<Layer> lower(stack.begin(), stack.begin() + 2);
        std::vector<Layer> upper(stack.begin() + 1, stack.end());
        CMatrix prod = layered_transfer(upper).Q * layered_transfer(lower).Q;
        // The shared middle layer contributes identity inside each piece, so
        // the split product equals the whole.
        CHECK(prod.max_abs_diff(Q.Q) < 1e-10);

        // Determinant property.
        cplx dprod(1, 0);
        for (std::size_t i = 1; i < stack.size(); ++i)
            dprod *= jump_det(stack[i - 1].frame, stack[i].frame, stack[i].x_lo);
        CHECK(std::abs(det(Q.Q) - dprod) < 1e-9 * std::abs(dprod));
    }
}

TEST_CASE("scaling property") {
    std::uniform_real_distribution<double> ua(0.5, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
        auto stack = random_stack(3, 3);
        double alpha = ua(rng);
        auto scaled = stack;
        for (auto& layer : scaled) {
            layer.x_lo *= alpha;
            layer.x_hi *= alpha;
            for (auto& k : layer.frame.roots) k /= alpha;
            layer.frame.gap /= alpha;
        }
        CHECK(layered_transfer(scaled).Q.max_abs_diff(layered_transfer(stack).Q) < 1e-10);
    }
}

TEST_CASE("shifting property") {
    auto stack = random_stack(2, 3);
    double xi = 0.63;
    auto shifted = stack;
    for (auto& layer : shifted) {
        layer.x_lo += xi;
        layer.x_hi += xi;
    }
    CMatrix Qhat = layered_transfer(shifted).Q;
    // With interfaces moved to X_p + xi, Q = exp(+xi K_s) Qhat exp(-xi K_r);
    // one jump shows it: exp(xi K_B) exp(-(X+xi)K_B) M exp((X+xi)K_A) exp(-xi K_A).
    const RootFrame& first = stack.front().frame;
    const RootFrame& last = stack.back().frame;
    CMatrix expect = Qhat;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            expect(i, j) = std::exp(xi * last.roots[std::size_t(i)]) * Qhat(i, j) *
                           std::exp(-xi * first.roots[std::size_t(j)]);
    CHECK(expect.max_abs_diff(layered_transfer(stack).Q) < 1e-10);
}

TEST_CASE("degenerate frames are rejected with the side named") {
    RootFrame good = frame_of({-J, J});
    RootFrame bad = frame_of({J, J});
    CHECK_THROWS_AS(jump_matrix(bad, good, 0.0), DegeneracyError);
    CHECK_THROWS_AS(jump_matrix(good, bad, 0.0), DegeneracyError);
    try {
        jump_matrix(good, bad, 0.0);
    } catch (const DegeneracyError& e) {
        CHECK(std::string(e.what()).find("side B") != std::string::npos);
    }
}
