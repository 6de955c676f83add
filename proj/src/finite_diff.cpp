#include "dtmm/finite_diff.hpp"

#include "dtmm/errors.hpp"

namespace dtmm {

std::vector<double> fd_weights(double x0, std::span<const double> nodes, int m) {
    const int nn = static_cast<int>(nodes.size());
    if (nn <= m) throw Error("fd_weights: need more nodes than the derivative order");

    // Fornberg 1988, weights for derivatives 0..m on an arbitrary grid.
    std::vector<double> c(static_cast<std::size_t>(nn) * (m + 1), 0.0);
    auto C = [&](int i, int k) -> double& { return c[std::size_t(i) * (m + 1) + k]; };

    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    C(0, 0) = 1.0;
    for (int i = 1; i < nn; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = nodes[std::size_t(i)] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = nodes[std::size_t(i)] - nodes[std::size_t(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
                C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
            C(j, 0) = c4 * C(j, 0) / c3;
        }
        c1 = c2;
    }

    std::vector<double> w(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) w[std::size_t(i)] = C(i, m);
    return w;
}

}  // namespace dtmm
