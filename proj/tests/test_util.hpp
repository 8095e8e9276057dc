#pragma once

#include <cstdint>
#include <random>

#include "selfcal/types.hpp"

namespace selfcal::testing {

inline CMatrix random_matrix(std::mt19937_64 &rng, Index rows, Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = cplx(n(rng), n(rng));
    return m;
}

inline CVector random_vector(std::mt19937_64 &rng, Index n) {
    return random_matrix(rng, n, 1).col(0);
}

inline double rel_diff(const CMatrix &a, const CMatrix &b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

} // namespace selfcal::testing
