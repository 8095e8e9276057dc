#pragma once

#include <cmath>
#include <random>

namespace selfcal {

template <class Rng>
CMatrix complex_gaussian(Rng &rng, Index rows, Index cols, double variance) {
    std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
    CMatrix out(rows, cols);
    // Row-major fill so the draw order does not depend on Eigen's storage.
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
            const double re = normal(rng);
            const double im = normal(rng);
            out(i, j) = cplx(re, im);
        }
    return out;
}

} // namespace selfcal
