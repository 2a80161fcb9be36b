#include "demarklab/nn/tensor.hpp"

#include <cmath>

namespace dml::nn {

bool all_finite(const Tensor& t) {
    for (double x : t.v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace dml::nn
