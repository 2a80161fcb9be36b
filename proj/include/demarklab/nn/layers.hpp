#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "demarklab/nn/graph.hpp"
#include "demarklab/nn/rng.hpp"

namespace dml::nn {

// Parameter registry: models push Param* in a fixed order; optimizer state and
// gradient accumulators are indexed by that order.
using ParamRefs = std::vector<Param*>;

struct Conv2dLayer {
    Param w; // (out, in, k, k)
    Param b; // (out)
    int stride = 1;
    int pad = 1;

    Conv2dLayer() = default;
    Conv2dLayer(const std::string& name, int in_c, int out_c, int k, int stride_, Rng& rng, bool zero_init = false)
        : w(name + ".w", Tensor({out_c, in_c, k, k})), b(name + ".b", Tensor({out_c})), stride(stride_), pad(k / 2) {
        if (!zero_init) {
            const double std = std::sqrt(2.0 / (in_c * k * k)); // He init for ReLU stacks
            for (double& x : w.value.v) x = rng.normal(0.0, std);
        }
    }

    void collect(ParamRefs& refs) { refs.push_back(&w); refs.push_back(&b); }
};

struct LinearLayer {
    Param w; // (out, in)
    Param b; // (out)

    LinearLayer() = default;
    LinearLayer(const std::string& name, int in_dim, int out_dim, Rng& rng, bool zero_init = false)
        : w(name + ".w", Tensor({out_dim, in_dim})), b(name + ".b", Tensor({out_dim})) {
        if (!zero_init) {
            const double std = std::sqrt(2.0 / in_dim);
            for (double& x : w.value.v) x = rng.normal(0.0, std);
        }
    }

    void collect(ParamRefs& refs) { refs.push_back(&w); refs.push_back(&b); }
};

// Binds params onto a graph, keeping the param-id assignment consistent with a
// ParamRefs ordering built by the model's collect().
class ParamBinder {
public:
    explicit ParamBinder(Graph& g, const ParamRefs& refs) : g_(g), refs_(refs) {}

    Value use(const Param& p) {
        for (std::size_t i = 0; i < refs_.size(); ++i)
            if (refs_[i] == &p) return g_.param(p, static_cast<int>(i));
        return g_.input(p.value); // not trained in this pass; treat as constant
    }

    Value conv(const Conv2dLayer& layer, Value x) {
        return conv2d(x, use(layer.w), use(layer.b), layer.stride, layer.pad);
    }

    Value lin(const LinearLayer& layer, Value x) { return linear(x, use(layer.w), use(layer.b)); }

private:
    Graph& g_;
    const ParamRefs& refs_;
};

} // namespace dml::nn
