#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace dml::nn {

// Dense double tensor with a small dynamic shape. Rank 0 is a scalar,
// rank 3 is interpreted as channels x height x width throughout.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), 0.0) {}
    Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {}

    static Tensor scalar(double x) { return Tensor({}, {x}); }
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) n *= static_cast<std::size_t>(d);
        return n;
    }

    std::size_t numel() const { return v.size(); }
    bool is_scalar() const { return shape.empty(); }
    double item() const { return v.at(0); }

    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    // CHW accessors for rank-3 tensors.
    int channels() const { return shape.at(0); }
    int height() const { return shape.at(1); }
    int width() const { return shape.at(2); }
    double& at(int c, int y, int x) { return v[(static_cast<std::size_t>(c) * height() + y) * width() + x]; }
    double at(int c, int y, int x) const { return v[(static_cast<std::size_t>(c) * height() + y) * width() + x]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

bool all_finite(const Tensor& t);

} // namespace dml::nn
