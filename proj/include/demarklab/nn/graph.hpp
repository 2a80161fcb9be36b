#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "demarklab/nn/tensor.hpp"

namespace dml::nn {

class Graph;

// Handle to a node on a Graph tape. Cheap to copy; valid while the graph lives.
class Value {
public:
    Value() = default;
    Value(Graph* g, int idx) : g_(g), idx_(idx) {}

    const Tensor& val() const;
    const Tensor& grad() const;
    Graph* graph() const { return g_; }
    int index() const { return idx_; }
    bool valid() const { return g_ != nullptr; }

private:
    Graph* g_ = nullptr;
    int idx_ = -1;
};

// Trainable parameter: value plus accumulated gradient. Optimizer state is
// kept by the optimizer, keyed by position in the model's parameter list.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor t) : name(std::move(n)), value(std::move(t)), grad(Tensor::zeros_like(value)) {}
    void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0); }
};

// Reverse-mode tape. Nodes are recorded in creation order; backward() walks
// the tape in reverse. One Graph per forward pass, one pass per image; graphs
// on different threads are fully independent.
class Graph {
public:
    struct Node {
        Tensor val;
        Tensor grad;
        std::function<void()> back; // empty for leaves
        int param_id = -1;          // >= 0 if this leaf mirrors a model parameter
    };

    Value input(Tensor t) {
        nodes_.push_back({std::move(t), {}, nullptr, -1});
        return Value(this, static_cast<int>(nodes_.size()) - 1);
    }

    // Leaf bound to a parameter slot; gradients are collected per slot after
    // backward via param_grads().
    Value param(const Param& p, int param_id) {
        nodes_.push_back({p.value, {}, nullptr, param_id});
        return Value(this, static_cast<int>(nodes_.size()) - 1);
    }

    Value make_node(Tensor val, std::function<void()> back) {
        nodes_.push_back({std::move(val), {}, std::move(back), -1});
        return Value(this, static_cast<int>(nodes_.size()) - 1);
    }

    Node& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }
    const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return nodes_.size(); }

    Tensor& grad_of(int i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.v.empty()) n.grad = Tensor::zeros_like(n.val);
        return n.grad;
    }

    // Seeds d(loss)/d(loss) = 1 and runs the tape in reverse.
    void backward(const Value& loss);

    // Adds node gradients of param-bound leaves into `sink[param_id]`.
    void accumulate_param_grads(std::vector<Tensor>& sink) const;

private:
    std::vector<Node> nodes_;
};

// ---- ops (all allocate a new node on x's graph) ----

Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);            // elementwise
Value cdiv(Value a, Value b);           // elementwise divide
Value add_const(Value a, double c);
Value scale(Value a, double c);
Value neg(Value a);

Value relu(Value x);
Value sigmoid(Value x);
Value softplus(Value x);                // log(1 + e^x), stable
Value clamp01(Value x);                 // subgradient: pass-through inside [0,1]

Value sum_all(Value x);
Value mean_all(Value x);
Value mean_abs(Value x);                // size-normalized l1
Value mean_sq_diff(Value a, Value b);   // mean((a-b)^2)

// conv2d: x (Cin,H,W), w (Cout,Cin,K,K), b (Cout); zero padding.
Value conv2d(Value x, Value w, Value b, int stride, int pad);
Value upsample_nearest2(Value x);
Value global_avg_pool(Value x);         // (C,H,W) -> (C)
Value global_max_pool(Value x);         // (C,H,W) -> (C), first-max tiebreak
Value linear(Value x, Value w, Value b); // x (I), w (O,I), b (O) -> (O)
Value scale_channels(Value x, Value s); // (C,H,W) * broadcast (C)
Value concat_channels(const std::vector<Value>& xs);

// Depthwise separable Gaussian window, 'valid' region only:
// (C,H,W) -> (C,H-K+1,W-K+1). The kernel is fixed (not differentiated).
Value gaussian_valid(Value x, const std::vector<double>& kernel1d);

// Mean over elements of the stable binary cross-entropy between
// sigmoid(logits) and fixed 0/1 targets.
Value bce_with_logits_mean(Value logits, const std::vector<double>& targets);

} // namespace dml::nn
