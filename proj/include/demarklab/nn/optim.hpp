#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

#include "demarklab/errors.hpp"
#include "demarklab/nn/layers.hpp"

namespace dml::nn {

class Adam {
public:
    explicit Adam(const ParamRefs& params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (Param* p : params_) {
            m_.emplace_back(Tensor::zeros_like(p->value));
            v_.emplace_back(Tensor::zeros_like(p->value));
        }
    }

    // Applies one update from the gradients in `grads` (parallel to params).
    void step(const std::vector<Tensor>& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& val = params_[i]->value;
            const Tensor& gr = grads[i];
            if (gr.v.empty()) continue; // param untouched this step
            Tensor& m = m_[i];
            Tensor& v = v_[i];
            for (std::size_t k = 0; k < val.v.size(); ++k) {
                const double gk = gr.v[k];
                m.v[k] = beta1_ * m.v[k] + (1.0 - beta1_) * gk;
                v.v[k] = beta2_ * v.v[k] + (1.0 - beta2_) * gk * gk;
                val.v[k] -= lr_ * (m.v[k] / bc1) / (std::sqrt(v.v[k] / bc2) + eps_);
            }
        }
    }

private:
    ParamRefs params_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

// Runs `per_item(i)` for i in [0, n) across a fixed number of worker threads
// and reduces per-thread gradient buffers in thread order, so results are
// bit-identical run to run for a given thread count. Each callback returns
// the item's loss; gradients go into the thread's accumulator.
struct BatchResult {
    std::vector<Tensor> grads; // summed over items
    double loss_sum = 0.0;
};

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

inline BatchResult run_batch(std::size_t n_params, std::size_t n_items, int threads,
                             const std::function<double(std::size_t, std::vector<Tensor>&)>& per_item) {
    const int t_count = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n_items, 1));
    std::vector<std::vector<Tensor>> grads(static_cast<std::size_t>(t_count), std::vector<Tensor>(n_params));
    std::vector<double> losses(static_cast<std::size_t>(t_count), 0.0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t_count));

    auto work = [&](int tid) {
        try {
            // contiguous chunks keep the per-thread summation order fixed
            const std::size_t chunk = (n_items + t_count - 1) / t_count;
            const std::size_t lo = static_cast<std::size_t>(tid) * chunk;
            const std::size_t hi = std::min(n_items, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) losses[static_cast<std::size_t>(tid)] += per_item(i, grads[static_cast<std::size_t>(tid)]);
        } catch (...) {
            errors[static_cast<std::size_t>(tid)] = std::current_exception();
        }
    };

    if (t_count == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(t_count));
        for (int t = 0; t < t_count; ++t) pool.emplace_back(work, t);
        for (std::thread& th : pool) th.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    BatchResult out;
    out.grads.assign(n_params, Tensor());
    for (int t = 0; t < t_count; ++t) {
        out.loss_sum += losses[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < n_params; ++i) {
            const Tensor& src = grads[static_cast<std::size_t>(t)][i];
            if (src.v.empty()) continue;
            Tensor& dst = out.grads[i];
            if (dst.v.empty()) dst = Tensor::zeros_like(src);
            for (std::size_t k = 0; k < src.v.size(); ++k) dst.v[k] += src.v[k];
        }
    }
    return out;
}

} // namespace dml::nn
