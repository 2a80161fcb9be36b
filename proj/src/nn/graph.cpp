#include "demarklab/nn/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>

#include "demarklab/errors.hpp"

namespace dml::nn {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatrixRM>;
using CMapM = Eigen::Map<const MatrixRM>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

const Tensor& Value::val() const { return g_->node(idx_).val; }
const Tensor& Value::grad() const { return g_->node(idx_).grad; }

void Graph::backward(const Value& loss) {
    if (loss.graph() != this) throw DomainError("backward: value lives on a different graph");
    if (!node(loss.index()).val.is_scalar()) throw DomainError("backward: loss must be a scalar");
    grad_of(loss.index()).v[0] = 1.0;
    for (int i = loss.index(); i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.back && !n.grad.v.empty()) n.back();
    }
}

void Graph::accumulate_param_grads(std::vector<Tensor>& sink) const {
    for (const Node& n : nodes_) {
        if (n.param_id < 0 || n.grad.v.empty()) continue;
        Tensor& dst = sink[static_cast<std::size_t>(n.param_id)];
        if (dst.v.empty()) dst = Tensor::zeros_like(n.val);
        for (std::size_t k = 0; k < n.grad.v.size(); ++k) dst.v[k] += n.grad.v[k];
    }
}

namespace {

Graph* same_graph(const Value& a, const Value& b) {
    if (a.graph() != b.graph()) throw DomainError("op: values live on different graphs");
    return a.graph();
}

void check_same_shape(const Value& a, const Value& b, const char* op) {
    if (!a.val().same_shape(b.val())) throw DomainError(std::string(op) + ": shape mismatch");
}

} // namespace

// make_node assigns the output index when the node is pushed, so ops create
// their backward closure through this helper, which hands the closure the
// graph and the output node's index.
namespace {
template <typename Back>
Value finish(Graph* g, Tensor out, Back&& back_with_out) {
    const int out_idx = static_cast<int>(g->size());
    return g->make_node(std::move(out), [g, out_idx, back = std::forward<Back>(back_with_out)]() { back(g, out_idx); });
}
} // namespace

Value add(Value a, Value b) {
    Graph* g = same_graph(a, b);
    check_same_shape(a, b, "add");
    Tensor out = a.val();
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.val().v[i];
    const int ia = a.index(), ib = b.index();
    return finish(g, std::move(out), [ia, ib](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        Tensor& ga = gg->grad_of(ia);
        Tensor& gb = gg->grad_of(ib);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            ga.v[i] += go.v[i];
            gb.v[i] += go.v[i];
        }
    });
}

Value sub(Value a, Value b) {
    Graph* g = same_graph(a, b);
    check_same_shape(a, b, "sub");
    Tensor out = a.val();
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.val().v[i];
    const int ia = a.index(), ib = b.index();
    return finish(g, std::move(out), [ia, ib](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        Tensor& ga = gg->grad_of(ia);
        Tensor& gb = gg->grad_of(ib);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            ga.v[i] += go.v[i];
            gb.v[i] -= go.v[i];
        }
    });
}

Value mul(Value a, Value b) {
    Graph* g = same_graph(a, b);
    check_same_shape(a, b, "mul");
    Tensor out = a.val();
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.val().v[i];
    const int ia = a.index(), ib = b.index();
    return finish(g, std::move(out), [ia, ib](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        const Tensor& av = gg->node(ia).val;
        const Tensor& bv = gg->node(ib).val;
        Tensor& ga = gg->grad_of(ia);
        Tensor& gb = gg->grad_of(ib);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            ga.v[i] += go.v[i] * bv.v[i];
            gb.v[i] += go.v[i] * av.v[i];
        }
    });
}

Value cdiv(Value a, Value b) {
    Graph* g = same_graph(a, b);
    check_same_shape(a, b, "cdiv");
    Tensor out = a.val();
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] /= b.val().v[i];
    const int ia = a.index(), ib = b.index();
    return finish(g, std::move(out), [ia, ib](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        const Tensor& ov = gg->node(io).val;
        const Tensor& bv = gg->node(ib).val;
        Tensor& ga = gg->grad_of(ia);
        Tensor& gb = gg->grad_of(ib);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            ga.v[i] += go.v[i] / bv.v[i];
            gb.v[i] -= go.v[i] * ov.v[i] / bv.v[i];
        }
    });
}

Value add_const(Value a, double c) {
    Graph* g = a.graph();
    Tensor out = a.val();
    for (double& x : out.v) x += c;
    const int ia = a.index();
    return finish(g, std::move(out), [ia](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        Tensor& ga = gg->grad_of(ia);
        for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i];
    });
}

Value scale(Value a, double c) {
    Graph* g = a.graph();
    Tensor out = a.val();
    for (double& x : out.v) x *= c;
    const int ia = a.index();
    return finish(g, std::move(out), [ia, c](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        Tensor& ga = gg->grad_of(ia);
        for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += c * go.v[i];
    });
}

Value neg(Value a) { return scale(a, -1.0); }

Value relu(Value x) {
    Graph* g = x.graph();
    Tensor out = x.val();
    for (double& v : out.v) v = v > 0.0 ? v : 0.0;
    const int ix = x.index();
    return finish(g, std::move(out), [ix](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        const Tensor& xv = gg->node(ix).val;
        Tensor& gx = gg->grad_of(ix);
        for (std::size_t i = 0; i < go.v.size(); ++i)
            if (xv.v[i] > 0.0) gx.v[i] += go.v[i];
    });
}

namespace {
double sigmoid_stable(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
} // namespace

Value sigmoid(Value x) {
    Graph* g = x.graph();
    Tensor out = x.val();
    for (double& v : out.v) v = sigmoid_stable(v);
    const int ix = x.index();
    return finish(g, std::move(out), [ix](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        const Tensor& ov = gg->node(io).val;
        Tensor& gx = gg->grad_of(ix);
        for (std::size_t i = 0; i < go.v.size(); ++i) gx.v[i] += go.v[i] * ov.v[i] * (1.0 - ov.v[i]);
    });
}

Value softplus(Value x) {
    Graph* g = x.graph();
    Tensor out = x.val();
    for (double& v : out.v) v = std::log1p(std::exp(-std::abs(v))) + std::max(v, 0.0);
    const int ix = x.index();
    return finish(g, std::move(out), [ix](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        const Tensor& xv = gg->node(ix).val;
        Tensor& gx = gg->grad_of(ix);
        for (std::size_t i = 0; i < go.v.size(); ++i) gx.v[i] += go.v[i] * sigmoid_stable(xv.v[i]);
    });
}

Value clamp01(Value x) {
    Graph* g = x.graph();
    Tensor out = x.val();
    for (double& v : out.v) v = std::clamp(v, 0.0, 1.0);
    const int ix = x.index();
    return finish(g, std::move(out), [ix](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        const Tensor& xv = gg->node(ix).val;
        Tensor& gx = gg->grad_of(ix);
        for (std::size_t i = 0; i < go.v.size(); ++i)
            if (xv.v[i] >= 0.0 && xv.v[i] <= 1.0) gx.v[i] += go.v[i];
    });
}

Value sum_all(Value x) {
    Graph* g = x.graph();
    double s = 0.0;
    for (double v : x.val().v) s += v;
    const int ix = x.index();
    return finish(g, Tensor::scalar(s), [ix](Graph* gg, int io) {
        const double go = gg->node(io).grad.v[0];
        Tensor& gx = gg->grad_of(ix);
        for (double& v : gx.v) v += go;
    });
}

Value mean_all(Value x) {
    Graph* g = x.graph();
    const std::size_t n = x.val().numel();
    if (n == 0) throw DomainError("mean_all: empty tensor");
    double s = 0.0;
    for (double v : x.val().v) s += v;
    const int ix = x.index();
    const double inv = 1.0 / static_cast<double>(n);
    return finish(g, Tensor::scalar(s * inv), [ix, inv](Graph* gg, int io) {
        const double go = gg->node(io).grad.v[0] * inv;
        Tensor& gx = gg->grad_of(ix);
        for (double& v : gx.v) v += go;
    });
}

Value mean_abs(Value x) {
    Graph* g = x.graph();
    const std::size_t n = x.val().numel();
    if (n == 0) throw DomainError("mean_abs: empty tensor");
    double s = 0.0;
    for (double v : x.val().v) s += std::abs(v);
    const int ix = x.index();
    const double inv = 1.0 / static_cast<double>(n);
    return finish(g, Tensor::scalar(s * inv), [ix, inv](Graph* gg, int io) {
        const double go = gg->node(io).grad.v[0] * inv;
        const Tensor& xv = gg->node(ix).val;
        Tensor& gx = gg->grad_of(ix);
        for (std::size_t i = 0; i < gx.v.size(); ++i) {
            if (xv.v[i] > 0.0) gx.v[i] += go;
            else if (xv.v[i] < 0.0) gx.v[i] -= go;
        }
    });
}

Value mean_sq_diff(Value a, Value b) {
    Graph* g = same_graph(a, b);
    check_same_shape(a, b, "mean_sq_diff");
    const std::size_t n = a.val().numel();
    if (n == 0) throw DomainError("mean_sq_diff: empty tensor");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.val().v[i] - b.val().v[i];
        s += d * d;
    }
    const int ia = a.index(), ib = b.index();
    const double inv = 1.0 / static_cast<double>(n);
    return finish(g, Tensor::scalar(s * inv), [ia, ib, inv](Graph* gg, int io) {
        const double go = gg->node(io).grad.v[0] * 2.0 * inv;
        const Tensor& av = gg->node(ia).val;
        const Tensor& bv = gg->node(ib).val;
        Tensor& ga = gg->grad_of(ia);
        Tensor& gb = gg->grad_of(ib);
        for (std::size_t i = 0; i < av.v.size(); ++i) {
            const double d = go * (av.v[i] - bv.v[i]);
            ga.v[i] += d;
            gb.v[i] -= d;
        }
    });
}

Value conv2d(Value x, Value w, Value b, int stride, int pad) {
    Graph* g = same_graph(x, w);
    same_graph(x, b);
    const Tensor& xv = x.val();
    const Tensor& wv = w.val();
    if (xv.shape.size() != 3 || wv.shape.size() != 4) throw DomainError("conv2d: expects (C,H,W) input and (O,C,K,K) weight");
    const int cin = xv.channels(), h = xv.height(), wd = xv.width();
    const int cout = wv.dim(0), k = wv.dim(2);
    if (wv.dim(1) != cin || wv.dim(3) != k) throw DomainError("conv2d: weight/input channel mismatch");
    if (b.val().numel() != static_cast<std::size_t>(cout)) throw DomainError("conv2d: bias size mismatch");
    const int hout = (h + 2 * pad - k) / stride + 1;
    const int wout = (wd + 2 * pad - k) / stride + 1;
    if (hout <= 0 || wout <= 0) throw DomainError("conv2d: output would be empty");
    const int npix = hout * wout;
    const int krows = cin * k * k;

    auto col = std::make_shared<std::vector<double>>(static_cast<std::size_t>(krows) * npix, 0.0);
    {
        double* cp = col->data();
        for (int ci = 0; ci < cin; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    double* row = cp + (static_cast<std::size_t>((ci * k + ky) * k + kx)) * npix;
                    for (int oy = 0; oy < hout; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        const double* src = &xv.v[(static_cast<std::size_t>(ci) * h + iy) * wd];
                        for (int ox = 0; ox < wout; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            if (ix >= 0 && ix < wd) row[oy * wout + ox] = src[ix];
                        }
                    }
                }
            }
        }
    }

    Tensor out({cout, hout, wout});
    {
        CMapM wm(wv.v.data(), cout, krows);
        CMapM cm(col->data(), krows, npix);
        MapM om(out.v.data(), cout, npix);
        om.noalias() = wm * cm;
        for (int co = 0; co < cout; ++co) om.row(co).array() += b.val().v[static_cast<std::size_t>(co)];
    }

    const int ix = x.index(), iw = w.index(), ib = b.index();
    return finish(g, std::move(out),
                  [ix, iw, ib, col, cin, h, wd, cout, k, stride, pad, hout, wout, npix, krows](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        CMapM gym(go.v.data(), cout, npix);

        {
            Tensor& gw = gg->grad_of(iw);
            MapM gwm(gw.v.data(), cout, krows);
            CMapM cm(col->data(), krows, npix);
            gwm.noalias() += gym * cm.transpose();
            Tensor& gb = gg->grad_of(ib);
            for (int co = 0; co < cout; ++co) gb.v[static_cast<std::size_t>(co)] += gym.row(co).sum();
        }

        // d(input) = col2im(W^T * dY)
        const Tensor& wv2 = gg->node(iw).val;
        CMapM wm(wv2.v.data(), cout, krows);
        MatrixRM gcol = wm.transpose() * gym; // (krows, npix)
        Tensor& gx = gg->grad_of(ix);
        for (int ci = 0; ci < cin; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double* row = gcol.data() + (static_cast<std::size_t>((ci * k + ky) * k + kx)) * npix;
                    for (int oy = 0; oy < hout; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        double* dst = &gx.v[(static_cast<std::size_t>(ci) * h + iy) * wd];
                        for (int ox = 0; ox < wout; ++ox) {
                            const int ixx = ox * stride - pad + kx;
                            if (ixx >= 0 && ixx < wd) dst[ixx] += row[oy * wout + ox];
                        }
                    }
                }
            }
        }
    });
}

Value upsample_nearest2(Value x) {
    Graph* g = x.graph();
    const Tensor& xv = x.val();
    if (xv.shape.size() != 3) throw DomainError("upsample_nearest2: expects (C,H,W)");
    const int c = xv.channels(), h = xv.height(), w = xv.width();
    Tensor out({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < 2 * h; ++y)
            for (int xo = 0; xo < 2 * w; ++xo) out.at(ci, y, xo) = xv.at(ci, y / 2, xo / 2);
    const int ix = x.index();
    return finish(g, std::move(out), [ix, c, h, w](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        Tensor& gx = gg->grad_of(ix);
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < 2 * h; ++y)
                for (int xo = 0; xo < 2 * w; ++xo) gx.at(ci, y / 2, xo / 2) += go.at(ci, y, xo);
    });
}

Value global_avg_pool(Value x) {
    Graph* g = x.graph();
    const Tensor& xv = x.val();
    if (xv.shape.size() != 3) throw DomainError("global_avg_pool: expects (C,H,W)");
    const int c = xv.channels(), hw = xv.height() * xv.width();
    Tensor out({c});
    for (int ci = 0; ci < c; ++ci) {
        double s = 0.0;
        const double* p = &xv.v[static_cast<std::size_t>(ci) * hw];
        for (int i = 0; i < hw; ++i) s += p[i];
        out.v[static_cast<std::size_t>(ci)] = s / hw;
    }
    const int ix = x.index();
    return finish(g, std::move(out), [ix, c, hw](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        Tensor& gx = gg->grad_of(ix);
        for (int ci = 0; ci < c; ++ci) {
            const double gch = go.v[static_cast<std::size_t>(ci)] / hw;
            double* p = &gx.v[static_cast<std::size_t>(ci) * hw];
            for (int i = 0; i < hw; ++i) p[i] += gch;
        }
    });
}

Value global_max_pool(Value x) {
    Graph* g = x.graph();
    const Tensor& xv = x.val();
    if (xv.shape.size() != 3) throw DomainError("global_max_pool: expects (C,H,W)");
    const int c = xv.channels(), hw = xv.height() * xv.width();
    Tensor out({c});
    auto argmax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(c), 0);
    for (int ci = 0; ci < c; ++ci) {
        const double* p = &xv.v[static_cast<std::size_t>(ci) * hw];
        int best = 0;
        for (int i = 1; i < hw; ++i)
            if (p[i] > p[best]) best = i;
        (*argmax)[static_cast<std::size_t>(ci)] = best;
        out.v[static_cast<std::size_t>(ci)] = p[best];
    }
    const int ix = x.index();
    return finish(g, std::move(out), [ix, c, hw, argmax](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        Tensor& gx = gg->grad_of(ix);
        for (int ci = 0; ci < c; ++ci)
            gx.v[static_cast<std::size_t>(ci) * hw + (*argmax)[static_cast<std::size_t>(ci)]] += go.v[static_cast<std::size_t>(ci)];
    });
}

Value linear(Value x, Value w, Value b) {
    Graph* g = same_graph(x, w);
    same_graph(x, b);
    const Tensor& xv = x.val();
    const Tensor& wv = w.val();
    if (wv.shape.size() != 2) throw DomainError("linear: weight must be (O,I)");
    const int o = wv.dim(0), in = wv.dim(1);
    if (xv.numel() != static_cast<std::size_t>(in)) throw DomainError("linear: input size mismatch");
    if (b.val().numel() != static_cast<std::size_t>(o)) throw DomainError("linear: bias size mismatch");
    Tensor out({o});
    {
        CMapM wm(wv.v.data(), o, in);
        CMapV xm(xv.v.data(), in);
        MapV om(out.v.data(), o);
        om.noalias() = wm * xm;
        om += CMapV(b.val().v.data(), o);
    }
    const int ix = x.index(), iw = w.index(), ib = b.index();
    return finish(g, std::move(out), [ix, iw, ib, o, in](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        CMapV gy(go.v.data(), o);
        const Tensor& wv2 = gg->node(iw).val;
        const Tensor& xv2 = gg->node(ix).val;
        {
            Tensor& gx = gg->grad_of(ix);
            MapV gxm(gx.v.data(), in);
            CMapM wm(wv2.v.data(), o, in);
            gxm.noalias() += wm.transpose() * gy;
        }
        {
            Tensor& gw = gg->grad_of(iw);
            MapM gwm(gw.v.data(), o, in);
            CMapV xm(xv2.v.data(), in);
            gwm.noalias() += gy * xm.transpose();
        }
        {
            Tensor& gb = gg->grad_of(ib);
            MapV gbm(gb.v.data(), o);
            gbm += gy;
        }
    });
}

Value scale_channels(Value x, Value s) {
    Graph* g = same_graph(x, s);
    const Tensor& xv = x.val();
    if (xv.shape.size() != 3) throw DomainError("scale_channels: expects (C,H,W)");
    const int c = xv.channels(), hw = xv.height() * xv.width();
    if (s.val().numel() != static_cast<std::size_t>(c)) throw DomainError("scale_channels: channel count mismatch");
    Tensor out = xv;
    for (int ci = 0; ci < c; ++ci) {
        const double sc = s.val().v[static_cast<std::size_t>(ci)];
        double* p = &out.v[static_cast<std::size_t>(ci) * hw];
        for (int i = 0; i < hw; ++i) p[i] *= sc;
    }
    const int ix = x.index(), is = s.index();
    return finish(g, std::move(out), [ix, is, c, hw](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        const Tensor& xv2 = gg->node(ix).val;
        const Tensor& sv = gg->node(is).val;
        Tensor& gx = gg->grad_of(ix);
        Tensor& gs = gg->grad_of(is);
        for (int ci = 0; ci < c; ++ci) {
            const double sc = sv.v[static_cast<std::size_t>(ci)];
            const double* gop = &go.v[static_cast<std::size_t>(ci) * hw];
            const double* xp = &xv2.v[static_cast<std::size_t>(ci) * hw];
            double* gxp = &gx.v[static_cast<std::size_t>(ci) * hw];
            double acc = 0.0;
            for (int i = 0; i < hw; ++i) {
                gxp[i] += gop[i] * sc;
                acc += gop[i] * xp[i];
            }
            gs.v[static_cast<std::size_t>(ci)] += acc;
        }
    });
}

Value concat_channels(const std::vector<Value>& xs) {
    if (xs.empty()) throw DomainError("concat_channels: no inputs");
    Graph* g = xs.front().graph();
    const int h = xs.front().val().height(), w = xs.front().val().width();
    int ctot = 0;
    for (const Value& v : xs) {
        same_graph(xs.front(), v);
        if (v.val().shape.size() != 3 || v.val().height() != h || v.val().width() != w)
            throw DomainError("concat_channels: spatial dims differ");
        ctot += v.val().channels();
    }
    Tensor out({ctot, h, w});
    std::vector<int> idxs;
    std::vector<int> chans;
    std::size_t off = 0;
    for (const Value& v : xs) {
        std::copy(v.val().v.begin(), v.val().v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(off));
        off += v.val().numel();
        idxs.push_back(v.index());
        chans.push_back(v.val().channels());
    }
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    return finish(g, std::move(out), [idxs, chans, plane](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        std::size_t off2 = 0;
        for (std::size_t k = 0; k < idxs.size(); ++k) {
            Tensor& gx = gg->grad_of(idxs[k]);
            const std::size_t n = static_cast<std::size_t>(chans[k]) * plane;
            for (std::size_t i = 0; i < n; ++i) gx.v[i] += go.v[off2 + i];
            off2 += n;
        }
    });
}

Value gaussian_valid(Value x, const std::vector<double>& kernel1d) {
    Graph* g = x.graph();
    const Tensor& xv = x.val();
    if (xv.shape.size() != 3) throw DomainError("gaussian_valid: expects (C,H,W)");
    const int k = static_cast<int>(kernel1d.size());
    const int c = xv.channels(), h = xv.height(), w = xv.width();
    if (h < k || w < k) throw DomainError("gaussian_valid: image smaller than window");
    const int ho = h - k + 1, wo = w - k + 1;

    // horizontal then vertical pass
    Tensor tmp({c, h, wo});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int ox = 0; ox < wo; ++ox) {
                double s = 0.0;
                for (int t = 0; t < k; ++t) s += xv.at(ci, y, ox + t) * kernel1d[static_cast<std::size_t>(t)];
                tmp.at(ci, y, ox) = s;
            }
    Tensor out({c, ho, wo});
    for (int ci = 0; ci < c; ++ci)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double s = 0.0;
                for (int t = 0; t < k; ++t) s += tmp.at(ci, oy + t, ox) * kernel1d[static_cast<std::size_t>(t)];
                out.at(ci, oy, ox) = s;
            }

    const int ix = x.index();
    const std::vector<double> ker = kernel1d;
    return finish(g, std::move(out), [ix, ker, c, h, w, ho, wo, k](Graph* gg, int io) {
        const Tensor& go = gg->node(io).grad;
        // transpose of the vertical pass: full correlation over rows
        Tensor gtmp({c, h, wo});
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    const double gv = go.at(ci, oy, ox);
                    if (gv == 0.0) continue;
                    for (int t = 0; t < k; ++t) gtmp.at(ci, oy + t, ox) += gv * ker[static_cast<std::size_t>(t)];
                }
        Tensor& gx = gg->grad_of(ix);
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y)
                for (int ox = 0; ox < wo; ++ox) {
                    const double gv = gtmp.at(ci, y, ox);
                    if (gv == 0.0) continue;
                    for (int t = 0; t < k; ++t) gx.at(ci, y, ox + t) += gv * ker[static_cast<std::size_t>(t)];
                }
    });
}

Value bce_with_logits_mean(Value logits, const std::vector<double>& targets) {
    Graph* g = logits.graph();
    const Tensor& lv = logits.val();
    const std::size_t n = lv.numel();
    if (n == 0 || n != targets.size()) throw DomainError("bce_with_logits_mean: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = lv.v[i], y = targets[i];
        s += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
    }
    const int ix = logits.index();
    const double inv = 1.0 / static_cast<double>(n);
    const std::vector<double> tg = targets;
    return finish(g, Tensor::scalar(s * inv), [ix, inv, tg](Graph* gg, int io) {
        const double go = gg->node(io).grad.v[0] * inv;
        const Tensor& lv2 = gg->node(ix).val;
        Tensor& gx = gg->grad_of(ix);
        for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += go * (sigmoid_stable(lv2.v[i]) - tg[i]);
    });
}

} // namespace dml::nn
