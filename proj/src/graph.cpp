#include "d2sac/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "d2sac/math.hpp"

namespace d2sac::nn {

Var ComputeGraph::emplace(Tensor value, bool needs_grad, std::function<void(ComputeGraph&)> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var ComputeGraph::param(Tensor& p) {
    auto it = param_ids_.find(&p);
    if (it != param_ids_.end()) return Var{it->second};
    Var v = emplace(p, p.requires_grad, nullptr);
    param_ids_.emplace(&p, v.id);
    return v;
}

Var ComputeGraph::input(Tensor v) { return emplace(std::move(v), false, nullptr); }

Var ComputeGraph::linear(Var x, Var w, Var b) {
    Tensor out;
    kernels::linear(nodes_[x.id].value, nodes_[w.id].value, nodes_[b.id].value, out);
    const bool ng = wants(x.id) || wants(w.id) || wants(b.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, x, w, b](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            if (g.wants(x.id)) kernels::linear_dx(dy, g.nodes_[w.id].value, g.grad_ref(x.id));
            if (g.wants(w.id) && g.wants(b.id)) {
                kernels::linear_dwdb(dy, g.nodes_[x.id].value, g.grad_ref(w.id), g.grad_ref(b.id));
            } else if (g.wants(w.id) || g.wants(b.id)) {
                const Tensor& wv = g.nodes_[w.id].value;
                Tensor dw(wv.rows(), wv.cols()), db(1, wv.rows());
                kernels::linear_dwdb(dy, g.nodes_[x.id].value, dw, db);
                if (g.wants(w.id)) kernels::axpby(1.0, g.grad_ref(w.id), 1.0, dw, g.grad_ref(w.id));
                if (g.wants(b.id)) kernels::axpby(1.0, g.grad_ref(b.id), 1.0, db, g.grad_ref(b.id));
            }
        };
    }
    return o;
}

Var ComputeGraph::matmul(Var a, Var b) {
    Tensor out;
    kernels::matmul(nodes_[a.id].value, nodes_[b.id].value, out);
    const bool ng = wants(a.id) || wants(b.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, a, b](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            const Tensor& av = g.nodes_[a.id].value;
            const Tensor& bv = g.nodes_[b.id].value;
            if (g.wants(a.id)) {
                Tensor& da = g.grad_ref(a.id);  // da += dy * b^T
                for (int i = 0; i < dy.rows(); ++i)
                    for (int p = 0; p < bv.rows(); ++p) {
                        double acc = 0.0;
                        const double* dyr = dy.row_ptr(i);
                        const double* br = bv.row_ptr(p);
                        for (int j = 0; j < dy.cols(); ++j) acc += dyr[j] * br[j];
                        da.at(i, p) += acc;
                    }
            }
            if (g.wants(b.id)) {
                Tensor& db = g.grad_ref(b.id);  // db += a^T * dy
                for (int i = 0; i < av.rows(); ++i) {
                    const double* ar = av.row_ptr(i);
                    const double* dyr = dy.row_ptr(i);
                    for (int p = 0; p < av.cols(); ++p) {
                        const double s = ar[p];
                        if (s == 0.0) continue;
                        double* dbr = db.row_ptr(p);
                        for (int j = 0; j < dy.cols(); ++j) dbr[j] += s * dyr[j];
                    }
                }
            }
        };
    }
    return o;
}

Var ComputeGraph::add(Var a, Var b) { return axpby(a, 1.0, b, 1.0); }

Var ComputeGraph::axpby(Var a, double sa, Var b, double sb) {
    Tensor out;
    kernels::axpby(sa, nodes_[a.id].value, sb, nodes_[b.id].value, out);
    const bool ng = wants(a.id) || wants(b.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, a, b, sa, sb](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            if (g.wants(a.id)) kernels::axpby(1.0, g.grad_ref(a.id), sa, dy, g.grad_ref(a.id));
            if (g.wants(b.id)) kernels::axpby(1.0, g.grad_ref(b.id), sb, dy, g.grad_ref(b.id));
        };
    }
    return o;
}

Var ComputeGraph::shift(Var a, double s, Tensor k) {
    const Tensor& av = nodes_[a.id].value;
    if (!av.same_shape(k)) throw std::invalid_argument("shift: shape mismatch");
    Tensor out(av.rows(), av.cols());
    const double* pa = av.data();
    const double* pk = k.data();
    double* po = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) po[i] = s * pa[i] + pk[i];
    const bool ng = wants(a.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, a, s](ComputeGraph& g) {
            kernels::axpby(1.0, g.grad_ref(a.id), s, g.nodes_[o.id].grad, g.grad_ref(a.id));
        };
    }
    return o;
}

Var ComputeGraph::activation(Var x, Activation act) {
    if (act == Activation::None) return x;
    const Tensor& xv = nodes_[x.id].value;
    Tensor out(xv.rows(), xv.cols());
    const double* px = xv.data();
    double* po = out.data();
    if (act == Activation::Mish) {
        for (std::size_t i = 0; i < out.size(); ++i) po[i] = mish(px[i]);
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) po[i] = std::tanh(px[i]);
    }
    const bool ng = wants(x.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, x, act](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            Tensor& dx = g.grad_ref(x.id);
            const double* pdy = dy.data();
            double* pdx = dx.data();
            if (act == Activation::Mish) {
                const double* pin = g.nodes_[x.id].value.data();
                for (std::size_t i = 0; i < dy.size(); ++i) pdx[i] += pdy[i] * mish_grad(pin[i]);
            } else {
                const double* pout = g.nodes_[o.id].value.data();
                for (std::size_t i = 0; i < dy.size(); ++i) pdx[i] += pdy[i] * (1.0 - pout[i] * pout[i]);
            }
        };
    }
    return o;
}

Var ComputeGraph::concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
    int rows = 1, cols = 0;
    bool ng = false;
    for (Var v : xs) {
        const Tensor& t = nodes_[v.id].value;
        if (t.rows() != 1) {
            if (rows != 1 && t.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
            rows = t.rows();
        }
        cols += t.cols();
        ng = ng || wants(v.id);
    }
    Tensor out(rows, cols);
    int base = 0;
    for (Var v : xs) {
        const Tensor& t = nodes_[v.id].value;
        for (int i = 0; i < rows; ++i) {
            const double* src = t.row_ptr(t.rows() == 1 ? 0 : i);
            double* dst = out.row_ptr(i) + base;
            for (int j = 0; j < t.cols(); ++j) dst[j] = src[j];
        }
        base += t.cols();
    }
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        std::vector<Var> ins = xs;
        nodes_[o.id].back = [o, ins](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            int base = 0;
            for (Var v : ins) {
                const Tensor& t = g.nodes_[v.id].value;
                if (g.wants(v.id)) {
                    Tensor& dv = g.grad_ref(v.id);
                    for (int i = 0; i < dy.rows(); ++i) {
                        const double* src = dy.row_ptr(i) + base;
                        // One-row inputs were broadcast: their gradient sums over the batch.
                        double* dst = dv.row_ptr(t.rows() == 1 ? 0 : i);
                        for (int j = 0; j < t.cols(); ++j) dst[j] += src[j];
                    }
                }
                base += t.cols();
            }
        };
    }
    return o;
}

Var ComputeGraph::softmax_rows(Var x) {
    Tensor out;
    kernels::softmax_rows(nodes_[x.id].value, out);
    const bool ng = wants(x.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, x](ComputeGraph& g) {
            const Tensor& y = g.nodes_[o.id].value;
            const Tensor& dy = g.nodes_[o.id].grad;
            Tensor& dx = g.grad_ref(x.id);
            for (int i = 0; i < y.rows(); ++i) {
                const double* yr = y.row_ptr(i);
                const double* dyr = dy.row_ptr(i);
                double* dxr = dx.row_ptr(i);
                double dot = 0.0;
                for (int j = 0; j < y.cols(); ++j) dot += dyr[j] * yr[j];
                for (int j = 0; j < y.cols(); ++j) dxr[j] += yr[j] * (dyr[j] - dot);
            }
        };
    }
    return o;
}

Var ComputeGraph::log(Var x) {
    const Tensor& xv = nodes_[x.id].value;
    Tensor out(xv.rows(), xv.cols());
    const double* px = xv.data();
    double* po = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(px[i] > 0.0)) throw std::domain_error("log: non-positive input");
        po[i] = std::log(px[i]);
    }
    const bool ng = wants(x.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, x](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            const Tensor& xin = g.nodes_[x.id].value;
            Tensor& dx = g.grad_ref(x.id);
            for (std::size_t i = 0; i < dy.size(); ++i) dx.data()[i] += dy.data()[i] / xin.data()[i];
        };
    }
    return o;
}

Var ComputeGraph::mul(Var a, Var b) {
    const Tensor& av = nodes_[a.id].value;
    const Tensor& bv = nodes_[b.id].value;
    if (!av.same_shape(bv)) throw std::invalid_argument("mul: shape mismatch");
    Tensor out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] * bv.data()[i];
    const bool ng = wants(a.id) || wants(b.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, a, b](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            if (g.wants(a.id)) {
                const Tensor& bv2 = g.nodes_[b.id].value;
                Tensor& da = g.grad_ref(a.id);
                for (std::size_t i = 0; i < dy.size(); ++i) da.data()[i] += dy.data()[i] * bv2.data()[i];
            }
            if (g.wants(b.id)) {
                const Tensor& av2 = g.nodes_[a.id].value;
                Tensor& db = g.grad_ref(b.id);
                for (std::size_t i = 0; i < dy.size(); ++i) db.data()[i] += dy.data()[i] * av2.data()[i];
            }
        };
    }
    return o;
}

Var ComputeGraph::row_dot(Var a, Var b) {
    const Tensor& av = nodes_[a.id].value;
    const Tensor& bv = nodes_[b.id].value;
    if (!av.same_shape(bv)) throw std::invalid_argument("row_dot: shape mismatch");
    Tensor out(av.rows(), 1);
    for (int i = 0; i < av.rows(); ++i) {
        double acc = 0.0;
        const double* pa = av.row_ptr(i);
        const double* pb = bv.row_ptr(i);
        for (int j = 0; j < av.cols(); ++j) acc += pa[j] * pb[j];
        out.at(i, 0) = acc;
    }
    const bool ng = wants(a.id) || wants(b.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, a, b](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            const Tensor& av2 = g.nodes_[a.id].value;
            const Tensor& bv2 = g.nodes_[b.id].value;
            for (int i = 0; i < av2.rows(); ++i) {
                const double s = dy.at(i, 0);
                if (g.wants(a.id)) {
                    double* da = g.grad_ref(a.id).row_ptr(i);
                    const double* pb = bv2.row_ptr(i);
                    for (int j = 0; j < av2.cols(); ++j) da[j] += s * pb[j];
                }
                if (g.wants(b.id)) {
                    double* db = g.grad_ref(b.id).row_ptr(i);
                    const double* pa = av2.row_ptr(i);
                    for (int j = 0; j < av2.cols(); ++j) db[j] += s * pa[j];
                }
            }
        };
    }
    return o;
}

Var ComputeGraph::gather_cols(Var x, std::vector<int> idx) {
    const Tensor& xv = nodes_[x.id].value;
    if (static_cast<int>(idx.size()) != xv.rows()) throw std::invalid_argument("gather_cols: index count mismatch");
    Tensor out(xv.rows(), 1);
    for (int i = 0; i < xv.rows(); ++i) {
        if (idx[i] < 0 || idx[i] >= xv.cols()) throw std::out_of_range("gather_cols: index out of range");
        out.at(i, 0) = xv.at(i, idx[i]);
    }
    const bool ng = wants(x.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, x, idx = std::move(idx)](ComputeGraph& g) {
            const Tensor& dy = g.nodes_[o.id].grad;
            Tensor& dx = g.grad_ref(x.id);
            for (int i = 0; i < dy.rows(); ++i) dx.at(i, idx[i]) += dy.at(i, 0);
        };
    }
    return o;
}

Var ComputeGraph::mean_all(Var x) {
    const Tensor& xv = nodes_[x.id].value;
    double acc = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) acc += xv.data()[i];
    Tensor out(1, 1);
    const double inv = 1.0 / static_cast<double>(xv.size());
    out.at(0, 0) = acc * inv;
    const bool ng = wants(x.id);
    Var o = emplace(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[o.id].back = [o, x, inv](ComputeGraph& g) {
            const double s = g.nodes_[o.id].grad.at(0, 0) * inv;
            Tensor& dx = g.grad_ref(x.id);
            for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += s;
        };
    }
    return o;
}

Var ComputeGraph::detach(Var x) { return input(nodes_[x.id].value); }

double ComputeGraph::scalar(Var v) const {
    const Tensor& t = nodes_[v.id].value;
    if (t.size() != 1) throw std::invalid_argument("scalar: tensor is not 1x1");
    return t.at(0, 0);
}

const Tensor& ComputeGraph::grad_for(const Tensor& p) const {
    auto it = param_ids_.find(&p);
    if (it == param_ids_.end()) throw std::invalid_argument("grad_for: tensor is not a registered parameter");
    return nodes_[it->second].grad;
}

void ComputeGraph::backward(Var loss) {
    if (nodes_[loss.id].value.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    for (Node& n : nodes_) {
        if (n.needs_grad) {
            n.grad = Tensor(n.value.rows(), n.value.cols());
        } else {
            n.grad = Tensor();
        }
    }
    // Parameters always expose a gradient, even when this loss never used them.
    for (auto& [ptr, id] : param_ids_) {
        (void)ptr;
        if (nodes_[id].grad.size() == 0) nodes_[id].grad = Tensor(nodes_[id].value.rows(), nodes_[id].value.cols());
    }
    if (nodes_[loss.id].grad.size() == 0) nodes_[loss.id].grad = Tensor(1, 1);
    nodes_[loss.id].grad.at(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.back && n.needs_grad) n.back(*this);
    }
}

}  // namespace d2sac::nn
