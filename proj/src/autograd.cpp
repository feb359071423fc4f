#include "stdc/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stdc::ag {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor t) {
    Node node;
    node.owned = std::move(t);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Var Tape::param(const Tensor& value, Tensor* grad_sink) {
    Node node;
    node.external = &value;
    node.sink = grad_sink;
    node.needs_grad = grad_sink != nullptr;
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::vector<std::size_t> parents, Backward fn) {
    Node node;
    node.owned = std::move(value);
    node.needs_grad = std::any_of(parents.begin(), parents.end(),
                                  [this](std::size_t p) { return nodes_[p].needs_grad; });
    if (node.needs_grad) {
        node.parents = std::move(parents);
        node.backward = std::move(fn);
    }
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.owned;
}

Tensor& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.shape() != value(id).shape()) n.grad = Tensor(value(id).shape());
    return n.grad;
}

void Tape::backward(Var root) {
    if (root.tape != this) throw std::invalid_argument("backward: variable belongs to another tape");
    if (value(root.id).size() != 1) {
        throw std::invalid_argument("backward: root must be a scalar, got shape " +
                                    shape_str(value(root.id).shape()));
    }
    if (!nodes_[root.id].needs_grad) return;
    grad(root.id).fill(1.0);
    for (std::size_t id = root.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (n.backward) n.backward(*this, id);
        if (n.sink) *n.sink += n.grad;
    }
}

namespace {

void same_tape(Var a, Var b, const char* op) {
    if (a.tape != b.tape) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
    same_tape(a, b, op);
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
}

}  // namespace

Var affine(Var x, Var w, Var b) {
    same_tape(x, w, "affine");
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (wv.rank() != 2 || xv.rank() == 0 || xv.shape().back() != wv.dim(0)) {
        throw std::invalid_argument("affine: input " + shape_str(xv.shape()) + " incompatible with weight " +
                                    shape_str(wv.shape()));
    }
    const std::size_t in = wv.dim(0);
    const std::size_t out = wv.dim(1);
    const std::size_t rows = xv.size() / in;
    if (b.valid()) {
        same_tape(x, b, "affine");
        require_shape(b.value(), {out}, "affine bias");
    }
    Shape ys = xv.shape();
    ys.back() = out;
    Tensor y(ys);
    for (std::size_t r = 0; r < rows; ++r) {
        double* yr = y.data() + r * out;
        if (b.valid()) std::copy_n(b.value().data(), out, yr);
        const double* xr = xv.data() + r * in;
        for (std::size_t i = 0; i < in; ++i) {
            const double xi = xr[i];
            if (xi == 0.0) continue;
            const double* wr = wv.data() + i * out;
            for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wr[o];
        }
    }
    std::vector<std::size_t> parents{x.id, w.id};
    if (b.valid()) parents.push_back(b.id);
    const bool has_bias = b.valid();
    return x.tape->push(std::move(y), std::move(parents),
                        [xi = x.id, wi = w.id, bi = b.id, has_bias, in, out, rows](Tape& t, std::size_t self) {
                            const Tensor& gy = t.grad(self);
                            const Tensor& xv = t.value(xi);
                            const Tensor& wv = t.value(wi);
                            if (t.needs_grad(xi)) {
                                Tensor& gx = t.grad(xi);
                                for (std::size_t r = 0; r < rows; ++r) {
                                    const double* gr = gy.data() + r * out;
                                    double* gxr = gx.data() + r * in;
                                    for (std::size_t i = 0; i < in; ++i) {
                                        const double* wr = wv.data() + i * out;
                                        double s = 0.0;
                                        for (std::size_t o = 0; o < out; ++o) s += gr[o] * wr[o];
                                        gxr[i] += s;
                                    }
                                }
                            }
                            if (t.needs_grad(wi)) {
                                Tensor& gw = t.grad(wi);
                                for (std::size_t r = 0; r < rows; ++r) {
                                    const double* gr = gy.data() + r * out;
                                    const double* xr = xv.data() + r * in;
                                    for (std::size_t i = 0; i < in; ++i) {
                                        const double xi_v = xr[i];
                                        if (xi_v == 0.0) continue;
                                        double* gwr = gw.data() + i * out;
                                        for (std::size_t o = 0; o < out; ++o) gwr[o] += xi_v * gr[o];
                                    }
                                }
                            }
                            if (has_bias && t.needs_grad(bi)) {
                                Tensor& gb = t.grad(bi);
                                for (std::size_t r = 0; r < rows; ++r) {
                                    const double* gr = gy.data() + r * out;
                                    for (std::size_t o = 0; o < out; ++o) gb[o] += gr[o];
                                }
                            }
                        });
}

Var relu(Var x) {
    Tensor y = x.value();
    for (auto& v : y.storage())
        if (v < 0.0) v = 0.0;
    return x.tape->push(std::move(y), {x.id}, [xi = x.id](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const Tensor& xv = t.value(xi);
        Tensor& gx = t.grad(xi);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            if (xv[i] > 0.0) gx[i] += gy[i];
        }
    });
}

Var sigmoid(Var x) {
    Tensor y = x.value();
    for (auto& v : y.storage()) v = 1.0 / (1.0 + std::exp(-v));
    return x.tape->push(std::move(y), {x.id}, [xi = x.id](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad(xi);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * yv[i] * (1.0 - yv[i]);
    });
}

Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    Tensor y = a.value();
    y += b.value();
    return a.tape->push(std::move(y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        if (t.needs_grad(ai)) t.grad(ai) += gy;
        if (t.needs_grad(bi)) t.grad(bi) += gy;
    });
}

Var mul(Var a, Var b) {
    require_same_shape(a, b, "mul");
    Tensor y = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
    return a.tape->push(std::move(y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        if (t.needs_grad(ai)) {
            Tensor& ga = t.grad(ai);
            const Tensor& bv = t.value(bi);
            for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
        }
        if (t.needs_grad(bi)) {
            Tensor& gb = t.grad(bi);
            const Tensor& av = t.value(ai);
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
        }
    });
}

Var one_minus(Var x) {
    Tensor y = x.value();
    for (auto& v : y.storage()) v = 1.0 - v;
    return x.tape->push(std::move(y), {x.id}, [xi = x.id](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        Tensor& gx = t.grad(xi);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] -= gy[i];
    });
}

Var scale(Var x, double s) {
    Tensor y = x.value();
    y *= s;
    return x.tape->push(std::move(y), {x.id}, [xi = x.id, s](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        Tensor& gx = t.grad(xi);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += s * gy[i];
    });
}

Var concat_last(Var a, Var b) {
    same_tape(a, b, "concat_last");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Shape lead_a(av.shape().begin(), av.shape().end() - 1);
    Shape lead_b(bv.shape().begin(), bv.shape().end() - 1);
    if (av.rank() == 0 || lead_a != lead_b) {
        throw std::invalid_argument("concat_last: leading shapes differ " + shape_str(av.shape()) + " vs " +
                                    shape_str(bv.shape()));
    }
    const std::size_t da = av.shape().back();
    const std::size_t db = bv.shape().back();
    const std::size_t rows = shape_size(lead_a);
    Shape ys = av.shape();
    ys.back() = da + db;
    Tensor y(ys);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(av.data() + r * da, da, y.data() + r * (da + db));
        std::copy_n(bv.data() + r * db, db, y.data() + r * (da + db) + da);
    }
    return a.tape->push(std::move(y), {a.id, b.id},
                        [ai = a.id, bi = b.id, da, db, rows](Tape& t, std::size_t self) {
                            const Tensor& gy = t.grad(self);
                            if (t.needs_grad(ai)) {
                                Tensor& ga = t.grad(ai);
                                for (std::size_t r = 0; r < rows; ++r)
                                    for (std::size_t k = 0; k < da; ++k) ga[r * da + k] += gy[r * (da + db) + k];
                            }
                            if (t.needs_grad(bi)) {
                                Tensor& gb = t.grad(bi);
                                for (std::size_t r = 0; r < rows; ++r)
                                    for (std::size_t k = 0; k < db; ++k)
                                        gb[r * db + k] += gy[r * (da + db) + da + k];
                            }
                        });
}

Var token_sum(Var rows_s, Var rows_t) {
    same_tape(rows_s, rows_t, "token_sum");
    const Tensor& sv = rows_s.value();
    const Tensor& tv = rows_t.value();
    if (sv.rank() != 2 || tv.rank() != 2 || sv.dim(1) != tv.dim(1)) {
        throw std::invalid_argument("token_sum: expected [n, d] and [T, d], got " + shape_str(sv.shape()) +
                                    " and " + shape_str(tv.shape()));
    }
    const std::size_t n = sv.dim(0), steps = tv.dim(0), d = sv.dim(1);
    Tensor y({steps, n, d});
    for (std::size_t j = 0; j < steps; ++j)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) y.at(j, i, k) = tv.at(j, k) + sv.at(i, k);
    return rows_s.tape->push(std::move(y), {rows_s.id, rows_t.id},
                             [si = rows_s.id, ti = rows_t.id, n, steps, d](Tape& t, std::size_t self) {
                                 const Tensor& gy = t.grad(self);
                                 const bool gs = t.needs_grad(si), gt = t.needs_grad(ti);
                                 Tensor* g_s = gs ? &t.grad(si) : nullptr;
                                 Tensor* g_t = gt ? &t.grad(ti) : nullptr;
                                 for (std::size_t j = 0; j < steps; ++j)
                                     for (std::size_t i = 0; i < n; ++i)
                                         for (std::size_t k = 0; k < d; ++k) {
                                             const double g = gy.at(j, i, k);
                                             if (g_s) g_s->at(i, k) += g;
                                             if (g_t) g_t->at(j, k) += g;
                                         }
                             });
}

Var permute3(Var x, std::array<std::size_t, 3> perm) {
    const Tensor& xv = x.value();
    if (xv.rank() != 3) throw std::invalid_argument("permute3: expected rank 3, got " + shape_str(xv.shape()));
    const Shape& in = xv.shape();
    Shape out{in[perm[0]], in[perm[1]], in[perm[2]]};
    // Stride in the input for each output axis.
    const std::array<std::size_t, 3> in_stride{in[1] * in[2], in[2], 1};
    const std::array<std::size_t, 3> st{in_stride[perm[0]], in_stride[perm[1]], in_stride[perm[2]]};
    Tensor y(out);
    std::size_t o = 0;
    for (std::size_t a = 0; a < out[0]; ++a)
        for (std::size_t b = 0; b < out[1]; ++b)
            for (std::size_t c = 0; c < out[2]; ++c) y[o++] = xv[a * st[0] + b * st[1] + c * st[2]];
    return x.tape->push(std::move(y), {x.id}, [xi = x.id, out, st](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        Tensor& gx = t.grad(xi);
        std::size_t o = 0;
        for (std::size_t a = 0; a < out[0]; ++a)
            for (std::size_t b = 0; b < out[1]; ++b)
                for (std::size_t c = 0; c < out[2]; ++c) gx[a * st[0] + b * st[1] + c * st[2]] += gy[o++];
    });
}

Var attention(Var q, Var k, Var v, std::size_t heads, Tensor* probs) {
    same_tape(q, k, "attention");
    same_tape(q, v, "attention");
    const Tensor& qv = q.value();
    const Tensor& kv = k.value();
    const Tensor& vv = v.value();
    if (qv.rank() != 3 || kv.rank() != 3 || vv.rank() != 3 || qv.dim(0) != kv.dim(0) ||
        kv.shape() != vv.shape() || qv.dim(2) != kv.dim(2)) {
        throw std::invalid_argument("attention: incompatible q " + shape_str(qv.shape()) + ", k " +
                                    shape_str(kv.shape()) + ", v " + shape_str(vv.shape()));
    }
    const std::size_t batch = qv.dim(0), lq = qv.dim(1), lk = kv.dim(1), d = qv.dim(2);
    if (heads == 0 || d % heads != 0) {
        throw std::invalid_argument("attention: width " + std::to_string(d) + " not divisible by " +
                                    std::to_string(heads) + " heads");
    }
    const std::size_t dh = d / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor p({batch, heads, lq, lk});
    Tensor y({batch, lq, d});
    std::vector<double> row(lk);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            for (std::size_t i = 0; i < lq; ++i) {
                const double* qi = qv.data() + (b * lq + i) * d + off;
                double mx = -INFINITY;
                for (std::size_t j = 0; j < lk; ++j) {
                    const double* kj = kv.data() + (b * lk + j) * d + off;
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
                    row[j] = s * sc;
                    mx = std::max(mx, row[j]);
                }
                double z = 0.0;
                for (std::size_t j = 0; j < lk; ++j) {
                    row[j] = std::exp(row[j] - mx);
                    z += row[j];
                }
                double* pr = p.data() + ((b * heads + h) * lq + i) * lk;
                double* yi = y.data() + (b * lq + i) * d + off;
                for (std::size_t j = 0; j < lk; ++j) {
                    pr[j] = row[j] / z;
                    const double* vj = vv.data() + (b * lk + j) * d + off;
                    for (std::size_t c = 0; c < dh; ++c) yi[c] += pr[j] * vj[c];
                }
            }
        }
    }
    if (probs) *probs = p;
    return q.tape->push(
        std::move(y), {q.id, k.id, v.id},
        [qi_ = q.id, ki_ = k.id, vi_ = v.id, p = std::move(p), batch, heads, lq, lk, d, dh, sc](Tape& t,
                                                                                                 std::size_t self) {
            const Tensor& gy = t.grad(self);
            const Tensor& qv = t.value(qi_);
            const Tensor& kv = t.value(ki_);
            const Tensor& vv = t.value(vi_);
            Tensor* gq = t.needs_grad(qi_) ? &t.grad(qi_) : nullptr;
            Tensor* gk = t.needs_grad(ki_) ? &t.grad(ki_) : nullptr;
            Tensor* gv = t.needs_grad(vi_) ? &t.grad(vi_) : nullptr;
            std::vector<double> dp(lk);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t h = 0; h < heads; ++h) {
                    const std::size_t off = h * dh;
                    for (std::size_t i = 0; i < lq; ++i) {
                        const double* pr = p.data() + ((b * heads + h) * lq + i) * lk;
                        const double* gyi = gy.data() + (b * lq + i) * d + off;
                        double dot = 0.0;
                        for (std::size_t j = 0; j < lk; ++j) {
                            const double* vj = vv.data() + (b * lk + j) * d + off;
                            double s = 0.0;
                            for (std::size_t c = 0; c < dh; ++c) s += gyi[c] * vj[c];
                            dp[j] = s;
                            dot += s * pr[j];
                            if (gv) {
                                double* gvj = gv->data() + (b * lk + j) * d + off;
                                for (std::size_t c = 0; c < dh; ++c) gvj[c] += pr[j] * gyi[c];
                            }
                        }
                        const double* qrow = qv.data() + (b * lq + i) * d + off;
                        for (std::size_t j = 0; j < lk; ++j) {
                            const double ds = pr[j] * (dp[j] - dot) * sc;
                            if (ds == 0.0) continue;
                            const double* kj = kv.data() + (b * lk + j) * d + off;
                            if (gq) {
                                double* gqi = gq->data() + (b * lq + i) * d + off;
                                for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                            }
                            if (gk) {
                                double* gkj = gk->data() + (b * lk + j) * d + off;
                                for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qrow[c];
                            }
                        }
                    }
                }
            }
        });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
    same_tape(x, gamma, "layer_norm");
    same_tape(x, beta, "layer_norm");
    const Tensor& xv = x.value();
    const std::size_t d = xv.shape().back();
    require_shape(gamma.value(), {d}, "layer_norm gamma");
    require_shape(beta.value(), {d}, "layer_norm beta");
    const std::size_t rows = xv.size() / d;
    Tensor xhat(xv.shape());
    std::vector<double> inv_std(rows);
    Tensor y(xv.shape());
    const Tensor& g = gamma.value();
    const Tensor& bt = beta.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * d;
        double mean = 0.0;
        for (std::size_t k = 0; k < d; ++k) mean += xr[k];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t k = 0; k < d; ++k) var += (xr[k] - mean) * (xr[k] - mean);
        var /= static_cast<double>(d);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t k = 0; k < d; ++k) {
            xhat[r * d + k] = (xr[k] - mean) * inv_std[r];
            y[r * d + k] = xhat[r * d + k] * g[k] + bt[k];
        }
    }
    return x.tape->push(std::move(y), {x.id, gamma.id, beta.id},
                        [xi = x.id, gi = gamma.id, bi = beta.id, xhat = std::move(xhat),
                         inv_std = std::move(inv_std), rows, d](Tape& t, std::size_t self) {
                            const Tensor& gy = t.grad(self);
                            const Tensor& g = t.value(gi);
                            if (t.needs_grad(gi) || t.needs_grad(bi)) {
                                Tensor* gg = t.needs_grad(gi) ? &t.grad(gi) : nullptr;
                                Tensor* gb = t.needs_grad(bi) ? &t.grad(bi) : nullptr;
                                for (std::size_t r = 0; r < rows; ++r)
                                    for (std::size_t k = 0; k < d; ++k) {
                                        if (gg) (*gg)[k] += gy[r * d + k] * xhat[r * d + k];
                                        if (gb) (*gb)[k] += gy[r * d + k];
                                    }
                            }
                            if (t.needs_grad(xi)) {
                                Tensor& gx = t.grad(xi);
                                const double inv_d = 1.0 / static_cast<double>(d);
                                for (std::size_t r = 0; r < rows; ++r) {
                                    double sum_g = 0.0, sum_gx = 0.0;
                                    for (std::size_t k = 0; k < d; ++k) {
                                        const double gh = gy[r * d + k] * g[k];
                                        sum_g += gh;
                                        sum_gx += gh * xhat[r * d + k];
                                    }
                                    for (std::size_t k = 0; k < d; ++k) {
                                        const double gh = gy[r * d + k] * g[k];
                                        gx[r * d + k] +=
                                            inv_std[r] * (gh - inv_d * sum_g - xhat[r * d + k] * inv_d * sum_gx);
                                    }
                                }
                            }
                        });
}

Var mean_abs_error(Var pred, const Tensor& target) {
    const Tensor& pv = pred.value();
    if (pv.shape() != target.shape()) {
        throw std::invalid_argument("mean_abs_error: shape mismatch " + shape_str(pv.shape()) + " vs " +
                                    shape_str(target.shape()));
    }
    if (pv.empty()) throw std::invalid_argument("mean_abs_error: empty tensors");
    const std::size_t count = pv.size();
    Tensor sign(pv.shape());
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double diff = pv[i] - target[i];
        s += std::abs(diff);
        sign[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    }
    Tensor y({1}, s / static_cast<double>(count));
    return pred.tape->push(std::move(y), {pred.id},
                           [pi = pred.id, sign = std::move(sign), count](Tape& t, std::size_t self) {
                               const double g = t.grad(self)[0] / static_cast<double>(count);
                               Tensor& gp = t.grad(pi);
                               for (std::size_t i = 0; i < count; ++i) gp[i] += g * sign[i];
                           });
}

Var sum_all(Var x) {
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    return x.tape->push(Tensor({1}, s), {x.id}, [xi = x.id](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        Tensor& gx = t.grad(xi);
        for (auto& v : gx.storage()) v += g;
    });
}

}  // namespace stdc::ag
