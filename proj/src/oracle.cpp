// Independent forward path: nested std::vector and scalar loops only.
#include <cmath>
#include <stdexcept>

#include "stdc/evaluation.hpp"

namespace stdc {

namespace {

using Vec = std::vector<double>;
using Grid = std::vector<std::vector<Vec>>;  // [T][n][width]

Vec lin(const Vec& x, const Affine& a) {
    const std::size_t in = a.weight.dim(0), out = a.weight.dim(1);
    if (x.size() != in) throw std::invalid_argument("oracle: width mismatch");
    Vec y(out);
    for (std::size_t o = 0; o < out; ++o) {
        double s = a.bias[o];
        for (std::size_t k = 0; k < in; ++k) s += x[k] * a.weight[k * out + o];
        y[o] = s;
    }
    return y;
}

Vec relu(Vec v) {
    for (double& e : v)
        if (e < 0.0) e = 0.0;
    return v;
}

Vec row(const Tensor& t, std::size_t r) {
    const std::size_t w = t.dim(1);
    return Vec(t.data() + r * w, t.data() + (r + 1) * w);
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

// Softmax-weighted sum of `vals` with weights from q·keys / sqrt(d).
Vec attend(const Vec& q, const std::vector<Vec>& keys, const std::vector<Vec>& vals) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.size()));
    Vec w(keys.size());
    double mx = -1e300;
    for (std::size_t j = 0; j < keys.size(); ++j) {
        w[j] = dot(q, keys[j]) * scale;
        if (w[j] > mx) mx = w[j];
    }
    double z = 0.0;
    for (double& e : w) {
        e = std::exp(e - mx);
        z += e;
    }
    Vec out(vals[0].size(), 0.0);
    for (std::size_t j = 0; j < keys.size(); ++j)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[j] / z * vals[j][c];
    return out;
}

Grid block(const Grid& h, const std::vector<Vec>& cs, const std::vector<Vec>& ct, const StdcBlockParams& p,
           bool gate_on) {
    const std::size_t T = h.size(), n = h[0].size();
    Grid out(T, std::vector<Vec>(n));
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<Vec> ks, vs;
            for (std::size_t j = 0; j < n; ++j) {
                ks.push_back(lin(h[t][j], p.spatial.k));
                vs.push_back(lin(h[t][j], p.spatial.v));
            }
            Vec hs = attend(lin(h[t][i], p.spatial.q), ks, vs);
            if (p.spatial.out) hs = lin(hs, *p.spatial.out);

            ks.clear();
            vs.clear();
            for (std::size_t s = 0; s < T; ++s) {
                ks.push_back(lin(h[s][i], p.temporal.k));
                vs.push_back(lin(h[s][i], p.temporal.v));
            }
            Vec ht = attend(lin(h[t][i], p.temporal.q), ks, vs);
            if (p.temporal.out) ht = lin(ht, *p.temporal.out);

            Vec o(hs.size());
            for (std::size_t c = 0; c < o.size(); ++c) {
                const double g = gate_on ? 1.0 / (1.0 + std::exp(-(cs[i][c] + ct[t][c]))) : 0.5;
                o[c] = g * hs[c] + (1.0 - g) * ht[c];
            }
            out[t][i] = o;
        }
    }
    return out;
}

}  // namespace

Tensor oracle_forward(const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in) {
    if (cfg.layer_norm || cfg.residual || cfg.heads != 1) {
        throw std::invalid_argument("oracle_forward: needs layer_norm off, residual off and one head");
    }
    if (in.x.rank() != 3) throw std::invalid_argument("oracle_forward: x must be rank 3");
    const std::size_t Tp = in.x.dim(0), n = in.x.dim(1), f = in.x.dim(2), Tf = cfg.future, d = cfg.d;
    if (n > 4 || Tp > 4 || Tf > 4 || d > 4) {
        throw std::invalid_argument("oracle_forward: only tiny configs (n, T, d <= 4) are accepted");
    }
    const Ablation& ab = cfg.ablation;
    const EmbeddingParams& e = params.embedding;

    std::vector<Vec> cs(n, Vec(d, 0.0));
    if (ab.sc) {
        for (std::size_t i = 0; i < n; ++i) {
            Vec s = row(in.s_rows, i);
            if (ab.lap)
                for (double v : row(in.lap, i)) s.push_back(v);
            cs[i] = relu(lin(s, *e.spatial_map));
        }
    }
    auto temporal = [&](const Tensor& rows, std::size_t T) {
        std::vector<Vec> ct(T, Vec(d, 0.0));
        if (ab.tc)
            for (std::size_t t = 0; t < T; ++t) ct[t] = relu(lin(row(rows, t), *e.temporal_map));
        return ct;
    };
    const auto ctp = temporal(in.t_past, Tp);
    const auto ctf = temporal(in.t_future, Tf);
    auto ste = [&](const std::vector<Vec>& ct) {
        Grid g(ct.size(), std::vector<Vec>(n));
        for (std::size_t t = 0; t < ct.size(); ++t) {
            const Vec b = relu(lin(ct[t], e.ste_fuse_t));
            for (std::size_t i = 0; i < n; ++i) {
                Vec a = relu(lin(cs[i], e.ste_fuse_s));
                for (std::size_t c = 0; c < d; ++c) a[c] += b[c];
                g[t][i] = a;
            }
        }
        return g;
    };
    const Grid ste_p = ste(ctp);
    const Grid ste_f = ste(ctf);

    Grid h(Tp, std::vector<Vec>(n));
    for (std::size_t t = 0; t < Tp; ++t)
        for (std::size_t i = 0; i < n; ++i) {
            Vec xv(f);
            for (std::size_t c = 0; c < f; ++c) xv[c] = in.x.at(t, i, c);
            Vec v = relu(lin(xv, e.value_map));
            if (cfg.str_compose == StrCompose::concat) {
                for (double s : ste_p[t][i]) v.push_back(s);
            } else {
                for (std::size_t c = 0; c < d; ++c) v[c] += ste_p[t][i][c];
            }
            h[t][i] = v;
        }
    for (const auto& b : params.encoder) h = block(h, cs, ctp, b, ab.dc);

    Grid hf(Tf, std::vector<Vec>(n));
    if (params.cta) {
        const CtaParams& p = *params.cta;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<Vec> ks, vs;
            for (std::size_t s = 0; s < Tp; ++s) {
                ks.push_back(lin(ste_p[s][i], p.k));
                vs.push_back(lin(h[s][i], p.v));
            }
            for (std::size_t t = 0; t < Tf; ++t) {
                Vec y = attend(lin(ste_f[t][i], p.q), ks, vs);
                hf[t][i] = p.out ? lin(y, *p.out) : y;
            }
        }
    } else {
        const Affine& m = *params.time_mix;
        for (std::size_t t = 0; t < Tf; ++t)
            for (std::size_t i = 0; i < n; ++i) {
                Vec y(d, m.bias[t]);
                for (std::size_t s = 0; s < Tp; ++s)
                    for (std::size_t c = 0; c < d; ++c) y[c] += h[s][i][c] * m.weight[s * Tf + t];
                hf[t][i] = y;
            }
    }
    for (const auto& b : params.decoder) hf = block(hf, cs, ctf, b, ab.dc);

    Tensor out({Tf, n, f});
    for (std::size_t t = 0; t < Tf; ++t)
        for (std::size_t i = 0; i < n; ++i) {
            const Vec y = lin(hf[t][i], params.head);
            for (std::size_t c = 0; c < f; ++c) out.at(t, i, c) = y[c];
        }
    return out;
}

}  // namespace stdc
