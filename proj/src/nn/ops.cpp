#include "ldif/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "kernels.hpp"
#include "ldif/error.hpp"

namespace ldif::nn {

using detail::view;

namespace {

void require_same_shape(const char* op, const NumArray& a, const NumArray& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

void require_rank2(const char* op, const NumArray& a) {
    if (a.rank() < 1 || a.rank() > 2) {
        throw ShapeError(std::string(op) + ": expected a matrix or vector, got " + shape_string(a.shape()));
    }
}

void softmax_row_inplace(double* row, std::size_t n) {
    double peak = row[0];
    for (std::size_t j = 1; j < n; ++j) peak = std::max(peak, row[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - peak);
        total += row[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
}

}  // namespace

Var matmul(Tape& tape, Var a, Var b) {
    const NumArray& av = tape.value(a);
    const NumArray& bv = tape.value(b);
    require_rank2("matmul", av);
    require_rank2("matmul", bv);
    const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
    if (bv.rows() != k) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_string(av.shape()) + " · " +
                         shape_string(bv.shape()));
    }
    NumArray out({n, m});
    view(out.data(), n, m).noalias() = view(av.data(), n, k) * view(bv.data(), k, m);
    return tape.record(std::move(out), {a, b}, [a, b, n, k, m](Tape& t, const NumArray& g) {
        const auto gv = view(g.data(), n, m);
        if (t.requires_grad(a)) {
            view(t.grad_buffer(a).data(), n, k).noalias() += gv * view(t.value(b).data(), k, m).transpose();
        }
        if (t.requires_grad(b)) {
            view(t.grad_buffer(b).data(), k, m).noalias() += view(t.value(a).data(), n, k).transpose() * gv;
        }
    });
}

namespace {

Var linear_impl(Tape& tape, Var x, Var weight, Var bias) {
    const NumArray& xv = tape.value(x);
    const NumArray& wv = tape.value(weight);
    require_rank2("linear", xv);
    if (wv.rank() != 2) throw ShapeError("linear: weight must be rank 2, got " + shape_string(wv.shape()));
    const std::size_t n = xv.rows(), din = xv.cols(), dout = wv.cols();
    if (wv.rows() != din) {
        throw ShapeError("linear: input " + shape_string(xv.shape()) + " incompatible with weight " +
                         shape_string(wv.shape()));
    }
    NumArray out({n, dout});
    auto ov = view(out.data(), n, dout);
    ov.noalias() = view(xv.data(), n, din) * view(wv.data(), din, dout);
    if (bias.valid()) {
        const NumArray& bv = tape.value(bias);
        if (bv.size() != dout) {
            throw ShapeError("linear: bias " + shape_string(bv.shape()) + " does not match output width " +
                             std::to_string(dout));
        }
        ov.rowwise() += view(bv.data(), 1, dout).row(0);
    }
    return tape.record(std::move(out), {x, weight, bias}, [x, weight, bias, n, din, dout](Tape& t, const NumArray& g) {
        const auto gv = view(g.data(), n, dout);
        if (t.requires_grad(x)) {
            view(t.grad_buffer(x).data(), n, din).noalias() +=
                gv * view(t.value(weight).data(), din, dout).transpose();
        }
        if (t.requires_grad(weight)) {
            view(t.grad_buffer(weight).data(), din, dout).noalias() +=
                view(t.value(x).data(), n, din).transpose() * gv;
        }
        if (bias.valid() && t.requires_grad(bias)) {
            view(t.grad_buffer(bias).data(), 1, dout) += gv.colwise().sum();
        }
    });
}

}  // namespace

Var linear(Tape& tape, Var x, Var weight, Var bias) { return linear_impl(tape, x, weight, bias); }

Var linear(Tape& tape, Var x, Var weight) { return linear_impl(tape, x, weight, Var{}); }

Var add(Tape& tape, Var a, Var b) {
    const NumArray& av = tape.value(a);
    const NumArray& bv = tape.value(b);
    require_same_shape("add", av, bv);
    NumArray out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const NumArray& g) {
        for (Var in : {a, b}) {
            if (!t.requires_grad(in)) continue;
            NumArray& buf = t.grad_buffer(in);
            for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
        }
    });
}

Var add_row(Tape& tape, Var x, Var row) {
    const NumArray& xv = tape.value(x);
    const NumArray& rv = tape.value(row);
    require_rank2("add_row", xv);
    const std::size_t n = xv.rows(), d = xv.cols();
    if (rv.size() != d) {
        throw ShapeError("add_row: row " + shape_string(rv.shape()) + " does not match " + shape_string(xv.shape()));
    }
    NumArray out = xv;
    view(out.data(), n, d).rowwise() += view(rv.data(), 1, d).row(0);
    return tape.record(std::move(out), {x, row}, [x, row, n, d](Tape& t, const NumArray& g) {
        if (t.requires_grad(x)) {
            NumArray& buf = t.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
        }
        if (t.requires_grad(row)) {
            view(t.grad_buffer(row).data(), 1, d) += view(g.data(), n, d).colwise().sum();
        }
    });
}

Var scale(Tape& tape, Var x, double factor) {
    NumArray out = tape.value(x);
    for (double& v : out.values()) v *= factor;
    return tape.record(std::move(out), {x}, [x, factor](Tape& t, const NumArray& g) {
        NumArray& buf = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += factor * g[i];
    });
}

Var concat_rows(Tape& tape, std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
    const std::size_t d = tape.value(parts[0]).cols();
    std::size_t total = 0;
    for (Var p : parts) {
        const NumArray& pv = tape.value(p);
        require_rank2("concat_rows", pv);
        if (pv.cols() != d) {
            throw ShapeError("concat_rows: column mismatch " + shape_string(tape.value(parts[0]).shape()) + " vs " +
                             shape_string(pv.shape()));
        }
        total += pv.rows();
    }
    NumArray out({total, d});
    std::size_t offset = 0;
    for (Var p : parts) {
        const NumArray& pv = tape.value(p);
        std::copy(pv.data(), pv.data() + pv.size(), out.data() + offset);
        offset += pv.size();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return tape.record(std::move(out), inputs, [inputs](Tape& t, const NumArray& g) {
        std::size_t off = 0;
        for (Var p : inputs) {
            const std::size_t count = t.value(p).size();
            if (t.requires_grad(p)) {
                NumArray& buf = t.grad_buffer(p);
                for (std::size_t i = 0; i < count; ++i) buf[i] += g[off + i];
            }
            off += count;
        }
    });
}

Var layer_norm(Tape& tape, Var x, Var scale_var, Var shift_var, double eps) {
    const NumArray& xv = tape.value(x);
    require_rank2("layer_norm", xv);
    const std::size_t n = xv.rows(), d = xv.cols();
    if (xv.empty() || d == 0) throw DataError("layer_norm: empty input");
    if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
    const NumArray& sv = tape.value(scale_var);
    const NumArray& hv = tape.value(shift_var);
    if (sv.size() != d || hv.size() != d) {
        throw ShapeError("layer_norm: scale " + shape_string(sv.shape()) + " / shift " + shape_string(hv.shape()) +
                         " do not match row width " + std::to_string(d));
    }
    auto normalized = std::make_shared<NumArray>(NumArray({n, d}));
    auto inv_std = std::make_shared<std::vector<double>>(n);
    NumArray out({n, d});
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = xv.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(d);
        const double rstd = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = rstd;
        double* nr = normalized->data() + r * d;
        double* orow = out.data() + r * d;
        for (std::size_t j = 0; j < d; ++j) {
            nr[j] = (xr[j] - mean) * rstd;
            orow[j] = sv[j] * nr[j] + hv[j];
        }
    }
    return tape.record(std::move(out), {x, scale_var, shift_var},
                       [x, scale_var, shift_var, n, d, normalized, inv_std](Tape& t, const NumArray& g) {
                           const NumArray& s = t.value(scale_var);
                           const bool want_x = t.requires_grad(x);
                           NumArray* gs = t.requires_grad(scale_var) ? &t.grad_buffer(scale_var) : nullptr;
                           NumArray* gh = t.requires_grad(shift_var) ? &t.grad_buffer(shift_var) : nullptr;
                           NumArray* gx = want_x ? &t.grad_buffer(x) : nullptr;
                           std::vector<double> dxhat(d);
                           for (std::size_t r = 0; r < n; ++r) {
                               const double* gr = g.data() + r * d;
                               const double* nr = normalized->data() + r * d;
                               double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                               for (std::size_t j = 0; j < d; ++j) {
                                   if (gs) (*gs)[j] += gr[j] * nr[j];
                                   if (gh) (*gh)[j] += gr[j];
                                   dxhat[j] = gr[j] * s[j];
                                   mean_dxhat += dxhat[j];
                                   mean_dxhat_xhat += dxhat[j] * nr[j];
                               }
                               if (!gx) continue;
                               mean_dxhat /= static_cast<double>(d);
                               mean_dxhat_xhat /= static_cast<double>(d);
                               const double rstd = (*inv_std)[r];
                               double* out_r = gx->data() + r * d;
                               for (std::size_t j = 0; j < d; ++j) {
                                   out_r[j] += rstd * (dxhat[j] - mean_dxhat - nr[j] * mean_dxhat_xhat);
                               }
                           }
                       });
}

NumArray softmax_rows(const NumArray& x) {
    require_rank2("softmax_rows", x);
    NumArray out = x;
    for (std::size_t r = 0; r < out.rows(); ++r) softmax_row_inplace(out.data() + r * out.cols(), out.cols());
    return out;
}

Var softmax_rows(Tape& tape, Var x) {
    auto probs = std::make_shared<NumArray>(softmax_rows(tape.value(x)));
    NumArray out = *probs;
    return tape.record(std::move(out), {x}, [x, probs](Tape& t, const NumArray& g) {
        const std::size_t n = probs->rows(), m = probs->cols();
        NumArray& buf = t.grad_buffer(x);
        for (std::size_t r = 0; r < n; ++r) {
            const double* y = probs->data() + r * m;
            const double* gr = g.data() + r * m;
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) dot += gr[j] * y[j];
            for (std::size_t j = 0; j < m; ++j) buf[r * m + j] += y[j] * (gr[j] - dot);
        }
    });
}

NumArray layer_norm(const NumArray& x, std::span<const double> scale_values, std::span<const double> shift_values,
                    double eps) {
    Tape tape;
    const std::size_t d = x.cols();
    Var xs = tape.constant(x);
    Var sc = tape.constant(NumArray({d}, std::vector<double>(scale_values.begin(), scale_values.end())));
    Var sh = tape.constant(NumArray({d}, std::vector<double>(shift_values.begin(), shift_values.end())));
    return tape.value(layer_norm(tape, xs, sc, sh, eps));
}

Var gelu(Tape& tape, Var x) {
    constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double kA = 0.044715;
    const NumArray& xv = tape.value(x);
    NumArray out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double v = xv[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
    }
    return tape.record(std::move(out), {x}, [x](Tape& t, const NumArray& g) {
        const NumArray& xin = t.value(x);
        NumArray& buf = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xin[i];
            const double th = std::tanh(kC * (v + kA * v * v * v));
            const double deriv = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kC * (1.0 + 3.0 * kA * v * v);
            buf[i] += g[i] * deriv;
        }
    });
}

Var mse(Tape& tape, Var prediction, const NumArray& target) {
    const NumArray& pv = tape.value(prediction);
    if (pv.size() != target.size()) {
        throw ShapeError("mse: prediction " + shape_string(pv.shape()) + " vs target " + shape_string(target.shape()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) total += (pv[i] - target[i]) * (pv[i] - target[i]);
    const double count = static_cast<double>(pv.size());
    return tape.record(NumArray::scalar(total / count), {prediction},
                       [prediction, target, count](Tape& t, const NumArray& g) {
                           const NumArray& p = t.value(prediction);
                           NumArray& buf = t.grad_buffer(prediction);
                           const double f = 2.0 * g[0] / count;
                           for (std::size_t i = 0; i < p.size(); ++i) buf[i] += f * (p[i] - target[i]);
                       });
}

Var sum(Tape& tape, Var x) {
    double total = 0.0;
    for (double v : tape.value(x).values()) total += v;
    return tape.record(NumArray::scalar(total), {x}, [x](Tape& t, const NumArray& g) {
        NumArray& buf = t.grad_buffer(x);
        for (double& v : buf.values()) v += g[0];
    });
}

Var attention(Tape& tape, Var q, Var k, Var v, std::size_t heads, std::vector<NumArray>* weights) {
    const NumArray& qv = tape.value(q);
    const NumArray& kv = tape.value(k);
    const NumArray& vv = tape.value(v);
    if (kv.empty() || vv.empty()) throw DataError("attention: empty memory, no keys to attend to");
    require_rank2("attention", qv);
    require_rank2("attention", kv);
    require_rank2("attention", vv);
    if (heads == 0) throw ConfigError("attention: head count must be positive");
    const std::size_t nq = qv.rows(), nk = kv.rows(), width = qv.cols();
    if (kv.cols() != width || vv.cols() != width || vv.rows() != nk) {
        throw ShapeError("attention: incompatible q " + shape_string(qv.shape()) + ", k " + shape_string(kv.shape()) +
                         ", v " + shape_string(vv.shape()));
    }
    if (width % heads != 0) {
        throw ConfigError("attention: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
                          " heads");
    }
    const std::size_t c = width / heads;
    const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(c));

    auto probs = std::make_shared<std::vector<NumArray>>();
    probs->reserve(heads);
    NumArray out({nq, width});
    for (std::size_t h = 0; h < heads; ++h) {
        NumArray p({nq, nk});
        auto pm = view(p.data(), nq, nk);
        pm.noalias() = view(qv.data() + h * c, nq, c, width) * view(kv.data() + h * c, nk, c, width).transpose();
        pm *= inv_sqrt_c;
        for (std::size_t r = 0; r < nq; ++r) softmax_row_inplace(p.data() + r * nk, nk);
        view(out.data() + h * c, nq, c, width).noalias() = pm * view(vv.data() + h * c, nk, c, width);
        if (weights) weights->push_back(p);
        probs->push_back(std::move(p));
    }

    return tape.record(std::move(out), {q, k, v}, [q, k, v, nq, nk, width, c, inv_sqrt_c, probs](Tape& t, const NumArray& g) {
        const NumArray& qv = t.value(q);
        const NumArray& kv = t.value(k);
        const NumArray& vv = t.value(v);
        double* gq = t.requires_grad(q) ? t.grad_buffer(q).data() : nullptr;
        double* gk = t.requires_grad(k) ? t.grad_buffer(k).data() : nullptr;
        double* gv = t.requires_grad(v) ? t.grad_buffer(v).data() : nullptr;
        detail::RowMat dp(nq, nk);
        for (std::size_t h = 0; h < probs->size(); ++h) {
            const auto pm = view((*probs)[h].data(), nq, nk);
            const auto go = view(g.data() + h * c, nq, c, width);
            if (gv) view(gv + h * c, nk, c, width).noalias() += pm.transpose() * go;
            dp.noalias() = go * view(vv.data() + h * c, nk, c, width).transpose();
            // dS = P ⊙ (dP − rowsum(dP ⊙ P)), folded with the 1/√c scale.
            for (Eigen::Index r = 0; r < dp.rows(); ++r) {
                const double dot = dp.row(r).dot(pm.row(r));
                dp.row(r) = (pm.row(r).array() * (dp.row(r).array() - dot)).matrix() * inv_sqrt_c;
            }
            if (gq) view(gq + h * c, nq, c, width).noalias() += dp * view(kv.data() + h * c, nk, c, width);
            if (gk) view(gk + h * c, nk, c, width).noalias() += dp.transpose() * view(qv.data() + h * c, nq, c, width);
        }
    });
}

Var scaled_attention(Tape& tape, Var queries, Var keys, Var values, Var wq, Var wk, Var wv) {
    if (tape.value(keys).empty()) throw DataError("scaled_attention: empty memory, no keys to attend to");
    const NumArray& wqv = tape.value(wq);
    const NumArray& wkv = tape.value(wk);
    const NumArray& wvv = tape.value(wv);
    if (wqv.cols() != wkv.cols() || wvv.cols() != wkv.cols()) {
        throw ShapeError("scaled_attention: projection widths differ, Wq " + shape_string(wqv.shape()) + ", Wk " +
                         shape_string(wkv.shape()) + ", Wv " + shape_string(wvv.shape()));
    }
    Var q = matmul(tape, queries, wq);
    Var k = matmul(tape, keys, wk);
    Var v = matmul(tape, values, wv);
    return attention(tape, q, k, v, 1);
}

Var multi_head(Tape& tape, Var queries, Var keys, Var values, std::size_t heads, const AttentionVars& p,
               std::vector<NumArray>* weights) {
    const std::size_t width = tape.value(p.wq).cols();
    if (heads == 0 || width % heads != 0) {
        throw ConfigError("multi_head: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
                          " heads");
    }
    Var q = linear(tape, queries, p.wq);
    Var k = linear(tape, keys, p.wk);
    Var v = linear(tape, values, p.wv);
    Var mixed = attention(tape, q, k, v, heads, weights);
    return linear(tape, mixed, p.wo, p.bo);
}

}  // namespace ldif::nn
