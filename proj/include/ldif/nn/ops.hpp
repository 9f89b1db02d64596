#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ldif/nn/array.hpp"
#include "ldif/nn/tape.hpp"

namespace ldif::nn {

inline constexpr double kLayerNormEps = 1e-5;

// Every op below records its result on the tape together with a hand-written
// backward rule. Rank-1 inputs are treated as single-row matrices.

/// a[n,k] · b[k,m]
Var matmul(Tape& tape, Var a, Var b);

/// y = x·W + b for x[n,d_in], W[d_in,d_out], b[d_out].
Var linear(Tape& tape, Var x, Var weight, Var bias);
/// y = x·W (no bias).
Var linear(Tape& tape, Var x, Var weight);

/// Elementwise sum of equally shaped arrays.
Var add(Tape& tape, Var a, Var b);
/// Adds a row vector of length cols(x) to every row of x.
Var add_row(Tape& tape, Var x, Var row);
Var scale(Tape& tape, Var x, double factor);
/// Stacks rank-2 blocks with equal column counts.
Var concat_rows(Tape& tape, std::span<const Var> parts);

/// Row-wise normalisation to zero mean and unit variance, then
/// `scale ⊙ x̂ + shift`. `scale` and `shift` hold cols(x) values each.
Var layer_norm(Tape& tape, Var x, Var scale, Var shift, double eps = kLayerNormEps);

/// Row-wise softmax with max subtraction.
Var softmax_rows(Tape& tape, Var x);

/// tanh approximation of GELU.
Var gelu(Tape& tape, Var x);

/// Mean of squared differences against a constant target; returns a scalar.
Var mse(Tape& tape, Var prediction, const NumArray& target);
/// Sum of all entries; returns a scalar.
Var sum(Tape& tape, Var x);

/// Multi-head scaled dot-product core over already projected inputs.
/// Head h uses columns [h·c, (h+1)·c) of q, k and v where c = cols(q) / heads,
/// and computes Softmax(q_h k_hᵀ / √c) v_h. Heads are concatenated in order.
/// When `weights` is given, the per-head attention matrices are appended to it.
Var attention(Tape& tape, Var q, Var k, Var v, std::size_t heads, std::vector<NumArray>* weights = nullptr);

/// Softmax(Q·Wq (K·Wk)ᵀ / √C) · V·Wv with C = cols(Wk).
Var scaled_attention(Tape& tape, Var queries, Var keys, Var values, Var wq, Var wk, Var wv);

struct AttentionVars {
    Var wq, wk, wv;  // [width, width] each, no bias
    Var wo, bo;      // output projection
};

/// Per-head scaled attention on column slices of the full-width projections,
/// concatenated and projected by (wo, bo). Residual and normalisation are left
/// to the caller.
Var multi_head(Tape& tape, Var queries, Var keys, Var values, std::size_t heads, const AttentionVars& p,
               std::vector<NumArray>* weights = nullptr);

// Plain (tape-free) forward evaluations used by inference-only code paths and tests.
NumArray softmax_rows(const NumArray& x);
NumArray layer_norm(const NumArray& x, std::span<const double> scale, std::span<const double> shift,
                    double eps = kLayerNormEps);

}  // namespace ldif::nn
