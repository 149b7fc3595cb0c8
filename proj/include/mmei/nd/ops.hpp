#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mmei/nd/tape.hpp"
#include "mmei/nd/tensor.hpp"

// Differentiable ops over 2-D tensors. An op records itself on the tape of
// its tracked inputs; with no tracked inputs it is a plain computation.
namespace mmei::nd {

enum class Mode { Train, Eval };

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
/// x [m×n] plus a [1×n] row added to every row.
Tensor add_row(const Tensor& x, const Tensor& row);

Tensor relu(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
/// softplus(-x) = -ln σ(x), elementwise and overflow-safe.
Tensor neg_log_sigmoid(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// [m×n] -> [1×n] column means.
Tensor mean_rows(const Tensor& x);
/// Rowwise inner product of equally shaped [m×n] tensors, giving [m×1].
Tensor rows_dot(const Tensor& a, const Tensor& b);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);

inline constexpr double kLogClamp = 1e-12;

/// Mean of -ln max(p[label], 1e-12) over rows of a probability matrix.
Tensor cross_entropy(const Tensor& probs, std::span<const std::size_t> labels);

/// Inverted dropout; Eval mode (or p == 0) returns x unchanged.
Tensor dropout(const Tensor& x, double p, Mode mode, std::mt19937_64& rng);

}  // namespace mmei::nd
