#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmei/dataio.hpp"
#include "mmei/nd/tensor.hpp"

namespace mmei {

enum class Modality : std::size_t { Visual = 0, Audio = 1, Text = 2 };
inline constexpr std::size_t kModalities = 3;
const char* modality_name(std::size_t m);

/// Query/key/value maps for one (target ← source) attention call, each [d×d].
struct AttentionBlock {
    nd::Tensor query;
    nd::Tensor key;
    nd::Tensor value;
};

/// One cross-modal layer: blocks[target][source], self-attention on the diagonal.
using CrossModalLayer = std::array<std::array<AttentionBlock, kModalities>, kModalities>;

struct FusionParams {
    nd::Tensor w_v;  // [d × d_v]
    nd::Tensor w_a;  // [d × d_a]
    nd::Tensor w_t;  // [d × d_t]
    std::vector<CrossModalLayer> layers;
    nd::Tensor alpha_scorer;  // [1 × d]

    std::size_t dim() const { return alpha_scorer.cols(); }
    void validate() const;
};

struct ProjectedSequences {
    nd::Tensor v_hat;
    nd::Tensor a_hat;
    nd::Tensor t_hat;
};

struct FusedState {
    nd::Tensor v_hat, a_hat, t_hat;
    nd::Tensor pooled_v, pooled_a, pooled_t;  // [1 × d]
    nd::Tensor alpha;                          // [1 × 3]
    nd::Tensor fused;                          // [1 × d]
};

struct AttentionResult {
    nd::Tensor output;   // [q × d]
    nd::Tensor weights;  // [q × s], rows on the simplex
};

/// Row-wise linear maps into the unified space: each row r becomes W·r.
ProjectedSequences project(const MultimodalSample& sample, const FusionParams& params);

/// softmax(Q·Kᵀ/√d)·V.
nd::Tensor attend(const nd::Tensor& q, const nd::Tensor& k, const nd::Tensor& v);
AttentionResult attend_with_weights(const nd::Tensor& q, const nd::Tensor& k, const nd::Tensor& v);

/// Each modality m becomes m + Σ_src attend(m·Wqᵀ, src·Wkᵀ, src·Wvᵀ) over all
/// three sources, applied once per layer.
ProjectedSequences cross_modal_encode(const ProjectedSequences& in, const FusionParams& params);

/// Mean over sequence positions.
nd::Tensor pool(const nd::Tensor& seq);

/// α = softmax(⟨scorer, pooled_m⟩/√d), F = Σ α_m · pooled_m.
FusedState fuse(const nd::Tensor& pooled_v, const nd::Tensor& pooled_a, const nd::Tensor& pooled_t,
                const FusionParams& params);

/// project → cross_modal_encode → pool → fuse.
FusedState fusion_forward(const MultimodalSample& sample, const FusionParams& params);

}  // namespace mmei
