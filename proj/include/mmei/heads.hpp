#pragma once

#include <span>
#include <vector>

#include "mmei/dataio.hpp"
#include "mmei/nd/tensor.hpp"

namespace mmei {

struct HeadParams {
    nd::Tensor w_e;  // [|E| × d]
    nd::Tensor b_e;  // [1 × |E|]
    nd::Tensor w_i;  // [|I| × d]
    nd::Tensor b_i;  // [1 × |I|]

    void validate(std::size_t d, std::size_t num_emotions, std::size_t num_intents) const;
};

struct LossWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;

    void validate() const;
};

/// softmax(F·W_eᵀ + b_e) row by row; F is [m × d].
nd::Tensor emotion_forward(const nd::Tensor& fused, const HeadParams& params);
nd::Tensor intent_forward(const nd::Tensor& fused, const HeadParams& params);

/// Batch-mean cross-entropy of the emotion head plus that of the intent head.
nd::Tensor recognition_loss(const nd::Tensor& emotion_probs, std::span<const std::size_t> emotion_labels,
                            const nd::Tensor& intent_probs, std::span<const std::size_t> intent_labels);

/// Mean over rows of -ln σ(⟨F_u, E_pos⟩ − ⟨F_u, E_neg⟩). All inputs [m × d].
nd::Tensor ranking_loss(const nd::Tensor& users, const nd::Tensor& positives, const nd::Tensor& negatives);
double ranking_loss(std::span<const double> user, const ContentItem& positive, const ContentItem& negative);

/// λ₁·recog + λ₂·rank.
nd::Tensor total_loss(const nd::Tensor& recog, const nd::Tensor& rank, const LossWeights& weights);

}  // namespace mmei
