#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mmei/dataio.hpp"
#include "mmei/fusion.hpp"
#include "mmei/heads.hpp"
#include "mmei/nd/ops.hpp"
#include "mmei/nd/tape.hpp"

namespace mmei {

enum class HeadInit { Uniform, Zero };

struct ModelShape {
    std::size_t d = 16;
    std::size_t layers = 1;
};

/// Full parameter set: fusion, both heads, and the trainable content
/// embeddings (one row per catalog item, in `content_ids` order).
struct MmeiModel {
    DatasetManifest manifest;
    FusionParams fusion;
    HeadParams heads;
    nd::Tensor content;  // [N × d]
    std::vector<std::string> content_ids;

    std::size_t dim() const { return fusion.dim(); }
    std::size_t content_index(const std::string& id) const;

    /// Visits every trainable tensor with a stable, unique name.
    void for_each_param(const std::function<void(const std::string&, nd::Tensor&)>& fn);
    void for_each_param(const std::function<void(const std::string&, const nd::Tensor&)>& fn) const;

    /// Copy whose parameters are leaves on `tape`.
    MmeiModel bind(nd::Tape& tape) const;

    void validate() const;
};

/// Uniform(±1/√fan_in) weights, zero biases, content rows copied from the catalog.
MmeiModel init_model(const DatasetManifest& manifest, const std::vector<ContentItem>& catalog, const ModelShape& shape,
                     std::uint64_t seed, HeadInit head_init = HeadInit::Uniform);

/// Fused representations for a batch, stacked into [B × d], with dropout on F.
struct BatchForward {
    std::vector<FusedState> states;
    nd::Tensor fused;
    nd::Tensor emotion_probs;
    nd::Tensor intent_probs;
};

BatchForward forward_batch(const MmeiModel& model, const std::vector<const MultimodalSample*>& batch, double dropout_p,
                           nd::Mode mode, std::mt19937_64& rng);

}  // namespace mmei
