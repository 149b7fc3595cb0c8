#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmei/dataio.hpp"
#include "mmei/metrics.hpp"
#include "mmei/model.hpp"

namespace mmei {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    double dropout_p = 0.2;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t d = 16;
    std::size_t layers = 1;

    void validate() const;
    LossWeights loss_weights() const { return {lambda1, lambda2}; }
    ModelShape shape() const { return {d, layers}; }
    std::string to_json() const;
    /// Missing keys keep their defaults; unknown keys are a schema error.
    static TrainConfig from_json(const std::string& text);
};

/// Adam moments per parameter name, plus the step counter.
struct AdamState {
    std::size_t step = 0;
    std::map<std::string, nd::Tensor> m;
    std::map<std::string, nd::Tensor> v;
};

/// One decoupled-weight-decay Adam update at step t (1-based):
/// θ ← θ·(1 − lr·wd) − lr·m̂/(√v̂ + ε).
void adamw_step(nd::Tensor& param, const nd::Tensor& grad, nd::Tensor& m, nd::Tensor& v, const TrainConfig& config,
                std::size_t t);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_total = 0, train_recog = 0, train_rank = 0;
    double val_total = 0, val_recog = 0, val_rank = 0;
    double wall_seconds = 0;
};

struct Checkpoint {
    TrainConfig config;
    MmeiModel model;
    AdamState adam;
    std::size_t epoch = 0;
    double best_val_loss = 0;
};

struct TrainResult {
    Checkpoint best;
    Checkpoint last;
    std::vector<EpochRecord> history;
};

struct BatchLoss {
    nd::Tensor total;
    nd::Tensor recog;
    nd::Tensor rank;
    std::size_t pairs = 0;
};

/// Recognition loss plus one (positive, sampled negative) ranking pair per
/// user with positives. `model` may be bound to a tape.
BatchLoss batch_loss(const MmeiModel& model, const std::vector<const MultimodalSample*>& batch, const TrainConfig& config,
                     nd::Mode mode, std::mt19937_64& dropout_rng, std::mt19937_64& pair_rng);

/// Dropout-off mean losses over `samples`, with pairs from a fixed stream.
EpochRecord validation_loss(const MmeiModel& model, const std::vector<MultimodalSample>& samples, const TrainConfig& config);

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const MmeiModel& initial, const std::vector<MultimodalSample>& train_set,
                  const std::vector<MultimodalSample>& val_set, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Dropout-off forward on every sample; ranks the whole catalog per user with
/// positives using the model's content embeddings.
MetricReport evaluate(const MmeiModel& model, const std::vector<MultimodalSample>& samples,
                      const std::vector<ContentItem>& catalog, std::size_t k = 10);

/// Catalog items with embeddings replaced by the model's learned rows.
std::vector<ContentItem> model_catalog(const MmeiModel& model, const std::vector<ContentItem>& catalog);

/// Emotion and intent argmax predictions.
struct Predictions {
    std::vector<std::size_t> emotion;
    std::vector<std::size_t> intent;
    std::vector<std::vector<double>> fused;
};
Predictions predict(const MmeiModel& model, const std::vector<MultimodalSample>& samples);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string loss_csv(const std::vector<EpochRecord>& history);

}  // namespace mmei
