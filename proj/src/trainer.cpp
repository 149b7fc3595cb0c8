#include "mmei/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include <json.hpp>

#include "mmei/error.hpp"
#include "mmei/nd/ops.hpp"
#include "mmei/nd/tape.hpp"
#include "mmei/recommender.hpp"
#include "mmei/rng.hpp"

namespace mmei {

using nd::Tensor;
using json = nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

const std::set<std::string> kConfigKeys = {"learning_rate", "batch_size", "epochs",    "dropout_p",  "lambda1",  "lambda2", "weight_decay",
                                           "adam_beta1",    "adam_beta2", "adam_eps",  "seed",       "d",        "layers"};

std::size_t argmax_row(const Tensor& probs, std::size_t r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c)
        if (probs.at(r, c) > probs.at(r, best)) best = c;
    return best;
}

std::vector<const MultimodalSample*> pointers(const std::vector<MultimodalSample>& samples, std::size_t begin, std::size_t end) {
    std::vector<const MultimodalSample*> out;
    for (std::size_t i = begin; i < end; ++i) out.push_back(&samples[i]);
    return out;
}

void check_sample_widths(const MmeiModel& model, const MultimodalSample& s) {
    const auto& m = model.manifest;
    if (s.visual.cols() != m.d_v || s.audio.cols() != m.d_a || s.text.cols() != m.d_t) {
        throw SchemaError("sample '" + s.id + "': modality widths do not match the model's d_v/d_a/d_t (" + std::to_string(m.d_v) + "/" +
                          std::to_string(m.d_a) + "/" + std::to_string(m.d_t) + ")");
    }
}

std::string array_json(const Tensor& t) {
    std::string out = "{\"shape\":[";
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
        if (i) out += ",";
        out += std::to_string(t.shape()[i]);
    }
    out += "],\"data\":[";
    const auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i) out += ",";
        out += format_double(data[i]);
    }
    return out + "]}";
}

Tensor array_from_json(const json& arrays, const std::string& name) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw CheckpointError("checkpoint: missing array '" + name + "'");
    try {
        nd::Shape shape = it->at("shape").get<nd::Shape>();
        std::vector<double> data = it->at("data").get<std::vector<double>>();
        return Tensor(std::move(shape), std::move(data));
    } catch (const json::exception& e) {
        throw CheckpointError("checkpoint: array '" + name + "': " + e.what());
    } catch (const ShapeError& e) {
        throw CheckpointError("checkpoint: array '" + name + "': " + e.what());
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw ParameterError("learning_rate must be finite and >= 0");
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (epochs < 1) throw ParameterError("epochs must be >= 1");
    if (!(dropout_p >= 0 && dropout_p < 1)) throw ParameterError("dropout_p must lie in [0, 1)");
    loss_weights().validate();
    if (!(weight_decay >= 0)) throw ParameterError("weight_decay must be >= 0");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) throw ParameterError("adam betas must lie in [0, 1)");
    if (!(adam_eps > 0)) throw ParameterError("adam_eps must be > 0");
    if (d < 1) throw ParameterError("d must be >= 1");
}

std::string TrainConfig::to_json() const {
    nlohmann::ordered_json o;
    o["learning_rate"] = learning_rate;
    o["batch_size"] = batch_size;
    o["epochs"] = epochs;
    o["dropout_p"] = dropout_p;
    o["lambda1"] = lambda1;
    o["lambda2"] = lambda2;
    o["weight_decay"] = weight_decay;
    o["adam_beta1"] = adam_beta1;
    o["adam_beta2"] = adam_beta2;
    o["adam_eps"] = adam_eps;
    o["seed"] = seed;
    o["d"] = d;
    o["layers"] = layers;
    return o.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!obj.is_object()) throw SchemaError("config: expected a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!kConfigKeys.count(key)) throw SchemaError("config: unknown key '" + key + "'");
    TrainConfig c;
    auto num = [&](const char* key, double& out) {
        if (auto it = obj.find(key); it != obj.end()) {
            if (!it->is_number()) throw SchemaError(std::string("config: field '") + key + "' must be a number");
            out = it->get<double>();
        }
    };
    auto count = [&](const char* key, auto& out) {
        if (auto it = obj.find(key); it != obj.end()) {
            if (!it->is_number_unsigned()) throw SchemaError(std::string("config: field '") + key + "' must be a nonnegative integer");
            out = it->get<std::remove_reference_t<decltype(out)>>();
        }
    };
    num("learning_rate", c.learning_rate);
    count("batch_size", c.batch_size);
    count("epochs", c.epochs);
    num("dropout_p", c.dropout_p);
    num("lambda1", c.lambda1);
    num("lambda2", c.lambda2);
    num("weight_decay", c.weight_decay);
    num("adam_beta1", c.adam_beta1);
    num("adam_beta2", c.adam_beta2);
    num("adam_eps", c.adam_eps);
    count("seed", c.seed);
    count("d", c.d);
    count("layers", c.layers);
    c.validate();
    return c;
}

void adamw_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, const TrainConfig& config, std::size_t t) {
    if (t < 1) throw ParameterError("adamw_step: step index must be >= 1");
    if (grad.shape() != param.shape() || m.shape() != param.shape() || v.shape() != param.shape()) {
        throw ShapeError("adamw_step: param " + nd::shape_str(param.shape()) + ", grad " + nd::shape_str(grad.shape()) + ", moments " +
                         nd::shape_str(m.shape()) + "/" + nd::shape_str(v.shape()));
    }
    const double b1 = config.adam_beta1, b2 = config.adam_beta2, lr = config.learning_rate;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const double decay = 1.0 - lr * config.weight_decay;
    auto& p = param.mutable_values();
    auto& mm = m.mutable_values();
    auto& vv = v.mutable_values();
    const auto g = grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        mm[i] = b1 * mm[i] + (1.0 - b1) * g[i];
        vv[i] = b2 * vv[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = mm[i] / c1;
        const double vhat = vv[i] / c2;
        p[i] = p[i] * decay - lr * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
}

BatchLoss batch_loss(const MmeiModel& model, const std::vector<const MultimodalSample*>& batch, const TrainConfig& config,
                     nd::Mode mode, std::mt19937_64& dropout_rng, std::mt19937_64& pair_rng) {
    for (const auto* s : batch) check_sample_widths(model, *s);
    BatchForward fwd = forward_batch(model, batch, config.dropout_p, mode, dropout_rng);

    std::vector<std::size_t> e_labels, i_labels;
    for (const auto* s : batch) {
        e_labels.push_back(model.manifest.emotion_index(s->emotion));
        i_labels.push_back(model.manifest.intent_index(s->intent));
    }
    BatchLoss out;
    out.recog = recognition_loss(fwd.emotion_probs, e_labels, fwd.intent_probs, i_labels);

    const std::size_t n_items = model.content_ids.size();
    std::vector<std::size_t> users, pos, neg;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& positives = batch[b]->positives;
        if (positives.empty()) continue;
        std::set<std::size_t> pos_idx;
        for (const auto& id : positives) pos_idx.insert(model.content_index(id));
        if (pos_idx.size() >= n_items) continue;
        std::uniform_int_distribution<std::size_t> pick_pos(0, positives.size() - 1);
        const std::size_t p = model.content_index(positives[pick_pos(pair_rng)]);
        std::uniform_int_distribution<std::size_t> pick_neg(0, n_items - pos_idx.size() - 1);
        std::size_t slot = pick_neg(pair_rng), n = 0;
        // slot-th item outside the positives
        for (n = 0; n < n_items; ++n) {
            if (pos_idx.count(n)) continue;
            if (slot == 0) break;
            --slot;
        }
        users.push_back(b);
        pos.push_back(p);
        neg.push_back(n);
    }
    out.pairs = users.size();
    if (users.empty()) {
        out.rank = Tensor::scalar(0.0);
    } else {
        out.rank = ranking_loss(nd::gather_rows(fwd.fused, users), nd::gather_rows(model.content, pos), nd::gather_rows(model.content, neg));
    }
    out.total = total_loss(out.recog, out.rank, config.loss_weights());
    return out;
}

EpochRecord validation_loss(const MmeiModel& model, const std::vector<MultimodalSample>& samples, const TrainConfig& config) {
    EpochRecord rec;
    if (samples.empty()) return rec;
    auto dropout_rng = make_rng(config.seed, {stream::kDropout});
    auto pair_rng = make_rng(config.seed, {stream::kValPairs});
    double recog = 0, rank = 0;
    std::size_t pairs = 0;
    for (std::size_t start = 0; start < samples.size(); start += config.batch_size) {
        const std::size_t end = std::min(samples.size(), start + config.batch_size);
        BatchLoss l = batch_loss(model, pointers(samples, start, end), config, nd::Mode::Eval, dropout_rng, pair_rng);
        recog += l.recog.item() * static_cast<double>(end - start);
        rank += l.rank.item() * static_cast<double>(l.pairs);
        pairs += l.pairs;
    }
    rec.val_recog = recog / static_cast<double>(samples.size());
    rec.val_rank = pairs ? rank / static_cast<double>(pairs) : 0.0;
    rec.val_total = config.lambda1 * rec.val_recog + config.lambda2 * rec.val_rank;
    return rec;
}

TrainResult train(const MmeiModel& initial, const std::vector<MultimodalSample>& train_set, const std::vector<MultimodalSample>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    initial.validate();
    if (train_set.empty()) throw InputError("train: empty training split");
    if (val_set.empty()) throw InputError("train: empty validation split");

    TrainResult res;
    MmeiModel model = initial;
    AdamState adam;
    model.for_each_param([&](const std::string& name, const Tensor& t) {
        adam.m[name] = Tensor::zeros(t.shape());
        adam.v[name] = Tensor::zeros(t.shape());
    });
    bool have_best = false;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        auto dropout_rng = make_rng(config.seed, {stream::kDropout, epoch});
        auto pair_rng = make_rng(config.seed, {stream::kPairs, epoch});
        double recog = 0, rank = 0;
        std::size_t pairs = 0, batch_no = 0;

        for (const auto& batch : batches(train_set, config.batch_size, config.seed, epoch)) {
            ++batch_no;
            nd::Tape tape;
            const MmeiModel bound = model.bind(tape);
            BatchLoss l = batch_loss(bound, batch, config, nd::Mode::Train, dropout_rng, pair_rng);
            const std::string where = " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no);
            if (!std::isfinite(l.total.item())) throw NumericalError("non-finite loss" + where);
            const nd::Gradients grads = tape.backward(l.total);

            std::vector<Tensor> leaves;
            bound.for_each_param([&](const std::string&, const Tensor& t) { leaves.push_back(t); });
            ++adam.step;
            std::size_t idx = 0;
            model.for_each_param([&](const std::string& name, Tensor& p) {
                adamw_step(p, grads.of(leaves[idx++]), adam.m.at(name), adam.v.at(name), config, adam.step);
                if (!p.all_finite()) throw NumericalError("parameter '" + name + "' became non-finite" + where);
            });

            recog += l.recog.item() * static_cast<double>(batch.size());
            rank += l.rank.item() * static_cast<double>(l.pairs);
            pairs += l.pairs;
        }

        EpochRecord rec = validation_loss(model, val_set, config);
        if (!std::isfinite(rec.val_total)) throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
        rec.epoch = epoch;
        rec.train_recog = recog / static_cast<double>(train_set.size());
        rec.train_rank = pairs ? rank / static_cast<double>(pairs) : 0.0;
        rec.train_total = config.lambda1 * rec.train_recog + config.lambda2 * rec.train_rank;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        res.last = {config, model, adam, epoch, have_best ? std::min(res.best.best_val_loss, rec.val_total) : rec.val_total};
        if (!have_best || rec.val_total < res.best.best_val_loss) {
            res.best = res.last;
            have_best = true;
        }
    }
    res.last.best_val_loss = res.best.best_val_loss;
    return res;
}

Predictions predict(const MmeiModel& model, const std::vector<MultimodalSample>& samples) {
    Predictions out;
    auto rng = make_rng(0, {stream::kDropout});
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t end = std::min(samples.size(), start + kChunk);
        auto batch = pointers(samples, start, end);
        for (const auto* s : batch) check_sample_widths(model, *s);
        BatchForward fwd = forward_batch(model, batch, 0.0, nd::Mode::Eval, rng);
        for (std::size_t r = 0; r < batch.size(); ++r) {
            out.emotion.push_back(argmax_row(fwd.emotion_probs, r));
            out.intent.push_back(argmax_row(fwd.intent_probs, r));
            const auto f = fwd.states[r].fused.data();
            out.fused.emplace_back(f.begin(), f.end());
        }
    }
    return out;
}

std::vector<ContentItem> model_catalog(const MmeiModel& model, const std::vector<ContentItem>& catalog) {
    if (catalog.size() != model.content_ids.size()) {
        throw SchemaError("catalog has " + std::to_string(catalog.size()) + " items, model was trained on " +
                          std::to_string(model.content_ids.size()));
    }
    std::vector<ContentItem> out;
    const std::size_t d = model.dim();
    for (const auto& item : catalog) {
        const std::size_t row = model.content_index(item.id);
        ContentItem c{item.id, {}, item.metadata};
        c.embedding.assign(model.content.data().begin() + static_cast<std::ptrdiff_t>(row * d),
                           model.content.data().begin() + static_cast<std::ptrdiff_t>((row + 1) * d));
        out.push_back(std::move(c));
    }
    return out;
}

MetricReport evaluate(const MmeiModel& model, const std::vector<MultimodalSample>& samples, const std::vector<ContentItem>& catalog,
                      std::size_t k) {
    if (samples.empty()) throw InputError("evaluate: no samples");
    if (k < 1) throw ParameterError("evaluate: k must be >= 1");
    const std::vector<ContentItem> items = model_catalog(model, catalog);
    const Predictions pred = predict(model, samples);

    std::vector<std::size_t> e_labels, i_labels;
    std::vector<RankingJudgment> judgments;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        e_labels.push_back(model.manifest.emotion_index(samples[i].emotion));
        i_labels.push_back(model.manifest.intent_index(samples[i].intent));
        if (samples[i].positives.empty()) continue;
        RankingJudgment j;
        j.ranked = rank_top_k(pred.fused[i], items, items.size()).ids();
        j.relevant.insert(samples[i].positives.begin(), samples[i].positives.end());
        judgments.push_back(std::move(j));
    }
    MetricReport r;
    r.emotion = classification_metrics(pred.emotion, e_labels, model.manifest.num_emotions());
    r.intent = classification_metrics(pred.intent, i_labels, model.manifest.num_intents());
    r.map = mean_average_precision(judgments);
    r.ndcg = mean_ndcg_at_k(judgments, k);
    r.hit_ratio = hit_ratio_at_k(judgments, k);
    r.k = k;
    r.samples = samples.size();
    r.ranked_users = judgments.size();
    return r;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    std::string out = "{\n\"version\":" + std::to_string(kCheckpointVersion) + ",\n";
    out += "\"config\":" + ckpt.config.to_json() + ",\n";
    out += "\"manifest\":" + json::parse(serialize_manifest(ckpt.model.manifest)).dump() + ",\n";
    out += "\"content_ids\":" + json(ckpt.model.content_ids).dump() + ",\n";
    out += "\"epoch\":" + std::to_string(ckpt.epoch) + ",\n";
    out += "\"best_val_loss\":" + format_double(ckpt.best_val_loss) + ",\n";
    out += "\"adam_step\":" + std::to_string(ckpt.adam.step) + ",\n";
    out += "\"arrays\":{\n";
    bool first = true;
    auto emit = [&](const std::string& name, const Tensor& t) {
        if (!first) out += ",\n";
        first = false;
        out += json(name).dump() + ":" + array_json(t);
    };
    ckpt.model.for_each_param(emit);
    ckpt.model.for_each_param([&](const std::string& name, const Tensor&) {
        if (auto it = ckpt.adam.m.find(name); it != ckpt.adam.m.end()) emit("adam.m." + name, it->second);
        if (auto it = ckpt.adam.v.find(name); it != ckpt.adam.v.end()) emit("adam.v." + name, it->second);
    });
    out += "\n}\n}\n";
    return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint: corrupt or truncated: ") + e.what());
    }
    if (!obj.is_object()) throw CheckpointError("checkpoint: expected a JSON object");
    for (const char* key : {"version", "config", "manifest", "content_ids", "epoch", "best_val_loss", "adam_step", "arrays"})
        if (!obj.contains(key)) throw CheckpointError(std::string("checkpoint: missing field '") + key + "'");
    if (obj["version"] != kCheckpointVersion) {
        throw CheckpointError("checkpoint: unsupported version " + obj["version"].dump() + " (expected " + std::to_string(kCheckpointVersion) + ")");
    }

    Checkpoint ck;
    try {
        ck.config = TrainConfig::from_json(obj["config"].dump());
        ck.epoch = obj["epoch"].get<std::size_t>();
        ck.best_val_loss = obj["best_val_loss"].get<double>();
        ck.adam.step = obj["adam_step"].get<std::size_t>();
        ck.model.content_ids = obj["content_ids"].get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
    ck.model.manifest = parse_manifest(obj["manifest"].dump());
    ck.model.fusion.layers.resize(ck.config.layers);

    const json& arrays = obj["arrays"];
    ck.model.for_each_param([&](const std::string& name, Tensor& t) { t = array_from_json(arrays, name); });
    const std::size_t width = ck.model.fusion.alpha_scorer.cols();
    if (width != ck.config.d) {
        throw SchemaError("checkpoint: field 'config.d' is " + std::to_string(ck.config.d) + " but stored parameters have width " +
                          std::to_string(width));
    }
    ck.model.validate();
    ck.model.for_each_param([&](const std::string& name, const Tensor& t) {
        if (arrays.contains("adam.m." + name)) {
            ck.adam.m[name] = array_from_json(arrays, "adam.m." + name);
            ck.adam.v[name] = array_from_json(arrays, "adam.v." + name);
            if (ck.adam.m[name].shape() != t.shape() || ck.adam.v[name].shape() != t.shape()) {
                throw CheckpointError("checkpoint: optimizer moments for '" + name + "' do not match the parameter shape");
            }
        }
    });
    return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) { write_text_file(path, serialize_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

std::string loss_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,train_total,train_recog,train_rank,val_total,val_recog,val_rank\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + format_double(r.train_total) + "," + format_double(r.train_recog) + "," +
               format_double(r.train_rank) + "," + format_double(r.val_total) + "," + format_double(r.val_recog) + "," +
               format_double(r.val_rank) + "\n";
    }
    return out;
}

}  // namespace mmei
