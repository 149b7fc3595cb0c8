#include "mmei/model.hpp"

#include <cmath>
#include <set>

#include "mmei/error.hpp"
#include "mmei/rng.hpp"

namespace mmei {

using nd::Tensor;

namespace {

Tensor uniform(nd::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(nd::element_count(shape));
    for (double& x : v) x = u(rng);
    return Tensor(std::move(shape), std::move(v));
}

const char* const kBlockParts[] = {"query", "key", "value"};

template <typename Model, typename Fn>
void visit(Model& m, Fn&& fn) {
    fn(std::string("fusion.w_v"), m.fusion.w_v);
    fn(std::string("fusion.w_a"), m.fusion.w_a);
    fn(std::string("fusion.w_t"), m.fusion.w_t);
    for (std::size_t l = 0; l < m.fusion.layers.size(); ++l) {
        for (std::size_t target = 0; target < kModalities; ++target) {
            for (std::size_t source = 0; source < kModalities; ++source) {
                auto& b = m.fusion.layers[l][target][source];
                const std::string prefix = "fusion.layer" + std::to_string(l) + "." + modality_name(target) + "_from_" +
                                           modality_name(source) + ".";
                fn(prefix + kBlockParts[0], b.query);
                fn(prefix + kBlockParts[1], b.key);
                fn(prefix + kBlockParts[2], b.value);
            }
        }
    }
    fn(std::string("fusion.alpha_scorer"), m.fusion.alpha_scorer);
    fn(std::string("heads.w_e"), m.heads.w_e);
    fn(std::string("heads.b_e"), m.heads.b_e);
    fn(std::string("heads.w_i"), m.heads.w_i);
    fn(std::string("heads.b_i"), m.heads.b_i);
    fn(std::string("content.embedding"), m.content);
}

}  // namespace

std::size_t MmeiModel::content_index(const std::string& id) const {
    for (std::size_t i = 0; i < content_ids.size(); ++i) {
        if (content_ids[i] == id) return i;
    }
    throw LookupError("unknown content id '" + id + "'");
}

void MmeiModel::for_each_param(const std::function<void(const std::string&, Tensor&)>& fn) { visit(*this, fn); }

void MmeiModel::for_each_param(const std::function<void(const std::string&, const Tensor&)>& fn) const { visit(*this, fn); }

MmeiModel MmeiModel::bind(nd::Tape& tape) const {
    MmeiModel out = *this;
    out.for_each_param([&](const std::string&, Tensor& t) { t = tape.leaf(t); });
    return out;
}

void MmeiModel::validate() const {
    manifest.validate();
    fusion.validate();
    const std::size_t d = dim();
    if (fusion.w_v.cols() != manifest.d_v || fusion.w_a.cols() != manifest.d_a || fusion.w_t.cols() != manifest.d_t) {
        throw SchemaError("model: projection widths do not match the manifest's d_v/d_a/d_t");
    }
    heads.validate(d, manifest.num_emotions(), manifest.num_intents());
    if (content.rank() != 2 || content.cols() != d || content.rows() != content_ids.size()) {
        throw SchemaError("model: content embeddings " + nd::shape_str(content.shape()) + " do not match " +
                          std::to_string(content_ids.size()) + " items of width " + std::to_string(d));
    }
    std::set<std::string> unique(content_ids.begin(), content_ids.end());
    if (unique.size() != content_ids.size()) throw SchemaError("model: duplicate content ids");
}

MmeiModel init_model(const DatasetManifest& manifest, const std::vector<ContentItem>& catalog, const ModelShape& shape,
                     std::uint64_t seed, HeadInit head_init) {
    manifest.validate();
    if (shape.d < 1) throw ParameterError("model dimension d must be >= 1");
    if (catalog.empty()) throw ParameterError("catalog must not be empty");
    const std::size_t d = shape.d;
    auto rng = make_rng(seed, {stream::kInit});

    MmeiModel m;
    m.manifest = manifest;
    m.fusion.w_v = uniform({d, manifest.d_v}, manifest.d_v, rng);
    m.fusion.w_a = uniform({d, manifest.d_a}, manifest.d_a, rng);
    m.fusion.w_t = uniform({d, manifest.d_t}, manifest.d_t, rng);
    m.fusion.layers.resize(shape.layers);
    for (auto& layer : m.fusion.layers)
        for (auto& row : layer)
            for (auto& b : row) {
                b.query = uniform({d, d}, d, rng);
                b.key = uniform({d, d}, d, rng);
                b.value = uniform({d, d}, d, rng);
            }
    m.fusion.alpha_scorer = uniform({1, d}, d, rng);

    const std::size_t ne = manifest.num_emotions(), ni = manifest.num_intents();
    if (head_init == HeadInit::Zero) {
        m.heads.w_e = Tensor::zeros({ne, d});
        m.heads.w_i = Tensor::zeros({ni, d});
    } else {
        m.heads.w_e = uniform({ne, d}, d, rng);
        m.heads.w_i = uniform({ni, d}, d, rng);
    }
    m.heads.b_e = Tensor::zeros({1, ne});
    m.heads.b_i = Tensor::zeros({1, ni});

    std::vector<double> content;
    content.reserve(catalog.size() * d);
    for (const auto& item : catalog) {
        if (item.embedding.size() != d) {
            throw SchemaError("catalog item '" + item.id + "' has embedding width " + std::to_string(item.embedding.size()) +
                              ", model d is " + std::to_string(d));
        }
        content.insert(content.end(), item.embedding.begin(), item.embedding.end());
        m.content_ids.push_back(item.id);
    }
    m.content = Tensor({catalog.size(), d}, std::move(content));
    m.validate();
    return m;
}

BatchForward forward_batch(const MmeiModel& model, const std::vector<const MultimodalSample*>& batch, double dropout_p,
                           nd::Mode mode, std::mt19937_64& rng) {
    if (batch.empty()) throw ParameterError("forward_batch: empty batch");
    BatchForward out;
    std::vector<Tensor> rows;
    rows.reserve(batch.size());
    for (const MultimodalSample* s : batch) {
        out.states.push_back(fusion_forward(*s, model.fusion));
        rows.push_back(nd::dropout(out.states.back().fused, dropout_p, mode, rng));
    }
    out.fused = nd::concat_rows(rows);
    out.emotion_probs = emotion_forward(out.fused, model.heads);
    out.intent_probs = intent_forward(out.fused, model.heads);
    return out;
}

}  // namespace mmei
