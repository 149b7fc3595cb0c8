#include "mmei/fusion.hpp"

#include <cmath>

#include "mmei/error.hpp"
#include "mmei/nd/ops.hpp"

namespace mmei {

using nd::Tensor;

namespace {

Tensor project_rows(const Tensor& seq, const Tensor& w, const char* name) {
    if (seq.rank() != 2 || w.rank() != 2 || seq.cols() != w.cols()) {
        throw ShapeError(std::string("project: ") + name + " sequence " + nd::shape_str(seq.shape()) +
                         " does not match projection " + nd::shape_str(w.shape()));
    }
    return nd::matmul(seq, nd::transpose(w));
}

void check_square(const Tensor& t, std::size_t d, const std::string& name) {
    if (t.shape() != nd::Shape{d, d}) throw ShapeError("fusion: " + name + " must be [" + std::to_string(d) + "x" + std::to_string(d) + "], got " + nd::shape_str(t.shape()));
}

}  // namespace

const char* modality_name(std::size_t m) {
    static constexpr const char* names[] = {"v", "a", "t"};
    return names[m];
}

void FusionParams::validate() const {
    if (alpha_scorer.rank() != 2 || alpha_scorer.rows() != 1) throw ShapeError("fusion: alpha_scorer must be [1xd]");
    const std::size_t d = dim();
    for (const Tensor* w : {&w_v, &w_a, &w_t}) {
        if (w->rank() != 2 || w->rows() != d) throw ShapeError("fusion: projection must have d rows, got " + nd::shape_str(w->shape()));
    }
    for (const auto& layer : layers)
        for (const auto& row : layer)
            for (const auto& b : row) {
                check_square(b.query, d, "query");
                check_square(b.key, d, "key");
                check_square(b.value, d, "value");
            }
}

ProjectedSequences project(const MultimodalSample& sample, const FusionParams& params) {
    return {project_rows(sample.visual, params.w_v, "visual"), project_rows(sample.audio, params.w_a, "audio"),
            project_rows(sample.text, params.w_t, "text")};
}

AttentionResult attend_with_weights(const Tensor& q, const Tensor& k, const Tensor& v) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) throw ShapeError("attend: inputs must be 2-D");
    if (k.rows() == 0 || v.rows() != k.rows()) {
        throw ShapeError("attend: keys " + nd::shape_str(k.shape()) + " and values " + nd::shape_str(v.shape()) + " disagree");
    }
    const std::size_t d = q.cols();
    if (k.cols() != d || v.cols() != d) {
        throw ShapeError("attend: widths differ, Q " + nd::shape_str(q.shape()) + " K " + nd::shape_str(k.shape()) + " V " +
                         nd::shape_str(v.shape()));
    }
    Tensor logits = nd::scale(nd::matmul(q, nd::transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    Tensor weights = nd::softmax_rows(logits);
    Tensor out = nd::matmul(weights, v);
    return {std::move(out), std::move(weights)};
}

Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v) { return attend_with_weights(q, k, v).output; }

ProjectedSequences cross_modal_encode(const ProjectedSequences& in, const FusionParams& params) {
    std::array<Tensor, kModalities> seqs{in.v_hat, in.a_hat, in.t_hat};
    for (const auto& s : seqs) {
        if (s.rank() != 2 || s.cols() != params.dim()) {
            throw ShapeError("cross_modal_encode: sequence " + nd::shape_str(s.shape()) + " is not width " + std::to_string(params.dim()));
        }
    }
    for (const CrossModalLayer& layer : params.layers) {
        std::array<Tensor, kModalities> next;
        for (std::size_t target = 0; target < kModalities; ++target) {
            Tensor acc = seqs[target];
            for (std::size_t source = 0; source < kModalities; ++source) {
                const AttentionBlock& b = layer[target][source];
                Tensor q = nd::matmul(seqs[target], nd::transpose(b.query));
                Tensor k = nd::matmul(seqs[source], nd::transpose(b.key));
                Tensor v = nd::matmul(seqs[source], nd::transpose(b.value));
                acc = nd::add(acc, attend(q, k, v));
            }
            next[target] = std::move(acc);
        }
        seqs = std::move(next);
    }
    return {seqs[0], seqs[1], seqs[2]};
}

Tensor pool(const Tensor& seq) {
    if (seq.rank() != 2) throw ShapeError("pool: expected [len x d], got " + nd::shape_str(seq.shape()));
    return nd::mean_rows(seq);
}

FusedState fuse(const Tensor& pooled_v, const Tensor& pooled_a, const Tensor& pooled_t, const FusionParams& params) {
    const std::size_t d = params.dim();
    for (const Tensor* p : {&pooled_v, &pooled_a, &pooled_t}) {
        if (p->shape() != nd::Shape{1, d}) throw ShapeError("fuse: pooled vector must be [1x" + std::to_string(d) + "], got " + nd::shape_str(p->shape()));
    }
    const std::array<Tensor, 3> parts{pooled_v, pooled_a, pooled_t};
    Tensor stacked = nd::concat_rows(parts);  // [3 × d]
    Tensor scores = nd::scale(nd::matmul(stacked, nd::transpose(params.alpha_scorer)), 1.0 / std::sqrt(static_cast<double>(d)));
    Tensor alpha = nd::softmax_rows(nd::transpose(scores));  // [1 × 3]
    FusedState state;
    state.pooled_v = pooled_v;
    state.pooled_a = pooled_a;
    state.pooled_t = pooled_t;
    state.fused = nd::matmul(alpha, stacked);
    state.alpha = std::move(alpha);
    return state;
}

FusedState fusion_forward(const MultimodalSample& sample, const FusionParams& params) {
    ProjectedSequences projected = project(sample, params);
    ProjectedSequences encoded = cross_modal_encode(projected, params);
    FusedState state = fuse(pool(encoded.v_hat), pool(encoded.a_hat), pool(encoded.t_hat), params);
    state.v_hat = std::move(projected.v_hat);
    state.a_hat = std::move(projected.a_hat);
    state.t_hat = std::move(projected.t_hat);
    return state;
}

}  // namespace mmei
