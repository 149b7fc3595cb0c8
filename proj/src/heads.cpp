#include "mmei/heads.hpp"

#include "mmei/error.hpp"
#include "mmei/nd/ops.hpp"

namespace mmei {

using nd::Tensor;

namespace {

Tensor head_forward(const Tensor& fused, const Tensor& w, const Tensor& b, const char* name) {
    if (fused.rank() != 2 || w.rank() != 2 || fused.cols() != w.cols()) {
        throw ShapeError(std::string(name) + ": F " + nd::shape_str(fused.shape()) + " does not match weights " + nd::shape_str(w.shape()));
    }
    return nd::softmax_rows(nd::add_row(nd::matmul(fused, nd::transpose(w)), b));
}

void check_head(const Tensor& w, const Tensor& b, std::size_t d, std::size_t classes, const char* name) {
    if (w.shape() != nd::Shape{classes, d} || b.shape() != nd::Shape{1, classes}) {
        throw ShapeError(std::string("heads: ") + name + " expects W [" + std::to_string(classes) + "x" + std::to_string(d) +
                         "] and b [1x" + std::to_string(classes) + "], got " + nd::shape_str(w.shape()) + " and " +
                         nd::shape_str(b.shape()));
    }
}

}  // namespace

void HeadParams::validate(std::size_t d, std::size_t num_emotions, std::size_t num_intents) const {
    check_head(w_e, b_e, d, num_emotions, "emotion head");
    check_head(w_i, b_i, d, num_intents, "intent head");
}

void LossWeights::validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda1 + lambda2 > 0.0)) {
        throw ParameterError("loss weights must be nonnegative with a positive sum");
    }
}

Tensor emotion_forward(const Tensor& fused, const HeadParams& params) {
    return head_forward(fused, params.w_e, params.b_e, "emotion_forward");
}

Tensor intent_forward(const Tensor& fused, const HeadParams& params) {
    return head_forward(fused, params.w_i, params.b_i, "intent_forward");
}

Tensor recognition_loss(const Tensor& emotion_probs, std::span<const std::size_t> emotion_labels, const Tensor& intent_probs,
                        std::span<const std::size_t> intent_labels) {
    if (emotion_probs.rows() != intent_probs.rows()) throw ShapeError("recognition_loss: head batch sizes differ");
    return nd::add(nd::cross_entropy(emotion_probs, emotion_labels), nd::cross_entropy(intent_probs, intent_labels));
}

Tensor ranking_loss(const Tensor& users, const Tensor& positives, const Tensor& negatives) {
    if (users.shape() != positives.shape() || users.shape() != negatives.shape()) {
        throw ShapeError("ranking_loss: users " + nd::shape_str(users.shape()) + ", positives " + nd::shape_str(positives.shape()) +
                         ", negatives " + nd::shape_str(negatives.shape()));
    }
    return nd::mean(nd::neg_log_sigmoid(nd::rows_dot(users, nd::sub(positives, negatives))));
}

double ranking_loss(std::span<const double> user, const ContentItem& positive, const ContentItem& negative) {
    auto row = [](std::span<const double> v) { return Tensor::row(std::vector<double>(v.begin(), v.end())); };
    return ranking_loss(row(user), row(positive.embedding), row(negative.embedding)).item();
}

Tensor total_loss(const Tensor& recog, const Tensor& rank, const LossWeights& weights) {
    return nd::add(nd::scale(recog, weights.lambda1), nd::scale(rank, weights.lambda2));
}

}  // namespace mmei
