#include "mmei/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mmei/error.hpp"
#include "mmei/model.hpp"
#include "mmei/nd/tape.hpp"
#include "mmei/rng.hpp"
#include "mmei/trainer.hpp"

namespace mmei {

using nd::Tensor;

namespace {

constexpr std::uint64_t kGradCheckStream = 40;

Tensor gaussian(nd::Shape shape, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(nd::element_count(shape));
    for (double& x : v) x = g(rng);
    return Tensor(std::move(shape), std::move(v));
}

double eval_loss(const MmeiModel& model, const std::vector<const MultimodalSample*>& batch, const TrainConfig& cfg) {
    auto drop = make_rng(cfg.seed, {stream::kDropout});
    auto pairs = make_rng(cfg.seed, {stream::kPairs});
    return batch_loss(model, batch, cfg, nd::Mode::Eval, drop, pairs).total.item();
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
    const double den = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / den;
}

GradCheckReport grad_check(const GradCheckOptions& opt) {
    if (opt.d < 1) throw ParameterError("grad_check: d must be >= 1");
    if (!(opt.epsilon > 0)) throw ParameterError("grad_check: epsilon must be > 0");
    auto rng = make_rng(opt.seed, {kGradCheckStream});

    // Distinct modality widths so a transposed projection cannot pass.
    DatasetManifest man;
    man.d_v = 5;
    man.d_a = 4;
    man.d_t = 3;

    std::vector<ContentItem> catalog;
    for (std::size_t i = 0; i < 6; ++i) {
        const Tensor e = gaussian({opt.d}, rng);
        catalog.push_back({"c" + std::to_string(i), std::vector<double>(e.data().begin(), e.data().end()), "{}"});
    }

    std::vector<std::size_t> lengths{1, 2, 5};
    std::vector<MultimodalSample> samples;
    std::uniform_int_distribution<std::size_t> pe(0, man.num_emotions() - 1), pi(0, man.num_intents() - 1), pc(0, catalog.size() - 1);
    for (std::size_t s = 0; s < 3; ++s) {
        std::shuffle(lengths.begin(), lengths.end(), rng);
        MultimodalSample x;
        x.id = "g" + std::to_string(s);
        x.visual = gaussian({lengths[0], man.d_v}, rng);
        x.audio = gaussian({lengths[1], man.d_a}, rng);
        x.text = gaussian({lengths[2], man.d_t}, rng);
        x.emotion = man.emotion_space[pe(rng)];
        x.intent = man.intent_space[pi(rng)];
        if (s != 2) x.positives = {catalog[pc(rng)].id};
        samples.push_back(std::move(x));
    }
    std::vector<const MultimodalSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);

    TrainConfig cfg;
    cfg.seed = opt.seed;
    cfg.d = opt.d;
    cfg.layers = opt.layers;
    MmeiModel model = init_model(man, catalog, cfg.shape(), opt.seed);
    // Nonzero biases so their paths are exercised away from the symmetric point.
    model.for_each_param([&](const std::string& name, Tensor& t) {
        if (name == "heads.b_e" || name == "heads.b_i") t = gaussian(t.shape(), rng);
    });

    nd::Tape tape;
    const MmeiModel bound = model.bind(tape);
    auto drop = make_rng(cfg.seed, {stream::kDropout});
    auto pairs = make_rng(cfg.seed, {stream::kPairs});
    const Tensor loss = batch_loss(bound, batch, cfg, nd::Mode::Eval, drop, pairs).total;
    const nd::Gradients grads = tape.backward(loss);
    std::vector<Tensor> analytic;
    bound.for_each_param([&](const std::string&, const Tensor& t) { analytic.push_back(grads.of(t).detached()); });

    GradCheckReport report;
    std::size_t idx = 0;
    MmeiModel probe = model;
    probe.for_each_param([&](const std::string& name, Tensor& p) {
        ParamCheck pc_{name, 0, 0, 0.0};
        const Tensor& g = analytic[idx++];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double orig = p.data()[i];
            p.mutable_values()[i] = orig + opt.epsilon;
            const double up = eval_loss(probe, batch, cfg);
            p.mutable_values()[i] = orig - opt.epsilon;
            const double down = eval_loss(probe, batch, cfg);
            p.mutable_values()[i] = orig;
            const double numeric = (up - down) / (2.0 * opt.epsilon);
            const double err = relative_error(g.data()[i], numeric, opt.floor);
            ++pc_.entries;
            if (!(err < opt.tolerance)) ++pc_.failures;
            pc_.max_rel_error = std::max(pc_.max_rel_error, err);
        }
        report.entries += pc_.entries;
        report.failures += pc_.failures;
        report.max_rel_error = std::max(report.max_rel_error, pc_.max_rel_error);
        report.params.push_back(std::move(pc_));
    });
    return report;
}

}  // namespace mmei
