#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "mmei/error.hpp"
#include "mmei/gradcheck.hpp"
#include "mmei/trainer.hpp"

using namespace mmei;
using nd::Tensor;

namespace {

struct Small {
    DatasetManifest manifest;
    SyntheticData data;
    Split parts;
};

Small small_fixture(std::uint64_t seed, std::size_t n = 63, std::size_t d = 8) {
    Small s;
    SynthOptions opt;
    opt.catalog_dim = d;
    s.data = synthesize(s.manifest, n, seed, 10.0, opt);
    SplitSpec spec;
    spec.seed = seed;
    s.parts = split(s.data.samples, spec, s.manifest);
    return s;
}

TrainConfig small_config(std::uint64_t seed) {
    TrainConfig c;
    c.seed = seed;
    c.d = 8;
    c.epochs = 3;
    c.batch_size = 16;
    c.learning_rate = 1e-3;
    return c;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mmei_trainer_" + name);
}

}  // namespace

TEST(AdamW, ThreeStepScalarTrace) {
    TrainConfig c;
    c.learning_rate = 0.1;
    c.weight_decay = 0.0;
    Tensor p = Tensor::scalar(1.0), m = Tensor::zeros({1}), v = Tensor::zeros({1});
    const double grads[] = {0.5, -0.2, 0.1};
    const double expected[] = {0.900000002, 0.8654394181165108, 0.8275002408356956};
    for (std::size_t t = 1; t <= 3; ++t) {
        adamw_step(p, Tensor::scalar(grads[t - 1]), m, v, c, t);
        EXPECT_NEAR(p.item(), expected[t - 1], 1e-12) << "step " << t;
    }
}

TEST(AdamW, ZeroGradientIsPureDecay) {
    TrainConfig c;
    c.learning_rate = 0.01;
    c.weight_decay = 0.1;
    Tensor p = Tensor::row({3.0, -1.5, 0.25}), m = Tensor::zeros({1, 3}), v = Tensor::zeros({1, 3});
    const std::vector<double> before = p.values();
    adamw_step(p, Tensor::zeros({1, 3}), m, v, c, 1);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(p.at(i), before[i] * (1.0 - 0.01 * 0.1));
}

TEST(AdamW, FirstStepIsSignStep) {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.weight_decay = 0.0;
    Tensor p = Tensor::row({2.0, 2.0}), m = Tensor::zeros({1, 2}), v = Tensor::zeros({1, 2});
    adamw_step(p, Tensor::row({3.0, -0.01}), m, v, c, 1);
    EXPECT_NEAR(p.at(0), 2.0 - 1e-3, 1e-11);
    EXPECT_NEAR(p.at(1), 2.0 + 1e-3, 1e-8);
    EXPECT_NEAR(p.at(0), 1.9990000000033334, 1e-15);
}

TEST(AdamW, Errors) {
    TrainConfig c;
    Tensor p = Tensor::row({1, 2}), m = Tensor::zeros({1, 2}), v = Tensor::zeros({1, 2});
    EXPECT_THROW(adamw_step(p, Tensor::row({1, 2, 3}), m, v, c, 1), ShapeError);
    EXPECT_THROW(adamw_step(p, Tensor::row({1, 2}), m, v, c, 0), ParameterError);
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
    TrainConfig c;
    c.learning_rate = 3e-4;
    c.seed = 42;
    c.layers = 2;
    const TrainConfig back = TrainConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
    EXPECT_EQ(TrainConfig::from_json("{}").to_json(), TrainConfig{}.to_json());
    EXPECT_THROW(TrainConfig::from_json("{\"lr\": 0.1}"), SchemaError);
    EXPECT_THROW(TrainConfig::from_json("{\"epochs\": 0}"), ParameterError);
    EXPECT_THROW(TrainConfig::from_json("{\"dropout_p\": 1.0}"), ParameterError);
    EXPECT_THROW(TrainConfig::from_json("{\"batch_size\": \"big\"}"), SchemaError);
    EXPECT_THROW(TrainConfig::from_json("{nope"), ParseError);
}

TEST(Train, DeterministicAcrossRuns) {
    Small s = small_fixture(5);
    const TrainConfig c = small_config(5);
    const MmeiModel m0 = init_model(s.manifest, s.data.catalog, c.shape(), c.seed);
    const TrainResult a = train(m0, s.parts.train, s.parts.val, c);
    const TrainResult b = train(m0, s.parts.train, s.parts.val, c);
    EXPECT_EQ(loss_csv(a.history), loss_csv(b.history));
    EXPECT_EQ(serialize_checkpoint(a.last), serialize_checkpoint(b.last));
    ASSERT_EQ(a.history.size(), 3u);
    for (const auto& r : a.history) {
        for (double x : {r.train_total, r.train_recog, r.train_rank, r.val_total, r.val_recog, r.val_rank}) {
            EXPECT_TRUE(std::isfinite(x));
            EXPECT_GE(x, 0.0);
        }
    }
}

TEST(Train, ZeroLearningRateLeavesParametersAndValidationFlat) {
    Small s = small_fixture(6);
    TrainConfig c = small_config(6);
    c.learning_rate = 0.0;
    const MmeiModel m0 = init_model(s.manifest, s.data.catalog, c.shape(), c.seed);
    const TrainResult r = train(m0, s.parts.train, s.parts.val, c);
    std::vector<std::vector<double>> before, after;
    m0.for_each_param([&](const std::string&, const Tensor& t) { before.push_back(t.values()); });
    r.last.model.for_each_param([&](const std::string&, const Tensor& t) { after.push_back(t.values()); });
    EXPECT_EQ(before, after);
    for (const auto& rec : r.history) EXPECT_EQ(rec.val_total, r.history.front().val_total);
}

TEST(Train, BestCheckpointHasLowestValidationLoss) {
    Small s = small_fixture(7);
    TrainConfig c = small_config(7);
    c.epochs = 6;
    const TrainResult r = train(init_model(s.manifest, s.data.catalog, c.shape(), c.seed), s.parts.train, s.parts.val, c);
    double best = INFINITY;
    std::size_t best_epoch = 0;
    for (const auto& rec : r.history)
        if (rec.val_total < best) best = rec.val_total, best_epoch = rec.epoch;
    EXPECT_EQ(r.best.epoch, best_epoch);
    EXPECT_EQ(r.best.best_val_loss, best);
    EXPECT_EQ(validation_loss(r.best.model, s.parts.val, c).val_total, best);
}

TEST(Train, NonFiniteAbortsWithLocation) {
    Small s = small_fixture(8);
    TrainConfig c = small_config(8);
    c.learning_rate = 1e300;
    c.weight_decay = 1e10;
    try {
        train(init_model(s.manifest, s.data.catalog, c.shape(), c.seed), s.parts.train, s.parts.val, c);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos) << e.what();
    }
}

TEST(Train, RejectsEmptySplits) {
    Small s = small_fixture(9);
    const TrainConfig c = small_config(9);
    const MmeiModel m0 = init_model(s.manifest, s.data.catalog, c.shape(), c.seed);
    EXPECT_THROW(train(m0, {}, s.parts.val, c), InputError);
    EXPECT_THROW(train(m0, s.parts.train, {}, c), InputError);
}

TEST(Evaluate, ChanceLevelWithZeroHeads) {
    DatasetManifest man;
    SynthOptions opt;
    opt.catalog_dim = 8;
    const SyntheticData data = synthesize(man, 630, 11, 10.0, opt);
    const MmeiModel m = init_model(man, data.catalog, {8, 1}, 11, HeadInit::Zero);
    const MetricReport r = evaluate(m, data.samples, data.catalog, 10);
    EXPECT_NEAR(r.emotion.accuracy, 1.0 / 7.0, 0.05);
    EXPECT_NEAR(r.intent.accuracy, 1.0 / 3.0, 0.05);
    EXPECT_EQ(r.to_json(), evaluate(m, data.samples, data.catalog, 10).to_json());
    EXPECT_EQ(r.ranked_users, 630u);
}

TEST(Evaluate, WidthMismatchIsSchemaError) {
    Small s = small_fixture(12);
    MmeiModel m = init_model(s.manifest, s.data.catalog, {8, 1}, 12);
    auto bad = s.parts.test;
    bad[0].visual = Tensor::zeros({2, 5});
    EXPECT_THROW(evaluate(m, bad, s.data.catalog, 10), SchemaError);
    auto short_catalog = s.data.catalog;
    short_catalog.pop_back();
    EXPECT_THROW(evaluate(m, s.parts.test, short_catalog, 10), SchemaError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Small s = small_fixture(13);
    const TrainConfig c = small_config(13);
    const TrainResult r = train(init_model(s.manifest, s.data.catalog, c.shape(), c.seed), s.parts.train, s.parts.val, c);
    const auto path = temp_path("roundtrip.json");
    save_checkpoint(r.best, path);
    const Checkpoint back = load_checkpoint(path);
    EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(r.best));
    std::vector<std::vector<double>> a, b;
    r.best.model.for_each_param([&](const std::string&, const Tensor& t) { a.push_back(t.values()); });
    back.model.for_each_param([&](const std::string&, const Tensor& t) { b.push_back(t.values()); });
    EXPECT_EQ(a, b);
    for (const auto& [name, m] : r.best.adam.m) EXPECT_EQ(back.adam.m.at(name).values(), m.values());
    EXPECT_EQ(back.adam.step, r.best.adam.step);
    EXPECT_EQ(back.epoch, r.best.epoch);
    EXPECT_EQ(evaluate(back.model, s.parts.test, s.data.catalog).to_json(), evaluate(r.best.model, s.parts.test, s.data.catalog).to_json());
    std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptionAndSchemaErrors) {
    Small s = small_fixture(14);
    Checkpoint ck;
    ck.config = small_config(14);
    ck.model = init_model(s.manifest, s.data.catalog, ck.config.shape(), 14);
    const std::string text = serialize_checkpoint(ck);
    EXPECT_THROW(parse_checkpoint(text.substr(0, text.size() / 2)), CheckpointError);
    EXPECT_THROW(parse_checkpoint(""), CheckpointError);

    std::string wrong_version = text;
    wrong_version.replace(wrong_version.find("\"version\":1"), 11, "\"version\":9");
    EXPECT_THROW(parse_checkpoint(wrong_version), CheckpointError);

    std::string wrong_d = text;
    wrong_d.replace(wrong_d.find("\"d\":8"), 5, "\"d\":16");
    try {
        parse_checkpoint(wrong_d);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("config.d"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_checkpoint(temp_path("does_not_exist.json")), IoError);
}

TEST(LossCsv, HeaderAndRows) {
    std::vector<EpochRecord> h(3);
    for (std::size_t i = 0; i < 3; ++i) h[i].epoch = i + 1;
    const std::string csv = loss_csv(h);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_total,train_recog,train_rank,val_total,val_recog,val_rank");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(GradCheck, PassesAtDefaultSettings) {
    GradCheckOptions o;
    o.seed = 3;
    const GradCheckReport r = grad_check(o);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.failures, 0u);
    EXPECT_GT(r.entries, 1000u);
    EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(GradCheck, DetectsAWrongGradient) {
    // Sanity of the comparison itself: a perturbed analytic value must fail.
    EXPECT_LT(relative_error(1.0, 1.0 + 1e-7, 1e-3), 1e-5);
    EXPECT_GT(relative_error(1.0, 1.001, 1e-3), 1e-5);
    EXPECT_GT(relative_error(0.0, 1e-7, 1e-3), 0.0);
}
