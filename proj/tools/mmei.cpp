// mmei command-line driver: synth-data, train, eval, recommend,
// simulate-feedback, grad-check. Summary lines go to stdout, progress and
// diagnostics to stderr.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmei/dataio.hpp"
#include "mmei/error.hpp"
#include "mmei/gradcheck.hpp"
#include "mmei/recommender.hpp"
#include "mmei/trainer.hpp"

namespace fs = std::filesystem;
using namespace mmei;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Parameter:
            return kExitUsage;
        case ErrorKind::Numerical:
            return kExitNumerical;
        default:
            return kExitData;
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

struct SynthArgs {
    std::string manifest;
    std::size_t n = 210;
    std::uint64_t seed = 0;
    double separation = 10.0;
    std::size_t d = 16;
    std::string out_dir;
};

int run_synth(const SynthArgs& a) {
    DatasetManifest man = a.manifest.empty() ? DatasetManifest{} : load_manifest(a.manifest);
    SynthOptions opt;
    opt.catalog_dim = a.d;
    const SyntheticData data = synthesize(man, a.n, a.seed, a.separation, opt);
    man.sample_count = data.samples.size();
    ensure_dir(a.out_dir);
    const fs::path out(a.out_dir);
    save_dataset(data.samples, out / "samples.jsonl");
    save_catalog(data.catalog, out / "catalog.jsonl");
    write_text_file(out / "manifest.json", serialize_manifest(man));
    nlohmann::ordered_json s;
    s["samples"] = data.samples.size();
    s["catalog"] = data.catalog.size();
    s["out_dir"] = a.out_dir;
    std::cout << s.dump() << "\n";
    return 0;
}

struct TrainArgs {
    std::string data, manifest, catalog, config, out;
};

int run_train(const TrainArgs& a) {
    const TrainConfig cfg = a.config.empty() ? TrainConfig{} : TrainConfig::from_json(read_text_file(a.config));
    const DatasetManifest man = load_manifest(a.manifest);
    const auto samples = load_dataset(a.data, man);
    const auto catalog = load_catalog(a.catalog, cfg.d);
    SplitSpec spec;
    spec.seed = cfg.seed;
    const Split parts = split(samples, spec, man);

    const MmeiModel m0 = init_model(man, catalog, cfg.shape(), cfg.seed);
    const TrainResult res = train(m0, parts.train, parts.val, cfg, [](const EpochRecord& r) {
        std::cerr << "epoch " << r.epoch << " train " << r.train_total << " (recog " << r.train_recog << ", rank " << r.train_rank
                  << ") val " << r.val_total << "\n";
    });

    ensure_dir(a.out);
    const fs::path out(a.out);
    save_checkpoint(res.best, out / "checkpoint.json");
    write_text_file(out / "loss.csv", loss_csv(res.history));
    save_dataset(parts.train, out / "train.jsonl");
    save_dataset(parts.val, out / "val.jsonl");
    save_dataset(parts.test, out / "test.jsonl");

    const EpochRecord& last = res.history.back();
    nlohmann::ordered_json s;
    s["epochs"] = res.history.size();
    s["train_total"] = last.train_total;
    s["val_total"] = last.val_total;
    s["best_epoch"] = res.best.epoch;
    s["best_val_loss"] = res.best.best_val_loss;
    s["checkpoint"] = (out / "checkpoint.json").string();
    std::cout << s.dump() << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint, data, catalog, out;
    std::size_t k = 10;
};

int run_eval(const EvalArgs& a) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const auto samples = load_dataset(a.data, ck.model.manifest);
    const auto catalog = load_catalog(a.catalog, ck.model.dim());
    const MetricReport r = evaluate(ck.model, samples, catalog, a.k);
    if (!a.out.empty()) write_text_file(a.out, r.to_json());
    std::cout << r.to_json(-1);
    return 0;
}

struct RecommendArgs {
    std::string checkpoint, sample, catalog;
    std::size_t k = 10;
};

int run_recommend(const RecommendArgs& a) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const MultimodalSample sample = parse_sample(read_text_file(a.sample), ck.model.manifest);
    const auto catalog = model_catalog(ck.model, load_catalog(a.catalog, ck.model.dim()));
    const Predictions p = predict(ck.model, {sample});
    std::cout << rank_top_k(p.fused[0], catalog, a.k).to_json();
    return 0;
}

struct SimulateArgs {
    std::string checkpoint, data, catalog, trace = "simulation_trace.csv", favored;
    std::size_t rounds = 200, k = 10;
    std::uint64_t seed = 0;
    double step = 0.05;
};

int run_simulate(const SimulateArgs& a) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const auto samples = load_dataset(a.data, ck.model.manifest);
    if (samples.empty()) throw InputError("simulate-feedback: no samples in '" + a.data + "'");
    const auto catalog = model_catalog(ck.model, load_catalog(a.catalog, ck.model.dim()));
    const std::string favored_label = a.favored.empty() ? ck.model.manifest.emotion_space.front() : a.favored;
    ck.model.manifest.emotion_index(favored_label);
    const auto favored = items_with_metadata(catalog, "emotion", favored_label);
    if (favored.empty()) throw InputError("simulate-feedback: no catalog item has emotion '" + favored_label + "'");

    const Predictions p = predict(ck.model, samples);
    std::vector<SimulationUser> users;
    for (std::size_t i = 0; i < samples.size(); ++i) users.push_back({samples[i].id, p.fused[i]});

    SimulationConfig cfg;
    cfg.rounds = a.rounds;
    cfg.k = a.k;
    cfg.seed = a.seed;
    cfg.step = a.step;
    const SimulationResult res = simulate_feedback(users, catalog, favored, cfg);
    write_text_file(a.trace, trace_csv(res.trace));
    std::cout << res.summary.to_json() << "\n";
    return 0;
}

struct GradCheckArgs {
    std::uint64_t seed = 1;
    std::size_t d = 8, trials = 1, layers = 1;
};

int run_grad_check(const GradCheckArgs& a) {
    if (a.trials < 1) throw ParameterError("grad-check: --trials must be >= 1");
    std::size_t entries = 0, failures = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < a.trials; ++t) {
        GradCheckOptions o;
        o.seed = a.seed + t;
        o.d = a.d;
        o.layers = a.layers;
        const GradCheckReport r = grad_check(o);
        for (const auto& pc : r.params)
            if (pc.failures) std::cerr << "seed " << o.seed << ": " << pc.name << " failed " << pc.failures << "/" << pc.entries << " (max rel err " << pc.max_rel_error << ")\n";
        entries += r.entries;
        failures += r.failures;
        worst = std::max(worst, r.max_rel_error);
    }
    nlohmann::ordered_json s;
    s["trials"] = a.trials;
    s["entries"] = entries;
    s["failures"] = failures;
    s["max_rel_error"] = worst;
    s["passed"] = failures == 0;
    std::cout << s.dump() << "\n";
    return failures == 0 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal emotion/intent recognition and recommendation"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth-data", "Generate a separable synthetic dataset and catalog");
    c_synth->add_option("--manifest", synth.manifest, "Manifest JSON (default label spaces and widths if omitted)")->check(CLI::ExistingFile);
    c_synth->add_option("--n", synth.n, "Number of samples")->capture_default_str();
    c_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    c_synth->add_option("--separation", synth.separation, "Minimum distance between class centers")->capture_default_str();
    c_synth->add_option("--d", synth.d, "Catalog embedding width (must equal the model d)")->capture_default_str();
    c_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train on a dataset; writes checkpoint, loss curve and splits");
    c_train->add_option("--data", tr.data, "Samples JSONL")->required();
    c_train->add_option("--manifest", tr.manifest, "Manifest JSON")->required();
    c_train->add_option("--catalog", tr.catalog, "Catalog JSONL")->required();
    c_train->add_option("--config", tr.config, "Training config JSON (defaults if omitted)");
    c_train->add_option("--out", tr.out, "Output directory")->required();

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint; prints the metrics JSON");
    c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON")->required();
    c_eval->add_option("--data", ev.data, "Samples JSONL")->required();
    c_eval->add_option("--catalog", ev.catalog, "Catalog JSONL")->required();
    c_eval->add_option("--k", ev.k, "Cutoff for NDCG@k and HR@k")->capture_default_str();
    c_eval->add_option("--out", ev.out, "Also write the report to this file");

    RecommendArgs rc;
    auto* c_rec = app.add_subcommand("recommend", "Rank the catalog for one sample");
    c_rec->add_option("--checkpoint", rc.checkpoint, "Checkpoint JSON")->required();
    c_rec->add_option("--sample", rc.sample, "JSON file holding one sample record")->required();
    c_rec->add_option("--catalog", rc.catalog, "Catalog JSONL")->required();
    c_rec->add_option("--k", rc.k, "Number of items to return")->capture_default_str();

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate-feedback", "Run the simulated implicit-feedback loop");
    c_sim->add_option("--checkpoint", sim.checkpoint, "Checkpoint JSON")->required();
    c_sim->add_option("--data", sim.data, "Samples JSONL; each sample is a simulated user")->required();
    c_sim->add_option("--catalog", sim.catalog, "Catalog JSONL with emotion metadata")->required();
    c_sim->add_option("--rounds", sim.rounds, "Number of feedback rounds")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    c_sim->add_option("--k", sim.k, "Slate size and HR cutoff")->capture_default_str();
    c_sim->add_option("--step", sim.step, "Embedding update step")->capture_default_str();
    c_sim->add_option("--favored", sim.favored, "Emotion whose items earn high reward (default: first in manifest)");
    c_sim->add_option("--trace", sim.trace, "Trace CSV output path")->capture_default_str();

    GradCheckArgs gc;
    auto* c_gc = app.add_subcommand("grad-check", "Compare analytic and finite-difference gradients");
    c_gc->add_option("--seed", gc.seed, "First seed")->capture_default_str();
    c_gc->add_option("--d", gc.d, "Model dimension")->capture_default_str();
    c_gc->add_option("--trials", gc.trials, "Number of consecutive seeds")->capture_default_str();
    c_gc->add_option("--layers", gc.layers, "Cross-modal layers")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (c_synth->parsed()) return run_synth(synth);
        if (c_train->parsed()) return run_train(tr);
        if (c_eval->parsed()) return run_eval(ev);
        if (c_rec->parsed()) return run_recommend(rc);
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_gc->parsed()) return run_grad_check(gc);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitUsage;
}
