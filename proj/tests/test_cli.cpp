#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include <json.hpp>

#include "mmei/dataio.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "mmei_cli_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

CliRun run(const std::string& args) {
    static int counter = 0;
    const fs::path out = work_dir() / ("stdout" + std::to_string(counter) + ".txt");
    const fs::path err = work_dir() / ("stderr" + std::to_string(counter++) + ".txt");
    const std::string cmd = std::string(MMEI_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = mmei::read_text_file(out);
    r.err = mmei::read_text_file(err);
    return r;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

void write(const std::string& name, const std::string& text) { mmei::write_text_file(work_dir() / name, text); }

// Small dataset + short training run shared by the read-side tests.
void ensure_trained() {
    static bool done = false;
    if (done) return;
    ASSERT_EQ(run("synth-data --n 63 --seed 3 --d 8 --out-dir " + path("base")).code, 0);
    write("cfg.json", R"({"epochs":3,"d":8,"batch_size":16,"learning_rate":0.001,"seed":3})");
    const CliRun r = run("train --data " + path("base/samples.jsonl") + " --manifest " + path("base/manifest.json") + " --catalog " +
                      path("base/catalog.jsonl") + " --config " + path("cfg.json") + " --out " + path("run"));
    ASSERT_EQ(r.code, 0) << r.err;
    done = true;
}

}  // namespace

TEST(Cli, SynthIsDeterministicAndParsesBack) {
    ASSERT_EQ(run("synth-data --n 210 --seed 7 --out-dir " + path("s1")).code, 0);
    ASSERT_EQ(run("synth-data --n 210 --seed 7 --out-dir " + path("s2")).code, 0);
    for (const char* f : {"samples.jsonl", "catalog.jsonl", "manifest.json"}) {
        EXPECT_EQ(mmei::read_text_file(work_dir() / "s1" / f), mmei::read_text_file(work_dir() / "s2" / f)) << f;
    }
    const auto man = mmei::load_manifest(work_dir() / "s1/manifest.json");
    EXPECT_EQ(mmei::load_dataset(work_dir() / "s1/samples.jsonl", man).size(), 210u);
    EXPECT_EQ(mmei::load_catalog(work_dir() / "s1/catalog.jsonl", 16).size(), 84u);
}

TEST(Cli, SynthPreconditionsAndPaths) {
    const CliRun r = run("synth-data --n 1 --out-dir " + path("tiny"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("21"), std::string::npos) << r.err;
    EXPECT_EQ(run("synth-data --n 21 --out-dir /proc/mmei_no_such_dir").code, 2);
    EXPECT_EQ(run("synth-data --n 21 --bogus 3 --out-dir " + path("x")).code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("").code, 1);
}

TEST(Cli, TrainWritesCheckpointAndCurve) {
    ensure_trained();
    EXPECT_TRUE(fs::exists(work_dir() / "run/checkpoint.json"));
    const std::string csv = mmei::read_text_file(work_dir() / "run/loss.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) EXPECT_TRUE(fs::exists(work_dir() / "run" / f));
}

TEST(Cli, TrainIsReproducible) {
    ensure_trained();
    const CliRun r = run("train --data " + path("base/samples.jsonl") + " --manifest " + path("base/manifest.json") + " --catalog " +
                      path("base/catalog.jsonl") + " --config " + path("cfg.json") + " --out " + path("run_again"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(mmei::read_text_file(work_dir() / "run/loss.csv"), mmei::read_text_file(work_dir() / "run_again/loss.csv"));
    EXPECT_EQ(mmei::read_text_file(work_dir() / "run/checkpoint.json"), mmei::read_text_file(work_dir() / "run_again/checkpoint.json"));
}

TEST(Cli, TrainSchemaMismatchExitsTwo) {
    ensure_trained();
    json man = json::parse(mmei::read_text_file(work_dir() / "base/manifest.json"));
    man["d_v"] = 4;
    write("bad_manifest.json", man.dump());
    const CliRun r = run("train --data " + path("base/samples.jsonl") + " --manifest " + path("bad_manifest.json") + " --catalog " +
                      path("base/catalog.jsonl") + " --config " + path("cfg.json") + " --out " + path("bad"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("visual"), std::string::npos) << r.err;

    write("unknown_key.json", R"({"epochs":1,"lr":0.1})");
    EXPECT_EQ(run("train --data " + path("base/samples.jsonl") + " --manifest " + path("base/manifest.json") + " --catalog " +
                  path("base/catalog.jsonl") + " --config " + path("unknown_key.json") + " --out " + path("bad"))
                  .code,
              2);
}

TEST(Cli, TrainZeroLearningRateIsFlat) {
    ensure_trained();
    write("lr0.json", R"({"epochs":3,"d":8,"batch_size":16,"learning_rate":0,"seed":3})");
    const CliRun r = run("train --data " + path("base/samples.jsonl") + " --manifest " + path("base/manifest.json") + " --catalog " +
                      path("base/catalog.jsonl") + " --config " + path("lr0.json") + " --out " + path("lr0"));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(mmei::read_text_file(work_dir() / "lr0/loss.csv"));
    std::string line, first_val;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        const std::string val = line.substr(line.find(',', line.find(',', line.find(',', line.find(',') + 1) + 1) + 1));
        if (first_val.empty()) first_val = val;
        EXPECT_EQ(val, first_val);
    }
}

TEST(Cli, NonFiniteTrainingExitsThree) {
    ensure_trained();
    write("explode.json", R"({"epochs":2,"d":8,"learning_rate":1e300,"weight_decay":1e10,"seed":3})");
    const CliRun r = run("train --data " + path("base/samples.jsonl") + " --manifest " + path("base/manifest.json") + " --catalog " +
                      path("base/catalog.jsonl") + " --config " + path("explode.json") + " --out " + path("explode"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("epoch 1"), std::string::npos) << r.err;
}

TEST(Cli, EvalPrintsReportDeterministically) {
    ensure_trained();
    const std::string args = "eval --checkpoint " + path("run/checkpoint.json") + " --data " + path("run/test.jsonl") + " --catalog " +
                             path("base/catalog.jsonl") + " --out " + path("report.json");
    const CliRun a = run(args), b = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 1);
    const json j = json::parse(a.out);
    for (const char* k : {"accuracy", "precision_macro", "recall_macro", "f1_macro", "emotion_accuracy", "intent_f1_macro", "map",
                          "ndcg_at_10", "hr_at_10"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(json::parse(mmei::read_text_file(work_dir() / "report.json")), j);
    EXPECT_EQ(run("eval --checkpoint " + path("run/missing.json") + " --data " + path("run/test.jsonl") + " --catalog " +
                  path("base/catalog.jsonl"))
                  .code,
              2);
}

TEST(Cli, RecommendBeyondCatalogReturnsFullSortedList) {
    ensure_trained();
    std::istringstream test(mmei::read_text_file(work_dir() / "run/test.jsonl"));
    std::string first;
    std::getline(test, first);
    write("one.json", first);
    const CliRun r = run("recommend --checkpoint " + path("run/checkpoint.json") + " --sample " + path("one.json") + " --catalog " +
                      path("base/catalog.jsonl") + " --k 1000");
    ASSERT_EQ(r.code, 0) << r.err;
    const json entries = json::parse(r.out)["entries"];
    EXPECT_EQ(entries.size(), mmei::load_catalog(work_dir() / "base/catalog.jsonl").size());
    for (std::size_t i = 1; i < entries.size(); ++i) EXPECT_GE(entries[i - 1]["score"].get<double>(), entries[i]["score"].get<double>());
    EXPECT_EQ(run("recommend --checkpoint " + path("run/checkpoint.json") + " --sample " + path("one.json") + " --catalog " +
                  path("base/catalog.jsonl") + " --k 0")
                  .code,
              1);
}

TEST(Cli, SimulateZeroRoundsIsNoOp) {
    ensure_trained();
    const CliRun r = run("simulate-feedback --checkpoint " + path("run/checkpoint.json") + " --data " + path("run/test.jsonl") +
                      " --catalog " + path("base/catalog.jsonl") + " --rounds 0 --trace " + path("trace0.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    const json s = json::parse(r.out);
    EXPECT_EQ(s["hr_before"], s["hr_after"]);
    EXPECT_EQ(s["mean_favored_rank_before"], s["mean_favored_rank_after"]);
    EXPECT_EQ(mmei::read_text_file(work_dir() / "trace0.csv"), "round,user_id,recommended_id,reward,rank_of_best_item\n");

    const CliRun full = run("simulate-feedback --checkpoint " + path("run/checkpoint.json") + " --data " + path("run/test.jsonl") +
                         " --catalog " + path("base/catalog.jsonl") + " --rounds 50 --seed 2 --trace " + path("trace.csv"));
    ASSERT_EQ(full.code, 0) << full.err;
    const std::string trace = mmei::read_text_file(work_dir() / "trace.csv");
    EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 51);
}

TEST(Cli, GradCheckSeedOnePasses) {
    const CliRun r = run("grad-check --seed 1 --d 8");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(json::parse(r.out)["passed"].get<bool>());
}

TEST(Cli, HelpDocumentsEveryFlag) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> subs = {
        {"synth-data", {"--manifest", "--n", "--seed", "--separation", "--out-dir"}},
        {"train", {"--data", "--manifest", "--catalog", "--config", "--out"}},
        {"eval", {"--checkpoint", "--data", "--catalog", "--k"}},
        {"recommend", {"--checkpoint", "--sample", "--catalog", "--k"}},
        {"simulate-feedback", {"--checkpoint", "--data", "--catalog", "--rounds", "--seed"}},
        {"grad-check", {"--seed", "--d"}},
    };
    for (const auto& [name, flags] : subs) {
        const CliRun r = run(name + " --help");
        EXPECT_EQ(r.code, 0) << name;
        for (const auto& f : flags) EXPECT_NE(r.out.find(f), std::string::npos) << name << " " << f;
    }
    EXPECT_EQ(run("--help").code, 0);
}
