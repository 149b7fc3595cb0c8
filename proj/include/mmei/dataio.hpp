#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "mmei/nd/tensor.hpp"

namespace mmei {

/// Label spaces and modality widths shared by every record of a dataset.
struct DatasetManifest {
    std::vector<std::string> emotion_space{"anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"};
    std::vector<std::string> intent_space{"relaxing", "learning", "exploring_creativity"};
    std::size_t d_v = 8;
    std::size_t d_a = 8;
    std::size_t d_t = 8;
    std::size_t sample_count = 0;

    void validate() const;
    std::size_t emotion_index(const std::string& label) const;
    std::size_t intent_index(const std::string& label) const;
    std::size_t num_emotions() const { return emotion_space.size(); }
    std::size_t num_intents() const { return intent_space.size(); }
};

/// One user interaction. Sequences are [length × width] tensors.
struct MultimodalSample {
    std::string id;
    nd::Tensor visual;
    nd::Tensor audio;
    nd::Tensor text;
    std::string emotion;
    std::string intent;
    std::vector<std::string> positives;
};

/// Catalog entry; `metadata` holds a serialized JSON object.
struct ContentItem {
    std::string id;
    std::vector<double> embedding;
    std::string metadata = "{}";
};

struct SplitSpec {
    double train_frac = 0.70;
    double val_frac = 0.15;
    double test_frac = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Split {
    std::vector<MultimodalSample> train;
    std::vector<MultimodalSample> val;
    std::vector<MultimodalSample> test;
};

struct SynthOptions {
    std::size_t catalog_dim = 16;
    std::size_t items_per_cell = 4;
    std::size_t positives_per_sample = 2;
    std::size_t min_len = 2;
    std::size_t max_len = 6;
};

struct SyntheticData {
    std::vector<MultimodalSample> samples;
    std::vector<ContentItem> catalog;
};

/// Decimal with 17 significant digits; parses back to the identical double.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

DatasetManifest parse_manifest(const std::string& json_text);
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const DatasetManifest& manifest);

std::vector<MultimodalSample> parse_dataset(std::istream& in, const DatasetManifest& manifest);
std::vector<MultimodalSample> load_dataset(const std::filesystem::path& path, const DatasetManifest& manifest);
std::string serialize_sample(const MultimodalSample& sample);
std::string serialize_dataset(const std::vector<MultimodalSample>& samples);
void save_dataset(const std::vector<MultimodalSample>& samples, const std::filesystem::path& path);

/// Parses one sample object (a single JSONL record).
MultimodalSample parse_sample(const std::string& json_text, const DatasetManifest& manifest);

/// `width` of 0 accepts any width as long as all items agree.
std::vector<ContentItem> parse_catalog(std::istream& in, std::size_t width = 0);
std::vector<ContentItem> load_catalog(const std::filesystem::path& path, std::size_t width = 0);
std::string serialize_catalog(const std::vector<ContentItem>& catalog);
void save_catalog(const std::vector<ContentItem>& catalog, const std::filesystem::path& path);

/// Emotion-stratified, seeded, exact partition with largest-remainder sizes.
Split split(const std::vector<MultimodalSample>& samples, const SplitSpec& spec, const DatasetManifest& manifest);

/// Class-conditional Gaussian clusters, one center per (emotion, intent) cell
/// and modality. Requires n ≥ |emotions|·|intents|.
SyntheticData synthesize(const DatasetManifest& manifest, std::size_t n, std::uint64_t seed, double separation,
                         const SynthOptions& options = {});

/// Per-epoch shuffled index batches; the last batch may be short.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                                    std::uint64_t epoch);

std::vector<std::vector<const MultimodalSample*>> batches(const std::vector<MultimodalSample>& samples,
                                                          std::size_t batch_size, std::uint64_t seed,
                                                          std::uint64_t epoch);

}  // namespace mmei
