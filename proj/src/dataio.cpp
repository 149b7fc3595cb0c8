#include "mmei/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mmei/error.hpp"
#include "mmei/rng.hpp"

namespace mmei {

using nlohmann::json;

namespace {

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

const json& require_key(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(where + "missing field '" + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_string()) throw SchemaError(where + "field '" + key + "' must be a string");
    return v.get<std::string>();
}

std::size_t require_dim(const json& obj, const char* key) {
    const json& v = require_key(obj, key, "manifest: ");
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw SchemaError(std::string("manifest: field '") + key + "' must be an integer >= 1");
    }
    return v.get<std::size_t>();
}

std::vector<std::string> require_label_list(const json& obj, const char* key) {
    const json& v = require_key(obj, key, "manifest: ");
    if (!v.is_array()) throw SchemaError(std::string("manifest: field '") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw SchemaError(std::string("manifest: field '") + key + "' must hold strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<double> parse_vector(const json& v, const std::string& where, const std::string& field) {
    if (!v.is_array()) throw SchemaError(where + "field '" + field + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) throw SchemaError(where + "field '" + field + "' must hold numbers");
        const double d = e.get<double>();
        if (!std::isfinite(d)) throw SchemaError(where + "field '" + field + "' holds a non-finite value");
        out.push_back(d);
    }
    return out;
}

nd::Tensor parse_sequence(const json& obj, const char* key, std::size_t width, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_array() || v.empty()) throw SchemaError(where + "field '" + key + "' must be a non-empty array of vectors");
    std::vector<double> flat;
    flat.reserve(v.size() * width);
    for (std::size_t r = 0; r < v.size(); ++r) {
        auto row = parse_vector(v[r], where, key);
        if (row.size() != width) {
            throw SchemaError(where + "field '" + key + "' row " + std::to_string(r) + " has width " +
                              std::to_string(row.size()) + ", expected " + std::to_string(width));
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return nd::Tensor({v.size(), width}, std::move(flat));
}

MultimodalSample sample_from_json(const json& obj, const DatasetManifest& manifest, const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + "record must be a JSON object");
    MultimodalSample s;
    s.id = require_string(obj, "id", where);
    s.visual = parse_sequence(obj, "visual", manifest.d_v, where);
    s.audio = parse_sequence(obj, "audio", manifest.d_a, where);
    s.text = parse_sequence(obj, "text", manifest.d_t, where);
    s.emotion = require_string(obj, "emotion", where);
    s.intent = require_string(obj, "intent", where);
    try {
        manifest.emotion_index(s.emotion);
        manifest.intent_index(s.intent);
    } catch (const LabelError& e) {
        throw LabelError(where + e.what());
    }
    const json& pos = require_key(obj, "positives", where);
    if (!pos.is_array()) throw SchemaError(where + "field 'positives' must be an array of strings");
    for (const auto& p : pos) {
        if (!p.is_string()) throw SchemaError(where + "field 'positives' must be an array of strings");
        s.positives.push_back(p.get<std::string>());
    }
    return s;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

void append_sequence(std::string& out, const nd::Tensor& seq) {
    out += '[';
    const std::size_t rows = seq.rows(), cols = seq.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        if (r) out += ',';
        out += '[';
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out += ',';
            out += format_double(seq.data()[r * cols + c]);
        }
        out += ']';
    }
    out += ']';
}

// Gaussian cluster centers with pairwise distance >= separation.
std::vector<std::vector<double>> make_centers(std::size_t count, std::size_t dim, double separation, std::mt19937_64& rng) {
    std::vector<std::vector<double>> centers;
    if (separation <= 0.0) return std::vector<std::vector<double>>(count, std::vector<double>(dim, 0.0));
    double spread = separation / 2.0;
    std::normal_distribution<double> normal(0.0, 1.0);
    while (centers.size() < count) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            std::vector<double> c(dim);
            for (double& x : c) x = spread * normal(rng);
            placed = std::all_of(centers.begin(), centers.end(), [&](const std::vector<double>& o) {
                double d2 = 0.0;
                for (std::size_t i = 0; i < dim; ++i) d2 += (c[i] - o[i]) * (c[i] - o[i]);
                return d2 >= separation * separation;
            });
            if (placed) centers.push_back(std::move(c));
        }
        if (!placed) spread *= 1.1;
    }
    return centers;
}

nd::Tensor sample_sequence(const std::vector<double>& center, std::size_t length, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> flat;
    flat.reserve(length * center.size());
    for (std::size_t r = 0; r < length; ++r)
        for (double c : center) flat.push_back(c + noise(rng));
    return nd::Tensor({length, center.size()}, std::move(flat));
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (ec != std::errc()) throw InputError("cannot format value");
    return std::string(buf, end);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << contents;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void DatasetManifest::validate() const {
    auto check_labels = [](const std::vector<std::string>& labels, const char* name) {
        if (labels.empty()) throw SchemaError(std::string("manifest: ") + name + " is empty");
        std::set<std::string> seen(labels.begin(), labels.end());
        if (seen.size() != labels.size()) throw SchemaError(std::string("manifest: ") + name + " has duplicate labels");
    };
    check_labels(emotion_space, "emotion_space");
    check_labels(intent_space, "intent_space");
    if (d_v < 1 || d_a < 1 || d_t < 1) throw SchemaError("manifest: modality dims must be >= 1");
}

std::size_t DatasetManifest::emotion_index(const std::string& label) const {
    auto it = std::find(emotion_space.begin(), emotion_space.end(), label);
    if (it == emotion_space.end()) throw LabelError("unknown emotion label '" + label + "'");
    return static_cast<std::size_t>(it - emotion_space.begin());
}

std::size_t DatasetManifest::intent_index(const std::string& label) const {
    auto it = std::find(intent_space.begin(), intent_space.end(), label);
    if (it == intent_space.end()) throw LabelError("unknown intent label '" + label + "'");
    return static_cast<std::size_t>(it - intent_space.begin());
}

void SplitSpec::validate() const {
    if (!(train_frac > 0 && val_frac > 0 && test_frac > 0)) throw ParameterError("split fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw ParameterError("split fractions must sum to 1");
}

DatasetManifest parse_manifest(const std::string& json_text) {
    json obj;
    try {
        obj = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    if (!obj.is_object()) throw SchemaError("manifest: expected a JSON object");
    DatasetManifest m;
    m.emotion_space = require_label_list(obj, "emotion_space");
    m.intent_space = require_label_list(obj, "intent_space");
    m.d_v = require_dim(obj, "d_v");
    m.d_a = require_dim(obj, "d_a");
    m.d_t = require_dim(obj, "d_t");
    if (auto it = obj.find("sample_count"); it != obj.end()) m.sample_count = it->get<std::size_t>();
    m.validate();
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_text_file(path)); }

std::string serialize_manifest(const DatasetManifest& m) {
    json obj = json::object();
    obj["emotion_space"] = m.emotion_space;
    obj["intent_space"] = m.intent_space;
    obj["d_v"] = m.d_v;
    obj["d_a"] = m.d_a;
    obj["d_t"] = m.d_t;
    obj["sample_count"] = m.sample_count;
    return obj.dump(2) + "\n";
}

std::vector<MultimodalSample> parse_dataset(std::istream& in, const DatasetManifest& manifest) {
    std::vector<MultimodalSample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(line_prefix(lineno) + e.what());
        }
        samples.push_back(sample_from_json(obj, manifest, line_prefix(lineno)));
    }
    return samples;
}

std::vector<MultimodalSample> load_dataset(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return parse_dataset(in, manifest);
}

MultimodalSample parse_sample(const std::string& json_text, const DatasetManifest& manifest) {
    json obj;
    try {
        obj = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("sample: ") + e.what());
    }
    return sample_from_json(obj, manifest, "sample: ");
}

std::string serialize_sample(const MultimodalSample& s) {
    std::string out = "{\"id\":" + json(s.id).dump() + ",\"visual\":";
    append_sequence(out, s.visual);
    out += ",\"audio\":";
    append_sequence(out, s.audio);
    out += ",\"text\":";
    append_sequence(out, s.text);
    out += ",\"emotion\":" + json(s.emotion).dump();
    out += ",\"intent\":" + json(s.intent).dump();
    out += ",\"positives\":" + json(s.positives).dump() + "}";
    return out;
}

std::string serialize_dataset(const std::vector<MultimodalSample>& samples) {
    std::string out;
    for (const auto& s : samples) out += serialize_sample(s) + "\n";
    return out;
}

void save_dataset(const std::vector<MultimodalSample>& samples, const std::filesystem::path& path) {
    write_text_file(path, serialize_dataset(samples));
}

std::vector<ContentItem> parse_catalog(std::istream& in, std::size_t width) {
    std::vector<ContentItem> items;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const std::string where = "catalog " + line_prefix(lineno);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + e.what());
        }
        if (!obj.is_object()) throw SchemaError(where + "record must be a JSON object");
        ContentItem item;
        item.id = require_string(obj, "id", where);
        item.embedding = parse_vector(require_key(obj, "embedding", where), where, "embedding");
        if (item.embedding.empty()) throw SchemaError(where + "field 'embedding' is empty");
        if (width == 0) width = item.embedding.size();
        if (item.embedding.size() != width) {
            throw SchemaError(where + "field 'embedding' has width " + std::to_string(item.embedding.size()) +
                              ", expected " + std::to_string(width));
        }
        if (auto it = obj.find("metadata"); it != obj.end()) {
            if (!it->is_object()) throw SchemaError(where + "field 'metadata' must be an object");
            item.metadata = it->dump();
        }
        if (!ids.insert(item.id).second) throw SchemaError(where + "duplicate content id '" + item.id + "'");
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<ContentItem> load_catalog(const std::filesystem::path& path, std::size_t width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return parse_catalog(in, width);
}

std::string serialize_catalog(const std::vector<ContentItem>& catalog) {
    std::string out;
    for (const auto& item : catalog) {
        out += "{\"id\":" + json(item.id).dump() + ",\"embedding\":[";
        for (std::size_t i = 0; i < item.embedding.size(); ++i) {
            if (i) out += ',';
            out += format_double(item.embedding[i]);
        }
        out += "],\"metadata\":" + json::parse(item.metadata).dump() + "}\n";
    }
    return out;
}

void save_catalog(const std::vector<ContentItem>& catalog, const std::filesystem::path& path) {
    write_text_file(path, serialize_catalog(catalog));
}

Split split(const std::vector<MultimodalSample>& samples, const SplitSpec& spec, const DatasetManifest& manifest) {
    spec.validate();
    const std::size_t classes = manifest.num_emotions();
    const std::array<double, 3> fracs{spec.train_frac, spec.val_frac, spec.test_frac};

    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[manifest.emotion_index(samples[i].emotion)].push_back(i);
    for (std::size_t c = 0; c < classes; ++c) {
        if (by_class[c].empty()) {
            throw StratificationError("emotion class '" + manifest.emotion_space[c] + "' has no samples");
        }
    }

    // Largest-remainder allocation of `total` over the three parts; ties go to
    // the earlier part.
    auto apportion = [&](std::size_t total) {
        std::array<std::size_t, 3> sizes{};
        std::array<double, 3> rem{};
        std::size_t used = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double exact = static_cast<double>(total) * fracs[j];
            sizes[j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
            rem[j] = exact - static_cast<double>(sizes[j]);
            used += sizes[j];
        }
        std::array<std::size_t, 3> order{0, 1, 2};
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
        for (std::size_t k = 0; used < total; ++k, ++used) ++sizes[order[k % 3]];
        return sizes;
    };

    const auto global = apportion(samples.size());

    // Per-class floors, then hand out each class's leftover units under the
    // global quotas, largest remainder first.
    std::vector<std::array<std::size_t, 3>> alloc(classes);
    std::vector<std::size_t> leftover(classes);
    std::array<long long, 3> quota{};
    for (std::size_t j = 0; j < 3; ++j) quota[j] = static_cast<long long>(global[j]);
    struct Unit {
        double rem;
        std::size_t cls, part;
    };
    std::vector<Unit> units;
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t n = by_class[c].size();
        std::size_t used = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double exact = static_cast<double>(n) * fracs[j];
            alloc[c][j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
            used += alloc[c][j];
            quota[j] -= static_cast<long long>(alloc[c][j]);
            units.push_back({exact - static_cast<double>(alloc[c][j]), c, j});
        }
        leftover[c] = n - used;
    }
    std::stable_sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.rem > b.rem + 1e-12; });
    std::vector<std::array<int, 3>> bumped(classes, {0, 0, 0});
    for (const Unit& u : units) {
        if (leftover[u.cls] > 0 && quota[u.part] > 0) {
            bumped[u.cls][u.part] = 1;
            --leftover[u.cls];
            --quota[u.part];
        }
    }
    // The greedy pass can strand units; reroute along augmenting paths
    // (class -> part edges of capacity one) until every unit is placed.
    for (std::size_t c = 0; c < classes; ++c) {
        while (leftover[c] > 0) {
            // BFS over classes; an edge c -> c' exists through part j when c
            // has not taken j and c' has, letting c' move to another part.
            std::vector<std::pair<long long, long long>> prev(classes, {-1, -1});  // (prev class, part)
            std::vector<bool> seen(classes, false);
            std::vector<std::size_t> queue{c};
            seen[c] = true;
            long long end_cls = -1, end_part = -1;
            for (std::size_t qi = 0; qi < queue.size() && end_cls < 0; ++qi) {
                const std::size_t cur = queue[qi];
                for (std::size_t j = 0; j < 3 && end_cls < 0; ++j) {
                    if (bumped[cur][j]) continue;
                    if (quota[j] > 0) {
                        end_cls = static_cast<long long>(cur);
                        end_part = static_cast<long long>(j);
                        break;
                    }
                    for (std::size_t other = 0; other < classes; ++other) {
                        if (!seen[other] && bumped[other][j]) {
                            seen[other] = true;
                            prev[other] = {static_cast<long long>(cur), static_cast<long long>(j)};
                            queue.push_back(other);
                        }
                    }
                }
            }
            if (end_cls < 0) {
                // No path keeps every class within one sample of its target.
                for (std::size_t j = 0; j < 3; ++j) {
                    if (quota[j] > 0) {
                        ++alloc[c][j];
                        --quota[j];
                        --leftover[c];
                        break;
                    }
                }
                continue;
            }
            bumped[static_cast<std::size_t>(end_cls)][static_cast<std::size_t>(end_part)] = 1;
            --quota[static_cast<std::size_t>(end_part)];
            for (long long cur = end_cls; cur != static_cast<long long>(c);) {
                auto [from, part] = prev[static_cast<std::size_t>(cur)];
                bumped[static_cast<std::size_t>(cur)][static_cast<std::size_t>(part)] = 0;
                bumped[static_cast<std::size_t>(from)][static_cast<std::size_t>(part)] = 1;
                cur = from;
            }
            --leftover[c];
        }
    }
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t j = 0; j < 3; ++j) alloc[c][j] += static_cast<std::size_t>(bumped[c][j]);

    auto rng = make_rng(spec.seed, {stream::kSplit});
    Split out;
    std::array<std::vector<MultimodalSample>*, 3> parts{&out.train, &out.val, &out.test};
    for (std::size_t c = 0; c < classes; ++c) {
        auto idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t pos = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t k = 0; k < alloc[c][j]; ++k) parts[j]->push_back(samples[idx[pos++]]);
        }
    }
    for (auto* part : parts) std::shuffle(part->begin(), part->end(), rng);
    return out;
}

SyntheticData synthesize(const DatasetManifest& manifest, std::size_t n, std::uint64_t seed, double separation,
                         const SynthOptions& opt) {
    manifest.validate();
    const std::size_t ne = manifest.num_emotions(), ni = manifest.num_intents(), cells = ne * ni;
    if (n < cells) {
        throw ParameterError("synthesize: n=" + std::to_string(n) + " is smaller than the " + std::to_string(cells) +
                             " (emotion, intent) pairs");
    }
    if (!(separation >= 0.0) || !std::isfinite(separation)) throw ParameterError("synthesize: separation must be >= 0");
    if (opt.min_len < 1 || opt.max_len < opt.min_len) throw ParameterError("synthesize: bad sequence length range");
    if (opt.items_per_cell < 1 || opt.catalog_dim < 1) throw ParameterError("synthesize: bad catalog options");
    if (opt.positives_per_sample > opt.items_per_cell) {
        throw ParameterError("synthesize: positives_per_sample exceeds items_per_cell");
    }

    auto rng = make_rng(seed, {stream::kSynth});
    const auto centers_v = make_centers(cells, manifest.d_v, separation, rng);
    const auto centers_a = make_centers(cells, manifest.d_a, separation, rng);
    const auto centers_t = make_centers(cells, manifest.d_t, separation, rng);
    const auto centers_c = make_centers(cells, opt.catalog_dim, separation, rng);

    SyntheticData out;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        for (std::size_t k = 0; k < opt.items_per_cell; ++k) {
            ContentItem item;
            char id[32];
            std::snprintf(id, sizeof(id), "c%04zu", out.catalog.size());
            item.id = id;
            item.embedding.resize(opt.catalog_dim);
            double norm2 = 0.0;
            for (std::size_t i = 0; i < opt.catalog_dim; ++i) {
                item.embedding[i] = centers_c[cell][i] + noise(rng);
                norm2 += item.embedding[i] * item.embedding[i];
            }
            const double norm = std::sqrt(norm2);
            for (double& x : item.embedding) x /= norm;
            json meta = {{"emotion", manifest.emotion_space[cell / ni]}, {"intent", manifest.intent_space[cell % ni]}};
            item.metadata = meta.dump();
            out.catalog.push_back(std::move(item));
        }
    }

    // Candidate positives per cell: the items nearest the cell's catalog
    // center, measured on the normalized embeddings.
    std::vector<std::vector<std::size_t>> pool(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const auto& ctr = centers_c[cell];
        double cn = 0.0;
        for (double x : ctr) cn += x * x;
        cn = std::sqrt(cn);
        std::vector<std::pair<double, std::size_t>> dist;
        for (std::size_t i = 0; i < out.catalog.size(); ++i) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < opt.catalog_dim; ++j) {
                const double c = cn > 0 ? ctr[j] / cn : 0.0;
                d2 += (out.catalog[i].embedding[j] - c) * (out.catalog[i].embedding[j] - c);
            }
            dist.emplace_back(d2, i);
        }
        std::sort(dist.begin(), dist.end());
        for (std::size_t k = 0; k < opt.items_per_cell; ++k) pool[cell].push_back(dist[k].second);
    }

    std::vector<std::size_t> cell_of(n);
    for (std::size_t i = 0; i < n; ++i) cell_of[i] = i % cells;
    std::shuffle(cell_of.begin(), cell_of.end(), rng);

    std::uniform_int_distribution<std::size_t> length(opt.min_len, opt.max_len);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = cell_of[i];
        MultimodalSample s;
        char id[32];
        std::snprintf(id, sizeof(id), "u%05zu", i);
        s.id = id;
        s.visual = sample_sequence(centers_v[cell], length(rng), rng);
        s.audio = sample_sequence(centers_a[cell], length(rng), rng);
        s.text = sample_sequence(centers_t[cell], length(rng), rng);
        s.emotion = manifest.emotion_space[cell / ni];
        s.intent = manifest.intent_space[cell % ni];
        auto candidates = pool[cell];
        std::shuffle(candidates.begin(), candidates.end(), rng);
        candidates.resize(opt.positives_per_sample);
        std::sort(candidates.begin(), candidates.end());
        for (std::size_t c : candidates) s.positives.push_back(out.catalog[c].id);
        out.samples.push_back(std::move(s));
    }
    return out;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                                    std::uint64_t epoch) {
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(seed, {stream::kShuffle, epoch});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < count; start += batch_size) {
        const std::size_t end = std::min(count, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

std::vector<std::vector<const MultimodalSample*>> batches(const std::vector<MultimodalSample>& samples,
                                                          std::size_t batch_size, std::uint64_t seed,
                                                          std::uint64_t epoch) {
    std::vector<std::vector<const MultimodalSample*>> out;
    for (const auto& idx : batch_indices(samples.size(), batch_size, seed, epoch)) {
        auto& b = out.emplace_back();
        for (std::size_t i : idx) b.push_back(&samples[i]);
    }
    return out;
}

}  // namespace mmei
