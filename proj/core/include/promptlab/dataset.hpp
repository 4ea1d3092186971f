#pragma once

#include "promptlab/registry.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptlab {

enum class TaskKind {
    classification,
    nli,
    paraphrase,
    reasoning_freeform,
};

TaskKind task_kind_from_string(const std::string& s);
std::string to_string(TaskKind kind);

/// True for every kind whose records carry a label from a closed label space.
bool is_labeled_kind(TaskKind kind);

struct DatasetMeta {
    std::string name;
    TaskKind task_kind = TaskKind::classification;
    std::vector<std::string> label_space; // empty for freeform
    std::vector<std::string> field_names;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct DataRecord {
    std::string id;
    std::map<std::string, std::string> fields;
    std::string label;

    friend bool operator==(const DataRecord&, const DataRecord&) = default;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<DataRecord> records;
    std::vector<DataRecord> fewshot_pool; // empty when the fixture has no fewshot.jsonl
};

// JSONL / JSON codecs. One record object per line with keys "id", "fields", "label".
nlohmann::json record_to_json(const DataRecord& record);
DataRecord record_from_json(const nlohmann::json& j);
nlohmann::json meta_to_json(const DatasetMeta& meta);
DatasetMeta meta_from_json(const nlohmann::json& j);

std::vector<DataRecord> read_jsonl_records(const std::filesystem::path& file);
void write_jsonl_records(const std::filesystem::path& file, const std::vector<DataRecord>& records);

/// Checks both type invariants; throws SchemaViolation naming the first bad record.
void validate_dataset(const DatasetMeta& meta, const std::vector<DataRecord>& records);

/// Loads datasets from a fixture directory tree:
///   <root>/<name>/data.jsonl       records, file order preserved
///   <root>/<name>/meta.json        DatasetMeta verbatim
///   <root>/<name>/fewshot.jsonl    optional exemplar pool
/// Every subdirectory with a meta.json is registered at construction; more
/// loaders can be added afterwards.
class DatasetStore {
public:
    using Loader = std::function<Dataset()>;

    explicit DatasetStore(std::filesystem::path root);

    Dataset load(const std::string& name) const;
    bool contains(const std::string& name) const { return registry_.contains(name); }
    std::vector<std::string> names() const { return registry_.names(); }
    void add_loader(const std::string& name, Loader loader) { registry_.add(name, std::move(loader)); }

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    Registry<Loader> registry_;
};

/// Draws k distinct records uniformly without replacement; pure in (records, k, seed).
std::vector<DataRecord> sample_few_shot(const std::vector<DataRecord>& records, std::size_t k,
                                        std::uint64_t seed);

} // namespace promptlab
