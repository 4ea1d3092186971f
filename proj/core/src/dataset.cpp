#include "promptlab/dataset.hpp"

#include "promptlab/config.hpp"
#include "promptlab/errors.hpp"
#include "promptlab/rng.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace promptlab {

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "classification") return TaskKind::classification;
    if (s == "nli") return TaskKind::nli;
    if (s == "paraphrase") return TaskKind::paraphrase;
    if (s == "reasoning_freeform") return TaskKind::reasoning_freeform;
    throw Error(ErrorCode::bad_config, "unknown task_kind '" + s + "'");
}

std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::classification: return "classification";
        case TaskKind::nli: return "nli";
        case TaskKind::paraphrase: return "paraphrase";
        case TaskKind::reasoning_freeform: return "reasoning_freeform";
    }
    return "classification";
}

bool is_labeled_kind(TaskKind kind) {
    return kind != TaskKind::reasoning_freeform;
}

nlohmann::json record_to_json(const DataRecord& record) {
    return nlohmann::json{{"id", record.id}, {"fields", record.fields}, {"label", record.label}};
}

DataRecord record_from_json(const nlohmann::json& j) {
    DataRecord record;
    record.id = j.at("id").get<std::string>();
    for (const auto& [key, value] : j.at("fields").items()) {
        record.fields[key] = value.get<std::string>();
    }
    record.label = j.at("label").get<std::string>();
    return record;
}

nlohmann::json meta_to_json(const DatasetMeta& meta) {
    return nlohmann::json{{"name", meta.name},
                          {"task_kind", to_string(meta.task_kind)},
                          {"label_space", meta.label_space},
                          {"field_names", meta.field_names}};
}

DatasetMeta meta_from_json(const nlohmann::json& j) {
    DatasetMeta meta;
    meta.name = j.at("name").get<std::string>();
    meta.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
    meta.label_space = j.at("label_space").get<std::vector<std::string>>();
    meta.field_names = j.at("field_names").get<std::vector<std::string>>();
    return meta;
}

std::vector<DataRecord> read_jsonl_records(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + file.string());
    }
    std::vector<DataRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::schema_violation,
                        file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

void write_jsonl_records(const std::filesystem::path& file, const std::vector<DataRecord>& records) {
    std::ostringstream out;
    for (const DataRecord& r : records) {
        out << record_to_json(r).dump() << '\n';
    }
    write_file(file, out.str());
}

void validate_dataset(const DatasetMeta& meta, const std::vector<DataRecord>& records) {
    if (meta.field_names.empty()) {
        throw Error(ErrorCode::schema_violation, meta.name + ": field_names empty");
    }
    std::set<std::string> field_set(meta.field_names.begin(), meta.field_names.end());
    if (field_set.size() != meta.field_names.size()) {
        throw Error(ErrorCode::schema_violation, meta.name + ": duplicate field names");
    }
    if (is_labeled_kind(meta.task_kind) && meta.label_space.empty()) {
        throw Error(ErrorCode::schema_violation, meta.name + ": labeled task with empty label_space");
    }
    std::set<std::string> seen_ids;
    for (const DataRecord& r : records) {
        if (!seen_ids.insert(r.id).second) {
            throw Error(ErrorCode::schema_violation, meta.name + ": duplicate record id '" + r.id + "'");
        }
        if (r.fields.size() != field_set.size()) {
            throw Error(ErrorCode::schema_violation,
                        meta.name + ": record '" + r.id + "' has wrong field set");
        }
        for (const auto& [key, _] : r.fields) {
            if (field_set.count(key) == 0) {
                throw Error(ErrorCode::schema_violation,
                            meta.name + ": record '" + r.id + "' has unknown field '" + key + "'");
            }
        }
        if (is_labeled_kind(meta.task_kind) &&
            std::find(meta.label_space.begin(), meta.label_space.end(), r.label) ==
                meta.label_space.end()) {
            throw Error(ErrorCode::schema_violation, meta.name + ": record '" + r.id +
                                                         "' label '" + r.label +
                                                         "' outside label_space");
        }
    }
}

namespace {

Dataset load_fixture_dir(const std::filesystem::path& dir) {
    Dataset ds;
    ds.meta = meta_from_json(load_config_file(dir / "meta.json"));
    ds.records = read_jsonl_records(dir / "data.jsonl");
    validate_dataset(ds.meta, ds.records);
    const auto fewshot = dir / "fewshot.jsonl";
    if (std::filesystem::exists(fewshot)) {
        ds.fewshot_pool = read_jsonl_records(fewshot);
        validate_dataset(ds.meta, ds.fewshot_pool);
    }
    return ds;
}

} // namespace

DatasetStore::DatasetStore(std::filesystem::path root) : root_(std::move(root)) {
    if (!std::filesystem::is_directory(root_)) return;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
        if (!entry.is_directory()) continue;
        if (!std::filesystem::exists(entry.path() / "meta.json")) continue;
        const std::string name = entry.path().filename().string();
        const std::filesystem::path dir = entry.path();
        registry_.add(name, [dir]() { return load_fixture_dir(dir); });
    }
}

Dataset DatasetStore::load(const std::string& name) const {
    const Loader* loader = registry_.find(name);
    if (loader == nullptr) {
        throw Error(ErrorCode::unknown_dataset, "'" + name + "' is not registered");
    }
    return (*loader)();
}

std::vector<DataRecord> sample_few_shot(const std::vector<DataRecord>& records, std::size_t k,
                                        std::uint64_t seed) {
    if (k > records.size()) {
        throw Error(ErrorCode::insufficient_records,
                    "requested " + std::to_string(k) + " of " + std::to_string(records.size()));
    }
    // partial Fisher-Yates over an index vector
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed({seed, 0x66657773686f74ULL}));
    std::vector<DataRecord> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
        out.push_back(records[order[i]]);
    }
    return out;
}

} // namespace promptlab
