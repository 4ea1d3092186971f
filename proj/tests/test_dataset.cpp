#include <doctest.h>

#include <promptlab/config.hpp>
#include <promptlab/dataset.hpp>
#include <promptlab/errors.hpp>
#include <promptlab/rng.hpp>

#include <filesystem>
#include <set>

using namespace promptlab;

namespace {

DatasetStore store() { return DatasetStore(default_data_root() / "datasets"); }

} // namespace

TEST_CASE("sst2 fixture loads with the expected meta and manifest count") {
    const Dataset ds = store().load("sst2");
    CHECK(ds.meta.label_space == std::vector<std::string>{"positive", "negative"});
    CHECK(ds.meta.field_names == std::vector<std::string>{"sentence"});
    CHECK(ds.meta.task_kind == TaskKind::classification);

    const auto manifest = load_config_file(default_data_root() / "datasets" / "manifest.json");
    CHECK(ds.records.size() == manifest.at("sst2").get<std::size_t>());
    CHECK_FALSE(ds.fewshot_pool.empty());
}

TEST_CASE("every bundled dataset validates against its manifest count") {
    const auto manifest = load_config_file(default_data_root() / "datasets" / "manifest.json");
    const DatasetStore s = store();
    for (const auto& [name, count] : manifest.items()) {
        const Dataset ds = s.load(name);
        CHECK(ds.records.size() == count.get<std::size_t>());
        CHECK(ds.records.size() >= 50);
    }
}

TEST_CASE("unknown dataset name raises UnknownDataset") {
    CHECK_THROWS_AS(store().load("nonexistent"), Error);
    try {
        store().load("nonexistent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unknown_dataset);
    }
}

TEST_CASE("record with a label outside the label space is rejected by name") {
    const auto dir = std::filesystem::temp_directory_path() / "promptlab_badset" / "sst2x";
    std::filesystem::create_directories(dir);
    write_file(dir / "meta.json",
               R"({"name":"sst2x","task_kind":"classification","label_space":["positive","negative"],"field_names":["sentence"]})");
    write_file(dir / "data.jsonl",
               "{\"id\":\"ok-1\",\"fields\":{\"sentence\":\"fine\"},\"label\":\"positive\"}\n"
               "{\"id\":\"bad-7\",\"fields\":{\"sentence\":\"hmm\"},\"label\":\"maybe\"}\n");
    DatasetStore s(dir.parent_path());
    try {
        s.load("sst2x");
        FAIL("expected SchemaViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::schema_violation);
        CHECK(std::string(e.what()).find("bad-7") != std::string::npos);
    }
    std::filesystem::remove_all(dir.parent_path());
}

TEST_CASE("loader round-trips through JSONL") {
    const Dataset ds = store().load("mrpc");
    const auto file = std::filesystem::temp_directory_path() / "promptlab_roundtrip.jsonl";
    write_jsonl_records(file, ds.records);
    const auto reloaded = read_jsonl_records(file);
    CHECK(reloaded == ds.records);
    std::filesystem::remove(file);
}

TEST_CASE("few-shot sampling honors k and determinism") {
    const Dataset ds = store().load("sst2");

    CHECK(sample_few_shot(ds.records, 0, 1).empty());

    const auto everything = sample_few_shot(ds.records, ds.records.size(), 3);
    CHECK(everything.size() == ds.records.size());
    std::set<std::string> ids;
    for (const auto& r : everything) ids.insert(r.id);
    CHECK(ids.size() == ds.records.size()); // a permutation, every record once

    const auto once = sample_few_shot(ds.records, 3, 7);
    const auto twice = sample_few_shot(ds.records, 3, 7);
    CHECK(once == twice);
    // golden: frozen from the first run so regressions in the sampler surface
    CHECK(once[0].id == "sst2-007");
    CHECK(once[1].id == "sst2-059");
    CHECK(once[2].id == "sst2-040");

    CHECK_THROWS_AS(sample_few_shot(ds.records, ds.records.size() + 1, 0), Error);
}

TEST_CASE("few-shot draws are distinct and uniform-ish across seeds") {
    const Dataset ds = store().load("cola");
    Rng meta_rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = static_cast<std::size_t>(meta_rng.below(6));
        const std::uint64_t seed = meta_rng.next();
        const auto picked = sample_few_shot(ds.records, k, seed);
        CHECK(picked.size() == k);
        std::set<std::string> ids;
        for (const auto& r : picked) ids.insert(r.id);
        CHECK(ids.size() == k);
    }
}
