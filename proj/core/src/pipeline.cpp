#include "promptlab/pipeline.hpp"

#include "promptlab/config.hpp"
#include "promptlab/errors.hpp"
#include "promptlab/rng.hpp"
#include "promptlab/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace promptlab {

namespace {

std::string iso_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json sample_to_json(const SampleOutcome& s) {
    return nlohmann::json{{"record_id", s.record_id}, {"prompt_hash", s.prompt_hash},
                          {"raw_output", s.raw_output}, {"prediction", s.prediction},
                          {"gold", s.gold},             {"correct", s.correct}};
}

SampleOutcome sample_from_json(const nlohmann::json& j) {
    return SampleOutcome{j.at("record_id").get<std::string>(),
                         j.at("prompt_hash").get<std::string>(),
                         j.at("raw_output").get<std::string>(),
                         j.at("prediction").get<std::string>(),
                         j.at("gold").get<std::string>(),
                         j.at("correct").get<bool>()};
}

} // namespace

nlohmann::json run_record_to_json(const RunRecord& r) {
    nlohmann::json per_sample = nlohmann::json::array();
    for (const SampleOutcome& s : r.per_sample) per_sample.push_back(sample_to_json(s));
    nlohmann::json j{{"run_id", r.run_id},
                     {"status", r.status},
                     {"endpoint", endpoint_to_json(r.endpoint)},
                     {"dataset", r.dataset},
                     {"dataset_kind", r.dataset_kind},
                     {"template_id", r.template_id},
                     {"method", r.method},
                     {"per_sample", per_sample},
                     {"metrics", r.metrics},
                     {"few_shot_ids", r.few_shot_ids},
                     {"seeds", r.seeds},
                     {"timestamps", {{"started", r.started_at}, {"finished", r.finished_at}}}};
    if (r.attack_config) {
        j["attack"] = {{"config", attack_config_to_json(*r.attack_config)}};
        if (r.attack_result) j["attack"]["result"] = attack_result_to_json(*r.attack_result);
    } else {
        j["attack"] = nullptr;
    }
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.endpoint = endpoint_from_json(j.at("endpoint"));
    r.dataset = j.at("dataset").get<std::string>();
    r.dataset_kind = j.value("dataset_kind", "");
    r.template_id = j.at("template_id").get<std::string>();
    r.method = j.at("method").get<std::string>();
    for (const nlohmann::json& s : j.at("per_sample")) r.per_sample.push_back(sample_from_json(s));
    for (const auto& [name, value] : j.at("metrics").items()) r.metrics[name] = value.get<double>();
    r.few_shot_ids = j.at("few_shot_ids").get<std::vector<std::string>>();
    for (const auto& [name, value] : j.at("seeds").items()) {
        r.seeds[name] = value.get<std::uint64_t>();
    }
    r.started_at = j.at("timestamps").at("started").get<std::string>();
    r.finished_at = j.at("timestamps").at("finished").get<std::string>();
    if (j.contains("attack") && !j["attack"].is_null()) {
        r.attack_config = attack_config_from_json(j["attack"].at("config"));
        if (j["attack"].contains("result")) {
            r.attack_result = attack_result_from_json(j["attack"]["result"]);
        }
    }
    r.error = j.value("error", "");
    return r;
}

std::vector<std::string> validate_run_record_json(const nlohmann::json& j) {
    std::vector<std::string> problems;
    auto need = [&](const char* key, bool ok) {
        if (!ok) problems.push_back(std::string("missing or mistyped '") + key + "'");
    };
    need("run_id", j.contains("run_id") && j["run_id"].is_string());
    need("status", j.contains("status") && j["status"].is_string() &&
                       (j["status"] == "ok" || j["status"] == "error"));
    need("endpoint", j.contains("endpoint") && j["endpoint"].is_object() &&
                         j["endpoint"].contains("kind") && j["endpoint"].contains("model_name"));
    need("dataset", j.contains("dataset") && j["dataset"].is_string());
    need("template_id", j.contains("template_id") && j["template_id"].is_string());
    need("method", j.contains("method") && j["method"].is_string());
    need("metrics", j.contains("metrics") && j["metrics"].is_object());
    need("few_shot_ids", j.contains("few_shot_ids") && j["few_shot_ids"].is_array());
    need("seeds", j.contains("seeds") && j["seeds"].is_object());
    need("timestamps", j.contains("timestamps") && j["timestamps"].is_object() &&
                           j["timestamps"].contains("started") &&
                           j["timestamps"].contains("finished"));
    need("attack", j.contains("attack"));
    if (!j.contains("per_sample") || !j["per_sample"].is_array()) {
        problems.push_back("missing or mistyped 'per_sample'");
    } else {
        for (const nlohmann::json& s : j["per_sample"]) {
            for (const char* key : {"record_id", "prompt_hash", "raw_output", "prediction", "gold"}) {
                if (!s.contains(key) || !s[key].is_string()) {
                    problems.push_back(std::string("per_sample entry missing '") + key + "'");
                    break;
                }
            }
            if (!s.contains("correct") || !s["correct"].is_boolean()) {
                problems.push_back("per_sample entry missing 'correct'");
            }
        }
    }
    if (j.contains("metrics") && j["metrics"].is_object()) {
        for (const auto& [name, value] : j["metrics"].items()) {
            if (!value.is_number()) {
                problems.push_back("metric '" + name + "' is not a number");
            }
        }
    }
    return problems;
}

std::vector<std::string> check_metric_consistency(const RunRecord& record,
                                                  const std::vector<std::string>& label_space) {
    std::vector<std::string> mismatches;
    if (record.per_sample.empty()) return mismatches;
    for (const auto& [name, stored] : record.metrics) {
        double recomputed = stored;
        if (name == "accuracy") {
            recomputed = score(record.per_sample, MetricKind::accuracy, label_space);
        } else if (name == "macro_f1") {
            recomputed = score(record.per_sample, MetricKind::macro_f1, label_space);
        } else if (name == "exact_match") {
            recomputed = score(record.per_sample, MetricKind::exact_match, label_space);
        } else {
            continue;
        }
        if (recomputed != stored) mismatches.push_back(name);
    }
    return mismatches;
}

// ---------------------------------------------------------------------------
// sweep execution

namespace {

struct Cell {
    ModelEndpoint endpoint;
    std::string dataset;
    PromptTemplate tmpl;
    std::string method; // "none" or a Method name
    std::optional<AttackConfig> attack;
};

struct CellContext {
    Dataset data;
    std::vector<DataRecord> few_shot;
    std::vector<DataRecord> eval_records;
};

// Few-shot exemplars come from the fewshot pool when the fixture ships one,
// else from the main file with the sampled items excluded from scoring.
CellContext prepare_cell(const Dataset& data, const PromptTemplate& tmpl, std::uint64_t seed,
                         int max_records) {
    CellContext ctx;
    ctx.data = data;
    ctx.eval_records = data.records;
    if (tmpl.shots > 0) {
        const bool pooled = !data.fewshot_pool.empty();
        const std::vector<DataRecord>& pool = pooled ? data.fewshot_pool : data.records;
        ctx.few_shot = sample_few_shot(pool, static_cast<std::size_t>(tmpl.shots), seed);
        if (!pooled) {
            std::set<std::string> used;
            for (const DataRecord& r : ctx.few_shot) used.insert(r.id);
            std::erase_if(ctx.eval_records,
                          [&](const DataRecord& r) { return used.count(r.id) != 0; });
        }
    }
    if (max_records > 0 && ctx.eval_records.size() > static_cast<std::size_t>(max_records)) {
        ctx.eval_records.resize(static_cast<std::size_t>(max_records));
    }
    return ctx;
}

RunRecord execute_cell(const Cell& cell, const SweepPlan& plan, const SweepComponents& comp) {
    RunRecord record;
    record.run_id = plan.run_id;
    record.endpoint = cell.endpoint;
    record.dataset = cell.dataset;
    record.template_id = cell.tmpl.id;
    record.method = cell.method;
    record.attack_config = cell.attack;
    record.started_at = iso_now();
    record.seeds["plan"] = plan.seed;

    try {
        const Dataset data = comp.datasets->load(cell.dataset);
        record.dataset_kind = to_string(data.meta.task_kind);
        const std::uint64_t fewshot_seed = mix_seed({plan.seed, fnv1a(cell.dataset), fnv1a("fewshot")});
        record.seeds["few_shot"] = fewshot_seed;
        CellContext ctx = prepare_cell(data, cell.tmpl, fewshot_seed, plan.max_records);
        for (const DataRecord& r : ctx.few_shot) record.few_shot_ids.push_back(r.id);
        if (ctx.eval_records.empty()) {
            throw Error(ErrorCode::empty_run, "no records left to evaluate");
        }

        const bool labeled = is_labeled_kind(data.meta.task_kind);
        std::vector<DataRecord> targets = ctx.eval_records;
        std::vector<std::string> prompts;

        AttackTarget attack_target{cell.tmpl, data.meta, ctx.few_shot, targets.front()};
        AppliedPerturbation applied; // identity unless an attack ran

        if (cell.attack) {
            AttackConfig config = *cell.attack;
            record.seeds["attack"] = config.seed;
            if (static_cast<std::size_t>(config.eval_subset_size) > ctx.eval_records.size()) {
                throw Error(ErrorCode::bad_config, "eval_subset_size exceeds dataset size");
            }
            const std::uint64_t subset_seed =
                mix_seed({plan.seed, fnv1a(cell.dataset), fnv1a("attack-subset")});
            record.seeds["attack_subset"] = subset_seed;
            targets = sample_few_shot(ctx.eval_records,
                                      static_cast<std::size_t>(config.eval_subset_size), subset_seed);
            attack_target.base_record = targets.front();
            // the attack itself scores plain prompts; a method wraps afterwards
            AttackOutcome outcome = comp.attacks->attack(attack_target, config, cell.endpoint,
                                                         plan.params, targets);
            record.attack_result = outcome.result;
            applied = outcome.applied;
        }

        prompts.reserve(targets.size());
        for (const DataRecord& r : targets) {
            if (cell.attack) {
                prompts.push_back(comp.attacks->apply_perturbation(attack_target, applied, r));
            } else {
                prompts.push_back(render(cell.tmpl, data.meta, r, ctx.few_shot).text);
            }
        }

        std::vector<std::string> raw(targets.size());
        if (cell.method == "none") {
            const auto outcomes =
                comp.gateway->batch_generate(cell.endpoint, plan.params, prompts, plan.parallelism);
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                if (!outcomes[i].ok) {
                    throw Error(ErrorCode::transport, "sample " + targets[i].id + ": " +
                                                          outcomes[i].message);
                }
                raw[i] = outcomes[i].text;
            }
        } else {
            for (std::size_t i = 0; i < prompts.size(); ++i) {
                raw[i] =
                    comp.methods->apply_named(cell.method, prompts[i], cell.endpoint, plan.params)
                        .answer;
            }
        }

        for (std::size_t i = 0; i < targets.size(); ++i) {
            SampleOutcome s;
            s.record_id = targets[i].id;
            s.prompt_hash = hex_hash(prompts[i]);
            s.raw_output = raw[i];
            s.gold = targets[i].label;
            if (labeled) {
                s.prediction = process_output(raw[i], data.meta.label_space, cell.tmpl.projection);
                s.correct = s.prediction == s.gold;
            } else {
                s.prediction = raw[i];
                s.correct = normalize_text(s.prediction) == normalize_text(s.gold);
            }
            record.per_sample.push_back(std::move(s));
        }

        record.metrics["accuracy"] =
            score(record.per_sample, MetricKind::accuracy, data.meta.label_space);
        if (labeled) {
            record.metrics["macro_f1"] =
                score(record.per_sample, MetricKind::macro_f1, data.meta.label_space);
        } else {
            record.metrics["exact_match"] =
                score(record.per_sample, MetricKind::exact_match, data.meta.label_space);
        }
    } catch (const Error& e) {
        record.status = "error";
        record.error = e.what();
    } catch (const std::exception& e) {
        record.status = "error";
        record.error = e.what();
    }
    record.finished_at = iso_now();
    return record;
}

// Appends one line and fsyncs so a crash never loses acknowledged records.
void append_line_fsync(const std::filesystem::path& path, const std::string& line) {
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (f == nullptr) {
        throw Error(ErrorCode::io_error, "cannot append to " + path.string());
    }
    const std::string payload = line + "\n";
    if (std::fwrite(payload.data(), 1, payload.size(), f) != payload.size()) {
        std::fclose(f);
        throw Error(ErrorCode::io_error, "short write to " + path.string());
    }
    std::fflush(f);
    ::fsync(::fileno(f));
    std::fclose(f);
}

} // namespace

void validate_plan(const SweepPlan& plan, const SweepComponents& comp) {
    std::vector<std::string> problems;
    if (plan.endpoints.empty()) problems.push_back("no endpoints configured");
    if (plan.datasets.empty()) problems.push_back("no datasets configured");
    if (plan.methods.empty()) problems.push_back("no methods configured (use [\"none\"])");
    if (plan.run_id.empty()) problems.push_back("run_id empty");
    if (plan.parallelism < 1) problems.push_back("parallelism must be >= 1");

    for (const ModelEndpoint& endpoint : plan.endpoints) {
        try {
            validate_endpoint(endpoint);
            if (endpoint.kind == EndpointKind::mock &&
                !comp.gateway->has_rulebook(endpoint.mock_rulebook)) {
                problems.push_back("mock rulebook '" + endpoint.mock_rulebook + "' not registered");
            }
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    for (const std::string& name : plan.datasets) {
        if (!comp.datasets->contains(name)) {
            problems.push_back("unknown dataset '" + name + "'");
            continue;
        }
        try {
            const Dataset data = comp.datasets->load(name);
            const auto templates = comp.templates->resolve(name, plan.template_selectors);
            std::size_t usable = data.records.size();
            if (plan.max_records > 0) {
                usable = std::min(usable, static_cast<std::size_t>(plan.max_records));
            }
            for (const AttackConfig& attack : plan.attacks) {
                validate_attack_config(attack);
                if (static_cast<std::size_t>(attack.eval_subset_size) > usable) {
                    problems.push_back("attack eval_subset_size exceeds dataset '" + name + "'");
                }
                if (attack.level == AttackLevel::word &&
                    !comp.attacks->providers().contains(attack.candidate_provider)) {
                    problems.push_back("unknown candidate provider '" + attack.candidate_provider +
                                       "'");
                }
                if (attack.level == AttackLevel::semantic) {
                    for (const PromptTemplate& t : templates) {
                        if (comp.attacks->tables().styles.count(t.id) == 0) {
                            problems.push_back("no semantic styles for template '" + t.id + "'");
                        }
                    }
                }
            }
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    for (const std::string& method : plan.methods) {
        if (method == "none") continue;
        if (!comp.methods->knows(method)) {
            problems.push_back("unknown method '" + method + "'");
        }
    }
    if (!problems.empty()) {
        std::string all;
        for (const std::string& p : problems) {
            if (!all.empty()) all += "; ";
            all += p;
        }
        throw Error(ErrorCode::bad_config, all);
    }
}

std::vector<RunRecord> run_sweep(const SweepPlan& plan, const SweepComponents& comp) {
    validate_plan(plan, comp);

    std::vector<Cell> cells;
    for (const ModelEndpoint& endpoint : plan.endpoints) {
        for (const std::string& dataset : plan.datasets) {
            for (const PromptTemplate& tmpl : comp.templates->resolve(dataset, plan.template_selectors)) {
                for (const std::string& method : plan.methods) {
                    if (plan.attacks.empty()) {
                        cells.push_back({endpoint, dataset, tmpl, method, std::nullopt});
                    } else {
                        for (const AttackConfig& attack : plan.attacks) {
                            cells.push_back({endpoint, dataset, tmpl, method, attack});
                        }
                    }
                }
            }
        }
    }

    std::filesystem::create_directories(plan.out_dir);
    const std::filesystem::path run_file = plan.out_dir / (plan.run_id + ".jsonl");

    std::vector<std::optional<RunRecord>> results(cells.size());
    std::mutex mutex;
    std::condition_variable ready;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            RunRecord record = execute_cell(cells[i], plan, comp);
            {
                std::lock_guard<std::mutex> lock(mutex);
                results[i] = std::move(record);
            }
            ready.notify_all();
        }
    };

    const std::size_t n_threads = std::min<std::size_t>(
        std::max(1, plan.parallelism), std::max<std::size_t>(cells.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);

    // persist in plan order as cells complete
    std::vector<RunRecord> records;
    records.reserve(cells.size());
    try {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            std::unique_lock<std::mutex> lock(mutex);
            ready.wait(lock, [&] { return results[i].has_value(); });
            RunRecord record = std::move(*results[i]);
            lock.unlock();
            append_line_fsync(run_file, run_record_to_json(record).dump());
            records.push_back(std::move(record));
        }
    } catch (...) {
        next.store(cells.size()); // drain remaining work before unwinding
        for (std::thread& t : pool) t.join();
        throw;
    }
    for (std::thread& t : pool) t.join();
    return records;
}

std::vector<nlohmann::json> load_run_dir(const std::filesystem::path& dir) {
    std::vector<nlohmann::json> records;
    if (!std::filesystem::is_directory(dir)) return records;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        std::istringstream in(read_file(file));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            records.push_back(nlohmann::json::parse(line));
        }
    }
    return records;
}

} // namespace promptlab
