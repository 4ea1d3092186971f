#include "promptlab/analysis.hpp"
#include "promptlab/config.hpp"
#include "promptlab/dyval.hpp"
#include "promptlab/errors.hpp"
#include "promptlab/pipeline.hpp"
#include "promptlab/runconfig.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

namespace {

using namespace promptlab;

struct GlobalFlags {
    std::string config_path;
    std::string out;
    std::string data;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int parallelism = 0;
    bool verbose = false;
};

std::filesystem::path resolve_data_root(const GlobalFlags& flags, const RunConfig* rc) {
    if (!flags.data.empty()) return flags.data;
    if (rc != nullptr && !rc->data_root.empty()) return rc->data_root;
    return default_data_root();
}

struct Stack {
    DatasetStore datasets;
    TemplateLibrary templates;
    ModelGateway gateway;
    MethodRunner methods;
    AttackEngine attacks;

    explicit Stack(const std::filesystem::path& root)
        : datasets(root / "datasets"),
          templates(root / "prompts", &datasets),
          gateway(),
          methods(gateway, load_config_file(root / "resources" / "method_prompts.json")),
          attacks(gateway, load_attack_tables(root / "resources")) {
        const auto bundled = root / "resources" / "rulebooks.json";
        if (std::filesystem::exists(bundled)) {
            gateway.load_rulebooks(nlohmann::json{{"rulebooks", load_config_file(bundled)}});
        }
    }

    SweepComponents components() const {
        return SweepComponents{&datasets, &templates, &gateway, &methods, &attacks};
    }
};

void apply_overrides(RunConfig& rc, const GlobalFlags& flags) {
    if (!flags.out.empty()) rc.plan.out_dir = flags.out;
    if (flags.seed_set) rc.plan.seed = flags.seed;
    if (flags.parallelism > 0) rc.plan.parallelism = flags.parallelism;
    if (rc.plan.run_id.empty()) {
        rc.plan.run_id = "run-" + std::to_string(rc.plan.seed);
    }
}

void print_cell_summary(const std::vector<RunRecord>& records) {
    std::size_t name_width = 10;
    for (const RunRecord& r : records) {
        name_width = std::max(name_width, r.endpoint.model_name.size() + r.dataset.size() +
                                              r.template_id.size() + r.method.size() + 3);
    }
    for (const RunRecord& r : records) {
        std::string cell = r.endpoint.model_name + "/" + r.dataset + "/" + r.template_id + "/" +
                           r.method;
        std::string value;
        if (r.status != "ok") {
            value = "ERROR " + r.error;
        } else if (r.attack_result) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "clean=%.4f attacked=%.4f drop=%.4f",
                          r.attack_result->clean_score, r.attack_result->attacked_score,
                          r.attack_result->drop_rate);
            value = buf;
        } else {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "accuracy=%.4f", r.metrics.at("accuracy"));
            value = buf;
        }
        std::cout << cell << std::string(name_width + 2 - cell.size(), ' ') << value << "\n";
    }
}

int run_eval_like(const GlobalFlags& flags, bool require_attacks) {
    RunConfig rc;
    try {
        rc = load_run_config(flags.config_path);
        apply_overrides(rc, flags);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    try {
        Stack stack(resolve_data_root(flags, &rc));
        stack.gateway.load_rulebooks(rc.rulebooks);
        if (rc.retry) stack.gateway.set_retry_policy(*rc.retry);
        if (require_attacks && rc.plan.attacks.empty()) {
            std::cerr << "config error: attack command needs a nonempty 'attacks' list\n";
            return 1;
        }
        validate_plan(rc.plan, stack.components());

        std::cout << "run_id: " << rc.plan.run_id << "  seed: " << rc.plan.seed
                  << "  parallelism: " << rc.plan.parallelism << "\n";
        const std::vector<RunRecord> records = run_sweep(rc.plan, stack.components());
        print_cell_summary(records);
        const bool any_failed = std::any_of(records.begin(), records.end(),
                                            [](const RunRecord& r) { return r.status != "ok"; });
        std::cout << "records: " << records.size() << " -> "
                  << (rc.plan.out_dir / (rc.plan.run_id + ".jsonl")).string() << "\n";
        return any_failed ? 2 : 0;
    } catch (const Error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"promptlab: offline-testable LLM evaluation harness"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "run configuration file (JSON with comments)");
    app.add_option("--out", flags.out, "output directory override");
    auto* seed_opt = app.add_option("--seed", flags.seed, "seed override");
    app.add_option("--parallelism", flags.parallelism, "parallelism override");
    app.add_flag("--verbose", flags.verbose, "chatty output");
    app.add_option("--data", flags.data, "data root override (datasets/, prompts/, resources/)");

    auto* eval_cmd = app.add_subcommand("eval", "run an evaluation sweep from a config");
    auto* attack_cmd = app.add_subcommand("attack", "run adversarial prompt attacks from a config");

    auto* dyval_cmd = app.add_subcommand("dyval", "generate a dynamic evaluation dataset");
    std::string dy_task = "arithmetic";
    int dy_depth = 3, dy_width = 3, dy_extra = 2, dy_count = 20;
    std::int64_t dy_vmin = 1, dy_vmax = 10;
    std::uint64_t dy_seed = 0;
    std::string dy_name, dy_out_dir = "datasets";
    dyval_cmd->add_option("--task", dy_task,
                          "arithmetic|linear_equation|boolean_logic|deductive_logic|"
                          "abductive_logic|reachability|max_sum_path");
    dyval_cmd->add_option("--depth", dy_depth, "DAG depth (>= 2), capped at 8");
    dyval_cmd->add_option("--width", dy_width, "nodes per layer, capped at 6");
    dyval_cmd->add_option("--extra-links", dy_extra, "extra forward edges (graph tasks)");
    dyval_cmd->add_option("--count", dy_count, "samples to emit");
    dyval_cmd->add_option("--value-min", dy_vmin, "smallest leaf value");
    dyval_cmd->add_option("--value-max", dy_vmax, "largest leaf value");
    dyval_cmd->add_option("--name", dy_name, "dataset name (default <task>_dyn)");

    auto* lb_cmd = app.add_subcommand("leaderboard", "aggregate run records into a table");
    std::string lb_runs, lb_view = "standard", lb_csv;
    lb_cmd->add_option("--runs", lb_runs, "directory of run .jsonl files")->required();
    lb_cmd->add_option("--view", lb_view, "standard|attack|method|dynamic");
    lb_cmd->add_option("--csv", lb_csv, "also write the table as CSV to this file");

    auto* wf_cmd = app.add_subcommand("wordfreq", "rank words perturbed by successful attacks");
    std::string wf_runs;
    wf_cmd->add_option("--runs", wf_runs, "directory of run .jsonl files")->required();

    CLI11_PARSE(app, argc, argv);
    flags.seed_set = seed_opt->count() > 0;

    try {
        if (eval_cmd->parsed() || attack_cmd->parsed()) {
            if (flags.config_path.empty()) {
                std::cerr << "config error: --config is required\n";
                return 1;
            }
            return run_eval_like(flags, attack_cmd->parsed());
        }
        if (dyval_cmd->parsed()) {
            DyValSpec spec;
            spec.task = dyval_task_from_string(dy_task);
            spec.depth = dy_depth;
            spec.width = dy_width;
            spec.extra_links = dy_extra;
            spec.value_min = dy_vmin;
            spec.value_max = dy_vmax;
            spec.seed = flags.seed_set ? flags.seed : dy_seed;
            validate_spec(spec);
            if (dy_name.empty()) dy_name = dy_task + "_dyn";
            const std::filesystem::path out_dir =
                std::filesystem::path(flags.out.empty() ? dy_out_dir : flags.out) / dy_name;
            std::cout << "task: " << dy_task << "  seed: " << spec.seed << "  count: " << dy_count
                      << "\n";
            const auto samples = emit_batch(spec, dy_count);
            write_dyval_dataset(out_dir, dy_name, samples);
            std::cout << "wrote " << samples.size() << " samples -> " << out_dir.string() << "\n";
            return 0;
        }
        if (lb_cmd->parsed()) {
            const auto records = load_run_dir(lb_runs);
            if (records.empty()) {
                std::cerr << "no run records under " << lb_runs << "\n";
                return 1;
            }
            const LeaderboardTable table = leaderboard(records, view_from_string(lb_view));
            std::cout << "view: " << lb_view << "  runs: " << records.size() << "\n";
            std::cout << leaderboard_text(table);
            if (!lb_csv.empty()) {
                write_file(lb_csv, leaderboard_csv(table));
                std::cout << "csv -> " << lb_csv << "\n";
            }
            return 0;
        }
        if (wf_cmd->parsed()) {
            const auto records = load_run_dir(wf_runs);
            if (records.empty()) {
                std::cerr << "no run records under " << wf_runs << "\n";
                return 1;
            }
            const auto table = word_frequency(records);
            std::cout << word_frequency_text(table);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
