#include <doctest.h>

#include <promptlab/analysis.hpp>

using namespace promptlab;

namespace {

nlohmann::json make_record(const std::string& model, const std::string& dataset, double accuracy,
                           const std::string& method = "none",
                           const std::string& kind = "classification") {
    return nlohmann::json{{"run_id", "r"},
                          {"status", "ok"},
                          {"endpoint", {{"kind", "mock"}, {"model_name", model}}},
                          {"dataset", dataset},
                          {"dataset_kind", kind},
                          {"template_id", dataset + "_zs_task"},
                          {"method", method},
                          {"attack", nullptr},
                          {"metrics", {{"accuracy", accuracy}}},
                          {"per_sample", nlohmann::json::array()},
                          {"few_shot_ids", nlohmann::json::array()},
                          {"seeds", nlohmann::json::object()},
                          {"timestamps", {{"started", "t"}, {"finished", "t"}}}};
}

nlohmann::json make_attack_record(const std::string& model, const std::string& dataset,
                                  double drop, nlohmann::json log) {
    nlohmann::json r = make_record(model, dataset, 0.5);
    r["attack"] = {{"config", {{"level", "word"}}},
                   {"result",
                    {{"original_prompt", "o"},
                     {"perturbed_prompt", "p"},
                     {"level", "word"},
                     {"queries_used", 4},
                     {"clean_score", 1.0},
                     {"attacked_score", 1.0 - drop},
                     {"drop_rate", drop},
                     {"perturbation_log", std::move(log)}}}};
    return r;
}

nlohmann::json edit(const std::string& kind, std::size_t pos, const std::string& before) {
    return nlohmann::json{{"kind", kind}, {"position", pos}, {"before", before}, {"after", "x"}};
}

} // namespace

TEST_CASE("leaderboard sorts rows by mean and reports the footer mean") {
    std::vector<nlohmann::json> records{make_record("weak", "sst2", 0.5),
                                        make_record("strong", "sst2", 1.0)};
    const LeaderboardTable table = leaderboard(records, LeaderboardView::standard);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == "strong");
    CHECK(table.rows[1] == "weak");
    CHECK(table.row_means[0] == doctest::Approx(1.0));
    CHECK(table.column_means[0] == doctest::Approx(0.75));

    const std::string csv = leaderboard_csv(table);
    CHECK(csv.find("strong,1.0000,1.0000") != std::string::npos);
    CHECK(csv.find("mean,0.7500,0.7500") != std::string::npos);
    const std::string text = leaderboard_text(table);
    CHECK(text.find("strong") < text.find("weak"));
}

TEST_CASE("leaderboard aggregation is a pure function of the records") {
    std::vector<nlohmann::json> records{make_record("m1", "sst2", 0.8),
                                        make_record("m1", "cola", 0.6),
                                        make_record("m2", "sst2", 0.9)};
    const auto a = leaderboard(records, LeaderboardView::standard);
    const auto b = leaderboard(records, LeaderboardView::standard);
    CHECK(leaderboard_csv(a) == leaderboard_csv(b));
    CHECK(a.columns == std::vector<std::string>{"cola", "sst2"});
    // m1 row mean averages its present cells
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0] == "m2");
    CHECK(a.row_means[1] == doctest::Approx(0.7));
}

TEST_CASE("views filter records appropriately") {
    std::vector<nlohmann::json> records{
        make_record("m", "sst2", 0.9),
        make_record("m", "sst2", 0.7, "zs_cot"),
        make_record("m", "bool_logic_dyn", 0.6, "none", "reasoning_freeform"),
        make_attack_record("m", "sst2", 0.25, nlohmann::json::array()),
    };
    CHECK(leaderboard(records, LeaderboardView::standard).columns ==
          std::vector<std::string>{"bool_logic_dyn", "sst2"});
    const auto method_view = leaderboard(records, LeaderboardView::method);
    REQUIRE(method_view.rows.size() == 1);
    CHECK(method_view.rows[0] == "m/zs_cot");
    const auto dynamic_view = leaderboard(records, LeaderboardView::dynamic);
    CHECK(dynamic_view.columns == std::vector<std::string>{"bool_logic_dyn"});
    const auto attack_view = leaderboard(records, LeaderboardView::attack);
    REQUIRE(attack_view.rows.size() == 1);
    CHECK(attack_view.values[0][0] == doctest::Approx(0.25));
}

TEST_CASE("attack view ranks lower drop rates first") {
    std::vector<nlohmann::json> records{
        make_attack_record("fragile", "sst2", 0.9, nlohmann::json::array()),
        make_attack_record("robust", "sst2", 0.1, nlohmann::json::array()),
    };
    const auto table = leaderboard(records, LeaderboardView::attack);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == "robust");
}

TEST_CASE("word frequency counts only successful attacks, original words first") {
    nlohmann::json log1 = nlohmann::json::array({edit("word", 0, "Determine")});
    nlohmann::json log2 = nlohmann::json::array(
        {edit("char_swap", 0, "determine"), edit("char_delete", 0, "detremine")});
    nlohmann::json log3 = nlohmann::json::array({edit("word", 0, "determine"),
                                                 edit("word", 9, "review")});
    nlohmann::json failed = nlohmann::json::array({edit("word", 0, "ignored")});
    nlohmann::json sentence_only =
        nlohmann::json::array({edit("sentence", 90, "")});

    std::vector<nlohmann::json> records{
        make_attack_record("m", "sst2", 1.0, log1),
        make_attack_record("m", "sst2", 0.5, log2),
        make_attack_record("m", "sst2", 0.25, log3),
        make_attack_record("m", "sst2", 0.0, failed), // unsuccessful: skipped
        make_attack_record("m", "sst2", 0.5, sentence_only),
    };
    const auto table = word_frequency(records);
    REQUIRE(table.size() == 2);
    CHECK(table[0].first == "determine");
    CHECK(table[0].second == 3); // stacked char edits count once via position dedupe
    CHECK(table[1].first == "review");
    CHECK(table[1].second == 1);

    const std::string text = word_frequency_text(table);
    CHECK(text.find("determine") != std::string::npos);
    CHECK(text.find("ignored") == std::string::npos);
}
