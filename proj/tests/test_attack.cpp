#include <doctest.h>

#include <promptlab/attack.hpp>
#include <promptlab/errors.hpp>
#include <promptlab/metrics.hpp>
#include <promptlab/rng.hpp>

#include "support/toy_target.hpp"

#include <cmath>
#include <set>

using namespace promptlab;
using namespace promptlab::testing;

namespace {

// classic dynamic-programming edit distance with adjacent transposition
std::size_t damerau_distance(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
            if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
                d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
            }
        }
    }
    return d[n][m];
}

struct Rig {
    ModelGateway gateway;
    AttackEngine engine;

    Rig() : engine(gateway, toy_tables()) {
        gateway.register_rulebook("keyword", keyword_rulebook());
        gateway.register_rulebook("suffix", suffix_rulebook());
        gateway.register_rulebook("half", half_rulebook());
        gateway.register_rulebook("constant", constant_rulebook());
    }
};

AttackConfig config_for(AttackLevel level, int budget = 200) {
    AttackConfig c;
    c.level = level;
    c.query_budget = budget;
    c.max_word_perturb_ratio = 0.5;
    c.max_char_edits_per_word = 2;
    c.eval_subset_size = 4;
    c.seed = 11;
    return c;
}

} // namespace

TEST_CASE("perturb_char applies exactly one atomic edit") {
    const std::string swapped = perturb_char("important", CharEdit::swap_adjacent, 4, 0);
    CHECK(swapped.size() == 9);
    CHECK(swapped[4] == std::string("important")[5]);
    CHECK(swapped[5] == std::string("important")[4]);
    CHECK(damerau_distance("important", swapped) == 1);

    CHECK(perturb_char("at", CharEdit::erase, 0, 0) == "t");

    const std::string s1 = perturb_char("cat", CharEdit::substitute_neighbor, 1, 33);
    const std::string s2 = perturb_char("cat", CharEdit::substitute_neighbor, 1, 33);
    CHECK(s1 == s2);
    CHECK(s1 != "cat");
    CHECK(damerau_distance("cat", s1) == 1);

    const std::string inserted = perturb_char("cat", CharEdit::insert, 3, 5);
    CHECK(inserted.size() == 4);
    CHECK(damerau_distance("cat", inserted) == 1);
}

TEST_CASE("perturb_char rejects invalid positions") {
    CHECK_THROWS_AS(perturb_char("a", CharEdit::erase, 0, 0), Error);
    CHECK_THROWS_AS(perturb_char("ab", CharEdit::erase, 5, 0), Error);
    CHECK_THROWS_AS(perturb_char("aa", CharEdit::swap_adjacent, 0, 0), Error); // no-op swap
    CHECK_THROWS_AS(perturb_char("ab", CharEdit::swap_adjacent, 1, 0), Error);
    CHECK_THROWS_AS(perturb_char("ab", CharEdit::insert, 3, 0), Error);
    CHECK_THROWS_AS(perturb_char("ab", CharEdit::substitute_neighbor, 2, 0), Error);
}

TEST_CASE("word candidates come from the lexicon, excluding the word itself") {
    Rig rig;
    const auto& providers = rig.engine.providers();
    CHECK(providers.word_candidates("lexicon", "unknownword").empty());
    CHECK(providers.word_candidates("lexicon", "determine") ==
          std::vector<std::string>{"ascertain", "establish", "decide", "judge"});
    CHECK(providers.word_candidates("lexicon", "Determine") ==
          std::vector<std::string>{"ascertain", "establish", "decide", "judge"});
    CHECK_THROWS_AS(providers.word_candidates("nonexistent", "w"), Error);

    for (const auto& [word, candidates] : rig.engine.tables().lexicon.entries) {
        for (const auto& c : candidates) CHECK(c != word);
    }
}

TEST_CASE("importance ranking follows leave-one-out score drops") {
    Rig rig;
    const auto records = toy_records();

    // constant-score mock: every importance 0, order falls back to position
    const auto flat = rig.engine.rank_word_importance(toy_target(), toy_endpoint("constant"), {},
                                                      records);
    REQUIRE_FALSE(flat.empty());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        CHECK(flat[i].second == 0.0);
        if (i > 0) CHECK(flat[i].first > flat[i - 1].first);
    }

    // keyword-sensitive mock: deleting "Determine" forces every answer to the
    // fallback, so its importance equals the full accuracy drop
    const auto ranked = rig.engine.rank_word_importance(toy_target(), toy_endpoint("keyword"), {},
                                                        records);
    REQUIRE_FALSE(ranked.empty());
    CHECK(ranked.front().first == 0); // token index of "Determine"
    CHECK(ranked.front().second == doctest::Approx(1.0));
}

TEST_CASE("a prompt with one unprotected word yields a singleton ranking") {
    Rig rig;
    AttackTarget bare = toy_target();
    bare.tmpl.body = "Classify {content}";
    bare.tmpl.fewshot_item_format = "{text}";
    const auto ranked =
        rig.engine.rank_word_importance(bare, toy_endpoint("constant"), {}, toy_records());
    REQUIRE(ranked.size() == 1);
    CHECK(ranked.front().first == 0);
}

TEST_CASE("attack on a constant-score mock cannot help and may keep the prompt") {
    Rig rig;
    for (AttackLevel level : {AttackLevel::character, AttackLevel::word, AttackLevel::sentence,
                              AttackLevel::semantic}) {
        const auto outcome = rig.engine.attack(toy_target(), config_for(level),
                                               toy_endpoint("constant"), {}, toy_records());
        CHECK(outcome.result.attacked_score == outcome.result.clean_score);
        CHECK(outcome.result.drop_rate == 0.0);
        CHECK(outcome.result.perturbation_log.empty());
        CHECK(outcome.result.perturbed_prompt == outcome.result.original_prompt);
    }
}

TEST_CASE("keyword-sensitive mock falls at every attack level") {
    Rig rig;
    for (AttackLevel level : {AttackLevel::character, AttackLevel::word, AttackLevel::semantic}) {
        const auto outcome = rig.engine.attack(toy_target(), config_for(level),
                                               toy_endpoint("keyword"), {}, toy_records());
        CHECK(outcome.result.clean_score == doctest::Approx(1.0));
        CHECK(outcome.result.drop_rate > 0.0);
        CHECK_FALSE(outcome.result.perturbation_log.empty());
    }
    const auto sentence = rig.engine.attack(toy_target(), config_for(AttackLevel::sentence),
                                            toy_endpoint("suffix"), {}, toy_records());
    CHECK(sentence.result.clean_score == doctest::Approx(1.0));
    CHECK(sentence.result.attacked_score == doctest::Approx(0.0));
}

TEST_CASE("sentence attack finds the enumerated optimum under the tie-break") {
    Rig rig;
    const auto records = toy_records();
    const AttackTarget target = toy_target();
    const auto outcome = rig.engine.attack(target, config_for(AttackLevel::sentence),
                                           toy_endpoint("suffix"), {}, records);

    // hand enumeration: score every distractor through the same mock
    const std::string original = outcome.result.original_prompt;
    double best_score = outcome.result.clean_score;
    std::string best_text = original;
    for (const std::string& d : rig.engine.tables().distractors) {
        AppliedPerturbation state;
        state.appended = " " + d;
        const double s = rig.engine.score_prompt(target, state, toy_endpoint("suffix"), {}, records);
        const std::string text = original + " " + d;
        if (s < best_score || (s == best_score && best_text != original && text < best_text)) {
            best_score = s;
            best_text = text;
        }
    }
    CHECK(outcome.result.attacked_score == best_score);
    CHECK(outcome.result.perturbed_prompt == best_text);
}

TEST_CASE("word-level attacks stay within the perturbation ratio") {
    Rig rig;
    AttackConfig config = config_for(AttackLevel::word);
    config.max_word_perturb_ratio = 0.3;
    const auto outcome =
        rig.engine.attack(toy_target(), config, toy_endpoint("keyword"), {}, toy_records());
    const auto tokens = tokenize_words(outcome.result.original_prompt);
    const std::size_t max_words =
        static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(tokens.size())));
    std::set<std::size_t> touched;
    for (const auto& e : outcome.result.perturbation_log) touched.insert(e.position);
    CHECK(touched.size() <= max_words);
}

TEST_CASE("attack invariants hold over randomized configurations") {
    Rig rig;
    const auto records = toy_records();
    Rng rng(314);
    const char* rulebooks[] = {"keyword", "suffix", "half", "constant"};
    for (int trial = 0; trial < 250; ++trial) {
        AttackConfig config;
        config.level = static_cast<AttackLevel>(rng.below(4));
        config.query_budget = 1 + static_cast<int>(rng.below(30));
        config.max_word_perturb_ratio = 0.05 + 0.95 * rng.unit();
        config.max_char_edits_per_word = 1 + static_cast<int>(rng.below(3));
        config.eval_subset_size = 1 + static_cast<int>(rng.below(4));
        config.seed = rng.next();
        const std::string rulebook = rulebooks[rng.below(4)];

        std::vector<DataRecord> subset(records.begin(),
                                       records.begin() + config.eval_subset_size);
        AttackTarget target = toy_target();
        target.base_record = subset.front();
        const auto outcome =
            rig.engine.attack(target, config, toy_endpoint(rulebook), {}, subset);
        const AttackResult& r = outcome.result;

        // (a) the clean prompt is always a candidate
        CHECK(r.attacked_score <= r.clean_score);
        // (d) budget respected in raw model queries
        CHECK(r.queries_used <=
              static_cast<long>(config.query_budget) * config.eval_subset_size);
        // (c) edit budgets
        const auto tokens = tokenize_words(r.original_prompt);
        const std::size_t max_words = static_cast<std::size_t>(
            std::ceil(config.max_word_perturb_ratio * static_cast<double>(tokens.size())));
        std::map<std::size_t, int> char_edits;
        std::set<std::size_t> touched;
        for (const auto& e : r.perturbation_log) {
            if (e.kind == "word" || e.kind.rfind("char_", 0) == 0) {
                touched.insert(e.position);
                if (e.kind.rfind("char_", 0) == 0) ++char_edits[e.position];
            }
        }
        CHECK(touched.size() <= max_words);
        for (const auto& [pos, count] : char_edits) {
            CHECK(count <= config.max_char_edits_per_word);
        }
        // (b) protected spans survive: their text appears in the perturbed
        // prompt, and char/word edits never overlap them byte-wise
        const RenderedPrompt base = render(target.tmpl, target.meta, target.base_record, {});
        for (const Span& span : base.protected_spans) {
            const std::string text = base.text.substr(span.begin, span.size());
            CHECK(r.perturbed_prompt.find(text) != std::string::npos);
        }
        for (const auto& e : r.perturbation_log) {
            if (e.kind == "word" || e.kind.rfind("char_", 0) == 0) {
                const Span edited{e.position, e.position + e.before.size()};
                CHECK_FALSE(any_span_overlaps(base.protected_spans, edited));
            }
        }
        // drop_rate consistency
        const double expected_drop =
            r.clean_score > 0 ? (r.clean_score - r.attacked_score) / r.clean_score : 0.0;
        CHECK(r.drop_rate == doctest::Approx(expected_drop));
    }
}

TEST_CASE("attacks are deterministic given identical inputs") {
    Rig rig;
    const auto records = toy_records();
    for (AttackLevel level : {AttackLevel::character, AttackLevel::word, AttackLevel::sentence}) {
        const auto a = rig.engine.attack(toy_target(), config_for(level), toy_endpoint("keyword"),
                                         {}, records);
        const auto b = rig.engine.attack(toy_target(), config_for(level), toy_endpoint("keyword"),
                                         {}, records);
        CHECK(attack_result_to_json(a.result) == attack_result_to_json(b.result));
    }
}

TEST_CASE("degenerate inputs raise typed errors") {
    Rig rig;
    AttackConfig zero = config_for(AttackLevel::character);
    zero.query_budget = 0;
    CHECK_THROWS_AS(
        rig.engine.attack(toy_target(), zero, toy_endpoint("keyword"), {}, toy_records()), Error);

    // fully protected prompt: nothing to attack
    AttackTarget bare = toy_target();
    bare.tmpl.body = "{content}";
    bare.tmpl.fewshot_item_format = "{text}";
    try {
        rig.engine.attack(bare, config_for(AttackLevel::word), toy_endpoint("keyword"), {},
                          toy_records());
        FAIL("expected NoAttackableWords");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::no_attackable_words);
    }

    // semantic attack without a style entry
    AttackTarget unstyled = toy_target();
    unstyled.tmpl.id = "unlisted_template";
    try {
        rig.engine.attack(unstyled, config_for(AttackLevel::semantic), toy_endpoint("keyword"), {},
                          toy_records());
        FAIL("expected StyleTableMissing");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::style_table_missing);
    }
}

TEST_CASE("queries_used matches the instrumented mock exactly") {
    Rig rig;
    const auto records = toy_records();
    for (AttackLevel level : {AttackLevel::character, AttackLevel::word, AttackLevel::sentence,
                              AttackLevel::semantic}) {
        const long before = rig.gateway.stats().mock_queries;
        const auto outcome = rig.engine.attack(toy_target(), config_for(level),
                                               toy_endpoint("keyword"), {}, records);
        const long served = rig.gateway.stats().mock_queries - before;
        CHECK(outcome.result.queries_used == served);
    }
}

TEST_CASE("budget exhaustion still returns a well-formed result") {
    Rig rig;
    AttackConfig tight = config_for(AttackLevel::character, 2); // clean + one probe
    const auto outcome =
        rig.engine.attack(toy_target(), tight, toy_endpoint("keyword"), {}, toy_records());
    CHECK(outcome.result.clean_score == doctest::Approx(1.0));
    CHECK(outcome.result.attacked_score <= outcome.result.clean_score);
    CHECK(outcome.result.queries_used <= 2L * 4);
}

TEST_CASE("attack configs and results round-trip through JSON") {
    Rig rig;
    const auto outcome = rig.engine.attack(toy_target(), config_for(AttackLevel::word),
                                           toy_endpoint("keyword"), {}, toy_records());
    const nlohmann::json rj = attack_result_to_json(outcome.result);
    CHECK(attack_result_to_json(attack_result_from_json(rj)) == rj);

    AttackConfig config = config_for(AttackLevel::semantic);
    const nlohmann::json cj = attack_config_to_json(config);
    CHECK(attack_config_to_json(attack_config_from_json(cj)) == cj);
}

TEST_CASE("perturbations replay onto any record of the dataset") {
    Rig rig;
    const auto records = toy_records();
    const auto outcome = rig.engine.attack(toy_target(), config_for(AttackLevel::word),
                                           toy_endpoint("keyword"), {}, records);
    REQUIRE_FALSE(outcome.result.perturbation_log.empty());
    for (const DataRecord& r : records) {
        const std::string replayed =
            rig.engine.apply_perturbation(toy_target(), outcome.applied, r);
        CHECK(replayed.find(r.fields.at("text")) != std::string::npos);
        CHECK(replayed.find("Determine") == std::string::npos); // the trigger word is gone
    }
}
