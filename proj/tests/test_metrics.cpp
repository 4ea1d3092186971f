#include <doctest.h>

#include <promptlab/errors.hpp>
#include <promptlab/metrics.hpp>
#include <promptlab/rng.hpp>
#include <promptlab/text.hpp>

#include <cmath>
#include <map>

using namespace promptlab;

namespace {

const std::vector<std::string> kPair{"equivalent", "not_equivalent"};
const std::map<std::string, std::string> kPairProj{{"equivalent", "equivalent"},
                                                   {"not_equivalent", "not_equivalent"}};

SampleOutcome sample(const std::string& pred, const std::string& gold) {
    return SampleOutcome{"id", "hash", pred, pred, gold, pred == gold};
}

// independent confusion-matrix oracle used to cross-check score()
double brute_force(const std::vector<SampleOutcome>& samples, MetricKind metric,
                   const std::vector<std::string>& labels) {
    if (metric == MetricKind::accuracy) {
        double c = 0;
        for (const auto& s : samples) c += s.correct;
        return c / static_cast<double>(samples.size());
    }
    if (metric == MetricKind::exact_match) {
        double c = 0;
        for (const auto& s : samples) c += normalize_text(s.prediction) == normalize_text(s.gold);
        return c / static_cast<double>(samples.size());
    }
    double total = 0;
    for (const auto& label : labels) {
        long tp = 0, fp = 0, fn = 0;
        for (const auto& s : samples) {
            if (s.prediction == label && s.gold == label) ++tp;
            if (s.prediction == label && s.gold != label) ++fp;
            if (s.prediction != label && s.gold == label) ++fn;
        }
        total += (2 * tp + fp + fn) == 0
                     ? 0.0
                     : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return total / static_cast<double>(labels.size());
}

} // namespace

TEST_CASE("process_output resolves the published parsing examples") {
    CHECK(process_output("The answer is equivalent.", kPair, kPairProj) == "equivalent");
    CHECK(process_output("not_equivalent", kPair, kPairProj) == "not_equivalent");
    // nested label spaces resolve longest-first
    CHECK(process_output("it is not_equivalent, not equivalent", kPair, kPairProj) ==
          "not_equivalent");
}

TEST_CASE("process_output is total and idempotent on canonical labels") {
    const std::vector<std::string> labels{"acceptable", "unacceptable"};
    const std::map<std::string, std::string> proj{{"acceptable", "acceptable"},
                                                  {"unacceptable", "unacceptable"}};
    for (const auto& label : labels) {
        CHECK(process_output(label, labels, proj) == label);
    }
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        std::string garbage;
        const std::size_t len = rng.below(30);
        for (std::size_t k = 0; k < len; ++k) {
            garbage.push_back(static_cast<char>(rng.range(32, 126)));
        }
        CHECK_NOTHROW(process_output(garbage, labels, proj));
    }
    CHECK(process_output("complete nonsense", labels, proj) == kUnparsed);
    CHECK(process_output("", labels, proj) == kUnparsed);
}

TEST_CASE("first-token prefix match recovers truncated answers uniquely") {
    const std::vector<std::string> labels{"entailment", "not_entailment"};
    const std::map<std::string, std::string> proj{{"entailment", "entailment"},
                                                  {"not_entailment", "not_entailment"}};
    // 'not_entailment' normalizes to "not entailment", so the truncation
    // uniquely prefixes one surface
    CHECK(process_output("entail", labels, proj) == "entailment");

    const std::vector<std::string> pn{"positive", "negative"};
    const std::map<std::string, std::string> pn_proj{{"positive", "positive"},
                                                     {"negative", "negative"}};
    CHECK(process_output("posit", pn, pn_proj) == "positive");

    // a truncation prefixing two surfaces stays unparsed
    const std::vector<std::string> clash{"entailment", "entailments"};
    const std::map<std::string, std::string> clash_proj{{"entailment", "entailment"},
                                                        {"entailments", "entailments"}};
    CHECK(process_output("entail", clash, clash_proj) == kUnparsed);
}

TEST_CASE("score matches the worked examples") {
    std::vector<SampleOutcome> three_of_four{sample("a", "a"), sample("a", "a"), sample("b", "b"),
                                             sample("a", "b")};
    CHECK(score(three_of_four, MetricKind::accuracy, {"a", "b"}) == doctest::Approx(0.75));

    std::vector<SampleOutcome> perfect{sample("a", "a"), sample("b", "b")};
    CHECK(score(perfect, MetricKind::accuracy, {"a", "b"}) == 1.0);
    CHECK(score(perfect, MetricKind::macro_f1, {"a", "b"}) == 1.0);
    CHECK(score(perfect, MetricKind::exact_match, {"a", "b"}) == 1.0);

    // TP=1, FP=1, FN=1, TN=1 from each label's view -> per-label F1 0.5
    std::vector<SampleOutcome> confusion{sample("a", "a"), sample("a", "b"), sample("b", "a"),
                                         sample("b", "b")};
    CHECK(score(confusion, MetricKind::macro_f1, {"a", "b"}) == doctest::Approx(0.5));
}

TEST_CASE("score agrees with a brute-force confusion computation on random runs") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n_labels = 2 + rng.below(3);
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < n_labels; ++i) labels.push_back("label" + std::to_string(i));
        std::vector<SampleOutcome> samples;
        const std::size_t n = 1 + rng.below(40);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string gold = labels[rng.below(n_labels)];
            const std::string pred =
                rng.chance(0.1) ? std::string(kUnparsed) : labels[rng.below(n_labels)];
            samples.push_back(sample(pred, gold));
        }
        for (MetricKind metric :
             {MetricKind::accuracy, MetricKind::macro_f1, MetricKind::exact_match}) {
            CHECK(score(samples, metric, labels) == brute_force(samples, metric, labels));
        }
    }
}

TEST_CASE("unparsed counts as incorrect, never dropped") {
    std::vector<SampleOutcome> run{sample("a", "a"), sample(kUnparsed, "a")};
    CHECK(score(run, MetricKind::accuracy, {"a", "b"}) == doctest::Approx(0.5));
}

TEST_CASE("empty runs are rejected") {
    CHECK_THROWS_AS(score({}, MetricKind::accuracy, {"a"}), Error);
}

TEST_CASE("drop_rate follows its formula with the zero convention") {
    CHECK(drop_rate(0.8, 0.6) == doctest::Approx(0.25));
    CHECK(drop_rate(0.8, 0.8) == 0.0);
    CHECK(drop_rate(0.0, 0.0) == 0.0);
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        const double clean = rng.unit();
        const double attacked = clean * rng.unit();
        const double expected = clean > 0 ? (clean - attacked) / clean : 0.0;
        CHECK(drop_rate(clean, attacked) == doctest::Approx(expected));
        CHECK(drop_rate(clean, attacked) >= 0.0);
    }
}

TEST_CASE("the metric registry exposes builtins and accepts new entries") {
    MetricSet metrics = MetricSet::builtin();
    CHECK(metrics.contains("accuracy"));
    CHECK(metrics.contains("macro_f1"));
    CHECK(metrics.contains("exact_match"));
    std::vector<SampleOutcome> run{sample("a", "a"), sample("b", "a")};
    CHECK(metrics.evaluate("accuracy", run, {"a", "b"}) == doctest::Approx(0.5));

    metrics.add("always_one", [](std::span<const SampleOutcome>,
                                 const std::vector<std::string>&) { return 1.0; });
    CHECK(metrics.evaluate("always_one", run, {}) == 1.0);
    CHECK_THROWS_AS(metrics.evaluate("missing", run, {}), Error);
}

TEST_CASE("accuracy is monotone under appending a correct sample") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SampleOutcome> run;
        const std::size_t n = 1 + rng.below(20);
        for (std::size_t i = 0; i < n; ++i) {
            run.push_back(rng.chance(0.5) ? sample("a", "a") : sample("b", "a"));
        }
        const double before = score(run, MetricKind::accuracy, {"a", "b"});
        run.push_back(sample("a", "a"));
        const double after = score(run, MetricKind::accuracy, {"a", "b"});
        CHECK(after >= before);
        CHECK(after <= 1.0);
        CHECK(before >= 0.0);
    }
}
