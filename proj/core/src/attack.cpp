#include "promptlab/attack.hpp"

#include "promptlab/config.hpp"
#include "promptlab/errors.hpp"
#include "promptlab/metrics.hpp"
#include "promptlab/rng.hpp"
#include "promptlab/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace promptlab {

AttackLevel attack_level_from_string(const std::string& s) {
    if (s == "character") return AttackLevel::character;
    if (s == "word") return AttackLevel::word;
    if (s == "sentence") return AttackLevel::sentence;
    if (s == "semantic") return AttackLevel::semantic;
    throw Error(ErrorCode::bad_config, "unknown attack level '" + s + "'");
}

std::string to_string(AttackLevel level) {
    switch (level) {
        case AttackLevel::character: return "character";
        case AttackLevel::word: return "word";
        case AttackLevel::sentence: return "sentence";
        case AttackLevel::semantic: return "semantic";
    }
    return "character";
}

void validate_attack_config(const AttackConfig& config) {
    if (config.query_budget < 1) {
        throw Error(ErrorCode::budget_too_small, "cannot score even the clean prompt");
    }
    if (config.max_word_perturb_ratio <= 0.0 || config.max_word_perturb_ratio > 1.0) {
        throw Error(ErrorCode::bad_config, "max_word_perturb_ratio outside (0,1]");
    }
    if (config.max_char_edits_per_word < 1) {
        throw Error(ErrorCode::bad_config, "max_char_edits_per_word must be >= 1");
    }
    if (config.eval_subset_size < 1) {
        throw Error(ErrorCode::bad_config, "eval_subset_size must be >= 1");
    }
}

nlohmann::json attack_config_to_json(const AttackConfig& c) {
    return nlohmann::json{{"level", to_string(c.level)},
                          {"query_budget", c.query_budget},
                          {"max_word_perturb_ratio", c.max_word_perturb_ratio},
                          {"max_char_edits_per_word", c.max_char_edits_per_word},
                          {"eval_subset_size", c.eval_subset_size},
                          {"seed", c.seed},
                          {"candidate_provider", c.candidate_provider}};
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
    AttackConfig c;
    c.level = attack_level_from_string(j.at("level").get<std::string>());
    c.query_budget = j.value("query_budget", c.query_budget);
    c.max_word_perturb_ratio = j.value("max_word_perturb_ratio", c.max_word_perturb_ratio);
    c.max_char_edits_per_word = j.value("max_char_edits_per_word", c.max_char_edits_per_word);
    c.eval_subset_size = j.value("eval_subset_size", c.eval_subset_size);
    c.seed = j.value("seed", c.seed);
    c.candidate_provider = j.value("candidate_provider", c.candidate_provider);
    validate_attack_config(c);
    return c;
}

nlohmann::json attack_result_to_json(const AttackResult& r) {
    nlohmann::json log = nlohmann::json::array();
    for (const EditEntry& e : r.perturbation_log) {
        log.push_back({{"kind", e.kind}, {"position", e.position}, {"before", e.before},
                       {"after", e.after}});
    }
    return nlohmann::json{{"original_prompt", r.original_prompt},
                          {"perturbed_prompt", r.perturbed_prompt},
                          {"level", to_string(r.level)},
                          {"queries_used", r.queries_used},
                          {"clean_score", r.clean_score},
                          {"attacked_score", r.attacked_score},
                          {"drop_rate", r.drop_rate},
                          {"perturbation_log", log}};
}

AttackResult attack_result_from_json(const nlohmann::json& j) {
    AttackResult r;
    r.original_prompt = j.at("original_prompt").get<std::string>();
    r.perturbed_prompt = j.at("perturbed_prompt").get<std::string>();
    r.level = attack_level_from_string(j.at("level").get<std::string>());
    r.queries_used = j.at("queries_used").get<long>();
    r.clean_score = j.at("clean_score").get<double>();
    r.attacked_score = j.at("attacked_score").get<double>();
    r.drop_rate = j.at("drop_rate").get<double>();
    for (const nlohmann::json& e : j.at("perturbation_log")) {
        r.perturbation_log.push_back({e.at("kind").get<std::string>(),
                                      e.at("position").get<std::size_t>(),
                                      e.at("before").get<std::string>(),
                                      e.at("after").get<std::string>()});
    }
    return r;
}

// ---------------------------------------------------------------------------
// character edits

namespace {

const std::map<char, std::string>& keyboard_neighbors() {
    static const std::map<char, std::string> table = {
        {'q', "wa"},    {'w', "qes"},   {'e', "wrd"},  {'r', "etf"},   {'t', "ryg"},
        {'y', "tuh"},   {'u', "yij"},   {'i', "uok"},  {'o', "ipl"},   {'p', "ol"},
        {'a', "qsz"},   {'s', "adwx"},  {'d', "sfec"}, {'f', "dgrv"},  {'g', "fhtb"},
        {'h', "gjyn"},  {'j', "hkum"},  {'k', "jlim"}, {'l', "kop"},   {'z', "xas"},
        {'x', "zcs"},   {'c', "xvd"},   {'v', "cbf"},  {'b', "vng"},   {'n', "bmh"},
        {'m', "njk"},   {'0', "9"},     {'1', "2"},    {'2', "13"},    {'3', "24"},
        {'4', "35"},    {'5', "46"},    {'6', "57"},   {'7', "68"},    {'8', "79"},
        {'9', "80"},
    };
    return table;
}

char seeded_letter(Rng& rng) {
    return static_cast<char>('a' + rng.below(26));
}

} // namespace

std::string perturb_char(std::string_view word, CharEdit edit, std::size_t position,
                         std::uint64_t seed) {
    Rng rng(mix_seed({seed, fnv1a(word), static_cast<std::uint64_t>(edit), position}));
    std::string out(word);
    switch (edit) {
        case CharEdit::insert: {
            if (position > out.size()) {
                throw Error(ErrorCode::invalid_position, "insert past end");
            }
            out.insert(out.begin() + static_cast<std::ptrdiff_t>(position), seeded_letter(rng));
            return out;
        }
        case CharEdit::erase: {
            if (out.size() < 2 || position >= out.size()) {
                throw Error(ErrorCode::invalid_position, "delete needs length >= 2 and a valid index");
            }
            out.erase(out.begin() + static_cast<std::ptrdiff_t>(position));
            return out;
        }
        case CharEdit::swap_adjacent: {
            if (out.size() < 2 || position + 1 >= out.size()) {
                throw Error(ErrorCode::invalid_position, "swap needs two adjacent characters");
            }
            if (out[position] == out[position + 1]) {
                throw Error(ErrorCode::invalid_position, "swapping equal characters is a no-op");
            }
            std::swap(out[position], out[position + 1]);
            return out;
        }
        case CharEdit::substitute_neighbor: {
            if (position >= out.size()) {
                throw Error(ErrorCode::invalid_position, "substitute past end");
            }
            const char original = out[position];
            const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(original)));
            const bool upper = std::isupper(static_cast<unsigned char>(original)) != 0;
            std::string options;
            if (auto it = keyboard_neighbors().find(lower); it != keyboard_neighbors().end()) {
                options = it->second;
            }
            char replacement;
            if (!options.empty()) {
                replacement = options[rng.below(options.size())];
            } else {
                do {
                    replacement = seeded_letter(rng);
                } while (replacement == lower);
            }
            if (upper) replacement = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement)));
            out[position] = replacement;
            return out;
        }
    }
    throw Error(ErrorCode::invalid_position, "unknown edit");
}

// ---------------------------------------------------------------------------
// tables and providers

Lexicon Lexicon::from_tsv_text(const std::string& text) {
    Lexicon lex;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) continue;
        const std::string word = to_lower(line.substr(0, tab));
        std::vector<std::string> candidates;
        std::istringstream rest(line.substr(tab + 1));
        std::string cand;
        while (std::getline(rest, cand, ',')) {
            if (!cand.empty() && cand != word) candidates.push_back(cand);
        }
        if (!candidates.empty()) lex.entries[word] = std::move(candidates);
    }
    return lex;
}

Lexicon Lexicon::from_file(const std::filesystem::path& path) {
    return from_tsv_text(read_file(path));
}

std::vector<std::string> CandidateProviderSet::word_candidates(const std::string& provider_id,
                                                               const std::string& word) const {
    const Provider* provider = providers_.find(provider_id);
    if (provider == nullptr) {
        throw Error(ErrorCode::unknown_provider, "'" + provider_id + "'");
    }
    std::vector<std::string> out = (*provider)(to_lower(word));
    out.erase(std::remove(out.begin(), out.end(), to_lower(word)), out.end());
    return out;
}

CandidateProviderSet CandidateProviderSet::with_lexicon(Lexicon lexicon) {
    CandidateProviderSet set;
    auto shared = std::make_shared<Lexicon>(std::move(lexicon));
    set.add("lexicon", [shared](const std::string& word) -> std::vector<std::string> {
        auto it = shared->entries.find(word);
        return it == shared->entries.end() ? std::vector<std::string>{} : it->second;
    });
    return set;
}

AttackTables load_attack_tables(const std::filesystem::path& resources_dir) {
    AttackTables tables;
    tables.lexicon = Lexicon::from_file(resources_dir / "synonyms.tsv");
    const nlohmann::json distractors = load_config_file(resources_dir / "distractors.json");
    for (const auto& [family, list] : distractors.items()) {
        (void)family;
        for (const nlohmann::json& d : list) tables.distractors.push_back(d.get<std::string>());
    }
    const nlohmann::json styles = load_config_file(resources_dir / "styles.json");
    for (const auto& [template_id, bodies] : styles.items()) {
        for (const nlohmann::json& b : bodies) {
            tables.styles[template_id].push_back(b.get<std::string>());
        }
    }
    return tables;
}

// ---------------------------------------------------------------------------
// attack engine

namespace {

struct Skeleton {
    RenderedPrompt rendered;
    std::vector<WordToken> tokens;
    std::vector<std::size_t> attackable; // token indexes outside protected spans
};

Skeleton build_skeleton(const AttackTarget& target, const DataRecord& record) {
    Skeleton s;
    s.rendered = render(target.tmpl, target.meta, record, target.few_shot);
    s.tokens = tokenize_words(s.rendered.text);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        const Span span{s.tokens[i].begin, s.tokens[i].end};
        if (!any_span_overlaps(s.rendered.protected_spans, span)) {
            s.attackable.push_back(i);
        }
    }
    return s;
}

std::string case_adapt(const std::string& candidate, const std::string& original) {
    if (!original.empty() && std::isupper(static_cast<unsigned char>(original[0])) != 0 &&
        !candidate.empty()) {
        std::string out = candidate;
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
        return out;
    }
    return candidate;
}

std::string state_signature(const AppliedPerturbation& state) {
    std::string sig;
    for (const auto& [index, text] : state.word_replacements) {
        sig += std::to_string(index) + "=" + text + ";";
    }
    sig += "|" + state.appended + "|";
    if (state.style_body) sig += *state.style_body;
    return sig;
}

// Budget-metered scorer with memoization; a cache hit issues no model queries.
struct Scorer {
    const AttackEngine& engine;
    const AttackTarget& target;
    const ModelEndpoint& endpoint;
    const GenerationParams& params;
    std::span<const DataRecord> subset;
    long budget;
    long scorings = 0;
    long queries = 0;
    std::map<std::string, double> cache;

    std::optional<double> try_score(const AppliedPerturbation& state) {
        const std::string key = state_signature(state);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        if (scorings >= budget) return std::nullopt;
        ++scorings;
        const double value = engine.score_prompt(target, state, endpoint, params, subset, &queries);
        cache.emplace(key, value);
        return value;
    }
};

} // namespace

AttackEngine::AttackEngine(const ModelGateway& gateway, AttackTables tables)
    : gateway_(&gateway), tables_(std::move(tables)),
      providers_(CandidateProviderSet::with_lexicon(tables_.lexicon)) {}

std::string AttackEngine::apply_perturbation(const AttackTarget& target,
                                             const AppliedPerturbation& applied,
                                             const DataRecord& record) const {
    if (applied.style_body) {
        PromptTemplate styled = target.tmpl;
        styled.body = *applied.style_body;
        return render(styled, target.meta, record, target.few_shot).text + applied.appended;
    }
    const Skeleton skel = build_skeleton(target, record);
    std::string out;
    out.reserve(skel.rendered.text.size() + applied.appended.size());
    std::size_t cursor = 0;
    std::vector<std::pair<std::size_t, std::string>> sorted = applied.word_replacements;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [attackable_index, replacement] : sorted) {
        if (attackable_index >= skel.attackable.size()) {
            throw Error(ErrorCode::bad_config, "perturbation does not align with this prompt");
        }
        const WordToken& token = skel.tokens[skel.attackable[attackable_index]];
        out.append(skel.rendered.text, cursor, token.begin - cursor);
        out.append(replacement);
        cursor = token.end;
    }
    out.append(skel.rendered.text, cursor, std::string::npos);
    out.append(applied.appended);
    return out;
}

double AttackEngine::score_prompt(const AttackTarget& target, const AppliedPerturbation& applied,
                                  const ModelEndpoint& endpoint, const GenerationParams& params,
                                  std::span<const DataRecord> records, long* queries) const {
    if (records.empty()) {
        throw Error(ErrorCode::bad_config, "empty eval subset");
    }
    std::size_t correct = 0;
    const bool labeled = is_labeled_kind(target.meta.task_kind);
    for (const DataRecord& record : records) {
        const std::string prompt = apply_perturbation(target, applied, record);
        const std::string raw = gateway_->generate(endpoint, params, prompt);
        if (queries != nullptr) ++*queries;
        if (labeled) {
            correct += process_output(raw, target.meta.label_space, target.tmpl.projection) ==
                               record.label
                           ? 1
                           : 0;
        } else {
            correct += normalize_text(raw) == normalize_text(record.label) ? 1 : 0;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::vector<std::pair<std::size_t, double>> AttackEngine::rank_word_importance(
    const AttackTarget& target, const ModelEndpoint& endpoint, const GenerationParams& params,
    std::span<const DataRecord> eval_subset) const {
    const Skeleton skel = build_skeleton(target, target.base_record);
    if (skel.attackable.empty()) {
        throw Error(ErrorCode::no_attackable_words, "every word is protected");
    }
    const double clean = score_prompt(target, {}, endpoint, params, eval_subset);
    std::vector<std::pair<std::size_t, double>> ranked;
    ranked.reserve(skel.attackable.size());
    for (std::size_t k = 0; k < skel.attackable.size(); ++k) {
        AppliedPerturbation state;
        state.word_replacements.emplace_back(k, "");
        const double dropped = score_prompt(target, state, endpoint, params, eval_subset);
        ranked.emplace_back(skel.attackable[k], clean - dropped);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

namespace {

const char* edit_kind_name(CharEdit edit) {
    switch (edit) {
        case CharEdit::insert: return "char_insert";
        case CharEdit::erase: return "char_delete";
        case CharEdit::swap_adjacent: return "char_swap";
        case CharEdit::substitute_neighbor: return "char_substitute";
    }
    return "char_edit";
}

void replace_or_add(AppliedPerturbation& state, std::size_t attackable_index,
                    const std::string& replacement) {
    for (auto& [index, text] : state.word_replacements) {
        if (index == attackable_index) {
            text = replacement;
            return;
        }
    }
    state.word_replacements.emplace_back(attackable_index, replacement);
}

} // namespace

AttackOutcome AttackEngine::attack(const AttackTarget& target, const AttackConfig& config,
                                   const ModelEndpoint& endpoint, const GenerationParams& params,
                                   std::span<const DataRecord> eval_subset) const {
    validate_attack_config(config);
    if (eval_subset.size() != static_cast<std::size_t>(config.eval_subset_size)) {
        throw Error(ErrorCode::bad_config, "eval subset does not match eval_subset_size");
    }
    const Skeleton skel = build_skeleton(target, target.base_record);

    Scorer scorer{*this, target, endpoint, params, eval_subset, config.query_budget, 0, 0, {}};
    const std::optional<double> clean = scorer.try_score({});
    if (!clean) {
        throw Error(ErrorCode::budget_too_small, "cannot score even the clean prompt");
    }

    AppliedPerturbation best_state;
    double best_score = *clean;
    std::vector<EditEntry> log;

    // equal scores resolve to fewer edits (the incumbent), then to the
    // lexicographically smaller perturbed text, so the search is one-valued
    auto tie_better = [&](const AppliedPerturbation& challenger, double challenger_score,
                          const AppliedPerturbation& incumbent, double incumbent_score) {
        if (challenger_score != incumbent_score) return challenger_score < incumbent_score;
        const std::string a = apply_perturbation(target, challenger, target.base_record);
        const std::string b = apply_perturbation(target, incumbent, target.base_record);
        return a < b;
    };

    switch (config.level) {
        case AttackLevel::character:
        case AttackLevel::word: {
            if (skel.attackable.empty()) {
                throw Error(ErrorCode::no_attackable_words, "every word is protected");
            }
            // leave-one-word-out importance ranking, metered by the same budget
            std::vector<std::pair<std::size_t, double>> order; // (attackable index k, importance)
            for (std::size_t k = 0; k < skel.attackable.size(); ++k) {
                AppliedPerturbation probe;
                probe.word_replacements.emplace_back(k, "");
                const std::optional<double> s = scorer.try_score(probe);
                order.emplace_back(k, s ? *clean - *s : 0.0);
            }
            std::stable_sort(order.begin(), order.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });

            const std::size_t max_words = static_cast<std::size_t>(
                std::ceil(config.max_word_perturb_ratio * static_cast<double>(skel.tokens.size())));
            std::size_t words_perturbed = 0;

            for (const auto& [k, importance] : order) {
                (void)importance;
                if (words_perturbed >= max_words || scorer.scorings >= scorer.budget) break;
                const WordToken& token = skel.tokens[skel.attackable[k]];

                if (config.level == AttackLevel::word) {
                    std::vector<std::string> candidates =
                        providers_.word_candidates(config.candidate_provider, token.text);
                    AppliedPerturbation word_best;
                    double word_best_score = 0.0;
                    bool improved = false;
                    for (const std::string& cand : candidates) {
                        AppliedPerturbation challenger = best_state;
                        challenger.word_replacements.emplace_back(k, case_adapt(cand, token.text));
                        const std::optional<double> s = scorer.try_score(challenger);
                        if (!s) break;
                        if (*s < best_score &&
                            (!improved || tie_better(challenger, *s, word_best, word_best_score))) {
                            word_best = challenger;
                            word_best_score = *s;
                            improved = true;
                        }
                    }
                    if (improved) {
                        const std::string& after = word_best.word_replacements.back().second;
                        log.push_back({"word", token.begin, token.text, after});
                        best_state = word_best;
                        best_score = word_best_score;
                        ++words_perturbed;
                    }
                } else {
                    // stack up to max_char_edits_per_word single edits on this word
                    std::string current_word = token.text;
                    int edits_done = 0;
                    bool word_touched = false;
                    bool budget_out = false;
                    while (!budget_out && edits_done < config.max_char_edits_per_word &&
                           scorer.scorings < scorer.budget) {
                        AppliedPerturbation round_best;
                        double round_best_score = 0.0;
                        std::string round_best_word;
                        std::string round_best_kind;
                        bool improved = false;
                        for (CharEdit edit :
                             {CharEdit::insert, CharEdit::erase, CharEdit::swap_adjacent,
                              CharEdit::substitute_neighbor}) {
                            const std::size_t positions =
                                edit == CharEdit::insert ? current_word.size() + 1
                                                         : current_word.size();
                            for (std::size_t pos = 0; pos < positions && !budget_out; ++pos) {
                                std::string candidate_word;
                                try {
                                    candidate_word =
                                        perturb_char(current_word, edit, pos, config.seed);
                                } catch (const Error&) {
                                    continue; // invalid position for this word/edit
                                }
                                AppliedPerturbation challenger = best_state;
                                replace_or_add(challenger, k, candidate_word);
                                const std::optional<double> s = scorer.try_score(challenger);
                                if (!s) {
                                    budget_out = true;
                                    break;
                                }
                                if (*s < best_score &&
                                    (!improved ||
                                     tie_better(challenger, *s, round_best, round_best_score))) {
                                    round_best = challenger;
                                    round_best_score = *s;
                                    round_best_word = candidate_word;
                                    round_best_kind = edit_kind_name(edit);
                                    improved = true;
                                }
                            }
                            if (budget_out) break;
                        }
                        if (!improved) break;
                        log.push_back({round_best_kind, token.begin, current_word, round_best_word});
                        best_state = round_best;
                        best_score = round_best_score;
                        current_word = round_best_word;
                        ++edits_done;
                        word_touched = true;
                    }
                    if (word_touched) ++words_perturbed;
                }
            }
            break;
        }
        case AttackLevel::sentence: {
            AppliedPerturbation chosen;
            double chosen_score = 0.0;
            bool improved = false;
            for (const std::string& distractor : tables_.distractors) {
                AppliedPerturbation challenger;
                challenger.appended = " " + distractor;
                const std::optional<double> s = scorer.try_score(challenger);
                if (!s) break;
                if (*s < best_score &&
                    (!improved || tie_better(challenger, *s, chosen, chosen_score))) {
                    chosen = challenger;
                    chosen_score = *s;
                    improved = true;
                }
            }
            if (improved) {
                best_state = chosen;
                best_score = chosen_score;
                log.push_back({"sentence", skel.rendered.text.size(), "", chosen.appended});
            }
            break;
        }
        case AttackLevel::semantic: {
            auto it = tables_.styles.find(target.tmpl.id);
            if (it == tables_.styles.end() || it->second.empty()) {
                throw Error(ErrorCode::style_table_missing,
                            "no style variants for template '" + target.tmpl.id + "'");
            }
            AppliedPerturbation chosen;
            double chosen_score = best_score;
            bool improved = false;
            for (const std::string& body : it->second) {
                AppliedPerturbation challenger;
                challenger.style_body = body;
                // protected material must survive the paraphrase verbatim
                std::string candidate_text;
                try {
                    candidate_text = apply_perturbation(target, challenger, target.base_record);
                } catch (const Error&) {
                    continue;
                }
                bool preserves = true;
                for (const Span& span : skel.rendered.protected_spans) {
                    const std::string protected_text =
                        skel.rendered.text.substr(span.begin, span.size());
                    if (candidate_text.find(protected_text) == std::string::npos) {
                        preserves = false;
                        break;
                    }
                }
                if (!preserves) continue;
                const std::optional<double> s = scorer.try_score(challenger);
                if (!s) break;
                if (*s < best_score && (!improved || tie_better(challenger, *s, chosen, chosen_score))) {
                    chosen = challenger;
                    chosen_score = *s;
                    improved = true;
                }
            }
            if (improved) {
                best_state = chosen;
                best_score = chosen_score;
                log.push_back({"semantic", 0, skel.rendered.text,
                               apply_perturbation(target, chosen, target.base_record)});
            }
            break;
        }
    }

    AttackOutcome outcome;
    outcome.applied = best_state;
    outcome.result.original_prompt = skel.rendered.text;
    outcome.result.perturbed_prompt = apply_perturbation(target, best_state, target.base_record);
    outcome.result.level = config.level;
    outcome.result.queries_used = scorer.queries;
    outcome.result.clean_score = *clean;
    outcome.result.attacked_score = best_score;
    outcome.result.drop_rate = drop_rate(*clean, best_score);
    outcome.result.perturbation_log = std::move(log);
    return outcome;
}

} // namespace promptlab
