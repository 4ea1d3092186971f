#pragma once

#include "promptlab/dataset.hpp"
#include "promptlab/gateway.hpp"
#include "promptlab/prompt.hpp"
#include "promptlab/registry.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptlab {

enum class AttackLevel { character, word, sentence, semantic };

AttackLevel attack_level_from_string(const std::string& s);
std::string to_string(AttackLevel level);

struct AttackConfig {
    AttackLevel level = AttackLevel::character;
    int query_budget = 40;               // max candidate-prompt scorings
    double max_word_perturb_ratio = 0.3; // in (0,1]
    int max_char_edits_per_word = 1;
    int eval_subset_size = 4;
    std::uint64_t seed = 0;
    std::string candidate_provider = "lexicon";
};

void validate_attack_config(const AttackConfig& config);
nlohmann::json attack_config_to_json(const AttackConfig& config);
AttackConfig attack_config_from_json(const nlohmann::json& j);

enum class CharEdit { insert, erase, swap_adjacent, substitute_neighbor };

/// One character edit; result differs from the input by exactly one atomic
/// operation. Deterministic in (word, edit, position, seed).
std::string perturb_char(std::string_view word, CharEdit edit, std::size_t position,
                         std::uint64_t seed);

struct EditEntry {
    std::string kind; // char_insert / char_delete / char_swap / char_substitute / word / sentence / semantic
    std::size_t position = 0; // byte offset in the original prompt
    std::string before;
    std::string after;
};

struct AttackResult {
    std::string original_prompt;
    std::string perturbed_prompt;
    AttackLevel level = AttackLevel::character;
    long queries_used = 0;
    double clean_score = 0.0;
    double attacked_score = 0.0;
    double drop_rate = 0.0;
    std::vector<EditEntry> perturbation_log;
};

nlohmann::json attack_result_to_json(const AttackResult& result);
AttackResult attack_result_from_json(const nlohmann::json& j);

/// Static synonym table: one line per entry, "word<TAB>cand1,cand2,...".
struct Lexicon {
    std::map<std::string, std::vector<std::string>> entries;

    static Lexicon from_tsv_text(const std::string& text);
    static Lexicon from_file(const std::filesystem::path& path);
};

/// Word-candidate providers behind one registry; the bundled "lexicon"
/// provider looks words up in the synonym table. Candidates never include the
/// queried word itself.
class CandidateProviderSet {
public:
    using Provider = std::function<std::vector<std::string>(const std::string& word)>;

    void add(const std::string& name, Provider provider) { providers_.add(name, std::move(provider)); }
    bool contains(const std::string& name) const { return providers_.contains(name); }

    std::vector<std::string> word_candidates(const std::string& provider_id,
                                             const std::string& word) const;

    static CandidateProviderSet with_lexicon(Lexicon lexicon);

private:
    Registry<Provider> providers_;
};

struct AttackTables {
    Lexicon lexicon;
    std::vector<std::string> distractors;                     // sentence level
    std::map<std::string, std::vector<std::string>> styles;  // template id -> paraphrase bodies
};

/// Loads synonyms.tsv, distractors.json and styles.json from a resources dir.
AttackTables load_attack_tables(const std::filesystem::path& resources_dir);

/// What an attack runs against: the template instance rendered for one record,
/// scored by re-rendering the same template for each eval-subset record.
struct AttackTarget {
    PromptTemplate tmpl;
    DatasetMeta meta;
    std::vector<DataRecord> few_shot;
    DataRecord base_record;
};

/// The winning perturbation, replayable against any record of the dataset.
/// Word replacements are keyed by position in the attackable-token sequence,
/// which is identical across records because sample content is protected.
struct AppliedPerturbation {
    std::vector<std::pair<std::size_t, std::string>> word_replacements;
    std::string appended;                  // sentence-level distractor suffix
    std::optional<std::string> style_body; // semantic-level body override
};

struct AttackOutcome {
    AttackResult result;
    AppliedPerturbation applied;
};

class AttackEngine {
public:
    AttackEngine(const ModelGateway& gateway, AttackTables tables);

    CandidateProviderSet& providers() { return providers_; }
    const CandidateProviderSet& providers() const { return providers_; }
    const AttackTables& tables() const { return tables_; }

    /// importance(w) = clean_score - score(prompt without w), evaluated on the
    /// subset; descending, protected words excluded, ties in position order.
    std::vector<std::pair<std::size_t, double>> rank_word_importance(
        const AttackTarget& target, const ModelEndpoint& endpoint, const GenerationParams& params,
        std::span<const DataRecord> eval_subset) const;

    AttackOutcome attack(const AttackTarget& target, const AttackConfig& config,
                         const ModelEndpoint& endpoint, const GenerationParams& params,
                         std::span<const DataRecord> eval_subset) const;

    /// Re-renders `record` under a perturbation found by attack().
    std::string apply_perturbation(const AttackTarget& target, const AppliedPerturbation& applied,
                                   const DataRecord& record) const;

    /// Accuracy of the (possibly perturbed) prompt over records; used both by
    /// the greedy search and by callers evaluating the winner on more data.
    double score_prompt(const AttackTarget& target, const AppliedPerturbation& applied,
                        const ModelEndpoint& endpoint, const GenerationParams& params,
                        std::span<const DataRecord> records, long* queries = nullptr) const;

private:
    const ModelGateway* gateway_;
    AttackTables tables_;
    CandidateProviderSet providers_;
};

} // namespace promptlab
