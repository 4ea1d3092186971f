#pragma once

#include "promptlab/dataset.hpp"
#include "promptlab/text.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptlab {

enum class Orientation { task_oriented, role_oriented };

Orientation orientation_from_string(const std::string& s);
std::string to_string(Orientation o);

/// One of the four prompt types: task/role oriented x zero/few shot.
///
/// `body` may reference record fields directly ({sentence}) or the reserved
/// {content} and {examples} slots. `fewshot_item_format` renders one exemplar
/// ({field...} plus {answer}); the query block reuses it truncated at {answer},
/// so the rendered prompt always ends with the same terminal answer cue.
struct PromptTemplate {
    std::string id;
    Orientation orientation = Orientation::task_oriented;
    int shots = 0;
    std::string body;
    std::map<std::string, std::string> projection; // canonical label -> surface answer word
    std::string fewshot_item_format;
};

struct RenderedPrompt {
    std::string text;
    std::string template_id;
    std::string record_id;
    std::vector<Span> protected_spans; // disjoint, ascending; projection words + data content
};

nlohmann::json template_to_json(const PromptTemplate& t);
PromptTemplate template_from_json(const nlohmann::json& j);

/// Template invariants plus meta compatibility (placeholders resolvable,
/// projection injective and covering the label space for labeled tasks).
void validate_template(const PromptTemplate& t, const DatasetMeta& meta);

/// Surface answer word for a label: projection entry, or the label itself for
/// freeform tasks with an empty projection.
std::string surface_answer(const PromptTemplate& t, const std::string& label);

RenderedPrompt render(const PromptTemplate& t, const DatasetMeta& meta, const DataRecord& record,
                      std::span<const DataRecord> few_shot);

/// The query block for one record: fewshot_item_format truncated at {answer},
/// fields substituted, trailing spaces trimmed. Rendered prompts end with it.
std::string render_content_block(const PromptTemplate& t, const DataRecord& record);

/// Builtin templates for a dataset, loaded from prompts/<dataset>.json next to
/// the fixtures. Freeform datasets without a prompts file get four synthesized
/// defaults so dynamically generated datasets evaluate with zero extra wiring.
class TemplateLibrary {
public:
    TemplateLibrary(std::filesystem::path prompts_dir, const DatasetStore* store);

    std::vector<PromptTemplate> builtin(const std::string& dataset) const;

    /// Resolves template selectors for a dataset: exact id, or a suffix like
    /// "zs_task" matching "<dataset>_zs_task". Empty selector list means all.
    std::vector<PromptTemplate> resolve(const std::string& dataset,
                                        const std::vector<std::string>& selectors) const;

private:
    std::filesystem::path prompts_dir_;
    const DatasetStore* store_;
};

} // namespace promptlab
