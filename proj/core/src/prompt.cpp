#include "promptlab/prompt.hpp"

#include "promptlab/config.hpp"
#include "promptlab/errors.hpp"

#include <algorithm>
#include <set>

namespace promptlab {

Orientation orientation_from_string(const std::string& s) {
    if (s == "task_oriented") return Orientation::task_oriented;
    if (s == "role_oriented") return Orientation::role_oriented;
    throw Error(ErrorCode::bad_template, "unknown orientation '" + s + "'");
}

std::string to_string(Orientation o) {
    return o == Orientation::task_oriented ? "task_oriented" : "role_oriented";
}

nlohmann::json template_to_json(const PromptTemplate& t) {
    return nlohmann::json{{"id", t.id},
                          {"orientation", to_string(t.orientation)},
                          {"shots", t.shots},
                          {"body", t.body},
                          {"projection", t.projection},
                          {"fewshot_item_format", t.fewshot_item_format}};
}

PromptTemplate template_from_json(const nlohmann::json& j) {
    PromptTemplate t;
    t.id = j.at("id").get<std::string>();
    t.orientation = orientation_from_string(j.at("orientation").get<std::string>());
    t.shots = j.at("shots").get<int>();
    t.body = j.at("body").get<std::string>();
    for (const auto& [label, surface] : j.at("projection").items()) {
        t.projection[label] = surface.get<std::string>();
    }
    t.fewshot_item_format = j.at("fewshot_item_format").get<std::string>();
    return t;
}

namespace {

// Extracts {name} placeholders from a format string.
std::vector<std::string> placeholders_of(std::string_view text) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        const std::size_t close = text.find('}', pos + 1);
        if (close == std::string_view::npos) break;
        names.emplace_back(text.substr(pos + 1, close - pos - 1));
        pos = close + 1;
    }
    return names;
}

struct Substitution {
    std::string text;
    std::vector<Span> value_spans;   // spans of substituted values in `text`
    std::vector<Span> content_spans; // subset marking record field values
};

// Replaces {name} placeholders using `lookup`, recording the byte span of each
// substituted value. `lookup` may itself return nested spans (for {examples}
// and {content}) which are offset into the output.
template <class Lookup>
Substitution substitute(std::string_view format, Lookup&& lookup) {
    Substitution out;
    std::size_t pos = 0;
    while (pos < format.size()) {
        const std::size_t open = format.find('{', pos);
        if (open == std::string_view::npos) {
            out.text.append(format.substr(pos));
            break;
        }
        const std::size_t close = format.find('}', open + 1);
        if (close == std::string_view::npos) {
            out.text.append(format.substr(pos));
            break;
        }
        out.text.append(format.substr(pos, open - pos));
        const std::string name(format.substr(open + 1, close - open - 1));
        const Substitution value = lookup(name);
        const std::size_t base = out.text.size();
        out.text.append(value.text);
        if (value.value_spans.empty() && value.content_spans.empty()) {
            if (!value.text.empty()) out.value_spans.push_back({base, base + value.text.size()});
        } else {
            for (Span s : value.value_spans) out.value_spans.push_back({base + s.begin, base + s.end});
            for (Span s : value.content_spans)
                out.content_spans.push_back({base + s.begin, base + s.end});
        }
        pos = close + 1;
    }
    return out;
}

Substitution field_lookup(const PromptTemplate& t, const DataRecord& record,
                          const std::string& name) {
    auto it = record.fields.find(name);
    if (it == record.fields.end()) {
        throw Error(ErrorCode::missing_field,
                    "template '" + t.id + "' references '{" + name + "}' absent from record '" +
                        record.id + "'");
    }
    return {it->second, {}, {}};
}

// One exemplar block: fewshot_item_format with fields and {answer} filled.
Substitution render_exemplar(const PromptTemplate& t, const DataRecord& record) {
    return substitute(t.fewshot_item_format, [&](const std::string& name) -> Substitution {
        if (name == "answer") return {surface_answer(t, record.label), {}, {}};
        return field_lookup(t, record, name);
    });
}

std::string content_format_of(const PromptTemplate& t) {
    std::string format = t.fewshot_item_format;
    const std::size_t cut = format.find("{answer}");
    if (cut != std::string::npos) {
        format.erase(cut);
        while (!format.empty() && format.back() == ' ') format.pop_back();
    }
    return format;
}

Substitution render_content(const PromptTemplate& t, const DataRecord& record) {
    Substitution sub = substitute(content_format_of(t), [&](const std::string& name) -> Substitution {
        return field_lookup(t, record, name);
    });
    sub.content_spans = sub.value_spans; // field values inside the block are record content
    sub.value_spans.clear();
    return sub;
}

} // namespace

std::string surface_answer(const PromptTemplate& t, const std::string& label) {
    auto it = t.projection.find(label);
    if (it != t.projection.end()) return it->second;
    if (t.projection.empty()) return label; // freeform identity
    throw Error(ErrorCode::bad_template,
                "template '" + t.id + "' projection lacks label '" + label + "'");
}

void validate_template(const PromptTemplate& t, const DatasetMeta& meta) {
    if (t.id.empty()) throw Error(ErrorCode::bad_template, "template id empty");
    if (t.shots < 0) throw Error(ErrorCode::bad_template, t.id + ": negative shots");

    std::set<std::string> allowed(meta.field_names.begin(), meta.field_names.end());
    allowed.insert("content");
    allowed.insert("examples");
    for (const std::string& name : placeholders_of(t.body)) {
        if (allowed.count(name) == 0) {
            throw Error(ErrorCode::bad_template,
                        t.id + ": body placeholder '{" + name + "}' is neither a field nor reserved");
        }
    }
    std::set<std::string> item_allowed(meta.field_names.begin(), meta.field_names.end());
    item_allowed.insert("answer");
    for (const std::string& name : placeholders_of(t.fewshot_item_format)) {
        if (item_allowed.count(name) == 0) {
            throw Error(ErrorCode::bad_template,
                        t.id + ": fewshot placeholder '{" + name + "}' unknown");
        }
    }

    // projection injective, and total over the label space for labeled tasks
    std::set<std::string> surfaces;
    for (const auto& [label, surface] : t.projection) {
        if (!surfaces.insert(surface).second) {
            throw Error(ErrorCode::bad_template,
                        t.id + ": projection not injective at surface '" + surface + "'");
        }
    }
    if (is_labeled_kind(meta.task_kind)) {
        for (const std::string& label : meta.label_space) {
            if (t.projection.count(label) == 0) {
                throw Error(ErrorCode::bad_template,
                            t.id + ": projection misses label '" + label + "'");
            }
        }
    }
}

std::string render_content_block(const PromptTemplate& t, const DataRecord& record) {
    return render_content(t, record).text;
}

RenderedPrompt render(const PromptTemplate& t, const DatasetMeta& meta, const DataRecord& record,
                      std::span<const DataRecord> few_shot) {
    if (few_shot.size() != static_cast<std::size_t>(t.shots)) {
        throw Error(ErrorCode::shot_mismatch,
                    "template '" + t.id + "' wants " + std::to_string(t.shots) + " shots, got " +
                        std::to_string(few_shot.size()));
    }

    // exemplar blocks joined with single newlines
    Substitution examples;
    for (std::size_t i = 0; i < few_shot.size(); ++i) {
        if (i > 0) examples.text.push_back('\n');
        const Substitution block = render_exemplar(t, few_shot[i]);
        const std::size_t base = examples.text.size();
        examples.text.append(block.text);
        for (Span s : block.value_spans) {
            examples.value_spans.push_back({base + s.begin, base + s.end});
        }
    }

    Substitution final = substitute(t.body, [&](const std::string& name) -> Substitution {
        if (name == "examples") return examples;
        if (name == "content") return render_content(t, record);
        return field_lookup(t, record, name);
    });

    RenderedPrompt out;
    out.text = std::move(final.text);
    out.template_id = t.id;
    out.record_id = record.id;

    std::vector<Span> spans = final.value_spans;
    for (Span s : final.content_spans) spans.push_back(s);
    // every occurrence of a projection surface word is off-limits to attacks:
    // the output parser needs that vocabulary intact
    for (const auto& [label, surface] : t.projection) {
        (void)label;
        for (Span s : find_all(out.text, surface)) spans.push_back(s);
    }
    (void)meta;
    out.protected_spans = merge_spans(std::move(spans));
    return out;
}

TemplateLibrary::TemplateLibrary(std::filesystem::path prompts_dir, const DatasetStore* store)
    : prompts_dir_(std::move(prompts_dir)), store_(store) {}

std::vector<PromptTemplate> TemplateLibrary::builtin(const std::string& dataset) const {
    if (store_ == nullptr || !store_->contains(dataset)) {
        throw Error(ErrorCode::unknown_dataset, "'" + dataset + "' is not registered");
    }
    const DatasetMeta meta = store_->load(dataset).meta;

    const auto file = prompts_dir_ / (dataset + ".json");
    std::vector<PromptTemplate> templates;
    if (std::filesystem::exists(file)) {
        for (const nlohmann::json& j : load_config_file(file)) {
            templates.push_back(template_from_json(j));
        }
    } else if (meta.task_kind == TaskKind::reasoning_freeform) {
        const std::string field = meta.field_names.front();
        const std::string item = "Problem: {" + field + "} Answer: {answer}";
        auto make = [&](const std::string& suffix, Orientation o, int shots,
                        const std::string& instr) {
            PromptTemplate t;
            t.id = dataset + "_" + suffix;
            t.orientation = o;
            t.shots = shots;
            t.body = instr + "\n" + std::string(shots > 0 ? "{examples}\n" : "") + "{content}";
            t.fewshot_item_format = item;
            return t;
        };
        templates = {
            make("zs_task", Orientation::task_oriented, 0,
                 "Solve the following problem and reply with only the final answer."),
            make("zs_role", Orientation::role_oriented, 0,
                 "You are a careful solver of reasoning problems. Reply with only the final "
                 "answer."),
            make("fs_task", Orientation::task_oriented, 3,
                 "Solve the following problem and reply with only the final answer. Here are "
                 "three examples."),
            make("fs_role", Orientation::role_oriented, 3,
                 "You are a careful solver of reasoning problems. Reply with only the final "
                 "answer. Here are three examples."),
        };
    } else {
        throw Error(ErrorCode::unknown_dataset, "no builtin prompts for '" + dataset + "'");
    }

    for (const PromptTemplate& t : templates) validate_template(t, meta);
    return templates;
}

std::vector<PromptTemplate> TemplateLibrary::resolve(
    const std::string& dataset, const std::vector<std::string>& selectors) const {
    std::vector<PromptTemplate> all = builtin(dataset);
    if (selectors.empty()) return all;
    std::vector<PromptTemplate> out;
    for (const std::string& sel : selectors) {
        bool found = false;
        for (const PromptTemplate& t : all) {
            if (t.id == sel || t.id == dataset + "_" + sel) {
                out.push_back(t);
                found = true;
                break;
            }
        }
        if (!found) {
            throw Error(ErrorCode::bad_config,
                        "template selector '" + sel + "' matches nothing for dataset '" + dataset +
                            "'");
        }
    }
    return out;
}

} // namespace promptlab
