#include "promptlab/metrics.hpp"

#include "promptlab/errors.hpp"
#include "promptlab/text.hpp"

#include <algorithm>

namespace promptlab {

namespace {

struct SurfaceEntry {
    std::string label;
    std::string normalized_surface;
};

std::vector<SurfaceEntry> surface_table(const std::vector<std::string>& label_space,
                                        const std::map<std::string, std::string>& projection) {
    std::vector<SurfaceEntry> table;
    table.reserve(label_space.size());
    for (const std::string& label : label_space) {
        auto it = projection.find(label);
        const std::string& surface = it == projection.end() ? label : it->second;
        table.push_back({label, normalize_text(surface)});
    }
    return table;
}

} // namespace

std::string process_output(const std::string& raw, const std::vector<std::string>& label_space,
                           const std::map<std::string, std::string>& projection) {
    if (label_space.empty()) return kUnparsed;
    const std::string norm = normalize_text(raw);
    const std::vector<SurfaceEntry> table = surface_table(label_space, projection);

    // exact match
    for (const SurfaceEntry& e : table) {
        if (norm == e.normalized_surface) return e.label;
    }

    // substring match, longest surface first so nested label spaces resolve to
    // the more specific label; ties break on earlier occurrence, then label
    const SurfaceEntry* best = nullptr;
    std::size_t best_pos = 0;
    for (const SurfaceEntry& e : table) {
        if (e.normalized_surface.empty()) continue;
        const std::size_t pos = norm.find(e.normalized_surface);
        if (pos == std::string::npos) continue;
        const bool wins =
            best == nullptr ||
            e.normalized_surface.size() > best->normalized_surface.size() ||
            (e.normalized_surface.size() == best->normalized_surface.size() &&
             (pos < best_pos || (pos == best_pos && e.label < best->label)));
        if (wins) {
            best = &e;
            best_pos = pos;
        }
    }
    if (best != nullptr) return best->label;

    // first token of the first line, accepted when it prefixes exactly one surface
    const std::size_t eol = raw.find('\n');
    const std::string first_token_norm = [&] {
        const std::string line = raw.substr(0, eol);
        const std::string norm_line = normalize_text(line);
        const std::size_t space = norm_line.find(' ');
        return norm_line.substr(0, space);
    }();
    if (!first_token_norm.empty()) {
        const SurfaceEntry* unique = nullptr;
        for (const SurfaceEntry& e : table) {
            if (e.normalized_surface.rfind(first_token_norm, 0) == 0) {
                if (unique != nullptr) {
                    unique = nullptr;
                    break;
                }
                unique = &e;
            }
        }
        if (unique != nullptr) return unique->label;
    }
    return kUnparsed;
}

MetricKind metric_from_string(const std::string& s) {
    if (s == "accuracy") return MetricKind::accuracy;
    if (s == "macro_f1") return MetricKind::macro_f1;
    if (s == "exact_match") return MetricKind::exact_match;
    throw Error(ErrorCode::bad_config, "unknown metric '" + s + "'");
}

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::accuracy: return "accuracy";
        case MetricKind::macro_f1: return "macro_f1";
        case MetricKind::exact_match: return "exact_match";
    }
    return "accuracy";
}

double score(std::span<const SampleOutcome> per_sample, MetricKind metric,
             const std::vector<std::string>& label_space) {
    if (per_sample.empty()) {
        throw Error(ErrorCode::empty_run, "no samples to score");
    }
    switch (metric) {
        case MetricKind::accuracy: {
            std::size_t correct = 0;
            for (const SampleOutcome& s : per_sample) correct += s.correct ? 1 : 0;
            return static_cast<double>(correct) / static_cast<double>(per_sample.size());
        }
        case MetricKind::exact_match: {
            std::size_t hits = 0;
            for (const SampleOutcome& s : per_sample) {
                hits += normalize_text(s.prediction) == normalize_text(s.gold) ? 1 : 0;
            }
            return static_cast<double>(hits) / static_cast<double>(per_sample.size());
        }
        case MetricKind::macro_f1: {
            double total = 0.0;
            for (const std::string& label : label_space) {
                std::size_t tp = 0, fp = 0, fn = 0;
                for (const SampleOutcome& s : per_sample) {
                    const bool pred = s.prediction == label;
                    const bool gold = s.gold == label;
                    if (pred && gold) ++tp;
                    else if (pred && !gold) ++fp;
                    else if (!pred && gold) ++fn;
                }
                const std::size_t denom = 2 * tp + fp + fn;
                total += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
            }
            return label_space.empty() ? 0.0 : total / static_cast<double>(label_space.size());
        }
    }
    return 0.0;
}

MetricSet MetricSet::builtin() {
    MetricSet set;
    set.add("accuracy", [](std::span<const SampleOutcome> s, const std::vector<std::string>& l) {
        return score(s, MetricKind::accuracy, l);
    });
    set.add("macro_f1", [](std::span<const SampleOutcome> s, const std::vector<std::string>& l) {
        return score(s, MetricKind::macro_f1, l);
    });
    set.add("exact_match", [](std::span<const SampleOutcome> s, const std::vector<std::string>& l) {
        return score(s, MetricKind::exact_match, l);
    });
    return set;
}

void MetricSet::add(const std::string& name, MetricFn fn) {
    metrics_.insert_or_assign(name, std::move(fn));
}

bool MetricSet::contains(const std::string& name) const { return metrics_.count(name) != 0; }

double MetricSet::evaluate(const std::string& name, std::span<const SampleOutcome> per_sample,
                           const std::vector<std::string>& label_space) const {
    auto it = metrics_.find(name);
    if (it == metrics_.end()) {
        throw Error(ErrorCode::bad_config, "unknown metric '" + name + "'");
    }
    return it->second(per_sample, label_space);
}

std::vector<std::string> MetricSet::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : metrics_) out.push_back(name);
    return out;
}

double drop_rate(double clean, double attacked) {
    if (clean <= 0.0) return 0.0;
    return (clean - attacked) / clean;
}

} // namespace promptlab
