#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace promptlab {

inline constexpr const char* kUnparsed = "unparsed";

/// Maps raw model output to a canonical label, or "unparsed" (total function).
/// Pipeline: normalize, exact match on projection surfaces, then
/// longest-surface-first substring match, then a unique-prefix match on the
/// first token of the first line.
std::string process_output(const std::string& raw, const std::vector<std::string>& label_space,
                           const std::map<std::string, std::string>& projection);

enum class MetricKind { accuracy, macro_f1, exact_match };

MetricKind metric_from_string(const std::string& s);
std::string to_string(MetricKind kind);

struct SampleOutcome {
    std::string record_id;
    std::string prompt_hash;
    std::string raw_output;
    std::string prediction;
    std::string gold;
    bool correct = false;
};

/// accuracy = correct/total; macro_f1 = unweighted mean per-label F1 over the
/// label space; exact_match = normalized string equality rate.
double score(std::span<const SampleOutcome> per_sample, MetricKind metric,
             const std::vector<std::string>& label_space);

/// Extension point: named metric functions. The builtin set carries the three
/// metrics above; callers may add their own without touching the pipeline.
using MetricFn = std::function<double(std::span<const SampleOutcome>,
                                      const std::vector<std::string>& label_space)>;

class MetricSet {
public:
    static MetricSet builtin();
    void add(const std::string& name, MetricFn fn);
    bool contains(const std::string& name) const;
    double evaluate(const std::string& name, std::span<const SampleOutcome> per_sample,
                    const std::vector<std::string>& label_space) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, MetricFn> metrics_;
};

/// Relative performance drop (clean - attacked)/clean, defined 0 at clean == 0.
double drop_rate(double clean, double attacked);

} // namespace promptlab
