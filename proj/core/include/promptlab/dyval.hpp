#pragma once

#include "promptlab/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace promptlab {

using Rational = boost::multiprecision::cpp_rational;

/// Renders an exact rational: plain integer when the denominator is 1, else "p/q".
std::string rational_to_string(const Rational& value);

enum class DyvalTask {
    arithmetic,
    linear_equation,
    boolean_logic,
    deductive_logic,
    abductive_logic,
    reachability,
    max_sum_path,
};

DyvalTask dyval_task_from_string(const std::string& s);
std::string to_string(DyvalTask task);
std::vector<DyvalTask> all_dyval_tasks();

struct DyValSpec {
    DyvalTask task = DyvalTask::arithmetic;
    int depth = 3;
    int width = 3;
    int extra_links = 2;      // reachability / max_sum_path only
    std::int64_t value_min = 1;
    std::int64_t value_max = 10;
    std::uint64_t seed = 0;
};

void validate_spec(const DyValSpec& spec);

enum class OpKind { add, sub, mul, div, logical_and, logical_or, logical_not };

struct DagNode {
    enum class Kind { number, boolean, op, item };
    Kind kind = Kind::item;
    Rational number;          // number leaves
    bool truth = false;       // boolean leaves
    OpKind op = OpKind::add;  // op nodes
    std::int64_t weight = 0;  // item nodes (max_sum_path)
};

/// Directed acyclic task graph. Edge (from, to) feeds `from` into `to`; for
/// binary operators the two in-edges arrive in operand order. The query block
/// names the evaluated/queried nodes per task.
struct TaskDag {
    std::vector<DagNode> nodes;
    std::vector<std::pair<int, int>> edges;
    int query_main = -1;            // root / source / queried premise
    int query_aux = -1;             // destination (reachability, max_sum_path); root (abductive)
    std::optional<bool> stated;     // abductive: the stated conclusion value
};

/// Kahn ordering; throws CyclicGraph when none exists.
std::vector<int> topological_order(const TaskDag& dag);

/// Acyclicity plus payload arity (binary ops 2 in-edges, unary 1, leaves 0).
void validate_dag(const TaskDag& dag);

/// a*x + b*y = c ; d*x + e*y = f
struct LinearSystem {
    std::int64_t a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
};

/// Exact rational solution; throws SingularSystem when the determinant is zero.
std::pair<Rational, Rational> solve_linear(const LinearSystem& system);

using TaskStructure = std::variant<TaskDag, LinearSystem>;

/// Ground-truth authority: bottom-up evaluation, forward chaining, premise
/// enumeration, exhaustive search or exhaustive path enumeration per task.
std::string oracle_evaluate(const TaskDag& dag, DyvalTask task);
std::string oracle_evaluate(const TaskStructure& structure, DyvalTask task);

enum class CheckerKind { exact_numeric, exact_boolean, exact_node_set, tolerance_numeric };

std::string to_string(CheckerKind kind);

struct DyValSample {
    DyvalTask task = DyvalTask::arithmetic;
    std::string description;
    std::string ground_truth;
    CheckerKind checker = CheckerKind::exact_numeric;
    DyValSpec spec;     // provenance: the sample regenerates exactly from this
    int redraws = 0;    // rejected draws before the accepted structure
};

std::string render_description(const TaskDag& dag, DyvalTask task);
std::string render_description(const LinearSystem& system);

/// Deterministic in spec.seed; rejected draws (division by zero, singular
/// systems, unconnected query pairs) advance the seed stream and redraw, up to
/// a bounded attempt count.
DyValSample generate(const DyValSpec& spec);

/// The structure generate() accepted for this spec; closure checks re-evaluate it.
TaskStructure regenerate_structure(const DyValSpec& spec);

/// Regenerates from provenance and re-runs the oracle; true iff it reproduces
/// ground_truth.
bool verify_sample(const DyValSample& sample);

/// count samples at seeds seed, seed+1, ...
std::vector<DyValSample> emit_batch(const DyValSpec& spec, int count);

/// Writes samples as a dataset_store fixture (data.jsonl + meta.json) so the
/// pipeline consumes dynamic datasets with no special casing.
void write_dyval_dataset(const std::filesystem::path& dataset_dir, const std::string& name,
                         const std::vector<DyValSample>& samples);

} // namespace promptlab
