#include "promptlab/dyval.hpp"

#include "promptlab/config.hpp"
#include "promptlab/errors.hpp"
#include "promptlab/rng.hpp"

#include <algorithm>
#include <sstream>

namespace promptlab {

namespace {
constexpr int kMaxRedraws = 100;
constexpr long kPathEnumerationCap = 1000000;
} // namespace

std::string rational_to_string(const Rational& value) {
    if (boost::multiprecision::denominator(value) == 1) {
        return boost::multiprecision::numerator(value).str();
    }
    return boost::multiprecision::numerator(value).str() + "/" +
           boost::multiprecision::denominator(value).str();
}

DyvalTask dyval_task_from_string(const std::string& s) {
    if (s == "arithmetic") return DyvalTask::arithmetic;
    if (s == "linear_equation") return DyvalTask::linear_equation;
    if (s == "boolean_logic") return DyvalTask::boolean_logic;
    if (s == "deductive_logic") return DyvalTask::deductive_logic;
    if (s == "abductive_logic") return DyvalTask::abductive_logic;
    if (s == "reachability") return DyvalTask::reachability;
    if (s == "max_sum_path") return DyvalTask::max_sum_path;
    throw Error(ErrorCode::bad_config, "unknown dyval task '" + s + "'");
}

std::string to_string(DyvalTask task) {
    switch (task) {
        case DyvalTask::arithmetic: return "arithmetic";
        case DyvalTask::linear_equation: return "linear_equation";
        case DyvalTask::boolean_logic: return "boolean_logic";
        case DyvalTask::deductive_logic: return "deductive_logic";
        case DyvalTask::abductive_logic: return "abductive_logic";
        case DyvalTask::reachability: return "reachability";
        case DyvalTask::max_sum_path: return "max_sum_path";
    }
    return "arithmetic";
}

std::vector<DyvalTask> all_dyval_tasks() {
    return {DyvalTask::arithmetic,     DyvalTask::linear_equation, DyvalTask::boolean_logic,
            DyvalTask::deductive_logic, DyvalTask::abductive_logic, DyvalTask::reachability,
            DyvalTask::max_sum_path};
}

void validate_spec(const DyValSpec& spec) {
    if (spec.task != DyvalTask::linear_equation && spec.depth < 2) {
        throw Error(ErrorCode::bad_config, "depth must be >= 2 for DAG tasks");
    }
    if (spec.depth > 8 || spec.width > 6) {
        throw Error(ErrorCode::bad_config, "desk-scale caps: depth <= 8, width <= 6");
    }
    if (spec.width < 1) throw Error(ErrorCode::bad_config, "width must be >= 1");
    if (spec.extra_links < 0) throw Error(ErrorCode::bad_config, "extra_links must be >= 0");
    if (spec.value_min > spec.value_max) {
        throw Error(ErrorCode::bad_config, "empty value_range");
    }
}

std::string to_string(CheckerKind kind) {
    switch (kind) {
        case CheckerKind::exact_numeric: return "exact_numeric";
        case CheckerKind::exact_boolean: return "exact_boolean";
        case CheckerKind::exact_node_set: return "exact_node_set";
        case CheckerKind::tolerance_numeric: return "tolerance_numeric";
    }
    return "exact_numeric";
}

// ---------------------------------------------------------------------------
// graph machinery

namespace {

std::vector<std::vector<int>> in_lists(const TaskDag& dag) {
    std::vector<std::vector<int>> in(dag.nodes.size());
    for (const auto& [from, to] : dag.edges) in[static_cast<std::size_t>(to)].push_back(from);
    return in;
}

std::vector<std::vector<int>> out_lists(const TaskDag& dag) {
    std::vector<std::vector<int>> out(dag.nodes.size());
    for (const auto& [from, to] : dag.edges) out[static_cast<std::size_t>(from)].push_back(to);
    return out;
}

bool is_op(const DagNode& node) { return node.kind == DagNode::Kind::op; }

int op_arity(OpKind op) { return op == OpKind::logical_not ? 1 : 2; }

} // namespace

std::vector<int> topological_order(const TaskDag& dag) {
    const std::size_t n = dag.nodes.size();
    std::vector<int> indegree(n, 0);
    for (const auto& [from, to] : dag.edges) {
        if (from < 0 || to < 0 || static_cast<std::size_t>(from) >= n ||
            static_cast<std::size_t>(to) >= n) {
            throw Error(ErrorCode::cyclic_graph, "edge endpoint out of range");
        }
        ++indegree[static_cast<std::size_t>(to)];
    }
    const auto out = out_lists(dag);
    std::vector<int> queue;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) queue.push_back(static_cast<int>(i));
    }
    std::vector<int> order;
    order.reserve(n);
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int node = queue[head];
        order.push_back(node);
        for (int next : out[static_cast<std::size_t>(node)]) {
            if (--indegree[static_cast<std::size_t>(next)] == 0) queue.push_back(next);
        }
    }
    if (order.size() != n) {
        throw Error(ErrorCode::cyclic_graph, "no topological order exists");
    }
    return order;
}

void validate_dag(const TaskDag& dag) {
    topological_order(dag);
    const auto in = in_lists(dag);
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        const DagNode& node = dag.nodes[i];
        const std::size_t got = in[i].size();
        if (is_op(node)) {
            const std::size_t want = static_cast<std::size_t>(op_arity(node.op));
            if (got != want) {
                throw Error(ErrorCode::arity_violation,
                            "node " + std::to_string(i) + " wants " + std::to_string(want) +
                                " inputs, has " + std::to_string(got));
            }
        } else if (node.kind != DagNode::Kind::item && got != 0) {
            throw Error(ErrorCode::arity_violation,
                        "leaf node " + std::to_string(i) + " has inputs");
        }
    }
}

std::pair<Rational, Rational> solve_linear(const LinearSystem& s) {
    const Rational det = Rational(s.a) * s.e - Rational(s.b) * s.d;
    if (det == 0) {
        throw Error(ErrorCode::singular_system, "determinant is zero");
    }
    const Rational x = (Rational(s.c) * s.e - Rational(s.b) * s.f) / det;
    const Rational y = (Rational(s.a) * s.f - Rational(s.c) * s.d) / det;
    return {x, y};
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

std::vector<Rational> evaluate_numeric(const TaskDag& dag) {
    const auto order = topological_order(dag);
    const auto in = in_lists(dag);
    std::vector<Rational> value(dag.nodes.size());
    for (int idx : order) {
        const std::size_t i = static_cast<std::size_t>(idx);
        const DagNode& node = dag.nodes[i];
        if (node.kind == DagNode::Kind::number) {
            value[i] = node.number;
        } else if (is_op(node)) {
            const Rational& lhs = value[static_cast<std::size_t>(in[i][0])];
            const Rational& rhs = value[static_cast<std::size_t>(in[i][1])];
            switch (node.op) {
                case OpKind::add: value[i] = lhs + rhs; break;
                case OpKind::sub: value[i] = lhs - rhs; break;
                case OpKind::mul: value[i] = lhs * rhs; break;
                case OpKind::div:
                    if (rhs == 0) {
                        throw Error(ErrorCode::bad_config, "division by zero in DAG");
                    }
                    value[i] = lhs / rhs;
                    break;
                default:
                    throw Error(ErrorCode::arity_violation, "boolean op in numeric DAG");
            }
        } else {
            throw Error(ErrorCode::arity_violation, "non-numeric node in numeric DAG");
        }
    }
    return value;
}

// Evaluates the boolean DAG with leaves overridden by `leaf_values` (indexed by
// node); used both for direct evaluation and abductive enumeration.
std::vector<bool> evaluate_boolean(const TaskDag& dag, const std::vector<bool>& leaf_values) {
    const auto order = topological_order(dag);
    const auto in = in_lists(dag);
    std::vector<bool> value(dag.nodes.size(), false);
    for (int idx : order) {
        const std::size_t i = static_cast<std::size_t>(idx);
        const DagNode& node = dag.nodes[i];
        if (node.kind == DagNode::Kind::boolean) {
            value[i] = leaf_values[i];
        } else if (is_op(node)) {
            switch (node.op) {
                case OpKind::logical_and:
                    value[i] = value[static_cast<std::size_t>(in[i][0])] &&
                               value[static_cast<std::size_t>(in[i][1])];
                    break;
                case OpKind::logical_or:
                    value[i] = value[static_cast<std::size_t>(in[i][0])] ||
                               value[static_cast<std::size_t>(in[i][1])];
                    break;
                case OpKind::logical_not:
                    value[i] = !value[static_cast<std::size_t>(in[i][0])];
                    break;
                default:
                    throw Error(ErrorCode::arity_violation, "numeric op in boolean DAG");
            }
        } else {
            throw Error(ErrorCode::arity_violation, "non-boolean node in boolean DAG");
        }
    }
    return value;
}

std::vector<bool> stored_leaf_values(const TaskDag& dag) {
    std::vector<bool> values(dag.nodes.size(), false);
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        if (dag.nodes[i].kind == DagNode::Kind::boolean) values[i] = dag.nodes[i].truth;
    }
    return values;
}

std::vector<int> boolean_leaves(const TaskDag& dag) {
    std::vector<int> leaves;
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        if (dag.nodes[i].kind == DagNode::Kind::boolean) leaves.push_back(static_cast<int>(i));
    }
    return leaves;
}

bool reachable(const TaskDag& dag, int src, int dst) {
    const auto out = out_lists(dag);
    std::vector<int> stack{src};
    std::vector<bool> seen(dag.nodes.size(), false);
    seen[static_cast<std::size_t>(src)] = true;
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        if (node == dst) return true;
        for (int next : out[static_cast<std::size_t>(node)]) {
            if (!seen[static_cast<std::size_t>(next)]) {
                seen[static_cast<std::size_t>(next)] = true;
                stack.push_back(next);
            }
        }
    }
    return false;
}

// Exhaustive path enumeration over the DAG; feasible at desk scale.
std::optional<std::int64_t> max_sum_over_paths(const TaskDag& dag, int src, int dst) {
    const auto out = out_lists(dag);
    std::optional<std::int64_t> best;
    long paths = 0;
    // explicit stack of (node, accumulated sum including node)
    std::vector<std::pair<int, std::int64_t>> stack;
    stack.emplace_back(src, dag.nodes[static_cast<std::size_t>(src)].weight);
    while (!stack.empty()) {
        auto [node, sum] = stack.back();
        stack.pop_back();
        if (node == dst) {
            if (++paths > kPathEnumerationCap) {
                throw Error(ErrorCode::generation_exhausted, "path enumeration cap exceeded");
            }
            if (!best || sum > *best) best = sum;
            continue;
        }
        for (int next : out[static_cast<std::size_t>(node)]) {
            stack.emplace_back(next, sum + dag.nodes[static_cast<std::size_t>(next)].weight);
        }
    }
    return best;
}

std::string bool_to_string(bool b) { return b ? "True" : "False"; }

} // namespace

std::string oracle_evaluate(const TaskDag& dag, DyvalTask task) {
    validate_dag(dag);
    switch (task) {
        case DyvalTask::arithmetic: {
            const auto values = evaluate_numeric(dag);
            return rational_to_string(values[static_cast<std::size_t>(dag.query_main)]);
        }
        case DyvalTask::boolean_logic:
        case DyvalTask::deductive_logic: {
            const auto values = evaluate_boolean(dag, stored_leaf_values(dag));
            return bool_to_string(values[static_cast<std::size_t>(dag.query_main)]);
        }
        case DyvalTask::abductive_logic: {
            if (!dag.stated) {
                throw Error(ErrorCode::bad_config, "abductive DAG lacks a stated conclusion");
            }
            const std::vector<int> leaves = boolean_leaves(dag);
            bool seen_true = false, seen_false = false, any = false;
            std::vector<bool> assignment(dag.nodes.size(), false);
            const std::size_t combos = std::size_t{1} << leaves.size();
            for (std::size_t mask = 0; mask < combos; ++mask) {
                for (std::size_t b = 0; b < leaves.size(); ++b) {
                    assignment[static_cast<std::size_t>(leaves[b])] = (mask >> b) & 1;
                }
                const auto values = evaluate_boolean(dag, assignment);
                if (values[static_cast<std::size_t>(dag.query_aux)] != *dag.stated) continue;
                any = true;
                if (assignment[static_cast<std::size_t>(dag.query_main)]) seen_true = true;
                else seen_false = true;
            }
            if (!any) {
                throw Error(ErrorCode::bad_config, "stated conclusion is unsatisfiable");
            }
            if (seen_true && seen_false) return "undetermined";
            return bool_to_string(seen_true);
        }
        case DyvalTask::reachability:
            return bool_to_string(reachable(dag, dag.query_main, dag.query_aux));
        case DyvalTask::max_sum_path: {
            const auto best = max_sum_over_paths(dag, dag.query_main, dag.query_aux);
            if (!best) {
                throw Error(ErrorCode::bad_config, "no path between the queried nodes");
            }
            return std::to_string(*best);
        }
        case DyvalTask::linear_equation:
            throw Error(ErrorCode::bad_config, "linear_equation has no DAG form");
    }
    throw Error(ErrorCode::bad_config, "unhandled task");
}

std::string oracle_evaluate(const TaskStructure& structure, DyvalTask task) {
    if (std::holds_alternative<LinearSystem>(structure)) {
        return rational_to_string(solve_linear(std::get<LinearSystem>(structure)).first);
    }
    return oracle_evaluate(std::get<TaskDag>(structure), task);
}

// ---------------------------------------------------------------------------
// description rendering

namespace {

std::string node_name(int index) { return "n" + std::to_string(index); }

std::string arithmetic_word(OpKind op) {
    switch (op) {
        case OpKind::add: return "plus";
        case OpKind::sub: return "minus";
        case OpKind::mul: return "times";
        case OpKind::div: return "divided by";
        default: return "?";
    }
}

} // namespace

std::string render_description(const TaskDag& dag, DyvalTask task) {
    const auto order = topological_order(dag);
    const auto in = in_lists(dag);
    std::ostringstream out;
    bool first = true;
    auto sentence = [&](const std::string& s) {
        if (!first) out << ' ';
        out << s;
        first = false;
    };

    switch (task) {
        case DyvalTask::arithmetic: {
            for (int idx : order) {
                const std::size_t i = static_cast<std::size_t>(idx);
                const DagNode& node = dag.nodes[i];
                if (node.kind == DagNode::Kind::number) {
                    sentence("The value of " + node_name(idx) + " is " +
                             rational_to_string(node.number) + ".");
                } else {
                    sentence("The value of " + node_name(idx) + " is " + node_name(in[i][0]) +
                             " " + arithmetic_word(node.op) + " " + node_name(in[i][1]) + ".");
                }
            }
            sentence("Compute the value of " + node_name(dag.query_main) + ".");
            break;
        }
        case DyvalTask::boolean_logic: {
            for (int idx : order) {
                const std::size_t i = static_cast<std::size_t>(idx);
                const DagNode& node = dag.nodes[i];
                if (node.kind == DagNode::Kind::boolean) {
                    sentence("The value of " + node_name(idx) + " is " +
                             bool_to_string(node.truth) + ".");
                } else if (node.op == OpKind::logical_not) {
                    sentence("The value of " + node_name(idx) + " is NOT " + node_name(in[i][0]) +
                             ".");
                } else {
                    const std::string word = node.op == OpKind::logical_and ? "AND" : "OR";
                    sentence("The value of " + node_name(idx) + " is " + node_name(in[i][0]) +
                             " " + word + " " + node_name(in[i][1]) + ".");
                }
            }
            sentence("What is the value of " + node_name(dag.query_main) +
                     "? Answer True or False.");
            break;
        }
        case DyvalTask::deductive_logic:
        case DyvalTask::abductive_logic: {
            const bool reveal_leaves = task == DyvalTask::deductive_logic;
            for (int idx : order) {
                const std::size_t i = static_cast<std::size_t>(idx);
                const DagNode& node = dag.nodes[i];
                if (node.kind == DagNode::Kind::boolean) {
                    if (reveal_leaves) {
                        sentence(node_name(idx) + " is " + bool_to_string(node.truth) + ".");
                    }
                } else if (node.op == OpKind::logical_not) {
                    sentence("If not " + node_name(in[i][0]) + ", then " + node_name(idx) +
                             ", and otherwise not " + node_name(idx) + ".");
                } else {
                    const std::string word = node.op == OpKind::logical_and ? "and" : "or";
                    sentence("If " + node_name(in[i][0]) + " " + word + " " + node_name(in[i][1]) +
                             ", then " + node_name(idx) + ", and otherwise not " + node_name(idx) +
                             ".");
                }
            }
            if (task == DyvalTask::deductive_logic) {
                sentence("What is the value of " + node_name(dag.query_main) +
                         "? Answer True or False.");
            } else {
                sentence("Given that " + node_name(dag.query_aux) + " is " +
                         bool_to_string(*dag.stated) + ", what is the value of " +
                         node_name(dag.query_main) + "? Answer True, False, or undetermined.");
            }
            break;
        }
        case DyvalTask::reachability: {
            for (int idx : order) {
                const std::size_t i = static_cast<std::size_t>(idx);
                for (int from : in[i]) {
                    sentence("Node " + node_name(from) + " points to node " + node_name(idx) + ".");
                }
            }
            sentence("Can node " + node_name(dag.query_aux) + " be reached starting from node " +
                     node_name(dag.query_main) + "? Answer True or False.");
            break;
        }
        case DyvalTask::max_sum_path: {
            for (int idx : order) {
                const std::size_t i = static_cast<std::size_t>(idx);
                sentence("The value of node " + node_name(idx) + " is " +
                         std::to_string(dag.nodes[i].weight) + ".");
                for (int from : in[i]) {
                    sentence("Node " + node_name(from) + " points to node " + node_name(idx) + ".");
                }
            }
            sentence("What is the maximum sum of values along any path from node " +
                     node_name(dag.query_main) + " to node " + node_name(dag.query_aux) +
                     "? Count the values of both endpoints.");
            break;
        }
        case DyvalTask::linear_equation:
            throw Error(ErrorCode::bad_config, "linear_equation renders from its system");
    }
    return out.str();
}

std::string render_description(const LinearSystem& s) {
    auto equation = [](std::int64_t a, std::int64_t b, std::int64_t c) {
        std::string out = std::to_string(a) + " x ";
        out += b < 0 ? "- " + std::to_string(-b) : "+ " + std::to_string(b);
        out += " y = " + std::to_string(c) + ".";
        return out;
    };
    return "Solve the following system of equations for x and y: " + equation(s.a, s.b, s.c) +
           " " + equation(s.d, s.e, s.f) + " What is the value of x?";
}

// ---------------------------------------------------------------------------
// generation

namespace {

// One draw attempt; nullopt means rejected (the rng stream stays advanced).
std::optional<TaskStructure> draw_structure(const DyValSpec& spec, Rng& rng) {
    const int width = spec.width;
    const int depth = spec.depth;

    auto pick_two_prev = [&](int layer_start, int layer_size) {
        const int first = layer_start + static_cast<int>(rng.below(static_cast<std::uint64_t>(layer_size)));
        int second = first;
        if (layer_size > 1) {
            const int offset =
                1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(layer_size - 1)));
            second = layer_start + (first - layer_start + offset) % layer_size;
        }
        return std::make_pair(first, second);
    };

    switch (spec.task) {
        case DyvalTask::linear_equation: {
            LinearSystem s;
            s.a = rng.range(spec.value_min, spec.value_max);
            s.b = rng.range(spec.value_min, spec.value_max);
            s.c = rng.range(spec.value_min, spec.value_max);
            s.d = rng.range(spec.value_min, spec.value_max);
            s.e = rng.range(spec.value_min, spec.value_max);
            s.f = rng.range(spec.value_min, spec.value_max);
            if (Rational(s.a) * s.e - Rational(s.b) * s.d == 0) return std::nullopt;
            return TaskStructure{s};
        }
        case DyvalTask::arithmetic: {
            TaskDag dag;
            for (int i = 0; i < width; ++i) {
                DagNode leaf;
                leaf.kind = DagNode::Kind::number;
                leaf.number = Rational(rng.range(spec.value_min, spec.value_max));
                dag.nodes.push_back(leaf);
            }
            static const OpKind ops[] = {OpKind::add, OpKind::sub, OpKind::mul, OpKind::div};
            for (int layer = 1; layer < depth; ++layer) {
                const int prev_start = (layer - 1) * width;
                for (int i = 0; i < width; ++i) {
                    DagNode node;
                    node.kind = DagNode::Kind::op;
                    node.op = ops[rng.below(4)];
                    const auto [lhs, rhs] = pick_two_prev(prev_start, width);
                    const int index = static_cast<int>(dag.nodes.size());
                    dag.nodes.push_back(node);
                    dag.edges.emplace_back(lhs, index);
                    dag.edges.emplace_back(rhs, index);
                }
            }
            dag.query_main = static_cast<int>(dag.nodes.size()) - 1;
            try {
                evaluate_numeric(dag);
            } catch (const Error&) {
                return std::nullopt; // division by zero somewhere: redraw
            }
            return TaskStructure{dag};
        }
        case DyvalTask::boolean_logic:
        case DyvalTask::deductive_logic:
        case DyvalTask::abductive_logic: {
            TaskDag dag;
            for (int i = 0; i < width; ++i) {
                DagNode leaf;
                leaf.kind = DagNode::Kind::boolean;
                leaf.truth = rng.below(2) == 1;
                dag.nodes.push_back(leaf);
            }
            static const OpKind ops[] = {OpKind::logical_and, OpKind::logical_or,
                                         OpKind::logical_not};
            for (int layer = 1; layer < depth; ++layer) {
                const int prev_start = (layer - 1) * width;
                for (int i = 0; i < width; ++i) {
                    DagNode node;
                    node.kind = DagNode::Kind::op;
                    node.op = ops[rng.below(3)];
                    const int index = static_cast<int>(dag.nodes.size());
                    dag.nodes.push_back(node);
                    if (node.op == OpKind::logical_not) {
                        const int input =
                            prev_start + static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
                        dag.edges.emplace_back(input, index);
                    } else {
                        const auto [lhs, rhs] = pick_two_prev(prev_start, width);
                        dag.edges.emplace_back(lhs, index);
                        dag.edges.emplace_back(rhs, index);
                    }
                }
            }
            dag.query_main = static_cast<int>(dag.nodes.size()) - 1;
            if (spec.task == DyvalTask::abductive_logic) {
                // query one premise; state the root's actual value
                const auto leaves = boolean_leaves(dag);
                dag.query_aux = dag.query_main;
                dag.query_main = leaves[rng.below(leaves.size())];
                const auto values = evaluate_boolean(dag, stored_leaf_values(dag));
                dag.stated = values[static_cast<std::size_t>(dag.query_aux)];
            }
            return TaskStructure{dag};
        }
        case DyvalTask::reachability:
        case DyvalTask::max_sum_path: {
            TaskDag dag;
            const int n = depth * width;
            for (int i = 0; i < n; ++i) {
                DagNode node;
                node.kind = DagNode::Kind::item;
                node.weight = rng.range(spec.value_min, spec.value_max);
                dag.nodes.push_back(node);
            }
            std::vector<std::pair<int, int>> edges;
            // backbone: every non-leaf layer node hangs off the previous layer
            for (int layer = 1; layer < depth; ++layer) {
                for (int i = 0; i < width; ++i) {
                    const int to = layer * width + i;
                    const int from =
                        (layer - 1) * width + static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
                    edges.emplace_back(from, to);
                }
            }
            // extra forward links keep the graph acyclic
            for (int k = 0; k < spec.extra_links; ++k) {
                const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
                const int b =
                    a + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1 - a)));
                edges.emplace_back(a, b);
            }
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            dag.edges = std::move(edges);

            if (spec.task == DyvalTask::reachability) {
                const int src = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                int dst = src;
                while (dst == src) dst = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                dag.query_main = src;
                dag.query_aux = dst;
                return TaskStructure{dag};
            }
            // max_sum_path needs a connected pair
            for (int tries = 0; tries < 20; ++tries) {
                const int src = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                int dst = src;
                while (dst == src) dst = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                if (reachable(dag, src, dst)) {
                    dag.query_main = src;
                    dag.query_aux = dst;
                    return TaskStructure{dag};
                }
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

CheckerKind checker_for(DyvalTask task) {
    switch (task) {
        case DyvalTask::arithmetic:
        case DyvalTask::linear_equation:
        case DyvalTask::max_sum_path:
            return CheckerKind::exact_numeric;
        default:
            return CheckerKind::exact_boolean;
    }
}

TaskStructure draw_accepted(const DyValSpec& spec, int* redraws_out) {
    validate_spec(spec);
    Rng rng(mix_seed({spec.seed, fnv1a(to_string(spec.task)), 0x647976616cULL}));
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        std::optional<TaskStructure> structure = draw_structure(spec, rng);
        if (structure) {
            if (redraws_out != nullptr) *redraws_out = attempt;
            return std::move(*structure);
        }
    }
    throw Error(ErrorCode::generation_exhausted,
                to_string(spec.task) + " rejected " + std::to_string(kMaxRedraws + 1) +
                    " consecutive draws");
}

} // namespace

TaskStructure regenerate_structure(const DyValSpec& spec) {
    return draw_accepted(spec, nullptr);
}

DyValSample generate(const DyValSpec& spec) {
    DyValSample sample;
    sample.task = spec.task;
    sample.spec = spec;
    sample.checker = checker_for(spec.task);

    const TaskStructure structure = draw_accepted(spec, &sample.redraws);
    sample.ground_truth = oracle_evaluate(structure, spec.task);
    if (std::holds_alternative<LinearSystem>(structure)) {
        sample.description = render_description(std::get<LinearSystem>(structure));
    } else {
        sample.description = render_description(std::get<TaskDag>(structure), spec.task);
    }
    return sample;
}

bool verify_sample(const DyValSample& sample) {
    const TaskStructure structure = regenerate_structure(sample.spec);
    return oracle_evaluate(structure, sample.task) == sample.ground_truth;
}

std::vector<DyValSample> emit_batch(const DyValSpec& spec, int count) {
    std::vector<DyValSample> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        DyValSpec spec_i = spec;
        spec_i.seed = spec.seed + static_cast<std::uint64_t>(i);
        samples.push_back(generate(spec_i));
    }
    return samples;
}

void write_dyval_dataset(const std::filesystem::path& dataset_dir, const std::string& name,
                         const std::vector<DyValSample>& samples) {
    DatasetMeta meta;
    meta.name = name;
    meta.task_kind = TaskKind::reasoning_freeform;
    meta.field_names = {"description"};

    std::vector<DataRecord> records;
    records.reserve(samples.size());
    for (const DyValSample& s : samples) {
        DataRecord r;
        r.id = to_string(s.task) + "-" + std::to_string(s.spec.seed);
        r.fields["description"] = s.description;
        r.label = s.ground_truth;
        records.push_back(std::move(r));
    }
    validate_dataset(meta, records);
    std::filesystem::create_directories(dataset_dir);
    write_file(dataset_dir / "meta.json", meta_to_json(meta).dump(2) + "\n");
    write_jsonl_records(dataset_dir / "data.jsonl", records);
}

} // namespace promptlab
