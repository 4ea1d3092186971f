#include "promptlab/analysis.hpp"

#include "promptlab/errors.hpp"
#include "promptlab/text.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace promptlab {

LeaderboardView view_from_string(const std::string& s) {
    if (s == "standard") return LeaderboardView::standard;
    if (s == "attack") return LeaderboardView::attack;
    if (s == "method") return LeaderboardView::method;
    if (s == "dynamic") return LeaderboardView::dynamic;
    throw Error(ErrorCode::bad_config, "unknown leaderboard view '" + s + "'");
}

std::string to_string(LeaderboardView view) {
    switch (view) {
        case LeaderboardView::standard: return "standard";
        case LeaderboardView::attack: return "attack";
        case LeaderboardView::method: return "method";
        case LeaderboardView::dynamic: return "dynamic";
    }
    return "standard";
}

namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

bool record_in_view(const nlohmann::json& r, LeaderboardView view) {
    if (r.value("status", "") != "ok") return false;
    const bool attacked = r.contains("attack") && !r["attack"].is_null();
    const std::string method = r.value("method", "none");
    switch (view) {
        case LeaderboardView::standard:
            return !attacked && method == "none";
        case LeaderboardView::attack:
            return attacked && r["attack"].contains("result");
        case LeaderboardView::method:
            return !attacked && method != "none";
        case LeaderboardView::dynamic:
            return !attacked && r.value("dataset_kind", "") == "reasoning_freeform";
    }
    return false;
}

std::string row_key(const nlohmann::json& r, LeaderboardView view) {
    const std::string model = r.at("endpoint").at("model_name").get<std::string>();
    if (view == LeaderboardView::method) {
        return model + "/" + r.value("method", "none");
    }
    return model;
}

double record_value(const nlohmann::json& r, LeaderboardView view) {
    if (view == LeaderboardView::attack) {
        return r["attack"]["result"].at("drop_rate").get<double>();
    }
    return r.at("metrics").value("accuracy", kAbsent);
}

} // namespace

LeaderboardTable leaderboard(std::span<const nlohmann::json> records, LeaderboardView view) {
    LeaderboardTable table;
    table.view = view;

    // cell accumulation: (row, column) -> mean of contributing records
    std::map<std::string, std::map<std::string, std::pair<double, long>>> cells;
    std::set<std::string> columns;
    for (const nlohmann::json& r : records) {
        if (!record_in_view(r, view)) continue;
        const std::string row = row_key(r, view);
        const std::string column = r.at("dataset").get<std::string>();
        const double value = record_value(r, view);
        if (std::isnan(value)) continue;
        auto& [sum, count] = cells[row][column];
        sum += value;
        ++count;
        columns.insert(column);
    }

    table.columns.assign(columns.begin(), columns.end());
    struct Row {
        std::string name;
        std::vector<double> values;
        double mean;
    };
    std::vector<Row> rows;
    for (const auto& [name, by_column] : cells) {
        Row row{name, {}, 0.0};
        double sum = 0.0;
        long present = 0;
        for (const std::string& column : table.columns) {
            auto it = by_column.find(column);
            if (it == by_column.end()) {
                row.values.push_back(kAbsent);
            } else {
                const double mean = it->second.first / static_cast<double>(it->second.second);
                row.values.push_back(mean);
                sum += mean;
                ++present;
            }
        }
        row.mean = present == 0 ? kAbsent : sum / static_cast<double>(present);
        rows.push_back(std::move(row));
    }

    const bool ascending = view == LeaderboardView::attack; // lower drop = more robust
    std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
        if (std::isnan(a.mean)) return false;
        if (std::isnan(b.mean)) return true;
        if (a.mean != b.mean) return ascending ? a.mean < b.mean : a.mean > b.mean;
        return a.name < b.name;
    });

    for (Row& row : rows) {
        table.rows.push_back(row.name);
        table.values.push_back(std::move(row.values));
        table.row_means.push_back(row.mean);
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        double sum = 0.0;
        long present = 0;
        for (const auto& values : table.values) {
            if (!std::isnan(values[c])) {
                sum += values[c];
                ++present;
            }
        }
        table.column_means.push_back(present == 0 ? kAbsent
                                                  : sum / static_cast<double>(present));
    }
    return table;
}

namespace {

std::string format_value(double v) {
    if (std::isnan(v)) return "-";
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << v;
    return out.str();
}

} // namespace

std::string leaderboard_csv(const LeaderboardTable& table) {
    std::ostringstream out;
    out << (table.view == LeaderboardView::method ? "model/method" : "model");
    for (const std::string& column : table.columns) out << ',' << column;
    out << ",mean\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out << table.rows[r];
        for (double v : table.values[r]) out << ',' << format_value(v);
        out << ',' << format_value(table.row_means[r]) << '\n';
    }
    out << "mean";
    double sum = 0.0;
    long present = 0;
    for (double v : table.column_means) {
        out << ',' << format_value(v);
        if (!std::isnan(v)) {
            sum += v;
            ++present;
        }
    }
    out << ',' << format_value(present == 0 ? kAbsent : sum / static_cast<double>(present)) << '\n';
    return out.str();
}

std::string leaderboard_text(const LeaderboardTable& table) {
    const std::string head = table.view == LeaderboardView::method ? "model/method" : "model";
    std::size_t name_width = head.size();
    for (const std::string& row : table.rows) name_width = std::max(name_width, row.size());
    std::vector<std::size_t> widths;
    for (const std::string& column : table.columns) {
        widths.push_back(std::max<std::size_t>(column.size(), 6));
    }

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << head;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << std::right << std::setw(static_cast<int>(widths[c] + 2)) << table.columns[c];
    }
    out << std::right << std::setw(8) << "mean" << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out << std::left << std::setw(static_cast<int>(name_width + 2)) << table.rows[r];
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            out << std::right << std::setw(static_cast<int>(widths[c] + 2))
                << format_value(table.values[r][c]);
        }
        out << std::right << std::setw(8) << format_value(table.row_means[r]) << '\n';
    }
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << "mean";
    double sum = 0.0;
    long present = 0;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << std::right << std::setw(static_cast<int>(widths[c] + 2))
            << format_value(table.column_means[c]);
        if (!std::isnan(table.column_means[c])) {
            sum += table.column_means[c];
            ++present;
        }
    }
    out << std::right << std::setw(8)
        << format_value(present == 0 ? kAbsent : sum / static_cast<double>(present)) << '\n';
    return out.str();
}

std::vector<std::pair<std::string, long>> word_frequency(std::span<const nlohmann::json> records) {
    std::map<std::string, long> counts;
    for (const nlohmann::json& r : records) {
        if (!r.contains("attack") || r["attack"].is_null() || !r["attack"].contains("result")) {
            continue;
        }
        const nlohmann::json& result = r["attack"]["result"];
        if (result.at("drop_rate").get<double>() <= 0.0) continue; // unsuccessful attack
        // stacked char edits chain before/after at one position; only the first
        // edit there carries the original word
        std::set<std::size_t> seen_positions;
        for (const nlohmann::json& edit : result.at("perturbation_log")) {
            const std::string kind = edit.at("kind").get<std::string>();
            if (kind != "word" && kind.rfind("char_", 0) != 0) continue;
            if (!seen_positions.insert(edit.at("position").get<std::size_t>()).second) continue;
            const std::string before = to_lower(edit.at("before").get<std::string>());
            if (!before.empty()) ++counts[before];
        }
    }
    std::vector<std::pair<std::string, long>> table(counts.begin(), counts.end());
    std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return table;
}

std::string word_frequency_text(const std::vector<std::pair<std::string, long>>& table) {
    std::size_t word_width = 4;
    for (const auto& [word, _] : table) word_width = std::max(word_width, word.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(word_width + 2)) << "word" << std::right
        << std::setw(7) << "count" << '\n';
    for (const auto& [word, count] : table) {
        out << std::left << std::setw(static_cast<int>(word_width + 2)) << word << std::right
            << std::setw(7) << count << '\n';
    }
    return out.str();
}

} // namespace promptlab
