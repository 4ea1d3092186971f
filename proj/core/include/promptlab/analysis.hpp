#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptlab {

/// Aggregation views over run records: standard accuracy, attack drop rates,
/// prompt-engineering methods, and dynamically generated datasets.
enum class LeaderboardView { standard, attack, method, dynamic };

LeaderboardView view_from_string(const std::string& s);
std::string to_string(LeaderboardView view);

struct LeaderboardTable {
    LeaderboardView view = LeaderboardView::standard;
    std::vector<std::string> columns;                   // dataset names, sorted
    std::vector<std::string> rows;                      // endpoint (or endpoint/method) names
    std::vector<std::vector<double>> values;            // rows x columns, NaN when absent
    std::vector<double> row_means;
    std::vector<double> column_means;                   // footer, mean over present rows
};

/// Pure function of the run records; rows sort by mean (descending for score
/// views, ascending for the attack view where lower drop is better).
LeaderboardTable leaderboard(std::span<const nlohmann::json> records, LeaderboardView view);

std::string leaderboard_csv(const LeaderboardTable& table);
std::string leaderboard_text(const LeaderboardTable& table);

/// Words ranked by how often successful attacks (drop_rate > 0) perturbed
/// them; counts char- and word-level edits by their original word.
std::vector<std::pair<std::string, long>> word_frequency(std::span<const nlohmann::json> records);

std::string word_frequency_text(const std::vector<std::pair<std::string, long>>& table);

} // namespace promptlab
