#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace promptlab {

/// Parses the shared configuration format: JSON with // and /* */ comments
/// allowed. Every CLI config, rulebook file and resource table uses it.
nlohmann::json load_config_file(const std::filesystem::path& path);

nlohmann::json parse_config_text(const std::string& text, const std::string& origin);

/// Root of the bundled data tree (datasets/, prompts/, resources/).
/// Resolution order: PROMPTLAB_DATA env var, then the compiled-in default.
std::filesystem::path default_data_root();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

} // namespace promptlab
