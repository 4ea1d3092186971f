#include "promptlab/config.hpp"

#include "promptlab/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef PROMPTLAB_DATA_DIR
#define PROMPTLAB_DATA_DIR ""
#endif

namespace promptlab {

nlohmann::json parse_config_text(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/true,
                                     /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::bad_config, origin + ": " + e.what());
    }
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
    return parse_config_text(read_file(path), path.string());
}

std::filesystem::path default_data_root() {
    if (const char* env = std::getenv("PROMPTLAB_DATA"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::filesystem::path(PROMPTLAB_DATA_DIR);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_error, "cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw Error(ErrorCode::io_error, "short write to " + path.string());
    }
}

} // namespace promptlab
