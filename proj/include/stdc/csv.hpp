#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace stdc::csv {

// Plain comma-separated rows; fields are trimmed, no quoting.
std::vector<std::string> split(std::string_view line);

struct Row {
    std::size_t line = 0;  // 1-based line number in the file
    std::vector<std::string> fields;
};

struct File {
    std::vector<std::string> header;
    std::vector<Row> rows;
};

// Throws if the file cannot be opened or is empty. Blank lines are skipped.
File read(const std::filesystem::path& path);

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line,
                    const std::string& column);
long parse_int(const std::string& field, const std::filesystem::path& path, std::size_t line,
               const std::string& column);

std::string format_double(double v);

}  // namespace stdc::csv
