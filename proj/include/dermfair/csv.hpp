#pragma once

#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dermfair::csv {

using Row = std::vector<std::string>;

// A parsed CSV table. Leading lines starting with '#' are kept as comments.
struct Table {
    std::vector<std::string> comments;
    Row header;
    std::vector<Row> rows;

    // Index of the first header column matching any of the names, compared
    // case-insensitively.
    std::optional<std::size_t> column(std::initializer_list<std::string_view> names) const;
    std::size_t require_column(std::initializer_list<std::string_view> names) const;
};

Table parse(std::string_view text);
Table read_file(const std::string& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

std::string format_double(double v, int precision = 10);

}  // namespace dermfair::csv
