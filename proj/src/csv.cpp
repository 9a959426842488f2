#include "dermfair/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dermfair/error.hpp"

namespace dermfair::csv {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

std::optional<std::size_t> Table::column(std::initializer_list<std::string_view> names) const {
    for (std::string_view name : names) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (iequals(header[i], name)) return i;
        }
    }
    return std::nullopt;
}

std::size_t Table::require_column(std::initializer_list<std::string_view> names) const {
    if (auto c = column(names)) return *c;
    std::string wanted;
    for (std::string_view n : names) {
        if (!wanted.empty()) wanted += "|";
        wanted += n;
    }
    throw Error(ErrorKind::Parse, "missing CSV column: " + wanted);
}

Table parse(std::string_view text) {
    Table table;
    std::vector<Row> records;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool at_line_start = true;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.size() == 1 && trim(row[0]).empty();
        if (!blank) records.push_back(std::move(row));
        row.clear();
        at_line_start = true;
    };

    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (at_line_start && !in_quotes && records.empty() && c == '#') {
            const std::size_t nl = text.find('\n', i);
            std::string line(text.substr(i, nl == std::string_view::npos ? text.size() - i : nl - i));
            if (!line.empty() && line.back() == '\r') line.pop_back();
            table.comments.push_back(line);
            i = nl == std::string_view::npos ? text.size() : nl + 1;
            continue;
        }
        at_line_start = false;
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (in_quotes) throw Error(ErrorKind::Parse, "unterminated quoted CSV field");
    if (!field.empty() || !row.empty()) end_row();

    if (records.empty()) return table;
    table.header = std::move(records.front());
    for (auto& h : table.header) h = trim(h);
    table.rows.assign(std::make_move_iterator(records.begin() + 1),
                      std::make_move_iterator(records.end()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.header.size()) {
            throw Error(ErrorKind::Parse, "CSV row " + std::to_string(r + 2) + " has " +
                                              std::to_string(table.rows[r].size()) +
                                              " fields, expected " +
                                              std::to_string(table.header.size()));
        }
    }
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << escape(row[i]);
    }
    out << '\n';
}

std::string format_double(double v, int precision) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream ss;
    ss.precision(precision);
    ss << v;
    return ss.str();
}

}  // namespace dermfair::csv
