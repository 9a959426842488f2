#include "dermfair/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dermfair/error.hpp"

namespace dermfair::config {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad(const std::pair<std::string, std::string>& kv, const char* what) {
    throw Error(ErrorKind::Parse, "config key '" + kv.first + "': expected " + what + ", got '" +
                                      kv.second + "'");
}

}  // namespace

KeyValues parse(std::string_view text) {
    KeyValues out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::Parse, "config line " + std::to_string(line_no) + ": missing '='");
        }
        out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    return out;
}

KeyValues read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

double to_double(const std::pair<std::string, std::string>& kv) {
    try {
        std::size_t used = 0;
        const double v = std::stod(kv.second, &used);
        if (used != kv.second.size()) bad(kv, "a number");
        return v;
    } catch (const std::logic_error&) {
        bad(kv, "a number");
    }
}

long long to_int(const std::pair<std::string, std::string>& kv) {
    long long v = 0;
    const char* b = kv.second.data();
    const char* e = b + kv.second.size();
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e) bad(kv, "an integer");
    return v;
}

bool to_bool(const std::pair<std::string, std::string>& kv) {
    if (kv.second == "true" || kv.second == "1" || kv.second == "on") return true;
    if (kv.second == "false" || kv.second == "0" || kv.second == "off") return false;
    bad(kv, "a boolean");
}

}  // namespace dermfair::config
