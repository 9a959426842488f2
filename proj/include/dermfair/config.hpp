#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dermfair::config {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Parses `key = value` lines. '#' starts a comment; blank lines are skipped.
KeyValues parse(std::string_view text);
KeyValues read_file(const std::string& path);

double to_double(const std::pair<std::string, std::string>& kv);
long long to_int(const std::pair<std::string, std::string>& kv);
bool to_bool(const std::pair<std::string, std::string>& kv);

}  // namespace dermfair::config
