#pragma once

#include <optional>
#include <string_view>

namespace dermfair {

enum class Fitzpatrick { I, II, III, IV, V, VI, Uncertain };

inline constexpr Fitzpatrick kAllFitzpatrick[] = {
    Fitzpatrick::I,  Fitzpatrick::II, Fitzpatrick::III,      Fitzpatrick::IV,
    Fitzpatrick::V,  Fitzpatrick::VI, Fitzpatrick::Uncertain,
};

std::string_view to_string(Fitzpatrick f) noexcept;
std::optional<Fitzpatrick> parse_fitzpatrick(std::string_view s) noexcept;

// Coarse grouping used for stratification: I-IV, V-VI, Uncertain.
enum class ToneGroup { Light, Dark, Uncertain };
ToneGroup tone_group(std::optional<Fitzpatrick> f) noexcept;
std::string_view to_string(ToneGroup g) noexcept;

}  // namespace dermfair
