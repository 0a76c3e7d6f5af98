#include "stancekit/stance.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace stancekit {

std::string_view to_string(Stance s) {
  switch (s) {
    case Stance::supporting: return "supporting";
    case Stance::denying: return "denying";
    case Stance::questioning: return "questioning";
  }
  return "?";
}

std::optional<Stance> parse_stance(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "supporting" || lower == "support" || lower == "s") return Stance::supporting;
  if (lower == "denying" || lower == "deny" || lower == "d") return Stance::denying;
  if (lower == "questioning" || lower == "question" || lower == "q") return Stance::questioning;
  return std::nullopt;
}

}  // namespace stancekit
