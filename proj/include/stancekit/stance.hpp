#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace stancekit {

// Stance of a tweet towards its rumour. The enumerator order is also the
// tie-break precedence used everywhere a class has to be picked.
enum class Stance : int { supporting = 0, denying = 1, questioning = 2 };

inline constexpr std::size_t kStanceCount = 3;
inline constexpr std::array<Stance, kStanceCount> kAllStances = {
    Stance::supporting, Stance::denying, Stance::questioning};

constexpr std::size_t index_of(Stance s) { return static_cast<std::size_t>(s); }
constexpr Stance stance_at(std::size_t i) { return kAllStances.at(i); }

std::string_view to_string(Stance s);

// Accepts the canonical names plus s/d/q and support/deny/question,
// case-insensitively.
std::optional<Stance> parse_stance(std::string_view text);

// Index of the largest score; exact ties resolve to the earliest stance.
template <typename T>
Stance argmax_stance(const std::array<T, kStanceCount>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kStanceCount; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return stance_at(best);
}

}  // namespace stancekit
