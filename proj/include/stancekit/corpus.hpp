#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stancekit/stance.hpp"

namespace stancekit {

// One tweet of a rumour corpus.
struct LabeledInstance {
  std::string tweet_id;
  std::string text;
  std::string rumour_id;
  std::string event_id;
  // Position in the temporal order of the rumour; unique per rumour.
  std::int64_t order_index = 0;
  std::optional<Stance> label;
  bool is_retweet = false;
};

}  // namespace stancekit
