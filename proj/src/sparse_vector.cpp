#include "stancekit/sparse_vector.hpp"

#include <algorithm>
#include <string>

#include "stancekit/errors.hpp"

namespace stancekit {

SparseFeatureVector SparseFeatureVector::from_entries(std::vector<FeatureCount> entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].index < 0) throw ConfigError("negative feature index " + std::to_string(entries[i].index));
    if (entries[i].count < 1) {
      throw ConfigError("feature " + std::to_string(entries[i].index) + " has non-positive count");
    }
    if (i > 0 && entries[i].index <= entries[i - 1].index) {
      throw ConfigError("feature indices must be strictly increasing");
    }
  }
  return SparseFeatureVector(std::move(entries));
}

SparseFeatureVector SparseFeatureVector::from_indices(std::span<const std::int32_t> indices) {
  std::vector<std::int32_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<FeatureCount> entries;
  for (std::int32_t idx : sorted) {
    if (idx < 0) throw ConfigError("negative feature index " + std::to_string(idx));
    if (!entries.empty() && entries.back().index == idx) {
      ++entries.back().count;
    } else {
      entries.push_back({idx, 1});
    }
  }
  return SparseFeatureVector(std::move(entries));
}

SparseFeatureVector SparseFeatureVector::from_dense(std::initializer_list<int> counts) {
  std::vector<FeatureCount> entries;
  std::int32_t i = 0;
  for (int c : counts) {
    if (c < 0) throw ConfigError("negative count in dense feature vector");
    if (c > 0) entries.push_back({i, c});
    ++i;
  }
  return SparseFeatureVector(std::move(entries));
}

std::int64_t SparseFeatureVector::total_count() const {
  std::int64_t total = 0;
  for (const auto& e : entries_) total += e.count;
  return total;
}

std::int64_t dot(const SparseFeatureVector& a, const SparseFeatureVector& b) {
  auto ea = a.entries();
  auto eb = b.entries();
  std::size_t i = 0, j = 0;
  std::int64_t sum = 0;
  while (i < ea.size() && j < eb.size()) {
    if (ea[i].index < eb[j].index) {
      ++i;
    } else if (eb[j].index < ea[i].index) {
      ++j;
    } else {
      sum += static_cast<std::int64_t>(ea[i].count) * eb[j].count;
      ++i;
      ++j;
    }
  }
  return sum;
}

}  // namespace stancekit
