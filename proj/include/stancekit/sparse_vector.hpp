#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace stancekit {

struct FeatureCount {
  std::int32_t index = 0;
  std::int32_t count = 0;

  friend bool operator==(const FeatureCount&, const FeatureCount&) = default;
};

// Bag of feature counts. Indices are strictly increasing and every count is
// at least one; the empty vector is the all-zero input.
class SparseFeatureVector {
 public:
  SparseFeatureVector() = default;

  // Throws ConfigError unless the entries already satisfy the invariants.
  static SparseFeatureVector from_entries(std::vector<FeatureCount> entries);
  // Counts occurrences of each index (any order, repeats allowed).
  static SparseFeatureVector from_indices(std::span<const std::int32_t> indices);
  // Position i holds the count of feature i; zeros are skipped.
  static SparseFeatureVector from_dense(std::initializer_list<int> counts);

  std::span<const FeatureCount> entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t nonzeros() const { return entries_.size(); }
  std::int64_t total_count() const;

  friend bool operator==(const SparseFeatureVector&, const SparseFeatureVector&) = default;

 private:
  explicit SparseFeatureVector(std::vector<FeatureCount> entries) : entries_(std::move(entries)) {}

  std::vector<FeatureCount> entries_;
};

// Sum over shared indices, merged in ascending index order. Integer
// accumulation makes the result exact and symmetric.
std::int64_t dot(const SparseFeatureVector& a, const SparseFeatureVector& b);

}  // namespace stancekit
