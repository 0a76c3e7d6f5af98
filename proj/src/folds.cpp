#include <algorithm>
#include <map>
#include <set>

#include "stancekit/errors.hpp"
#include "stancekit/experiments.hpp"

namespace stancekit {

int ExperimentPlan::effective_test_offset() const {
  if (test_offset) return *test_offset;
  return target_train_sizes.empty() ? 0 : *std::max_element(target_train_sizes.begin(), target_train_sizes.end());
}

void ExperimentPlan::validate() const {
  if (target_train_sizes.empty()) throw ConfigError("target_train_sizes is empty");
  if (protocol == Protocol::loo && target_train_sizes != std::vector<int>{0}) {
    throw ConfigError("LOO requires target_train_sizes = [0]");
  }
  const int offset = effective_test_offset();
  if (offset < 0) throw ConfigError("test_offset must be non-negative");
  std::set<int> seen;
  for (int k : target_train_sizes) {
    if (k < 0) throw ConfigError("target_train_sizes must be non-negative");
    if (k > offset) {
      throw ConfigError("target train size " + std::to_string(k) + " exceeds test_offset " + std::to_string(offset));
    }
    if (!seen.insert(k).second) throw ConfigError("duplicate target train size " + std::to_string(k));
  }
  if (methods.empty()) throw ConfigError("no methods selected");
  std::set<Method> distinct(methods.begin(), methods.end());
  if (distinct.size() != methods.size()) throw ConfigError("duplicate method in plan");
}

const std::string& fold_key(const LabeledInstance& instance, FoldUnit unit) {
  return unit == FoldUnit::rumour ? instance.rumour_id : instance.event_id;
}

std::vector<std::size_t> Fold::train_for(int k) const {
  std::vector<std::size_t> out = reference;
  const auto take = std::min(target.size(), static_cast<std::size_t>(std::max(k, 0)));
  out.insert(out.end(), target.begin(), target.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

FoldSet build_folds(std::span<const LabeledInstance> corpus, const ExperimentPlan& plan) {
  plan.validate();
  std::map<std::string, std::vector<std::size_t>> units;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string& key = fold_key(corpus[i], plan.fold_unit);
    if (key.empty()) {
      throw ConfigError("tweet " + corpus[i].tweet_id + " has no " + std::string(to_string(plan.fold_unit)) + " id");
    }
    units[key].push_back(i);
  }
  if (units.size() < 2) {
    throw ConfigError("need >= 2 fold units, found " + std::to_string(units.size()));
  }
  const auto offset = static_cast<std::size_t>(plan.effective_test_offset());

  FoldSet out;
  for (const auto& [unit, members] : units) {
    if (members.size() <= offset) {
      out.skipped.push_back("fold " + unit + " skipped: " + std::to_string(members.size()) +
                            " tweets, need more than " + std::to_string(offset));
      continue;
    }
    Fold fold;
    fold.unit = unit;
    fold.target = members;
    std::stable_sort(fold.target.begin(), fold.target.end(), [&](std::size_t a, std::size_t b) {
      if (corpus[a].order_index != corpus[b].order_index) return corpus[a].order_index < corpus[b].order_index;
      return corpus[a].tweet_id < corpus[b].tweet_id;
    });
    fold.test.assign(fold.target.begin() + static_cast<std::ptrdiff_t>(offset), fold.target.end());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (fold_key(corpus[i], plan.fold_unit) != unit) fold.reference.push_back(i);
    }
    out.folds.push_back(std::move(fold));
  }
  return out;
}

}  // namespace stancekit
