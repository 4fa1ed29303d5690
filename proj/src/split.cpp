#include "neuroconn/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

namespace neuroconn::experiment {

SplitPlan stratified_split(std::span<const int> labels, SplitFractions fractions,
                           std::uint64_t seed) {
  const double total = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be nonnegative and sum to 1");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  SplitPlan plan;
  plan.seed = seed;
  plan.fractions = fractions;
  std::mt19937_64 rng(seed);
  auto portion = [](double f, std::size_t n) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
  };
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n = idx.size();
    const std::size_t n_val = portion(fractions.val, n);
    const std::size_t n_test = portion(fractions.test, n);
    const std::size_t n_train = n - n_val - n_test;
    if ((fractions.train > 0 && n_train == 0) || (fractions.val > 0 && n_val == 0) ||
        (fractions.test > 0 && n_test == 0)) {
      throw std::invalid_argument("class " + std::to_string(label) + " has only " +
                                  std::to_string(n) + " trials, too small for the requested split");
    }
    plan.train.insert(plan.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    plan.val.insert(plan.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                    idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    plan.test.insert(plan.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                     idx.end());
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.val.begin(), plan.val.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

}  // namespace neuroconn::experiment
