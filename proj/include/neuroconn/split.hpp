#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace neuroconn::experiment {

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SplitPlan {
  std::vector<std::size_t> train, val, test;
  std::uint64_t seed = 123;
  SplitFractions fractions;
};

// Per class: shuffle that class's trials with `seed`, give floor(f * n) to
// validation and test, and the remainder to train. Index lists are sorted.
SplitPlan stratified_split(std::span<const int> labels, SplitFractions fractions = {},
                           std::uint64_t seed = 123);

}  // namespace neuroconn::experiment
