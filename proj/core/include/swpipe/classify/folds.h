#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace swpipe::classify {

struct Fold {
  std::vector<std::size_t> indices;  // ascending
  std::vector<std::string> participant_ids;
};

// Stratified k-fold partition. Each class is shuffled with the seed and dealt
// round-robin, continuing the deal across classes, so every fold holds
// floor or ceil of n_c / k members of class c and fold sizes differ by at most
// one. Throws TooFewSamples when k > n or a class has fewer than k members.
std::vector<std::vector<std::size_t>> make_fold_indices(std::span<const int> labels, std::size_t k,
                                                        std::uint64_t seed);

std::vector<Fold> make_folds(std::span<const std::string> participants,
                             std::span<const int> labels, std::size_t k, std::uint64_t seed);

// Seeded stratified hold-out: from each class, max(1, round(fraction * n_c))
// members go to the second vector. Throws TooFewSamples when a class has
// fewer than two members.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, double fraction, std::uint64_t seed);

}  // namespace swpipe::classify
