#include "swpipe/classify/folds.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "swpipe/error.h"
#include "swpipe/random.h"

namespace swpipe::classify {

namespace {

std::array<std::vector<std::size_t>, 2> by_class(std::span<const int> labels) {
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::kInvalidParams, fmt::format("label at {} is not 0/1", i));
    }
    members[labels[i]].push_back(i);
  }
  return members;
}

}  // namespace

std::vector<std::vector<std::size_t>> make_fold_indices(std::span<const int> labels, std::size_t k,
                                                        std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidParams, "k must be at least 2");
  if (k > labels.size()) {
    throw Error(ErrorCode::kTooFewSamples, fmt::format("k={} exceeds n={}", k, labels.size()));
  }
  auto members = by_class(labels);
  for (int c : {0, 1}) {
    if (members[c].size() < k) {
      throw Error(ErrorCode::kTooFewSamples,
                  fmt::format("class {} has {} members, fewer than k={}", c, members[c].size(), k));
    }
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (int c : {1, 0}) {
    rng.shuffle(std::span(members[c]));
    for (std::size_t idx : members[c]) {
      folds[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<Fold> make_folds(std::span<const std::string> participants,
                             std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (participants.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "participants and labels differ in length");
  }
  std::vector<Fold> out;
  for (auto& indices : make_fold_indices(labels, k, seed)) {
    Fold f;
    for (std::size_t i : indices) f.participant_ids.push_back(participants[i]);
    f.indices = std::move(indices);
    out.push_back(std::move(f));
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "hold-out fraction must be in (0, 1)");
  }
  auto members = by_class(labels);
  Rng rng(seed);
  std::vector<std::size_t> keep;
  std::vector<std::size_t> held;
  for (int c : {1, 0}) {
    auto& m = members[c];
    if (m.size() < 2) {
      throw Error(ErrorCode::kTooFewSamples,
                  fmt::format("class {} has {} members; need 2 to hold one out", c, m.size()));
    }
    rng.shuffle(std::span(m));
    const auto n_held = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m.size()))), 1,
        m.size() - 1);
    held.insert(held.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_held));
    keep.insert(keep.end(), m.begin() + static_cast<std::ptrdiff_t>(n_held), m.end());
  }
  std::sort(keep.begin(), keep.end());
  std::sort(held.begin(), held.end());
  return {std::move(keep), std::move(held)};
}

}  // namespace swpipe::classify
