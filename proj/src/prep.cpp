#include "showcast/prep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "showcast/error.hpp"
#include "showcast/rng.hpp"

namespace showcast {

namespace {

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

}  // namespace

Partition partition(const ColumnarDataset& ds, const PartitionSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidParams, "train fraction must lie in (0,1)");
  }
  const std::size_t n = ds.n_rows();
  if (n < 2) throw Error(ErrorCode::TooFewRows, "cannot partition fewer than 2 rows");
  const std::size_t n_train =
      std::clamp<std::size_t>(round_count(spec.train_fraction * double(n)), 1, n - 1);

  // Strata: one per class when stratified, else a single stratum.
  std::vector<std::vector<std::size_t>> strata(1);
  if (spec.stratify_on) {
    if (!ds.labeled()) throw Error(ErrorCode::InvalidParams, "stratified split needs labels");
    const auto y = ds.flags(*spec.stratify_on);
    strata.assign(2, {});
    for (std::size_t i = 0; i < n; ++i) strata[y[i]].push_back(i);
    for (std::size_t c = 0; c < 2; ++c) {
      if (strata[c].empty()) {
        throw Error(ErrorCode::EmptyClass, std::string(to_string(*spec.stratify_on)) +
                                               " flag has no rows with value " + std::to_string(c));
      }
    }
  } else {
    strata[0].resize(n);
    std::iota(strata[0].begin(), strata[0].end(), std::size_t{0});
  }

  // Per-stratum quotas: floors, then largest remainders until the total is met.
  std::vector<std::size_t> quota(strata.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const double exact = spec.train_fraction * double(strata[s].size());
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[s];
    remainder.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n_train && k < remainder.size(); ++k, ++assigned) {
    ++quota[remainder[k].second];
  }
  // Clamping can leave a deficit or surplus of one; settle it on the largest stratum.
  while (assigned < n_train || assigned > n_train) {
    auto s = static_cast<std::size_t>(
        std::max_element(strata.begin(), strata.end(),
                         [](const auto& a, const auto& b) { return a.size() < b.size(); }) -
        strata.begin());
    if (assigned < n_train) {
      ++quota[s];
      ++assigned;
    } else {
      --quota[s];
      --assigned;
    }
  }

  Rng rng(spec.seed);
  std::vector<std::uint8_t> in_train(n, 0);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& idx = strata[s];
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t k = 0; k < quota[s]; ++k) in_train[idx[k]] = 1;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train_rows : test_rows).push_back(i);
  return {ds.take(train_rows), ds.take(test_rows)};
}

std::string_view to_string(BalanceMode mode) {
  return mode == BalanceMode::Upsample ? "up" : "down";
}

BalanceMode parse_balance_mode(std::string_view text) {
  if (text == "up" || text == "upsample") return BalanceMode::Upsample;
  if (text == "down" || text == "downsample") return BalanceMode::Downsample;
  throw Error(ErrorCode::InvalidParams, "balance mode must be up or down");
}

ColumnarDataset balance(const ColumnarDataset& ds, Target target, const BalanceSpec& spec) {
  if (!(spec.target_ratio > 0.0 && spec.target_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidParams, "balance ratio must lie in (0,1)");
  }
  if (!ds.labeled()) throw Error(ErrorCode::InvalidParams, "balancing needs labels");
  const auto y = ds.flags(target);
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < ds.n_rows(); ++i) by_class[y[i]].push_back(i);
  if (by_class[0].empty() || by_class[1].empty()) {
    throw Error(ErrorCode::SingleClass,
                std::string(to_string(target)) + " flag has a single class; nothing to balance");
  }
  const int minority = by_class[1].size() < by_class[0].size() ? 1 : 0;
  const int majority = 1 - minority;
  const double r = spec.target_ratio;
  const double m = double(by_class[minority].size());
  const double big = double(by_class[majority].size());

  // Desired class sizes: grow (upsample) or shrink (downsample) whichever class
  // is off target while the other stays fixed.
  std::size_t want[2] = {by_class[0].size(), by_class[1].size()};
  const bool minority_short = m / (m + big) < r;
  if (spec.mode == BalanceMode::Upsample) {
    if (minority_short) want[minority] = round_count(big * r / (1.0 - r));
    else want[majority] = round_count(m * (1.0 - r) / r);
  } else {
    if (minority_short) want[majority] = std::max<std::size_t>(1, round_count(m * (1.0 - r) / r));
    else want[minority] = std::max<std::size_t>(1, round_count(big * r / (1.0 - r)));
  }

  Rng rng(spec.seed);
  std::vector<std::size_t> rows;
  if (spec.mode == BalanceMode::Upsample) {
    rows.resize(ds.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (int c = 0; c < 2; ++c) {
      const auto& pool = by_class[c];
      for (std::size_t k = pool.size(); k < want[c]; ++k) rows.push_back(pool[rng.below(pool.size())]);
    }
  } else {
    std::vector<std::uint8_t> keep(ds.n_rows(), 1);
    for (int c = 0; c < 2; ++c) {
      auto pool = by_class[c];
      if (want[c] >= pool.size()) continue;
      rng.shuffle(std::span<std::size_t>(pool));
      for (std::size_t k = want[c]; k < pool.size(); ++k) keep[pool[k]] = 0;
    }
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
      if (keep[i]) rows.push_back(i);
    }
  }
  auto out = ds.take(rows);
  auto prov = out.provenance();
  prov.balanced = true;
  return out.with_provenance(std::move(prov));
}

}  // namespace showcast
