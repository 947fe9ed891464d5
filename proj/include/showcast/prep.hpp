#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "showcast/dataset.hpp"

namespace showcast {

struct PartitionSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  std::optional<Target> stratify_on;
};

struct Partition {
  ColumnarDataset train;
  ColumnarDataset test;
};

// Disjoint, exhaustive split with |train| = round(train_fraction * n), clamped
// so both sides keep at least one row. Both halves keep the input row order.
Partition partition(const ColumnarDataset& ds, const PartitionSpec& spec);

enum class BalanceMode { Upsample, Downsample };

std::string_view to_string(BalanceMode mode);
BalanceMode parse_balance_mode(std::string_view text);

struct BalanceSpec {
  BalanceMode mode = BalanceMode::Upsample;
  double target_ratio = 0.5;  // desired share of the minority class
  std::uint64_t seed = 1;
};

// Resamples so the minority class makes up target_ratio of the rows (within
// one row). Upsampling keeps every input row and appends copies drawn with
// replacement; downsampling keeps a without-replacement subset in input order.
// The result is marked balanced in its provenance.
ColumnarDataset balance(const ColumnarDataset& ds, Target target, const BalanceSpec& spec);

}  // namespace showcast
