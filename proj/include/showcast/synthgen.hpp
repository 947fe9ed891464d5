#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "showcast/dataset.hpp"

namespace showcast {

inline constexpr std::array<std::string_view, 3> kAgeGroups{"young", "middle", "elderly"};
inline constexpr std::array<std::string_view, 2> kBuyerTypes{"first-time", "second-time"};
inline constexpr std::array<std::string_view, 3> kIncomeBands{"low", "medium", "high"};
inline constexpr std::size_t kProfileCells = 18;

struct PeriodSpec {
  std::string label;
  std::size_t count = 0;
  // Per-period targets, used only when GeneratorConfig::period_drift is set.
  std::optional<double> show_rate;
  std::optional<double> book_rate;
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  std::vector<PeriodSpec> periods;
  // Booked rate is booked customers over all retained customers. Unset
  // targets leave the profile probabilities untouched.
  std::optional<double> target_show_rate;
  std::optional<double> target_book_rate;
  std::array<double, 3> age_mix{0.50, 0.34, 0.16};
  std::size_t noise_feature_count = 3;
  // Booked-then-canceled rows, written to the CSV and dropped on load.
  double cancel_rate = 0.005;
  // Blank cells injected into income_band and the noise columns.
  double missing_rate = 0.0;
  bool period_drift = false;

  void validate() const;
  std::size_t total_rows() const;

  // Half-year counts and rates of the 2015-2019 customer table.
  static GeneratorConfig historical(std::uint64_t seed = 1);
  // Same rates, `rows` customers spread over the historical periods pro rata.
  static GeneratorConfig historical_scaled(std::size_t rows, std::uint64_t seed = 1);
};

struct CellProbabilities {
  double p_show = 0.5;
  double p_book_given_show = 0.5;
};

// Latent behavior over age_group x buyer_type x income_band. Values shipped
// in reference() are repo inventions chosen to exhibit the published
// behavioral findings; they are not measured data.
struct BehaviorProfile {
  std::array<double, 2> buyer_mix{0.5, 0.5};
  std::array<double, 3> income_mix{0.3, 0.4, 0.3};
  std::array<CellProbabilities, kProfileCells> cells{};

  static constexpr std::size_t cell_index(std::size_t age, std::size_t buyer, std::size_t income) {
    return (age * 2 + buyer) * 3 + income;
  }
  CellProbabilities& cell(std::size_t age, std::size_t buyer, std::size_t income) {
    return cells[cell_index(age, buyer, income)];
  }
  const CellProbabilities& cell(std::size_t age, std::size_t buyer, std::size_t income) const {
    return cells[cell_index(age, buyer, income)];
  }

  void validate() const;

  // Config grammar:
  //   buyer_mix = <first-time>, <second-time>
  //   income_mix = <low>, <medium>, <high>
  //   <age>.<buyer>.<income> = <p_show>, <p_book_given_show>     (all 18 cells)
  static BehaviorProfile parse(std::string_view text);
  static BehaviorProfile load(const std::filesystem::path& path);
  std::string to_config_text() const;

  static BehaviorProfile reference();
};

// Probability mass of each profile cell under the given age mix.
std::array<double, kProfileCells> cell_weights(const BehaviorProfile& profile,
                                               const std::array<double, 3>& age_mix);

struct ExpectedRates {
  double show = 0.0;
  double booked = 0.0;  // over all customers
};
ExpectedRates expected_rates(const BehaviorProfile& profile, const std::array<double, 3>& age_mix);

struct CalibrationResult {
  BehaviorProfile profile;
  double show_shift = 0.0;  // added to every cell's show logit
  double book_shift = 0.0;  // added to every cell's book-given-show logit
  int iterations = 0;
};

// Shifts the logits so the expected marginals hit the targets within 1e-6.
// Safeguarded Newton iteration, at most 100 steps per outcome.
CalibrationResult calibrate_intercepts(const BehaviorProfile& profile,
                                       const std::array<double, 3>& age_mix,
                                       std::optional<double> target_show,
                                       std::optional<double> target_book);

struct GeneratedCorpus {
  Schema schema;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> records;  // includes canceled rows
  ColumnarDataset dataset;                        // canceled rows dropped
  std::size_t canceled = 0;
  std::vector<CalibrationResult> calibrations;    // one, or one per period with drift
};

Schema synthetic_schema(std::size_t noise_feature_count);

GeneratedCorpus generate(const GeneratorConfig& cfg, const BehaviorProfile& profile);
void write_corpus_csv(std::ostream& out, const GeneratedCorpus& corpus);

}  // namespace showcast
