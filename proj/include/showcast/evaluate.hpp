#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace showcast {

inline constexpr double kDefaultThreshold = 0.5;

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double threshold = kDefaultThreshold;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double accuracy() const noexcept;
  double hit_rate() const noexcept;     // tp / (tp + fn), 0 without events
  double specificity() const noexcept;  // tn / (tn + fp), 0 without non-events
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

enum class AucBand { Poor, BelowAcceptable, Acceptable, Excellent, Outstanding };

std::string_view to_string(AucBand band);
AucBand parse_auc_band(std::string_view text);

struct EvaluationReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double hit_rate = 0.0;
  double specificity = 0.0;
  std::vector<RocPoint> roc;
  double auc = 0.0;
  AucBand auc_band = AucBand::Poor;
};

// Score >= threshold counts as a predicted event.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const std::uint8_t> labels,
                          double threshold = kDefaultThreshold);

// Mann-Whitney AUC with ties counted half, by sorting into tie groups.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// (0,0), one point per distinct score from the highest down, ending at (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);
double trapezoid_area(std::span<const RocPoint> roc);

AucBand auc_band(double auc);

EvaluationReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels,
                          double threshold = kDefaultThreshold);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const EvaluationReport& report, bool include_roc = true);
EvaluationReport evaluation_report_from_json(const nlohmann::json& j);

// Percentage of a fraction to one decimal place, e.g. 0.7805 -> "78.1".
std::string format_percent(double fraction);

struct ReportRow {
  std::string model;
  const EvaluationReport* report = nullptr;  // null renders `note` instead of metrics
  std::string note;
};

// Comparison table with AUC, accuracy, hit rate, specificity and AUC band.
std::string render_comparison(std::string_view title, std::span<const ReportRow> rows);

void write_roc_csv(std::ostream& out, std::span<const RocPoint> roc);

}  // namespace showcast
