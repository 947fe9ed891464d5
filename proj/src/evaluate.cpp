#include "showcast/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "showcast/csv.hpp"
#include "showcast/error.hpp"

namespace showcast {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length (" +
                                               std::to_string(scores.size()) + " vs " +
                                               std::to_string(labels.size()) + ")");
  }
  if (scores.empty()) throw Error(ErrorCode::LengthMismatch, "no scores to evaluate");
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorCode::InvalidParams, "score is NaN");
  }
}

struct TieGroup {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

// Tie groups ordered from the highest score down; throws SingleClass.
std::vector<TieGroup> tie_groups(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                 std::size_t& n_pos, std::size_t& n_neg) {
  check_inputs(scores, labels);
  n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::SingleClass, "AUC needs both classes among the labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<TieGroup> groups;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || scores[order[i]] != scores[order[i - 1]]) groups.emplace_back();
    (labels[order[i]] ? groups.back().pos : groups.back().neg) += 1;
  }
  return groups;
}

}  // namespace

double ConfusionMatrix::accuracy() const noexcept {
  return total() ? double(tp + tn) / double(total()) : 0.0;
}
double ConfusionMatrix::hit_rate() const noexcept { return tp + fn ? double(tp) / double(tp + fn) : 0.0; }
double ConfusionMatrix::specificity() const noexcept {
  return tn + fp ? double(tn) / double(tn + fp) : 0.0;
}

std::string_view to_string(AucBand band) {
  switch (band) {
    case AucBand::Poor: return "poor";
    case AucBand::BelowAcceptable: return "below-acceptable";
    case AucBand::Acceptable: return "acceptable";
    case AucBand::Excellent: return "excellent";
    case AucBand::Outstanding: return "outstanding";
  }
  return "poor";
}

AucBand parse_auc_band(std::string_view text) {
  for (auto band : {AucBand::Poor, AucBand::BelowAcceptable, AucBand::Acceptable, AucBand::Excellent,
                    AucBand::Outstanding}) {
    if (to_string(band) == text) return band;
  }
  throw Error(ErrorCode::CorruptBundle, "unknown AUC band '" + std::string(text) + "'");
}

ConfusionMatrix confusion(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
  check_inputs(scores, labels);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "threshold must be in [0, 1]");
  }
  ConfusionMatrix cm;
  cm.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) (predicted ? cm.tp : cm.fn) += 1;
    else (predicted ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::size_t n_pos = 0, n_neg = 0;
  const auto groups = tie_groups(scores, labels, n_pos, n_neg);
  // Twice the concordance count keeps the half-credit for ties integral.
  std::uint64_t twice = 0;
  std::uint64_t pos_above = 0;
  for (const auto& g : groups) {
    twice += g.neg * (2 * pos_above + g.pos);
    pos_above += g.pos;
  }
  return double(twice) / (2.0 * double(n_pos) * double(n_neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::size_t n_pos = 0, n_neg = 0;
  const auto groups = tie_groups(scores, labels, n_pos, n_neg);
  std::vector<RocPoint> roc;
  roc.reserve(groups.size() + 1);
  roc.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (const auto& g : groups) {
    tp += g.pos;
    fp += g.neg;
    roc.push_back({double(fp) / double(n_neg), double(tp) / double(n_pos)});
  }
  return roc;
}

double trapezoid_area(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
  }
  return area;
}

AucBand auc_band(double value) {
  if (value < 0.5) return AucBand::Poor;
  if (value < 0.7) return AucBand::BelowAcceptable;
  if (value < 0.8) return AucBand::Acceptable;
  if (value < 0.9) return AucBand::Excellent;
  return AucBand::Outstanding;
}

EvaluationReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
  EvaluationReport r;
  r.confusion = confusion(scores, labels, threshold);
  r.accuracy = r.confusion.accuracy();
  r.hit_rate = r.confusion.hit_rate();
  r.specificity = r.confusion.specificity();
  r.roc = roc_curve(scores, labels);
  r.auc = auc(scores, labels);
  r.auc_band = auc_band(r.auc);
  return r;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}, {"threshold", cm.threshold}};
}

nlohmann::json to_json(const EvaluationReport& r, bool include_roc) {
  nlohmann::json j{{"confusion", to_json(r.confusion)},
                   {"accuracy", r.accuracy},
                   {"hit_rate", r.hit_rate},
                   {"specificity", r.specificity},
                   {"auc", r.auc},
                   {"auc_band", to_string(r.auc_band)},
                   {"display",
                    {{"auc", format_double_fixed(r.auc, 3)},
                     {"accuracy_pct", format_percent(r.accuracy)},
                     {"hit_rate_pct", format_percent(r.hit_rate)},
                     {"specificity_pct", format_percent(r.specificity)}}}};
  if (include_roc) {
    auto pts = nlohmann::json::array();
    for (const auto& p : r.roc) pts.push_back({p.fpr, p.tpr});
    j["roc"] = std::move(pts);
  }
  return j;
}

EvaluationReport evaluation_report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  const auto& cm = j.at("confusion");
  r.confusion.tp = cm.at("tp").get<std::size_t>();
  r.confusion.fp = cm.at("fp").get<std::size_t>();
  r.confusion.tn = cm.at("tn").get<std::size_t>();
  r.confusion.fn = cm.at("fn").get<std::size_t>();
  r.confusion.threshold = cm.at("threshold").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.hit_rate = j.at("hit_rate").get<double>();
  r.specificity = j.at("specificity").get<double>();
  r.auc = j.at("auc").get<double>();
  r.auc_band = parse_auc_band(j.at("auc_band").get<std::string>());
  if (j.contains("roc")) {
    for (const auto& p : j.at("roc")) r.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return r;
}

std::string format_percent(double fraction) { return format_double_fixed(fraction, 1, 2); }

std::string render_comparison(std::string_view title, std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << title << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %6s %13s %13s %16s  %s\n", "Model", "AUC", "Accuracy (%)",
                "Hit Rate (%)", "Specificity (%)", "AUC band");
  out << line;
  for (const auto& row : rows) {
    if (!row.report) {
      std::snprintf(line, sizeof line, "%-22s %s\n", row.model.c_str(), row.note.c_str());
      out << line;
      continue;
    }
    const auto& r = *row.report;
    std::snprintf(line, sizeof line, "%-22s %6s %13s %13s %16s  %s", row.model.c_str(),
                  format_double_fixed(r.auc, 3).c_str(), format_percent(r.accuracy).c_str(),
                  format_percent(r.hit_rate).c_str(), format_percent(r.specificity).c_str(),
                  std::string(to_string(r.auc_band)).c_str());
    out << line;
    if (!row.note.empty()) out << "  " << row.note;
    out << '\n';
  }
  return out.str();
}

void write_roc_csv(std::ostream& out, std::span<const RocPoint> roc) {
  out << "fpr,tpr\n";
  for (const auto& p : roc) out << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
}

}  // namespace showcast
