#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "showcast/dataset.hpp"
#include "showcast/evaluate.hpp"
#include "showcast/learners.hpp"
#include "showcast/prep.hpp"

namespace showcast {

// One learner with one configuration. `variant` is empty for the default
// configuration and names the grid point otherwise.
struct Candidate {
  LearnerKind kind = LearnerKind::Cart;
  std::string variant;
  TrainConfig config;

  std::string id() const;  // "cart" or "cart/depth4"
};

// Default-config candidates, plus a small named grid per learner when `grid` is set.
std::vector<Candidate> make_candidates(std::span<const LearnerKind> kinds, const TrainConfig& base, bool grid);

std::vector<LearnerKind> show_finalists();    // mlp, cart, chaid
std::vector<LearnerKind> booked_finalists();  // mlp, chaid, logistic
std::vector<LearnerKind> all_learners();      // mlp, cart, chaid, logistic
std::vector<LearnerKind> parse_learner_list(std::string_view text);

struct CandidateResult {
  std::string id;
  LearnerKind kind = LearnerKind::Cart;
  TrainConfig config;
  std::optional<EvaluationReport> report;  // on the untouched test partition
  std::optional<Model> model;
  std::string error;  // set when training or evaluation failed

  bool ok() const noexcept { return report.has_value(); }
};

struct ClassifySpec {
  PartitionSpec partition;
  std::optional<BalanceSpec> balance = BalanceSpec{};  // nullopt: no rebalancing
  double threshold = kDefaultThreshold;
  bool prefer_interpretable = false;
  double interpretable_margin = 0.02;
  bool parallel = true;
  std::vector<std::string> features;  // empty: every schema predictor
};

struct Leaderboard {
  Target target = Target::Show;
  std::vector<std::string> features;
  std::vector<CandidateResult> entries;  // ranked; failed candidates last
  std::size_t champion = 0;              // index into entries
  bool interpretable_pick = false;       // champion chosen by the tree preference
  std::size_t train_rows = 0;            // before balancing
  std::size_t balanced_rows = 0;         // rows the candidates were fitted on
  std::size_t test_rows = 0;
  double train_event_rate = 0.0;         // before balancing
  double fit_event_rate = 0.0;           // after balancing
  double test_event_rate = 0.0;
  bool test_balanced = false;            // always false; recorded for audit

  const CandidateResult& champion_entry() const { return entries.at(champion); }
};

// Ranking: AUC descending, accuracy descending, candidate id ascending.
bool ranks_before(const CandidateResult& a, const CandidateResult& b);

// Partition, balance the training side only, train every candidate and
// evaluate it on the untouched test side. A failing candidate is recorded
// with its error; if every candidate fails, the first error is rethrown.
Leaderboard auto_classify(const ColumnarDataset& ds, Target target, std::span<const Candidate> candidates,
                          const ClassifySpec& spec);

struct CascadeConfig {
  std::vector<LearnerKind> show_candidates = show_finalists();
  std::vector<LearnerKind> booked_candidates = booked_finalists();
  bool grid = false;
  TrainConfig train;
  double show_train_fraction = 0.8;
  double booked_train_fraction = 0.5;
  bool stratify = true;
  std::optional<BalanceMode> balance = BalanceMode::Upsample;
  ImputationPolicy imputation;
  double threshold = kDefaultThreshold;
  bool prefer_interpretable = false;
  bool parallel = true;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const CascadeConfig& cfg);
CascadeConfig cascade_config_from_json(const nlohmann::json& j);

struct CascadeModel {
  Schema schema;
  CascadeConfig config;
  ImputationFit imputation;
  Leaderboard show;
  Leaderboard booked;  // fitted on shown customers only

  const Model& show_model() const { return *show.champion_entry().model; }
  const Model& booked_model() const { return *booked.champion_entry().model; }
};

CascadeModel train_cascade(const ColumnarDataset& ds, const CascadeConfig& cfg);

// Maps a probability from a model fitted at event rate `fitted_rate` back to
// the population event rate `population_rate` (odds rescaling).
double adjust_to_prior(double p, double fitted_rate, double population_rate);

struct ScoredCustomer {
  std::size_t row = 0;
  std::string id;
  double p_show = 0.0;
  double p_book_given_show = 0.0;
  double p_book = 0.0;
  bool show_pred = false;
  bool book_pred = false;  // predicted to show and predicted to book
  bool unseen = false;     // carried a category absent at training time
};

struct ScoredShortlist {
  std::vector<ScoredCustomer> customers;  // p_book descending, stable
  double threshold = kDefaultThreshold;
  std::size_t unseen_rows = 0;
};

// Probabilities are rescaled from the balanced training rates to the
// natural rates of each stage's training partition before combining.
ScoredShortlist score_shortlist(const CascadeModel& cascade, const ColumnarDataset& ds,
                                double threshold = kDefaultThreshold);

struct DemandForecast {
  std::size_t customers = 0;
  double expected_shows = 0.0;
  double expected_bookings = 0.0;
  std::size_t predicted_shows = 0;
  std::size_t predicted_bookings = 0;
};

DemandForecast forecast_demand(std::span<const ScoredCustomer> scored);

void write_scored_csv(std::ostream& out, const ScoredShortlist& scored);

nlohmann::json to_json(const DemandForecast& forecast);
nlohmann::json to_json(const Leaderboard& board);
Leaderboard leaderboard_from_json(const nlohmann::json& j);

// Bundle directory: cascade.json, schema.cfg, show_model.json, booked_model.json.
void save_bundle(const std::filesystem::path& dir, const CascadeModel& cascade);
CascadeModel load_bundle(const std::filesystem::path& dir);

nlohmann::json report_json(const CascadeModel& cascade);
std::string render_report(const CascadeModel& cascade);

}  // namespace showcast
