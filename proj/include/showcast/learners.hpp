#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "showcast/dataset.hpp"
#include "showcast/features.hpp"

namespace showcast {

enum class LearnerKind { Cart, Chaid, Logistic, Mlp };

std::string_view learner_id(LearnerKind kind);        // "cart", "chaid", "logistic", "mlp"
std::string_view learner_display_name(LearnerKind kind);  // "C&RT", "CHAID", "LR", "NEURAL NETWORK"
LearnerKind parse_learner(std::string_view id);
bool is_tree(LearnerKind kind) noexcept;

struct TrainConfig {
  // trees
  int max_depth = 6;
  std::size_t min_leaf = 50;
  double alpha_split = 0.05;
  double alpha_merge = 0.05;
  std::size_t chaid_bins = 10;
  // logistic regression (full-batch gradient descent, backtracking step)
  double logistic_step = 1.0;
  std::size_t logistic_max_iter = 500;
  // neural network
  std::size_t hidden_units = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  double validation_fraction = 0.1;
  // shared
  double l2 = 1e-4;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// ---- trees ----------------------------------------------------------------------

enum class SplitKind { Threshold, Categories, Bins };

struct TreeNode {
  std::size_t n = 0;
  std::size_t events = 0;
  int depth = 0;

  int feature = -1;  // -1 for leaves
  SplitKind split = SplitKind::Threshold;
  double threshold = 0.0;               // Threshold: value < threshold -> slot 0, else slot 1
  std::vector<int> slot_of_value;       // Categories: per category code; Bins: per bin
  std::vector<int> children;            // node index per slot
  int fallback_slot = 0;                // missing or unseen values: the child with most rows
  double score = 0.0;                   // Gini decrease (CART) or adjusted p-value (CHAID)

  bool is_leaf() const noexcept { return feature < 0; }
  double p_event() const noexcept { return n ? double(events) / double(n) : 0.0; }
};

// Binary Gini tree (kind Cart) or multiway chi-square tree (kind Chaid).
struct DecisionTree {
  LearnerKind kind = LearnerKind::Cart;
  FeatureLayout layout;
  std::vector<std::vector<double>> bin_edges;  // CHAID: per-feature cut points; empty otherwise
  std::vector<TreeNode> nodes;                 // nodes[0] is the root

  int leaf_for(const EncodedData& data, std::size_t row) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

// Bin index of a value given ascending cut points.
std::size_t bin_of(std::span<const double> edges, double value);

double gini_impurity(double p);

DecisionTree train_cart(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                        std::span<const std::string> features);
DecisionTree train_chaid(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                         std::span<const std::string> features);

// One CHAID merge pass on a value x {non-event, event} table. Returns the
// groups (lists of value indices, each sorted) in first-value order. Values
// with zero count are ignored. `ordinal` restricts merges to adjacent values.
std::vector<std::vector<std::size_t>> chaid_merge(std::span<const std::array<double, 2>> counts,
                                                  bool ordinal, double alpha_merge,
                                                  std::size_t min_group_rows);

// Decision rules, one per leaf.
struct RuleCondition {
  std::size_t feature = 0;
  SplitKind kind = SplitKind::Threshold;
  double lower = -std::numeric_limits<double>::infinity();  // Threshold: lower <= x < upper
  double upper = std::numeric_limits<double>::infinity();
  std::vector<int> values;    // Categories: category codes; Bins: bin indices
  bool includes_missing = false;  // also covers blanks and unseen categories

  bool matches(const DecisionTree& tree, const EncodedData& data, std::size_t row) const;
};

struct Rule {
  std::vector<RuleCondition> conditions;
  double p_event = 0.0;
  std::size_t n = 0;
  int leaf = 0;

  bool matches(const DecisionTree& tree, const EncodedData& data, std::size_t row) const;
};

std::vector<Rule> extract_rules(const DecisionTree& tree);
std::string render_rule(const DecisionTree& tree, const Rule& rule);

// ---- gradient-based learners ----------------------------------------------------------

struct LogisticModel {
  DesignEncoding encoding;
  std::vector<double> weights;
  double intercept = 0.0;
  bool converged = false;  // false: iteration limit hit above the gradient threshold
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

// Mean negative log-likelihood + l2/2 * |w|^2 (intercept unpenalized).
// params = weights followed by the intercept; grad has the same layout.
double logistic_objective(std::span<const double> params, const DenseMatrix& X,
                          std::span<const std::uint8_t> y, double l2, std::span<double> grad);

LogisticModel train_logistic(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                             std::span<const std::string> features);

struct NeuralNet {
  DesignEncoding encoding;
  std::size_t hidden_units = 0;
  std::vector<double> w1;  // hidden x input, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  std::size_t epochs_run = 0;

  std::size_t inputs() const noexcept { return hidden_units ? w1.size() / hidden_units : 0; }
  std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + 1; }
  // Flat parameter vector: w1, b1, w2, b2.
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);
  double forward(const double* x) const;
};

// Mean cross-entropy + l2/2 * (|w1|^2 + |w2|^2). grad uses the flatten() layout.
double mlp_objective(const NeuralNet& net, const DenseMatrix& X, std::span<const std::uint8_t> y,
                     double l2, std::span<double> grad);

NeuralNet train_mlp(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                    std::span<const std::string> features);

// ---- common model wrapper ---------------------------------------------------------------

struct Model {
  LearnerKind kind = LearnerKind::Cart;
  Target target = Target::Show;
  std::string schema_fingerprint;
  std::variant<DecisionTree, LogisticModel, NeuralNet> body;

  const FeatureLayout& layout() const;
};

Model train_model(LearnerKind kind, const ColumnarDataset& train, Target target,
                  const TrainConfig& cfg, std::span<const std::string> features);

struct Predictions {
  std::vector<double> p;
  std::vector<std::uint8_t> unseen;  // row had a category absent at training time

  std::size_t unseen_rows() const;
};

Predictions predict_proba(const Model& model, const ColumnarDataset& ds);
double predict_proba(const Model& model, const ColumnarDataset& ds, std::size_t row);

inline constexpr std::string_view kModelFormat = "showcast-model";
inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace showcast
