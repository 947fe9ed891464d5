#include <cmath>

#include "showcast/error.hpp"
#include "showcast/io.hpp"
#include "showcast/learners.hpp"

namespace showcast {

namespace {

using nlohmann::json;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string_view split_kind_name(SplitKind kind) {
  switch (kind) {
    case SplitKind::Threshold: return "threshold";
    case SplitKind::Categories: return "categories";
    case SplitKind::Bins: return "bins";
  }
  return "threshold";
}

SplitKind parse_split_kind(const std::string& text) {
  if (text == "threshold") return SplitKind::Threshold;
  if (text == "categories") return SplitKind::Categories;
  if (text == "bins") return SplitKind::Bins;
  throw Error(ErrorCode::CorruptBundle, "unknown split kind '" + text + "'");
}

json tree_to_json(const DecisionTree& tree) {
  auto nodes = json::array();
  for (const auto& node : tree.nodes) {
    json j{{"n", node.n}, {"events", node.events}, {"depth", node.depth}};
    if (!node.is_leaf()) {
      j["feature"] = node.feature;
      j["split"] = split_kind_name(node.split);
      if (node.split == SplitKind::Threshold) j["threshold"] = node.threshold;
      else j["slot_of_value"] = node.slot_of_value;
      j["children"] = node.children;
      j["fallback_slot"] = node.fallback_slot;
      j["score"] = node.score;
    }
    nodes.push_back(std::move(j));
  }
  return {{"layout", to_json(tree.layout)}, {"bin_edges", tree.bin_edges}, {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& j, LearnerKind kind) {
  DecisionTree tree;
  tree.kind = kind;
  tree.layout = feature_layout_from_json(j.at("layout"));
  tree.bin_edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode node;
    node.n = jn.at("n").get<std::size_t>();
    node.events = jn.at("events").get<std::size_t>();
    node.depth = jn.at("depth").get<int>();
    if (jn.contains("feature")) {
      node.feature = jn.at("feature").get<int>();
      node.split = parse_split_kind(jn.at("split").get<std::string>());
      if (node.split == SplitKind::Threshold) node.threshold = jn.at("threshold").get<double>();
      else node.slot_of_value = jn.at("slot_of_value").get<std::vector<int>>();
      node.children = jn.at("children").get<std::vector<int>>();
      node.fallback_slot = jn.at("fallback_slot").get<int>();
      node.score = jn.at("score").get<double>();
    }
    tree.nodes.push_back(std::move(node));
  }
  const auto n_nodes = static_cast<int>(tree.nodes.size());
  if (n_nodes == 0) throw Error(ErrorCode::CorruptBundle, "tree has no nodes");
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    if (node.feature >= static_cast<int>(tree.layout.features.size()) || node.children.empty() ||
        node.fallback_slot < 0 || node.fallback_slot >= static_cast<int>(node.children.size())) {
      throw Error(ErrorCode::CorruptBundle, "tree node refers to an unknown feature or child");
    }
    for (int c : node.children) {
      if (c <= 0 || c >= n_nodes) throw Error(ErrorCode::CorruptBundle, "tree child index out of range");
    }
  }
  return tree;
}

json logistic_to_json(const LogisticModel& m) {
  return {{"encoding", to_json(m.encoding)}, {"weights", m.weights},     {"intercept", m.intercept},
          {"converged", m.converged},        {"iterations", m.iterations}, {"gradient_norm", m.gradient_norm}};
}

LogisticModel logistic_from_json(const json& j) {
  LogisticModel m;
  m.encoding = design_encoding_from_json(j.at("encoding"));
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.converged = j.at("converged").get<bool>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.gradient_norm = j.at("gradient_norm").get<double>();
  if (m.weights.size() != m.encoding.width()) {
    throw Error(ErrorCode::CorruptBundle, "logistic weights do not match the design width");
  }
  return m;
}

json mlp_to_json(const NeuralNet& net) {
  return {{"encoding", to_json(net.encoding)}, {"hidden_units", net.hidden_units}, {"w1", net.w1},
          {"b1", net.b1}, {"w2", net.w2}, {"b2", net.b2}, {"epochs_run", net.epochs_run}};
}

NeuralNet mlp_from_json(const json& j) {
  NeuralNet net;
  net.encoding = design_encoding_from_json(j.at("encoding"));
  net.hidden_units = j.at("hidden_units").get<std::size_t>();
  net.w1 = j.at("w1").get<std::vector<double>>();
  net.b1 = j.at("b1").get<std::vector<double>>();
  net.w2 = j.at("w2").get<std::vector<double>>();
  net.b2 = j.at("b2").get<double>();
  net.epochs_run = j.at("epochs_run").get<std::size_t>();
  if (net.hidden_units == 0 || net.w1.size() != net.hidden_units * net.encoding.width() ||
      net.b1.size() != net.hidden_units || net.w2.size() != net.hidden_units) {
    throw Error(ErrorCode::CorruptBundle, "network weights do not match the declared shape");
  }
  return net;
}

}  // namespace

std::string_view learner_id(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Cart: return "cart";
    case LearnerKind::Chaid: return "chaid";
    case LearnerKind::Logistic: return "logistic";
    case LearnerKind::Mlp: return "mlp";
  }
  return "cart";
}

std::string_view learner_display_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Cart: return "C&RT";
    case LearnerKind::Chaid: return "CHAID";
    case LearnerKind::Logistic: return "LR";
    case LearnerKind::Mlp: return "NEURAL NETWORK";
  }
  return "C&RT";
}

LearnerKind parse_learner(std::string_view id) {
  if (id == "cart") return LearnerKind::Cart;
  if (id == "chaid") return LearnerKind::Chaid;
  if (id == "logistic") return LearnerKind::Logistic;
  if (id == "mlp") return LearnerKind::Mlp;
  throw Error(ErrorCode::InvalidParams, "unknown learner '" + std::string(id) + "'");
}

bool is_tree(LearnerKind kind) noexcept { return kind == LearnerKind::Cart || kind == LearnerKind::Chaid; }

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidParams, what); };
  if (max_depth < 0) fail("max_depth must be >= 0");
  if (min_leaf < 1) fail("min_leaf must be >= 1");
  if (!(alpha_split > 0.0 && alpha_split <= 1.0)) fail("alpha_split must be in (0, 1]");
  if (!(alpha_merge > 0.0 && alpha_merge <= 1.0)) fail("alpha_merge must be in (0, 1]");
  if (chaid_bins < 2) fail("chaid_bins must be >= 2");
  if (!(logistic_step > 0.0)) fail("logistic_step must be > 0");
  if (logistic_max_iter < 1) fail("logistic_max_iter must be >= 1");
  if (hidden_units < 1) fail("hidden_units must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail("validation_fraction must be in [0, 1)");
  if (!(l2 >= 0.0)) fail("l2 must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"max_depth", c.max_depth},
          {"min_leaf", c.min_leaf},
          {"alpha_split", c.alpha_split},
          {"alpha_merge", c.alpha_merge},
          {"chaid_bins", c.chaid_bins},
          {"logistic_step", c.logistic_step},
          {"logistic_max_iter", c.logistic_max_iter},
          {"hidden_units", c.hidden_units},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"patience", c.patience},
          {"validation_fraction", c.validation_fraction},
          {"l2", c.l2},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.max_depth = j.at("max_depth").get<int>();
  c.min_leaf = j.at("min_leaf").get<std::size_t>();
  c.alpha_split = j.at("alpha_split").get<double>();
  c.alpha_merge = j.at("alpha_merge").get<double>();
  c.chaid_bins = j.at("chaid_bins").get<std::size_t>();
  c.logistic_step = j.at("logistic_step").get<double>();
  c.logistic_max_iter = j.at("logistic_max_iter").get<std::size_t>();
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

const FeatureLayout& Model::layout() const {
  if (const auto* tree = std::get_if<DecisionTree>(&body)) return tree->layout;
  if (const auto* lr = std::get_if<LogisticModel>(&body)) return lr->encoding.layout;
  return std::get<NeuralNet>(body).encoding.layout;
}

Model train_model(LearnerKind kind, const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                  std::span<const std::string> features) {
  Model model;
  model.kind = kind;
  model.target = target;
  model.schema_fingerprint = train.schema().fingerprint();
  switch (kind) {
    case LearnerKind::Cart: model.body = train_cart(train, target, cfg, features); break;
    case LearnerKind::Chaid: model.body = train_chaid(train, target, cfg, features); break;
    case LearnerKind::Logistic: model.body = train_logistic(train, target, cfg, features); break;
    case LearnerKind::Mlp: model.body = train_mlp(train, target, cfg, features); break;
  }
  return model;
}

std::size_t Predictions::unseen_rows() const {
  std::size_t n = 0;
  for (auto u : unseen) n += u;
  return n;
}

Predictions predict_proba(const Model& model, const ColumnarDataset& ds) {
  const auto data = encode(model.layout(), ds);
  Predictions out;
  out.unseen = data.unseen;
  out.p.resize(data.n_rows);
  if (const auto* tree = std::get_if<DecisionTree>(&model.body)) {
    for (std::size_t r = 0; r < data.n_rows; ++r) {
      out.p[r] = tree->nodes[static_cast<std::size_t>(tree->leaf_for(data, r))].p_event();
    }
  } else if (const auto* lr = std::get_if<LogisticModel>(&model.body)) {
    const auto X = lr->encoding.matrix(data);
    for (std::size_t r = 0; r < X.rows; ++r) {
      const double* x = X.row(r);
      double z = lr->intercept;
      for (std::size_t j = 0; j < X.cols; ++j) z += lr->weights[j] * x[j];
      out.p[r] = sigmoid(z);
    }
  } else {
    const auto& net = std::get<NeuralNet>(model.body);
    const auto X = net.encoding.matrix(data);
    for (std::size_t r = 0; r < X.rows; ++r) out.p[r] = net.forward(X.row(r));
  }
  return out;
}

double predict_proba(const Model& model, const ColumnarDataset& ds, std::size_t row) {
  if (row >= ds.n_rows()) throw Error(ErrorCode::LengthMismatch, "row index out of range");
  const std::size_t idx[] = {row};
  return predict_proba(model, ds.take(idx)).p.front();
}

nlohmann::json to_json(const Model& model) {
  json body;
  if (const auto* tree = std::get_if<DecisionTree>(&model.body)) body = tree_to_json(*tree);
  else if (const auto* lr = std::get_if<LogisticModel>(&model.body)) body = logistic_to_json(*lr);
  else body = mlp_to_json(std::get<NeuralNet>(model.body));
  return {{"format", kModelFormat},
          {"version", kModelFormatVersion},
          {"learner", learner_id(model.kind)},
          {"target", to_string(model.target)},
          {"schema_fingerprint", model.schema_fingerprint},
          {"body", std::move(body)}};
}

Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorCode::CorruptBundle, "not a model document");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::CorruptBundle, "unsupported model format version");
    }
    Model model;
    model.kind = parse_learner(j.at("learner").get<std::string>());
    model.target = parse_target(j.at("target").get<std::string>());
    model.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    const auto& body = j.at("body");
    switch (model.kind) {
      case LearnerKind::Cart:
      case LearnerKind::Chaid: model.body = tree_from_json(body, model.kind); break;
      case LearnerKind::Logistic: model.body = logistic_from_json(body); break;
      case LearnerKind::Mlp: model.body = mlp_from_json(body); break;
    }
    return model;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptBundle) throw;
    throw Error(ErrorCode::CorruptBundle, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptBundle, e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& model) {
  write_file_atomic(path, to_json(model).dump(1) + "\n");
}

Model load_model(const std::filesystem::path& path) {
  const auto text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptBundle, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace showcast
