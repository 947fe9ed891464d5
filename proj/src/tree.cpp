#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "showcast/csv.hpp"
#include "showcast/error.hpp"
#include "showcast/learners.hpp"
#include "showcast/stats.hpp"

namespace showcast {

namespace {

constexpr double kMinGain = 1e-12;

// n * Gini impurity of a node with n rows and e events.
double weighted_gini(double n, double e) { return n > 0.0 ? 2.0 * e * (n - e) / n : 0.0; }

void check_two_classes(std::span<const std::uint8_t> y, Target target) {
  const auto events = std::count(y.begin(), y.end(), std::uint8_t{1});
  if (events == 0 || static_cast<std::size_t>(events) == y.size()) {
    throw Error(ErrorCode::DegenerateTarget,
                std::string(to_string(target)) + " flag has a single class in the training data");
  }
}

struct SplitChoice {
  int feature = -1;
  SplitKind kind = SplitKind::Threshold;
  double threshold = 0.0;
  std::vector<int> slot_of_value;
  std::size_t slots = 2;
  int fallback_slot = 0;
  double score = 0.0;
};

// Rows of a node routed into children according to a split.
std::vector<std::vector<std::size_t>> route_rows(const DecisionTree& tree, const EncodedData& X,
                                                 const SplitChoice& s,
                                                 const std::vector<std::size_t>& rows) {
  std::vector<std::vector<std::size_t>> out(s.slots);
  for (auto r : rows) {
    const double v = X.at(static_cast<std::size_t>(s.feature), r);
    int slot = s.fallback_slot;
    if (!std::isnan(v)) {
      switch (s.kind) {
        case SplitKind::Threshold: slot = v < s.threshold ? 0 : 1; break;
        case SplitKind::Categories:
          if (v != kUnseenCategory) slot = s.slot_of_value[static_cast<std::size_t>(v)];
          break;
        case SplitKind::Bins:
          slot = s.slot_of_value[bin_of(tree.bin_edges[static_cast<std::size_t>(s.feature)], v)];
          break;
      }
    }
    out[static_cast<std::size_t>(slot)].push_back(r);
  }
  return out;
}

class TreeBuilder {
 public:
  TreeBuilder(DecisionTree& tree, const EncodedData& X, std::span<const std::uint8_t> y,
              const TrainConfig& cfg)
      : tree_(tree), X_(X), y_(y), cfg_(cfg) {}

  int build(const std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    {
      auto& node = tree_.nodes.back();
      node.n = rows.size();
      node.depth = depth;
      for (auto r : rows) node.events += y_[r];
    }
    const auto n = tree_.nodes[id].n;
    const auto events = tree_.nodes[id].events;
    if (depth >= cfg_.max_depth || n < 2 * cfg_.min_leaf || events == 0 || events == n) return id;

    auto split = tree_.kind == LearnerKind::Cart ? best_gini_split(rows) : best_chaid_split(rows);
    if (!split) return id;
    auto parts = route_rows(tree_, X_, *split, rows);
    {
      auto& node = tree_.nodes[id];
      node.feature = split->feature;
      node.split = split->kind;
      node.threshold = split->threshold;
      node.slot_of_value = split->slot_of_value;
      node.fallback_slot = split->fallback_slot;
      node.score = split->score;
    }
    std::vector<int> children;
    for (auto& part : parts) children.push_back(build(part, depth + 1));
    tree_.nodes[id].children = std::move(children);
    return id;
  }

 private:
  // ---- CART ----
  std::optional<SplitChoice> best_gini_split(const std::vector<std::size_t>& rows) {
    const double n = double(rows.size());
    double e = 0.0;
    for (auto r : rows) e += y_[r];
    const double parent = weighted_gini(n, e);
    const double min_leaf = double(cfg_.min_leaf);
    std::optional<SplitChoice> best;

    auto consider = [&](double nl, double el, double nr, double er, double nm, double em,
                        auto&& make) {
      // Missing values follow the child with more rows.
      const int fallback = nl >= nr ? 0 : 1;
      if (fallback == 0) { nl += nm; el += em; } else { nr += nm; er += em; }
      if (nl < min_leaf || nr < min_leaf) return;
      const double gain = (parent - weighted_gini(nl, el) - weighted_gini(nr, er)) / n;
      if (gain > kMinGain && (!best || gain > best->score)) {
        best = make();
        best->score = gain;
        best->fallback_slot = fallback;
      }
    };

    for (std::size_t f = 0; f < tree_.layout.features.size(); ++f) {
      const auto& spec = tree_.layout.features[f];
      double nm = 0.0, em = 0.0;
      if (spec.kind == ColumnKind::Numeric) {
        std::vector<std::pair<double, std::uint8_t>> vals;
        vals.reserve(rows.size());
        for (auto r : rows) {
          const double v = X_.at(f, r);
          if (std::isnan(v)) { nm += 1; em += y_[r]; }
          else vals.emplace_back(v, y_[r]);
        }
        std::sort(vals.begin(), vals.end());
        const double nn = double(vals.size());
        double ne = 0.0;
        for (const auto& v : vals) ne += v.second;
        double nl = 0.0, el = 0.0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
          nl += 1;
          el += vals[i].second;
          if (vals[i].first == vals[i + 1].first) continue;
          const double lo = vals[i].first, hi = vals[i + 1].first;
          consider(nl, el, nn - nl, ne - el, nm, em, [&] {
            SplitChoice s;
            s.feature = static_cast<int>(f);
            s.kind = SplitKind::Threshold;
            s.threshold = 0.5 * (lo + hi);
            if (!(s.threshold > lo)) s.threshold = hi;
            return s;
          });
        }
      } else {
        const std::size_t k = spec.categories.size();
        std::vector<double> cn(k, 0.0), ce(k, 0.0);
        for (auto r : rows) {
          const double v = X_.at(f, r);
          if (std::isnan(v) || v == kUnseenCategory) { nm += 1; em += y_[r]; continue; }
          cn[static_cast<std::size_t>(v)] += 1;
          ce[static_cast<std::size_t>(v)] += y_[r];
        }
        std::vector<std::size_t> present;
        for (std::size_t c = 0; c < k; ++c) {
          if (cn[c] > 0) present.push_back(c);
        }
        // Ordering by event rate makes the prefix scan optimal for a binary target.
        std::stable_sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
          return ce[a] * cn[b] < ce[b] * cn[a];
        });
        double nn = 0.0, ne = 0.0;
        for (auto c : present) { nn += cn[c]; ne += ce[c]; }
        double nl = 0.0, el = 0.0;
        for (std::size_t i = 0; i + 1 < present.size(); ++i) {
          nl += cn[present[i]];
          el += ce[present[i]];
          consider(nl, el, nn - nl, ne - el, nm, em, [&] {
            SplitChoice s;
            s.feature = static_cast<int>(f);
            s.kind = SplitKind::Categories;
            s.slot_of_value.assign(k, -1);
            for (std::size_t j = 0; j < present.size(); ++j) s.slot_of_value[present[j]] = j <= i ? 0 : 1;
            return s;
          });
        }
        if (best && best->feature == static_cast<int>(f) && best->kind == SplitKind::Categories) {
          // Categories absent from this node follow the fallback child.
          for (auto& slot : best->slot_of_value) {
            if (slot < 0) slot = best->fallback_slot;
          }
        }
      }
    }
    return best;
  }

  // ---- CHAID ----
  std::optional<SplitChoice> best_chaid_split(const std::vector<std::size_t>& rows) {
    std::optional<SplitChoice> best;
    for (std::size_t f = 0; f < tree_.layout.features.size(); ++f) {
      const auto& spec = tree_.layout.features[f];
      const bool ordinal = spec.kind == ColumnKind::Numeric;
      const std::size_t values = ordinal ? tree_.bin_edges[f].size() + 1 : spec.categories.size();
      std::vector<std::array<double, 2>> counts(values, {0.0, 0.0});
      for (auto r : rows) {
        const double v = X_.at(f, r);
        if (std::isnan(v) || v == kUnseenCategory) continue;
        const std::size_t idx = ordinal ? bin_of(tree_.bin_edges[f], v) : static_cast<std::size_t>(v);
        counts[idx][y_[r]] += 1;
      }
      const auto groups = chaid_merge(counts, ordinal, cfg_.alpha_merge, cfg_.min_leaf);
      if (groups.size() < 2) continue;
      std::vector<std::array<double, 2>> table(groups.size(), {0.0, 0.0});
      std::size_t present = 0;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        for (auto v : groups[g]) {
          table[g][0] += counts[v][0];
          table[g][1] += counts[v][1];
        }
        present += groups[g].size();
      }
      const auto test = stats::chi_square_test(table);
      const int c = static_cast<int>(present), g = static_cast<int>(groups.size());
      const double multiplier = ordinal ? stats::bonferroni_ordinal(c, g) : stats::bonferroni_nominal(c, g);
      const double adjusted = std::min(1.0, test.p_value * multiplier);
      if (adjusted > cfg_.alpha_split) continue;
      if (best && !(adjusted < best->score)) continue;

      SplitChoice s;
      s.feature = static_cast<int>(f);
      s.kind = ordinal ? SplitKind::Bins : SplitKind::Categories;
      s.slots = groups.size();
      s.score = adjusted;
      std::size_t largest = 0;
      for (std::size_t k = 1; k < groups.size(); ++k) {
        if (table[k][0] + table[k][1] > table[largest][0] + table[largest][1]) largest = k;
      }
      s.fallback_slot = static_cast<int>(largest);
      s.slot_of_value.assign(values, s.fallback_slot);
      for (std::size_t k = 0; k < groups.size(); ++k) {
        for (auto v : groups[k]) s.slot_of_value[v] = static_cast<int>(k);
      }
      best = std::move(s);
    }
    return best;
  }

  DecisionTree& tree_;
  const EncodedData& X_;
  std::span<const std::uint8_t> y_;
  const TrainConfig& cfg_;
};

std::vector<std::uint8_t> target_vector(const ColumnarDataset& ds, Target target) {
  if (!ds.labeled()) throw Error(ErrorCode::InvalidParams, "training needs a labeled dataset");
  const auto y = ds.flags(target);
  return {y.begin(), y.end()};
}

}  // namespace

double gini_impurity(double p) { return 2.0 * p * (1.0 - p); }

std::size_t bin_of(std::span<const double> edges, double value) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

std::vector<std::vector<std::size_t>> chaid_merge(std::span<const std::array<double, 2>> counts,
                                                  bool ordinal, double alpha_merge,
                                                  std::size_t min_group_rows) {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::array<double, 2>> totals;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (counts[v][0] + counts[v][1] > 0) {
      groups.push_back({v});
      totals.push_back(counts[v]);
    }
  }
  auto pair_p = [&](std::size_t i, std::size_t j) {
    const std::array<std::array<double, 2>, 2> t{totals[i], totals[j]};
    return stats::chi_square_test(t).p_value;
  };
  auto merge = [&](std::size_t i, std::size_t j) {  // i < j
    groups[i].insert(groups[i].end(), groups[j].begin(), groups[j].end());
    std::sort(groups[i].begin(), groups[i].end());
    totals[i][0] += totals[j][0];
    totals[i][1] += totals[j][1];
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(j));
    totals.erase(totals.begin() + static_cast<std::ptrdiff_t>(j));
  };
  auto eligible = [&](std::size_t i, std::size_t j) { return !ordinal || j == i + 1; };

  while (true) {
    // Merge the most similar eligible pair while it is not significantly different.
    while (groups.size() > 1) {
      double best_p = -1.0;
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
          if (!eligible(i, j)) continue;
          const double p = pair_p(i, j);
          if (p > best_p) { best_p = p; bi = i; bj = j; }
        }
      }
      if (best_p <= alpha_merge) break;
      merge(bi, bj);
    }
    if (groups.size() < 2) break;
    // Fold the smallest undersized group into its most similar eligible partner.
    std::optional<std::size_t> small;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const double rows = totals[i][0] + totals[i][1];
      if (rows < double(min_group_rows) &&
          (!small || rows < totals[*small][0] + totals[*small][1])) {
        small = i;
      }
    }
    if (!small) break;
    double best_p = -1.0;
    std::size_t partner = 0;
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (j == *small) continue;
      const auto a = std::min(j, *small), b = std::max(j, *small);
      if (!eligible(a, b)) continue;
      const double p = pair_p(a, b);
      if (p > best_p) { best_p = p; partner = j; }
    }
    merge(std::min(partner, *small), std::max(partner, *small));
  }
  return groups;
}

int DecisionTree::leaf_for(const EncodedData& data, std::size_t row) const {
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const auto& node = nodes[id];
    const double v = data.at(static_cast<std::size_t>(node.feature), row);
    int slot = node.fallback_slot;
    if (!std::isnan(v)) {
      switch (node.split) {
        case SplitKind::Threshold: slot = v < node.threshold ? 0 : 1; break;
        case SplitKind::Categories:
          if (v != kUnseenCategory) slot = node.slot_of_value[static_cast<std::size_t>(v)];
          break;
        case SplitKind::Bins:
          slot = node.slot_of_value[bin_of(bin_edges[static_cast<std::size_t>(node.feature)], v)];
          break;
      }
    }
    id = node.children[static_cast<std::size_t>(slot)];
  }
  return id;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, static_cast<std::size_t>(n.depth));
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

DecisionTree train_cart(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                        std::span<const std::string> features) {
  cfg.validate();
  const auto y = target_vector(train, target);
  check_two_classes(y, target);
  DecisionTree tree;
  tree.kind = LearnerKind::Cart;
  tree.layout = FeatureLayout::from_dataset(train, features);
  const auto X = encode(tree.layout, train);
  std::vector<std::size_t> rows(train.n_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeBuilder(tree, X, y, cfg).build(rows, 0);
  return tree;
}

DecisionTree train_chaid(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                         std::span<const std::string> features) {
  cfg.validate();
  const auto y = target_vector(train, target);
  check_two_classes(y, target);
  DecisionTree tree;
  tree.kind = LearnerKind::Chaid;
  tree.layout = FeatureLayout::from_dataset(train, features);
  const auto X = encode(tree.layout, train);
  // Numeric predictors are cut at the training quantiles (deciles by default).
  tree.bin_edges.resize(tree.layout.features.size());
  for (std::size_t f = 0; f < tree.layout.features.size(); ++f) {
    if (tree.layout.features[f].kind != ColumnKind::Numeric) continue;
    std::vector<double> vals;
    for (double v : X.columns[f]) {
      if (!std::isnan(v)) vals.push_back(v);
    }
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    auto& edges = tree.bin_edges[f];
    for (std::size_t k = 1; k < cfg.chaid_bins; ++k) {
      const double q = vals[k * vals.size() / cfg.chaid_bins];
      if (q > vals.front() && (edges.empty() || q > edges.back())) edges.push_back(q);
    }
  }
  std::vector<std::size_t> rows(train.n_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeBuilder(tree, X, y, cfg).build(rows, 0);
  return tree;
}

// ---- rules ------------------------------------------------------------------------------

bool RuleCondition::matches(const DecisionTree& tree, const EncodedData& data, std::size_t row) const {
  const double v = data.at(feature, row);
  if (std::isnan(v)) return includes_missing;
  switch (kind) {
    case SplitKind::Threshold: return lower <= v && v < upper;
    case SplitKind::Categories:
      if (v == kUnseenCategory) return includes_missing;
      return std::find(values.begin(), values.end(), static_cast<int>(v)) != values.end();
    case SplitKind::Bins: {
      const auto& edges = tree.bin_edges[feature];
      const int bin = static_cast<int>(std::count_if(edges.begin(), edges.end(), [&](double e) { return e <= v; }));
      return std::find(values.begin(), values.end(), bin) != values.end();
    }
  }
  return false;
}

bool Rule::matches(const DecisionTree& tree, const EncodedData& data, std::size_t row) const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [&](const RuleCondition& c) { return c.matches(tree, data, row); });
}

std::vector<Rule> extract_rules(const DecisionTree& tree) {
  std::vector<Rule> rules;
  std::vector<RuleCondition> path;
  auto walk = [&](auto&& self, int id) -> void {
    const auto& node = tree.nodes[id];
    if (node.is_leaf()) {
      rules.push_back({path, node.p_event(), node.n, id});
      return;
    }
    for (std::size_t slot = 0; slot < node.children.size(); ++slot) {
      RuleCondition c;
      c.feature = static_cast<std::size_t>(node.feature);
      c.kind = node.split;
      c.includes_missing = node.fallback_slot == static_cast<int>(slot);
      if (node.split == SplitKind::Threshold) {
        (slot == 0 ? c.upper : c.lower) = node.threshold;
      } else {
        for (std::size_t v = 0; v < node.slot_of_value.size(); ++v) {
          if (node.slot_of_value[v] == static_cast<int>(slot)) c.values.push_back(static_cast<int>(v));
        }
      }
      path.push_back(std::move(c));
      self(self, node.children[slot]);
      path.pop_back();
    }
  };
  walk(walk, 0);
  return rules;
}

std::string render_rule(const DecisionTree& tree, const Rule& rule) {
  std::ostringstream out;
  if (rule.conditions.empty()) out << "(all customers)";
  for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
    const auto& c = rule.conditions[i];
    const auto& spec = tree.layout.features[c.feature];
    if (i) out << " AND ";
    out << spec.name;
    switch (c.kind) {
      case SplitKind::Threshold:
        if (std::isinf(c.lower)) out << " < " << format_double(c.upper);
        else out << " >= " << format_double(c.lower);
        break;
      case SplitKind::Categories: {
        out << " in {";
        for (std::size_t k = 0; k < c.values.size(); ++k) {
          out << (k ? ", " : "") << spec.categories[static_cast<std::size_t>(c.values[k])];
        }
        out << '}';
        break;
      }
      case SplitKind::Bins: {
        const auto& edges = tree.bin_edges[c.feature];
        out << " in ";
        for (std::size_t k = 0; k < c.values.size(); ++k) {
          const auto b = static_cast<std::size_t>(c.values[k]);
          out << (k ? " u " : "") << '[' << (b == 0 ? std::string("-inf") : format_double(edges[b - 1]))
              << ", " << (b == edges.size() ? std::string("inf") : format_double(edges[b])) << ')';
        }
        break;
      }
    }
    if (c.includes_missing) out << " (or missing)";
  }
  std::ostringstream p;
  p.precision(4);
  p << std::fixed << rule.p_event;
  out << " -> p=" << p.str() << " (n=" << rule.n << ')';
  return out.str();
}

}  // namespace showcast
