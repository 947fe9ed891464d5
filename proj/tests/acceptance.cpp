#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "showcast/cascade.hpp"
#include "showcast/csv.hpp"
#include "showcast/error.hpp"
#include "showcast/evaluate.hpp"
#include "showcast/learners.hpp"
#include "showcast/planner.hpp"
#include "showcast/prep.hpp"
#include "showcast/synthgen.hpp"
#include "test_support.hpp"

using namespace showcast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int decimals = 4) { return format_double_fixed(v, decimals); }

// ---- 1 ----------------------------------------------------------------------------

Outcome flag_derivation() {
  struct Case {
    BookingStatus status;
    bool show, booked, discard;
  };
  const Case cases[] = {{BookingStatus::BookedCompleted, true, true, false},
                        {BookingStatus::ShowedNoBook, true, false, false},
                        {BookingStatus::NoShow, false, false, false},
                        {BookingStatus::BookedCanceled, false, false, true}};
  for (const auto& c : cases) {
    const auto f = derive_flags(c.status);
    if (f.show != c.show || f.booked != c.booked || f.discard != c.discard) {
      return {false, "wrong flags for " + std::string(to_string(c.status))};
    }
    if (f.booked && !f.show) return {false, "booked without show"};
  }
  const auto schema = testing::small_schema(1, 0);
  const auto ds = ColumnarDataset::from_records(schema, testing::header_of(schema),
                                                {{"a", "L0", "booked_completed"},
                                                 {"b", "L1", "showed_no_book"},
                                                 {"c", "L0", "no_show"},
                                                 {"d", "L1", "booked_canceled"}},
                                                true);
  const std::vector<std::uint8_t> show{1, 1, 0}, booked{1, 0, 0};
  const bool ok = ds.n_rows() == 3 && ds.provenance().discarded_canceled == 1 &&
                  std::equal(show.begin(), show.end(), ds.show_flags().begin(), ds.show_flags().end()) &&
                  std::equal(booked.begin(), booked.end(), ds.booked_flags().begin(), ds.booked_flags().end());
  return {ok, "4 statuses, 3 rows kept, 1 canceled dropped"};
}

// ---- 2 ----------------------------------------------------------------------------

Outcome auc_oracle() {
  Rng rng(2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = 2 + rng.below(99);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    const bool coarse = rng.bernoulli(0.5);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = coarse ? double(rng.below(5)) / 4.0 : rng.uniform();
      y[k] = rng.bernoulli(0.5);
    }
    y[0] = 1;
    y[1] = 0;
    double wins = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (!y[a] || y[b]) continue;
        pairs += 1.0;
        wins += s[a] > s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
      }
    }
    const double oracle = wins / pairs;
    worst = std::max({worst, std::abs(trapezoid_area(roc_curve(s, y)) - oracle), std::abs(auc(s, y) - oracle)});
  }
  return {worst <= 1e-12, "1000 instances, max deviation " + format_double(worst)};
}

// ---- 3 ----------------------------------------------------------------------------

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  return scale > 0.0 ? std::sqrt(diff) / scale : std::sqrt(diff);
}

Outcome gradients() {
  Rng rng(3);
  constexpr double h = 1e-5;
  double worst_lr = 0.0, worst_mlp = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto n = 5 + rng.below(40), d = 1 + rng.below(8);
    DenseMatrix X(n, d);
    for (auto& v : X.data) v = rng.normal();
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = rng.bernoulli(0.5);
    const double l2 = rng.uniform() * 0.1;

    std::vector<double> p(d + 1), g(d + 1), fd(d + 1);
    for (auto& v : p) v = rng.normal();
    logistic_objective(p, X, y, l2, g);
    for (std::size_t k = 0; k <= d; ++k) {
      auto up = p, down = p;
      up[k] += h;
      down[k] -= h;
      fd[k] = (logistic_objective(up, X, y, l2, {}) - logistic_objective(down, X, y, l2, {})) / (2 * h);
    }
    worst_lr = std::max(worst_lr, rel_error(g, fd));

    NeuralNet net;
    net.hidden_units = 1 + rng.below(8);
    net.w1.resize(net.hidden_units * d);
    net.b1.resize(net.hidden_units);
    net.w2.resize(net.hidden_units);
    for (auto* v : {&net.w1, &net.b1, &net.w2}) {
      for (auto& x : *v) x = rng.normal();
    }
    net.b2 = rng.normal();
    const auto base = net.flatten();
    std::vector<double> mg(base.size()), mfd(base.size());
    mlp_objective(net, X, y, l2, mg);
    for (std::size_t k = 0; k < base.size(); ++k) {
      auto q = base;
      q[k] += h;
      net.assign(q);
      const double up = mlp_objective(net, X, y, l2, {});
      q[k] -= 2 * h;
      net.assign(q);
      mfd[k] = (up - mlp_objective(net, X, y, l2, {})) / (2 * h);
    }
    net.assign(base);
    worst_mlp = std::max(worst_mlp, rel_error(mg, mfd));
  }
  return {worst_lr < 1e-4 && worst_mlp < 1e-4,
          "50+50 instances, max relative error LR " + format_double(worst_lr) + ", MLP " + format_double(worst_mlp)};
}

// ---- 4 ----------------------------------------------------------------------------

Outcome tree_invariants() {
  Rng rng(4);
  int built = 0;
  for (int attempt = 0; built < 100 && attempt < 1000; ++attempt) {
    testing::RandomDataSpec spec;
    spec.rows = 30 + rng.below(300);
    spec.n_cat = 1 + rng.below(3);
    spec.n_num = rng.below(3);
    spec.levels = 2 + rng.below(4);
    spec.missing_rate = rng.bernoulli(0.5) ? 0.1 : 0.0;
    const auto ds = testing::random_dataset(rng, spec);
    TrainConfig cfg;
    cfg.max_depth = 1 + static_cast<int>(rng.below(6));
    cfg.min_leaf = 1 + rng.below(20);
    const auto kind = built % 2 ? LearnerKind::Chaid : LearnerKind::Cart;
    const auto features = ds.schema().predictor_names();
    Model model;
    try {
      model = train_model(kind, ds, Target::Show, cfg, features);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateTarget) continue;
      throw;
    }
    ++built;
    const auto& tree = std::get<DecisionTree>(model.body);
    const auto data = encode(tree.layout, ds);
    const auto rules = extract_rules(tree);
    const auto preds = predict_proba(model, ds);
    std::size_t leaf_total = 0;
    std::map<int, std::size_t> routed;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      if (tree.nodes[i].is_leaf()) leaf_total += tree.nodes[i].n;
    }
    if (leaf_total != ds.n_rows()) return {false, "leaf counts do not sum to n"};
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      ++routed[tree.leaf_for(data, r)];
      int hits = 0;
      double p = -1.0;
      for (const auto& rule : rules) {
        if (rule.matches(tree, data, r)) {
          ++hits;
          p = rule.p_event;
        }
      }
      if (hits != 1) return {false, "row matched " + std::to_string(hits) + " rules"};
      if (p != preds.p[r]) return {false, "rule replay differs from predict_proba"};
    }
    for (const auto& [leaf, count] : routed) {
      if (tree.nodes[static_cast<std::size_t>(leaf)].n != count) return {false, "leaf count differs from routing"};
    }
  }
  return {built == 100, std::to_string(built) + " trees (CART and CHAID), rules replayed on every row"};
}

// ---- 5 ----------------------------------------------------------------------------

Outcome balance_contract() {
  std::string detail;
  bool ok = true;
  for (double ratio : {0.05, 0.128, 0.2, 0.4}) {
    const std::size_t n = 10000;
    const auto events = static_cast<std::size_t>(std::llround(ratio * double(n)));
    std::vector<int> flags(n, 0);
    std::fill(flags.begin(), flags.begin() + static_cast<long>(events), 1);
    const auto ds = testing::flags_dataset(flags);
    for (auto mode : {BalanceMode::Upsample, BalanceMode::Downsample}) {
      const auto b = balance(ds, Target::Show, {mode, 0.5, 5});
      std::size_t minority = 0;
      for (auto f : b.show_flags()) minority += f;
      const double off = std::abs(double(minority) - 0.5 * double(b.n_rows()));
      ok = ok && off <= 1.0;
      detail += (detail.empty() ? "" : ", ") + fmt(ratio, 3) + "/" + std::string(to_string(mode)) + " off " + fmt(off, 1);
    }
  }
  return {ok, "minority offset in rows: " + detail};
}

// ---- 6, 7, 8 ----------------------------------------------------------------------

const GeneratedCorpus& reference_corpus() {
  static const GeneratedCorpus c = generate(GeneratorConfig::historical(1), BehaviorProfile::reference());
  return c;
}

Outcome marginal_fidelity() {
  const auto& ds = reference_corpus().dataset;
  double shows = 0, booked = 0, cell_shows = 0, cell_booked = 0;
  const auto& buyer = ds.column("buyer_type");
  const auto& income = ds.column("income_band");
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    shows += ds.show_flags()[r];
    booked += ds.booked_flags()[r];
    if (ds.show_flags()[r] && buyer.cell_text(r) == "first-time" && income.cell_text(r) == "medium") {
      ++cell_shows;
      cell_booked += ds.booked_flags()[r];
    }
  }
  const double show_rate = shows / double(ds.n_rows());
  const double book_rate = booked / double(ds.n_rows());
  const double cell = cell_booked / cell_shows;
  const bool ok = reference_corpus().records.size() == 162710 && std::abs(show_rate - 0.872) <= 0.005 &&
                  std::abs(book_rate - 0.202) <= 0.005 && cell > 0.8;
  return {ok, "n=162710, show " + fmt(100 * show_rate, 2) + "%, booked " + fmt(100 * book_rate, 2) +
                  "%, first-time/medium book|show " + fmt(cell, 3)};
}

const CascadeModel& reference_cascade() {
  static const CascadeModel m = train_cascade(reference_corpus().dataset, CascadeConfig{});
  return m;
}

Outcome cascade_quality() {
  const auto& m = reference_cascade();
  const double s = m.show.champion_entry().report->auc;
  const double b = m.booked.champion_entry().report->auc;
  return {s >= 0.75 && b >= 0.85, "stage 1 " + m.show.champion_entry().id + " AUC " + fmt(s) + ", stage 2 " +
                                      m.booked.champion_entry().id + " AUC " + fmt(b)};
}

Outcome leakage_guards() {
  const auto& ds = reference_corpus().dataset;
  const auto& m = reference_cascade();
  const auto& status = ds.schema().status_column().name;
  const bool no_booked_flag =
      std::find(m.show.features.begin(), m.show.features.end(), status) == m.show.features.end();
  std::size_t shown = 0;
  for (auto f : ds.show_flags()) shown += f;
  const bool stage2_shown_only = m.booked.train_rows + m.booked.test_rows == shown;
  const bool tests_untouched = !m.show.test_balanced && !m.booked.test_balanced;

  // Shuffled-label control: permute the (show, booked) pairs across rows.
  std::vector<std::size_t> order(ds.n_rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(8);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::uint8_t> show(ds.n_rows()), booked(ds.n_rows());
  for (std::size_t i = 0; i < order.size(); ++i) {
    show[i] = ds.show_flags()[order[i]];
    booked[i] = ds.booked_flags()[order[i]];
  }
  const ColumnarDataset control(ds.schema(), ds.columns(), show, booked,
                                std::vector<std::size_t>(ds.row_ids().begin(), ds.row_ids().end()), ds.provenance(),
                                true);
  ClassifySpec spec;
  spec.partition = {0.8, 1, Target::Show};
  const auto board = auto_classify(control, Target::Show, make_candidates(show_finalists(), TrainConfig{}, false), spec);
  double lo = 1.0, hi = 0.0;
  for (const auto& e : board.entries) {
    if (!e.ok()) return {false, "control candidate failed: " + e.error};
    lo = std::min(lo, e.report->auc);
    hi = std::max(hi, e.report->auc);
  }
  const bool control_ok = lo >= 0.45 && hi <= 0.55;
  return {no_booked_flag && stage2_shown_only && tests_untouched && control_ok,
          "shuffled control AUC in [" + fmt(lo) + ", " + fmt(hi) + "], status column absent from stage 1: " +
              (no_booked_flag ? "yes" : "no") + ", test partitions unbalanced: " + (tests_untouched ? "yes" : "no") +
              ", stage 2 on shown rows only: " + (stage2_shown_only ? "yes" : "no")};
}

// ---- 9 ----------------------------------------------------------------------------

Outcome planner_minimality() {
  const CapacityParams cap{5, 8.0, 0.85, 20.0};
  const DemandParams dem{2000.0, 0.5};
  const auto p = plan(cap, dem);
  bool ok = p.time_available == 680.0 && p.time_required == 1000.0 && p.ratio == 1000.0 / 680.0 &&
            std::abs(p.ratio - 1.4706) < 5e-5 && p.optimal_staff == 8 && !p.feasible;
  Rng rng(9);
  for (int i = 0; i < 200 && ok; ++i) {
    CapacityParams c{1 + std::int64_t(rng.below(30)), 1.0 + rng.uniform() * 11.0, 0.05 + rng.uniform() * 0.95,
                     1.0 + double(rng.below(30))};
    const DemandParams d{1.0 + double(rng.below(20000)) * rng.uniform(), minutes_to_hours(1.0 + double(rng.below(90)))};
    const auto q = plan(c, d);
    auto feasible = [&](std::int64_t staff) {
      c.staff_count = staff;
      return time_required(d) / time_available(c) <= 1.0;
    };
    std::int64_t scan = 1;
    while (!feasible(scan)) ++scan;
    ok = q.optimal_staff == scan && feasible(q.optimal_staff) && (q.optimal_staff == 1 || !feasible(q.optimal_staff - 1));
  }
  return {ok, "680 h available, 1000 h required, ratio " + fmt(p.ratio) + ", optimal " +
                  std::to_string(p.optimal_staff) + "; 200 random instances checked by scan"};
}

// ---- 10 ---------------------------------------------------------------------------

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = s.str();
  }
  return files;
}

bool run_pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::string> steps{
      "--seed 1 --out gen generate",
      "--seed 1 --out bundle --schema gen/schema.cfg train --data gen/customers.csv",
      "--seed 1 --out scored score --bundle bundle --data gen/customers.csv",
      "--seed 1 --out plan plan --staff 500 --hours 8 --utilization 0.85 --days 20 --customers scored/scored.csv "
      "--service-minutes 30 --what-if 500..540",
      "--seed 1 --out report report --bundle bundle"};
  for (const auto& step : steps) {
    const std::string cmd = "cd '" + dir.string() + "' && '" SHOWCAST_CLI "' " + step + " > /dev/null";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      std::fprintf(stderr, "pipeline step failed: %s\n", step.c_str());
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  const auto base = fs::temp_directory_path() / "showcast_acceptance";
  if (!run_pipeline(base / "run1") || !run_pipeline(base / "run2")) return {false, "pipeline failed"};
  const auto a = tree_contents(base / "run1");
  const auto b = tree_contents(base / "run2");
  std::size_t bytes = 0;
  for (const auto& [_, v] : a) bytes += v.size();
  if (a.size() != b.size()) return {false, "artifact trees list different files"};
  for (const auto& [name, content] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != content) return {false, "artifact differs: " + name};
  }
  return {true, std::to_string(a.size()) + " files, " + std::to_string(bytes) + " bytes identical across two runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"flag derivation", flag_derivation},
      {"auc oracle equivalence", auc_oracle},
      {"gradient correctness", gradients},
      {"tree invariants", tree_invariants},
      {"balance contract", balance_contract},
      {"synthetic marginal fidelity", marginal_fidelity},
      {"cascade quality", cascade_quality},
      {"leakage guards", leakage_guards},
      {"planner minimality", planner_minimality},
      {"determinism", determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !out.pass;
    std::printf("criterion %zu %s: %s (%s) [%.1f s]\n", i + 1, criteria[i].first.c_str(), out.pass ? "PASS" : "FAIL",
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
