#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "showcast/cascade.hpp"
#include "showcast/error.hpp"
#include "showcast/synthgen.hpp"
#include "test_support.hpp"

using namespace showcast;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

const GeneratedCorpus& corpus() {
  static const GeneratedCorpus c = generate(GeneratorConfig::historical_scaled(20000, 3), BehaviorProfile::reference());
  return c;
}

CascadeConfig quick_config() {
  CascadeConfig cfg;
  cfg.train.epochs = 40;
  return cfg;
}

const CascadeModel& trained() {
  static const CascadeModel m = train_cascade(corpus().dataset, quick_config());
  return m;
}

CandidateResult result(std::string id, double auc_value, double accuracy) {
  CandidateResult r;
  r.id = std::move(id);
  EvaluationReport rep;
  rep.auc = auc_value;
  rep.accuracy = accuracy;
  r.report = rep;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "showcast_test_cascade" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

// Same rows with the (show, booked) pairs permuted.
ColumnarDataset shuffled_labels(const ColumnarDataset& ds, std::uint64_t seed) {
  std::vector<std::size_t> order(ds.n_rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::uint8_t> show(ds.n_rows()), booked(ds.n_rows());
  for (std::size_t i = 0; i < order.size(); ++i) {
    show[i] = ds.show_flags()[order[i]];
    booked[i] = ds.booked_flags()[order[i]];
  }
  return ColumnarDataset(ds.schema(), ds.columns(), show, booked,
                         std::vector<std::size_t>(ds.row_ids().begin(), ds.row_ids().end()), ds.provenance(), true);
}

}  // namespace

TEST_CASE("candidate sets") {
  CHECK(show_finalists() == std::vector<LearnerKind>{LearnerKind::Mlp, LearnerKind::Cart, LearnerKind::Chaid});
  CHECK(booked_finalists() == std::vector<LearnerKind>{LearnerKind::Mlp, LearnerKind::Chaid, LearnerKind::Logistic});
  CHECK(all_learners().size() == 4);
  CHECK(parse_learner_list("cart,mlp") == std::vector<LearnerKind>{LearnerKind::Cart, LearnerKind::Mlp});
  CHECK(code_of([] { parse_learner_list("cart,cart"); }) == ErrorCode::InvalidParams);
  const auto kinds = all_learners();
  const auto plain = make_candidates(kinds, TrainConfig{}, false);
  CHECK(plain.size() == 4);
  CHECK(plain[0].id() == "mlp");
  const auto grid = make_candidates(kinds, TrainConfig{}, true);
  CHECK(grid.size() > plain.size());
  std::vector<std::string> ids;
  for (const auto& c : grid) ids.push_back(c.id());
  CHECK(std::find(ids.begin(), ids.end(), "cart/depth4") != ids.end());
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
}

TEST_CASE("leaderboard ordering") {
  const auto a = result("mlp", 0.8, 0.7);
  const auto b = result("cart", 0.8, 0.7);
  const auto c = result("chaid", 0.8, 0.75);
  const auto d = result("logistic", 0.9, 0.1);
  CandidateResult failed;
  failed.id = "aaa";
  CHECK(ranks_before(b, a));
  CHECK_FALSE(ranks_before(a, b));
  CHECK(ranks_before(c, b));
  CHECK(ranks_before(d, c));
  CHECK(ranks_before(a, failed));
  CHECK_FALSE(ranks_before(failed, a));
  std::vector<CandidateResult> all{failed, a, b, c, d};
  std::sort(all.begin(), all.end(), ranks_before);
  std::vector<std::string> order;
  for (const auto& r : all) order.push_back(r.id);
  CHECK(order == std::vector<std::string>{"logistic", "chaid", "cart", "mlp", "aaa"});
}

TEST_CASE("auto classify keeps the test side untouched and ranks every candidate") {
  Rng rng(4);
  const auto ds = testing::random_dataset(rng, {.rows = 1500, .signal = 1.0});
  ClassifySpec spec;
  spec.partition = {0.8, 2, Target::Show};
  spec.balance = BalanceSpec{BalanceMode::Upsample, 0.5, 2};
  TrainConfig cfg;
  cfg.epochs = 20;
  const auto candidates = make_candidates(all_learners(), cfg, false);
  const auto board = auto_classify(ds, Target::Show, candidates, spec);
  CHECK(board.entries.size() == 4);
  CHECK(board.train_rows + board.test_rows == ds.n_rows());
  CHECK(board.train_rows == 1200);
  CHECK(board.balanced_rows > board.train_rows);
  CHECK(std::abs(board.fit_event_rate - 0.5) < 1.0 / double(board.balanced_rows));
  CHECK_FALSE(board.test_balanced);
  for (const auto& e : board.entries) {
    REQUIRE(e.ok());
    CHECK(e.report->confusion.total() == board.test_rows);
    CHECK(e.report->auc > 0.5);
  }
  for (std::size_t i = 1; i < board.entries.size(); ++i) CHECK_FALSE(ranks_before(board.entries[i], board.entries[i - 1]));

  spec.parallel = false;
  const auto serial = auto_classify(ds, Target::Show, candidates, spec);
  for (std::size_t i = 0; i < board.entries.size(); ++i) {
    CHECK(serial.entries[i].id == board.entries[i].id);
    CHECK(serial.entries[i].report->auc == board.entries[i].report->auc);
  }
  CHECK(code_of([&] { auto_classify(ds, Target::Show, std::span(candidates).first(1), spec); }) ==
        ErrorCode::InvalidParams);
}

TEST_CASE("a failing candidate is annotated, not fatal") {
  Rng rng(6);
  const auto ds = testing::random_dataset(rng, {.rows = 600, .missing_rate = 0.1});
  ClassifySpec spec;
  spec.partition = {0.7, 1, Target::Show};
  TrainConfig cfg;
  cfg.min_leaf = 20;
  const auto candidates = make_candidates(std::vector{LearnerKind::Logistic, LearnerKind::Cart}, cfg, false);
  const auto board = auto_classify(ds, Target::Show, candidates, spec);
  REQUIRE(board.entries.size() == 2);
  CHECK(board.entries[0].id == "cart");
  CHECK(board.entries[0].ok());
  CHECK_FALSE(board.entries[1].ok());
  CHECK(board.entries[1].error.find("MissingValues") != std::string::npos);

  const auto both_fail = make_candidates(std::vector{LearnerKind::Logistic, LearnerKind::Mlp}, cfg, false);
  CHECK(code_of([&] { auto_classify(ds, Target::Show, both_fail, spec); }) == ErrorCode::MissingValues);
}

TEST_CASE("prefer interpretable picks a close tree") {
  Rng rng(9);
  const auto ds = testing::random_dataset(rng, {.rows = 2000});
  ClassifySpec spec;
  spec.partition = {0.8, 1, Target::Show};
  spec.prefer_interpretable = true;
  spec.interpretable_margin = 1.0;
  TrainConfig cfg;
  cfg.epochs = 20;
  const auto board = auto_classify(ds, Target::Show, make_candidates(all_learners(), cfg, false), spec);
  CHECK(is_tree(board.champion_entry().kind));
  CHECK(board.interpretable_pick == (board.champion != 0));
}

TEST_CASE("cascade stages and leakage guards") {
  const auto& ds = corpus().dataset;
  const auto& m = trained();
  std::size_t shown = 0;
  for (auto f : ds.show_flags()) shown += f;
  CHECK(m.show.train_rows + m.show.test_rows == ds.n_rows());
  CHECK(std::abs(double(m.show.train_rows) - 0.8 * double(ds.n_rows())) <= 1.0);
  // Stage 2 sees exactly the shown customers.
  CHECK(m.booked.train_rows + m.booked.test_rows == shown);
  CHECK(std::abs(double(m.booked.train_rows) - 0.5 * double(shown)) <= 1.0);
  CHECK_FALSE(m.show.test_balanced);
  CHECK_FALSE(m.booked.test_balanced);
  const auto& status = ds.schema().status_column().name;
  for (const auto* board : {&m.show, &m.booked}) {
    CHECK(std::find(board->features.begin(), board->features.end(), status) == board->features.end());
    for (const auto& f : board->features) CHECK(f.find("book") == std::string::npos);
  }
  CHECK(m.show_model().target == Target::Show);
  CHECK(m.booked_model().target == Target::Booked);
  CHECK(m.show.entries.size() == 3);
  CHECK(m.booked.entries.size() == 3);
  CHECK(m.show.champion_entry().report->auc > 0.7);
  CHECK(m.booked.champion_entry().report->auc > 0.8);
}

TEST_CASE("stage 2 needs shown customers of both kinds") {
  auto cfg = quick_config();
  cfg.show_candidates = {LearnerKind::Cart, LearnerKind::Chaid};
  const auto nobody = testing::flags_dataset(std::vector<int>(40, 0));
  CHECK(code_of([&] { train_cascade(nobody, cfg); }) == ErrorCode::EmptyShownSubset);

  // flags_dataset books every customer who shows.
  std::vector<int> show(200);
  for (std::size_t i = 0; i < show.size(); ++i) show[i] = i % 4 != 0;
  CHECK(code_of([&] { train_cascade(testing::flags_dataset(show), cfg); }) == ErrorCode::SingleClass);
}

TEST_CASE("champions are stable across reruns") {
  const auto again = train_cascade(corpus().dataset, quick_config());
  const auto& m = trained();
  CHECK(again.show.champion_entry().id == m.show.champion_entry().id);
  CHECK(again.booked.champion_entry().id == m.booked.champion_entry().id);
  CHECK(to_json(again.show) == to_json(m.show));
  CHECK(to_json(again.booked) == to_json(m.booked));
}

TEST_CASE("prior adjustment") {
  CHECK(adjust_to_prior(0.5, 0.5, 0.872) == doctest::Approx(0.872));
  CHECK(adjust_to_prior(0.3, 0.4, 0.4) == 0.3);
  CHECK(adjust_to_prior(0.0, 0.5, 0.2) == 0.0);
  CHECK(adjust_to_prior(1.0, 0.5, 0.2) == 1.0);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform(), q = rng.uniform();
    const double f = 0.05 + 0.9 * rng.uniform(), pi = 0.05 + 0.9 * rng.uniform();
    // Order preserving, and invertible by swapping the rates.
    if (p < q) CHECK(adjust_to_prior(p, f, pi) <= adjust_to_prior(q, f, pi));
    CHECK(adjust_to_prior(adjust_to_prior(p, f, pi), pi, f) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("scored shortlist identities and calibration") {
  const auto holdout = generate(GeneratorConfig::historical_scaled(16964, 77), BehaviorProfile::reference());
  const auto& m = trained();
  const auto scored = score_shortlist(m, holdout.dataset);
  REQUIRE(scored.customers.size() == holdout.dataset.n_rows());
  for (std::size_t i = 0; i < scored.customers.size(); ++i) {
    const auto& c = scored.customers[i];
    CHECK(c.p_book == c.p_show * c.p_book_given_show);
    CHECK(c.p_book <= std::min(c.p_show, c.p_book_given_show));
    CHECK(c.show_pred == (c.p_show >= 0.5));
    CHECK(c.book_pred == (c.show_pred && c.p_book_given_show >= 0.5));
    if (i) CHECK(scored.customers[i - 1].p_book >= c.p_book);
  }
  const auto forecast = forecast_demand(scored.customers);
  double shows = 0.0;
  for (auto f : holdout.dataset.show_flags()) shows += f;
  const double realized = shows / double(holdout.dataset.n_rows());
  CHECK(std::abs(forecast.expected_shows / double(forecast.customers) - realized) < 0.03);
  CHECK(std::abs(forecast.expected_shows - 0.886 * 16964.0) < 0.03 * 16964.0);
}

TEST_CASE("demand forecast sums") {
  std::vector<ScoredCustomer> ten(10);
  for (auto& c : ten) {
    c.p_show = 0.9;
    c.p_book_given_show = 0.5;
    c.p_book = 0.45;
    c.show_pred = true;
  }
  const auto f = forecast_demand(ten);
  CHECK(f.expected_shows == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(f.expected_bookings == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(f.predicted_shows == 10);
  CHECK(f.predicted_bookings == 0);
  std::vector<ScoredCustomer> zeros(3);
  CHECK(forecast_demand(zeros).expected_shows == 0.0);

  ScoredCustomer sure;
  sure.p_show = 1.0;
  sure.p_book_given_show = 0.8;
  sure.p_book = sure.p_show * sure.p_book_given_show;
  CHECK(sure.p_book == 0.8);
}

TEST_CASE("bundles round trip and reject damage") {
  const auto& m = trained();
  const auto dir = fresh_dir("bundle");
  save_bundle(dir, m);
  for (const char* f : {"cascade.json", "schema.cfg", "show_model.json", "booked_model.json"}) CHECK(fs::exists(dir / f));
  const auto back = load_bundle(dir);
  CHECK(back.schema.fingerprint() == m.schema.fingerprint());
  CHECK(to_json(back.config) == to_json(m.config));
  CHECK(back.show.champion_entry().id == m.show.champion_entry().id);
  const auto& ds = corpus().dataset;
  const auto a = score_shortlist(m, ds);
  const auto b = score_shortlist(back, ds);
  std::ostringstream sa, sb;
  write_scored_csv(sa, a);
  write_scored_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("row_id,p_show,p_book_given_show,p_book,show_pred,book_pred\n", 0) == 0);
  CHECK(report_json(back) == report_json(m));
  CHECK(render_report(back) == render_report(m));

  const auto broken = fresh_dir("broken");
  fs::copy(dir, broken);
  fs::remove(broken / "show_model.json");
  CHECK(code_of([&] { load_bundle(broken); }) == ErrorCode::CorruptBundle);
  fs::copy_file(dir / "booked_model.json", broken / "show_model.json");
  CHECK(code_of([&] { load_bundle(broken); }) == ErrorCode::CorruptBundle);
  std::ofstream(broken / "cascade.json", std::ios::trunc) << "[]";
  CHECK(code_of([&] { load_bundle(broken); }) == ErrorCode::CorruptBundle);
  CHECK(code_of([&] { load_bundle(fresh_dir("missing")); }) == ErrorCode::CorruptBundle);
}

TEST_CASE("scoring rejects a shortlist without a predictor") {
  const auto& m = trained();
  const auto& ds = corpus().dataset;
  std::vector<ColumnSpec> cols;
  for (const auto& c : ds.schema().columns()) {
    if (c.name != "income_band") cols.push_back(c);
  }
  const Schema reduced(cols);
  std::vector<std::string> header;
  for (const auto& c : cols) {
    if (c.role != ColumnRole::BookingStatus) header.push_back(c.name);
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < 5; ++r) {
    std::vector<std::string> row;
    for (const auto& name : header) row.push_back(ds.column(name).cell_text(r));
    rows.push_back(row);
  }
  const auto shortlist = ColumnarDataset::from_records(reduced, header, rows, false);
  try {
    score_shortlist(m, shortlist);
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
    CHECK(std::string(e.what()).find("income_band") != std::string::npos);
  }
}

TEST_CASE("shuffled labels give chance-level auc") {
  const auto& ds = corpus().dataset;
  const auto control = shuffled_labels(ds, 99);
  ClassifySpec spec;
  spec.partition = {0.8, 1, Target::Show};
  TrainConfig cfg;
  cfg.epochs = 40;
  const auto board = auto_classify(control, Target::Show, make_candidates(show_finalists(), cfg, false), spec);
  for (const auto& e : board.entries) {
    REQUIRE(e.ok());
    CHECK(e.report->auc >= 0.45);
    CHECK(e.report->auc <= 0.55);
  }
}

TEST_CASE("cascade config validation and json") {
  auto cfg = quick_config();
  cfg.show_train_fraction = 1.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidParams);
  cfg = quick_config();
  cfg.booked_candidates.clear();
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidParams);
  cfg = quick_config();
  cfg.balance = BalanceMode::Downsample;
  cfg.grid = true;
  cfg.imputation = ImputationPolicy::parse("mode/mean");
  const auto back = cascade_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(back.balance == BalanceMode::Downsample);
  cfg.balance.reset();
  CHECK_FALSE(cascade_config_from_json(to_json(cfg)).balance.has_value());
}
