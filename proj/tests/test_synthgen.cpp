#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "showcast/error.hpp"
#include "showcast/synthgen.hpp"

using namespace showcast;

namespace {

double book_given_show_rate(const ColumnarDataset& ds, std::string_view buyer, std::string_view income) {
  const auto& b = ds.column("buyer_type");
  const auto& i = ds.column("income_band");
  std::size_t shows = 0, booked = 0;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    if (b.cell_text(r) != buyer || i.cell_text(r) != income || !ds.show_flags()[r]) continue;
    ++shows;
    booked += ds.booked_flags()[r];
  }
  return shows ? double(booked) / double(shows) : 0.0;
}

}  // namespace

TEST_CASE("historical configuration totals") {
  const auto cfg = GeneratorConfig::historical();
  CHECK(cfg.total_rows() == 162710);
  CHECK(cfg.periods.size() == 9);
  CHECK(*cfg.target_show_rate == 0.872);
  CHECK(*cfg.target_book_rate == 0.202);
  const auto scaled = GeneratorConfig::historical_scaled(1000);
  CHECK(scaled.total_rows() == 1000);
}

TEST_CASE("cell weights form a distribution") {
  const auto profile = BehaviorProfile::reference();
  const auto w = cell_weights(profile, {0.5, 0.34, 0.16});
  double total = 0.0;
  for (double x : w) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[BehaviorProfile::cell_index(0, 0, 1)] == doctest::Approx(0.5 * 0.5 * 0.4));
}

TEST_CASE("reference profile carries the behavioral findings") {
  const auto profile = BehaviorProfile::reference();
  CHECK(profile.cell(0, 0, 1).p_book_given_show > 0.8);
  // Elderly second-time buyers show up but seldom book.
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(profile.cell(2, 1, i).p_show > 0.9);
    CHECK(profile.cell(2, 1, i).p_book_given_show < 0.1);
  }
}

TEST_CASE("calibration hits the targets") {
  const auto profile = BehaviorProfile::reference();
  const std::array<double, 3> mix{0.5, 0.34, 0.16};
  const auto cal = calibrate_intercepts(profile, mix, 0.872, 0.202);
  const auto rates = expected_rates(cal.profile, mix);
  CHECK(std::abs(rates.show - 0.872) < 1e-6);
  CHECK(std::abs(rates.booked - 0.202) < 1e-6);
  CHECK(cal.iterations <= 200);

  const auto moved = calibrate_intercepts(profile, mix, 0.5, 0.05);
  const auto r2 = expected_rates(moved.profile, mix);
  CHECK(std::abs(r2.show - 0.5) < 1e-6);
  CHECK(std::abs(r2.booked - 0.05) < 1e-6);

  const auto untouched = calibrate_intercepts(profile, mix, std::nullopt, std::nullopt);
  CHECK(untouched.show_shift == 0.0);
  CHECK(untouched.profile.cells[3].p_show == profile.cells[3].p_show);
}

TEST_CASE("unreachable calibration target fails") {
  auto profile = BehaviorProfile::reference();
  for (auto& c : profile.cells) c.p_show = 0.0;
  try {
    calibrate_intercepts(profile, {0.5, 0.34, 0.16}, 0.872, std::nullopt);
    FAIL("expected CalibrationFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CalibrationFailure);
  }
  CHECK_THROWS_AS(calibrate_intercepts(BehaviorProfile::reference(), {0.5, 0.34, 0.16}, 1.0, std::nullopt), Error);
}

TEST_CASE("profile config round-trips and rejects gaps") {
  const auto profile = BehaviorProfile::reference();
  const auto again = BehaviorProfile::parse(profile.to_config_text());
  for (std::size_t c = 0; c < kProfileCells; ++c) {
    CHECK(again.cells[c].p_show == profile.cells[c].p_show);
    CHECK(again.cells[c].p_book_given_show == profile.cells[c].p_book_given_show);
  }
  auto text = profile.to_config_text();
  text.erase(text.find("young.first-time.low"), text.find('\n', text.find("young.first-time.low")) + 1 -
                                                     text.find("young.first-time.low"));
  CHECK_THROWS_AS(BehaviorProfile::parse(text), Error);
  CHECK_THROWS_AS(BehaviorProfile::parse(profile.to_config_text() + "young.first-time.low = 0.5, 0.5\n"), Error);
}

TEST_CASE("generation is deterministic per seed") {
  auto cfg = GeneratorConfig::historical_scaled(2000, 11);
  const auto a = generate(cfg, BehaviorProfile::reference());
  const auto b = generate(cfg, BehaviorProfile::reference());
  CHECK(a.records == b.records);
  cfg.seed = 12;
  const auto c = generate(cfg, BehaviorProfile::reference());
  CHECK(a.records != c.records);
  std::ostringstream sa, sb;
  write_corpus_csv(sa, a);
  write_corpus_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("customer_id,period,age_group,buyer_type,income_band,noise_1,noise_2,noise_3,status\n", 0) == 0);
}

TEST_CASE("generated corpus matches the targets and drops canceled rows") {
  const auto corpus = generate(GeneratorConfig::historical(1), BehaviorProfile::reference());
  const auto& ds = corpus.dataset;
  CHECK(corpus.records.size() == 162710);
  CHECK(ds.n_rows() + corpus.canceled == 162710);
  CHECK(ds.provenance().discarded_canceled == corpus.canceled);
  double shows = 0, booked = 0;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    shows += ds.show_flags()[r];
    booked += ds.booked_flags()[r];
  }
  CHECK(std::abs(shows / double(ds.n_rows()) - 0.872) < 0.005);
  CHECK(std::abs(booked / double(ds.n_rows()) - 0.202) < 0.005);
  CHECK(book_given_show_rate(ds, "first-time", "medium") > 0.8);
  CHECK(double(corpus.canceled) / 162710.0 == doctest::Approx(0.005).epsilon(0.2));
}

TEST_CASE("missing cells and period drift") {
  auto cfg = GeneratorConfig::historical_scaled(20000, 5);
  cfg.missing_rate = 0.1;
  const auto corpus = generate(cfg, BehaviorProfile::reference());
  const double share = double(corpus.dataset.column("income_band").missing_count()) / double(corpus.dataset.n_rows());
  CHECK(share == doctest::Approx(0.1).epsilon(0.15));
  CHECK(corpus.dataset.column("age_group").missing_count() == 0);

  auto drift = GeneratorConfig::historical(5);
  drift.period_drift = true;
  const auto d = generate(drift, BehaviorProfile::reference());
  CHECK(d.calibrations.size() == drift.periods.size());
  const auto& period = d.dataset.column("period");
  // 1st half 2018 was the low-booking period.
  std::size_t rows = 0, booked = 0;
  for (std::size_t r = 0; r < d.dataset.n_rows(); ++r) {
    if (period.cell_text(r) != "1st half 2018") continue;
    ++rows;
    booked += d.dataset.booked_flags()[r];
  }
  CHECK(double(booked) / double(rows) == doctest::Approx(0.145).epsilon(0.1));
}

TEST_CASE("invalid generator settings") {
  auto cfg = GeneratorConfig::historical_scaled(100);
  cfg.cancel_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = GeneratorConfig::historical_scaled(100);
  cfg.age_mix = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), Error);
}
