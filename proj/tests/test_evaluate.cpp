#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "showcast/error.hpp"
#include "showcast/evaluate.hpp"
#include "showcast/rng.hpp"

using namespace showcast;

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

double pair_count_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct Instance {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

// Both classes present; scores drawn from a coarse grid half of the time so ties are common.
Instance random_instance(Rng& rng) {
  Instance inst;
  const auto n = 2 + rng.below(99);
  const bool coarse = rng.bernoulli(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    inst.scores.push_back(coarse ? double(rng.below(6)) / 5.0 : rng.uniform());
    inst.labels.push_back(rng.bernoulli(0.4));
  }
  inst.labels[0] = 1;
  inst.labels[1] = 0;
  return inst;
}

}  // namespace

TEST_CASE("confusion rates for a worked example") {
  ConfusionMatrix cm{.tp = 685, .fp = 124, .tn = 876, .fn = 315};
  CHECK(cm.accuracy() == doctest::Approx(0.7805).epsilon(1e-12));
  CHECK(cm.hit_rate() == doctest::Approx(0.685).epsilon(1e-12));
  CHECK(cm.specificity() == doctest::Approx(0.876).epsilon(1e-12));
  CHECK(format_percent(cm.accuracy()) == "78.1");
  CHECK(format_percent(cm.hit_rate()) == "68.5");
  CHECK(format_percent(cm.specificity()) == "87.6");
}

TEST_CASE("confusion counts and thresholds") {
  const std::vector<double> s{1, 0, 1, 0, 0.5};
  const std::vector<std::uint8_t> y{1, 0, 1, 0, 1};
  const auto exact = confusion(s, y, 0.5);
  CHECK(exact.fp == 0);
  CHECK(exact.fn == 0);
  CHECK(exact.accuracy() == 1.0);
  const auto all = confusion(s, y, 0.0);
  CHECK(all.tn == 0);
  CHECK(all.fn == 0);
  CHECK(all.tp == 3);
  CHECK(all.fp == 2);
  const auto top = confusion(s, y, 1.0);
  CHECK(top.tp == 2);
  CHECK(top.fp == 0);
  CHECK(top.fn == 1);
  CHECK(code_of([&] { confusion(s, std::vector<std::uint8_t>{1, 0}, 0.5); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([&] { confusion(s, y, 1.5); }) == ErrorCode::InvalidParams);
}

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.3, 0.2}, std::vector<std::uint8_t>{1, 1, 0, 0}) == 1.0);
  CHECK(auc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<std::uint8_t>{1, 0, 1}) == 0.5);
  CHECK(auc(std::vector<double>{0.8, 0.7, 0.4, 0.3}, std::vector<std::uint8_t>{1, 0, 1, 0}) == 0.75);
  CHECK(code_of([] { auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}); }) ==
        ErrorCode::SingleClass);
}

TEST_CASE("roc curve shape") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
  const std::vector<std::uint8_t> y{1, 1, 0, 0};
  const auto roc = roc_curve(s, y);
  bool corner = false;
  for (const auto& p : roc) corner = corner || (p.fpr == 0.0 && p.tpr == 1.0);
  CHECK(corner);
  const auto flat = roc_curve(std::vector<double>{0.3, 0.3}, std::vector<std::uint8_t>{0, 1});
  REQUIRE(flat.size() == 2);
  CHECK(flat[1].fpr == 1.0);
  CHECK(flat[1].tpr == 1.0);
  CHECK(trapezoid_area(flat) == 0.5);
}

TEST_CASE("auc equals pair counting and the roc trapezoid") {
  Rng rng(101);
  for (int i = 0; i < 1000; ++i) {
    const auto inst = random_instance(rng);
    const double oracle = pair_count_auc(inst.scores, inst.labels);
    const double fast = auc(inst.scores, inst.labels);
    const auto roc = roc_curve(inst.scores, inst.labels);
    CHECK(std::abs(fast - oracle) <= 1e-12);
    CHECK(std::abs(trapezoid_area(roc) - oracle) <= 1e-12);
    CHECK(roc.front().fpr == 0.0);
    CHECK(roc.front().tpr == 0.0);
    CHECK(roc.back().fpr == 1.0);
    CHECK(roc.back().tpr == 1.0);
    for (std::size_t k = 1; k < roc.size(); ++k) {
      CHECK(roc[k].fpr >= roc[k - 1].fpr);
      CHECK(roc[k].tpr >= roc[k - 1].tpr);
    }
  }
}

TEST_CASE("auc is rank invariant and flips under reversed ordering") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_instance(rng);
    const double base = auc(inst.scores, inst.labels);
    std::vector<double> warped, reversed;
    for (double s : inst.scores) {
      warped.push_back(std::exp(3.0 * s) - 4.0);
      reversed.push_back(-s);
    }
    CHECK(std::abs(auc(warped, inst.labels) - base) <= 1e-12);
    CHECK(std::abs(auc(reversed, inst.labels) - (1.0 - base)) <= 1e-12);
  }
}

TEST_CASE("raising the threshold never adds true positives") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_instance(rng);
    ConfusionMatrix prev = confusion(inst.scores, inst.labels, 0.0);
    for (int k = 1; k <= 20; ++k) {
      const auto cm = confusion(inst.scores, inst.labels, k / 20.0);
      CHECK(cm.total() == inst.scores.size());
      CHECK(cm.tp <= prev.tp);
      CHECK(cm.tn >= prev.tn);
      for (double r : {cm.accuracy(), cm.hit_rate(), cm.specificity()}) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
      }
      prev = cm;
    }
  }
}

TEST_CASE("auc bands") {
  CHECK(auc_band(0.85) == AucBand::Excellent);
  CHECK(auc_band(0.95) == AucBand::Outstanding);
  CHECK(auc_band(0.49) == AucBand::Poor);
  CHECK(auc_band(0.5) == AucBand::BelowAcceptable);
  CHECK(auc_band(0.7) == AucBand::Acceptable);
  CHECK(auc_band(0.8) == AucBand::Excellent);
  CHECK(auc_band(0.9) == AucBand::Outstanding);
  for (auto b : {AucBand::Poor, AucBand::BelowAcceptable, AucBand::Acceptable, AucBand::Excellent,
                 AucBand::Outstanding}) {
    CHECK(parse_auc_band(to_string(b)) == b);
  }
  CHECK(to_string(AucBand::BelowAcceptable) == "below-acceptable");
}

TEST_CASE("report json keeps raw values and a rounded display") {
  Rng rng(3);
  const auto inst = random_instance(rng);
  const auto report = evaluate(inst.scores, inst.labels, 0.4);
  const auto j = to_json(report);
  CHECK(j.at("auc").get<double>() == report.auc);
  CHECK(j.at("display").at("auc").get<std::string>().size() == 5);
  CHECK(j.at("display").at("accuracy_pct").get<std::string>() == format_percent(report.accuracy));
  const auto back = evaluation_report_from_json(j);
  CHECK(back.auc == report.auc);
  CHECK(back.accuracy == report.accuracy);
  CHECK(back.confusion.tp == report.confusion.tp);
  CHECK(back.confusion.threshold == 0.4);
  CHECK(back.roc.size() == report.roc.size());
  CHECK(back.auc_band == report.auc_band);
  CHECK(to_json(back) == j);
  CHECK_FALSE(to_json(report, false).contains("roc"));
}

TEST_CASE("comparison table and roc csv") {
  const auto report = evaluate(std::vector<double>{0.8, 0.7, 0.4, 0.3}, std::vector<std::uint8_t>{1, 0, 1, 0});
  const std::vector<ReportRow> rows{{"NEURAL NETWORK", &report, ""}, {"CHAID", nullptr, "failed: reason"}};
  const auto text = render_comparison("Show", rows);
  CHECK(text.find("0.750") != std::string::npos);
  CHECK(text.find("50.0") != std::string::npos);
  CHECK(text.find(" acceptable") != std::string::npos);
  CHECK(text.find("failed: reason") != std::string::npos);
  std::ostringstream out;
  write_roc_csv(out, report.roc);
  CHECK(out.str().rfind("fpr,tpr\n0,0\n", 0) == 0);
}
