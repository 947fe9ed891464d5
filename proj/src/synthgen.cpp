#include "showcast/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "showcast/csv.hpp"
#include "showcast/error.hpp"
#include "showcast/kvconfig.hpp"
#include "showcast/rng.hpp"

namespace showcast {

namespace {

struct HistoricalPeriod {
  const char* label;
  std::size_t count;
  double show;
  double booked;
};

constexpr HistoricalPeriod kHistory[] = {
    {"1st half 2015", 18011, 0.847, 0.272}, {"2nd half 2015", 19716, 0.878, 0.210},
    {"1st half 2016", 20280, 0.875, 0.205}, {"2nd half 2016", 17565, 0.872, 0.236},
    {"1st half 2017", 18861, 0.861, 0.204}, {"2nd half 2017", 17141, 0.879, 0.186},
    {"1st half 2018", 19059, 0.887, 0.145}, {"2nd half 2018", 15113, 0.866, 0.199},
    {"1st half 2019", 16964, 0.886, 0.168},
};
constexpr double kHistoricalShow = 0.872;
constexpr double kHistoricalBooked = 0.202;

bool in_unit(double p) { return p >= 0.0 && p <= 1.0 && std::isfinite(p); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// p shifted by `shift` in logit space; 0 and 1 are fixed points.
double shift_probability(double p, double shift) {
  if (p <= 0.0 || p >= 1.0) return p;
  return sigmoid(std::log(p / (1.0 - p)) + shift);
}

void check_mix(std::span<const double> mix, const char* what) {
  double sum = 0.0;
  for (double m : mix) {
    if (!in_unit(m)) throw Error(ErrorCode::InvalidParams, std::string(what) + " entries must lie in [0,1]");
    sum += m;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidParams, std::string(what) + " must sum to 1");
  }
}

// Root of an increasing function: Newton steps inside a shrinking bracket.
struct RootResult {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

RootResult solve_increasing(const std::function<std::pair<double, double>(double)>& f_and_slope) {
  double lo = -50.0, hi = 50.0, x = 0.0;
  RootResult res;
  for (int it = 0; it < 100; ++it) {
    auto [value, slope] = f_and_slope(x);
    res.x = x;
    res.residual = value;
    res.iterations = it + 1;
    if (std::abs(value) <= 1e-14) break;
    (value > 0 ? hi : lo) = x;
    double next = slope > 0 ? x - value / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return res;
}

std::string pad_id(std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "C%07zu", n);
  return buf;
}

}  // namespace

// ---- configuration ------------------------------------------------------------

void GeneratorConfig::validate() const {
  if (periods.empty()) throw Error(ErrorCode::InvalidParams, "generator needs at least one period");
  for (const auto& p : periods) {
    if (p.count == 0) throw Error(ErrorCode::InvalidParams, "period '" + p.label + "' has zero rows");
    if ((p.show_rate && !in_unit(*p.show_rate)) || (p.book_rate && !in_unit(*p.book_rate))) {
      throw Error(ErrorCode::InvalidParams, "period '" + p.label + "' rates must lie in [0,1]");
    }
  }
  if ((target_show_rate && !in_unit(*target_show_rate)) ||
      (target_book_rate && !in_unit(*target_book_rate))) {
    throw Error(ErrorCode::InvalidParams, "target rates must lie in [0,1]");
  }
  if (!in_unit(cancel_rate) || !in_unit(missing_rate)) {
    throw Error(ErrorCode::InvalidParams, "cancel and missing rates must lie in [0,1]");
  }
  check_mix(age_mix, "age_mix");
}

std::size_t GeneratorConfig::total_rows() const {
  std::size_t n = 0;
  for (const auto& p : periods) n += p.count;
  return n;
}

GeneratorConfig GeneratorConfig::historical(std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  for (const auto& h : kHistory) cfg.periods.push_back({h.label, h.count, h.show, h.booked});
  cfg.target_show_rate = kHistoricalShow;
  cfg.target_book_rate = kHistoricalBooked;
  return cfg;
}

GeneratorConfig GeneratorConfig::historical_scaled(std::size_t rows, std::uint64_t seed) {
  auto cfg = historical(seed);
  const double total = static_cast<double>(cfg.total_rows());
  // Largest-remainder apportionment keeps the total exact.
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < cfg.periods.size(); ++i) {
    const double share = double(rows) * double(cfg.periods[i].count) / total;
    cfg.periods[i].count = static_cast<std::size_t>(std::floor(share));
    assigned += cfg.periods[i].count;
    remainders.emplace_back(share - std::floor(share), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < rows; ++k, ++assigned) ++cfg.periods[remainders[k].second].count;
  std::erase_if(cfg.periods, [](const PeriodSpec& p) { return p.count == 0; });
  return cfg;
}

// ---- profile ---------------------------------------------------------------------

void BehaviorProfile::validate() const {
  check_mix(buyer_mix, "buyer_mix");
  check_mix(income_mix, "income_mix");
  for (const auto& c : cells) {
    if (!in_unit(c.p_show) || !in_unit(c.p_book_given_show)) {
      throw Error(ErrorCode::InvalidParams, "profile probabilities must lie in [0,1]");
    }
  }
}

BehaviorProfile BehaviorProfile::reference() {
  BehaviorProfile p;
  p.buyer_mix = {0.50, 0.50};
  p.income_mix = {0.30, 0.40, 0.30};
  p.cells = {{
      {0.470, 0.054},  // young first-time low
      {0.746, 0.873},  // young first-time medium
      {0.799, 0.188},  // young first-time high
      {0.843, 0.030},  // young second-time low
      {0.947, 0.086},  // young second-time medium
      {0.960, 0.113},  // young second-time high
      {0.773, 0.041},  // middle first-time low
      {0.919, 0.873},  // middle first-time medium
      {0.939, 0.146},  // middle first-time high
      {0.954, 0.023},  // middle second-time low
      {0.986, 0.065},  // middle second-time medium
      {0.989, 0.086},  // middle second-time high
      {0.925, 0.019},  // elderly first-time low
      {0.976, 0.873},  // elderly first-time medium
      {0.982, 0.072},  // elderly first-time high
      {0.987, 0.039},  // elderly second-time low
      {0.996, 0.039},  // elderly second-time medium
      {0.997, 0.039},  // elderly second-time high
  }};
  return p;
}

BehaviorProfile BehaviorProfile::parse(std::string_view text) {
  BehaviorProfile p;
  std::array<bool, kProfileCells> seen{};
  bool buyer = false, income = false;
  for (const auto& e : parse_kv(text)) {
    const auto values = split_list(e.value);
    const std::string where = "line " + std::to_string(e.line);
    if (e.key == "buyer_mix" || e.key == "income_mix") {
      const std::size_t n = e.key == "buyer_mix" ? 2 : 3;
      if (values.size() != n) {
        throw Error(ErrorCode::Config, where + ": " + e.key + " needs " + std::to_string(n) + " values");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double v = parse_double(values[i], where);
        (e.key == "buyer_mix" ? p.buyer_mix[i] : p.income_mix[i]) = v;
      }
      (e.key == "buyer_mix" ? buyer : income) = true;
      continue;
    }
    const auto parts = split_list(e.key, '.');
    auto index_of = [&](auto& names, const std::string& v) -> std::size_t {
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == v) return i;
      }
      throw Error(ErrorCode::Config, where + ": unknown profile key '" + e.key + "'");
    };
    if (parts.size() != 3) throw Error(ErrorCode::Config, where + ": unknown profile key '" + e.key + "'");
    const auto idx = cell_index(index_of(kAgeGroups, parts[0]), index_of(kBuyerTypes, parts[1]),
                                index_of(kIncomeBands, parts[2]));
    if (values.size() != 2) {
      throw Error(ErrorCode::Config, where + ": expected '<p_show>, <p_book_given_show>'");
    }
    p.cells[idx] = {parse_double(values[0], where), parse_double(values[1], where)};
    seen[idx] = true;
  }
  if (!buyer || !income) throw Error(ErrorCode::Config, "profile needs buyer_mix and income_mix");
  for (std::size_t i = 0; i < kProfileCells; ++i) {
    if (!seen[i]) {
      throw Error(ErrorCode::Config, "profile is missing cell " + std::string(kAgeGroups[i / 6]) + "." +
                                         std::string(kBuyerTypes[(i / 3) % 2]) + "." +
                                         std::string(kIncomeBands[i % 3]));
    }
  }
  p.validate();
  return p;
}

BehaviorProfile BehaviorProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open profile " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string BehaviorProfile::to_config_text() const {
  std::ostringstream out;
  out << "buyer_mix = " << format_double(buyer_mix[0]) << ", " << format_double(buyer_mix[1]) << '\n';
  out << "income_mix = " << format_double(income_mix[0]) << ", " << format_double(income_mix[1])
      << ", " << format_double(income_mix[2]) << '\n';
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t i = 0; i < 3; ++i) {
        const auto& c = cell(a, b, i);
        out << kAgeGroups[a] << '.' << kBuyerTypes[b] << '.' << kIncomeBands[i] << " = "
            << format_double(c.p_show) << ", " << format_double(c.p_book_given_show) << '\n';
      }
    }
  }
  return out.str();
}

std::array<double, kProfileCells> cell_weights(const BehaviorProfile& profile,
                                               const std::array<double, 3>& age_mix) {
  std::array<double, kProfileCells> w{};
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t i = 0; i < 3; ++i) {
        w[BehaviorProfile::cell_index(a, b, i)] = age_mix[a] * profile.buyer_mix[b] * profile.income_mix[i];
      }
    }
  }
  return w;
}

ExpectedRates expected_rates(const BehaviorProfile& profile, const std::array<double, 3>& age_mix) {
  const auto w = cell_weights(profile, age_mix);
  ExpectedRates r;
  for (std::size_t c = 0; c < kProfileCells; ++c) {
    r.show += w[c] * profile.cells[c].p_show;
    r.booked += w[c] * profile.cells[c].p_show * profile.cells[c].p_book_given_show;
  }
  return r;
}

CalibrationResult calibrate_intercepts(const BehaviorProfile& profile,
                                       const std::array<double, 3>& age_mix,
                                       std::optional<double> target_show,
                                       std::optional<double> target_book) {
  profile.validate();
  check_mix(age_mix, "age_mix");
  for (auto t : {target_show, target_book}) {
    if (t && !(*t > 0.0 && *t < 1.0)) {
      throw Error(ErrorCode::InvalidParams, "calibration targets must lie in (0,1)");
    }
  }
  const auto w = cell_weights(profile, age_mix);
  CalibrationResult out{profile, 0.0, 0.0, 0};

  if (target_show) {
    auto f = [&](double s) {
      double value = -*target_show, slope = 0.0;
      for (std::size_t c = 0; c < kProfileCells; ++c) {
        const double p = shift_probability(profile.cells[c].p_show, s);
        value += w[c] * p;
        slope += w[c] * p * (1.0 - p);
      }
      return std::pair{value, slope};
    };
    const auto root = solve_increasing(f);
    if (std::abs(root.residual) > 1e-6) {
      throw Error(ErrorCode::CalibrationFailure,
                  "show target " + format_double(*target_show) + " unreachable from this profile");
    }
    out.show_shift = root.x;
    out.iterations += root.iterations;
    for (auto& c : out.profile.cells) c.p_show = shift_probability(c.p_show, root.x);
  }
  if (target_book) {
    auto f = [&](double t) {
      double value = -*target_book, slope = 0.0;
      for (std::size_t c = 0; c < kProfileCells; ++c) {
        const double b = shift_probability(profile.cells[c].p_book_given_show, t);
        value += w[c] * out.profile.cells[c].p_show * b;
        slope += w[c] * out.profile.cells[c].p_show * b * (1.0 - b);
      }
      return std::pair{value, slope};
    };
    const auto root = solve_increasing(f);
    if (std::abs(root.residual) > 1e-6) {
      throw Error(ErrorCode::CalibrationFailure,
                  "booked target " + format_double(*target_book) + " unreachable from this profile");
    }
    out.book_shift = root.x;
    out.iterations += root.iterations;
    for (auto& c : out.profile.cells) c.p_book_given_show = shift_probability(c.p_book_given_show, root.x);
  }
  return out;
}

// ---- generation ---------------------------------------------------------------------

Schema synthetic_schema(std::size_t noise_feature_count) {
  std::vector<ColumnSpec> cols{
      {"customer_id", ColumnKind::Categorical, ColumnRole::Identifier},
      {"period", ColumnKind::Categorical, ColumnRole::Ignored},
      {"age_group", ColumnKind::Categorical, ColumnRole::Predictor},
      {"buyer_type", ColumnKind::Categorical, ColumnRole::Predictor},
      {"income_band", ColumnKind::Categorical, ColumnRole::Predictor},
  };
  for (std::size_t j = 1; j <= noise_feature_count; ++j) {
    cols.push_back({"noise_" + std::to_string(j), ColumnKind::Numeric, ColumnRole::Predictor});
  }
  cols.push_back({"status", ColumnKind::Categorical, ColumnRole::BookingStatus});
  return Schema(std::move(cols), {{"period", "period"}, {"age_group", "age_group"}});
}

GeneratedCorpus generate(const GeneratorConfig& cfg, const BehaviorProfile& profile) {
  cfg.validate();
  profile.validate();

  GeneratedCorpus corpus;
  corpus.schema = synthetic_schema(cfg.noise_feature_count);
  for (const auto& c : corpus.schema.columns()) corpus.header.push_back(c.name);

  std::vector<const BehaviorProfile*> per_period;
  if (cfg.period_drift) {
    for (const auto& p : cfg.periods) {
      corpus.calibrations.push_back(calibrate_intercepts(
          profile, cfg.age_mix, p.show_rate ? p.show_rate : cfg.target_show_rate,
          p.book_rate ? p.book_rate : cfg.target_book_rate));
    }
  } else {
    corpus.calibrations.push_back(
        calibrate_intercepts(profile, cfg.age_mix, cfg.target_show_rate, cfg.target_book_rate));
  }
  for (std::size_t i = 0; i < cfg.periods.size(); ++i) {
    per_period.push_back(&corpus.calibrations[cfg.period_drift ? i : 0].profile);
  }

  Rng rng(cfg.seed);
  const auto& buyer_mix = profile.buyer_mix;
  const auto& income_mix = profile.income_mix;
  std::size_t next_id = 1;
  corpus.records.reserve(cfg.total_rows());
  for (std::size_t p = 0; p < cfg.periods.size(); ++p) {
    const auto& period = cfg.periods[p];
    const auto& prof = *per_period[p];
    for (std::size_t k = 0; k < period.count; ++k) {
      std::vector<std::string> rec;
      rec.reserve(corpus.header.size());
      const auto age = rng.categorical(cfg.age_mix);
      const auto buyer = rng.categorical(buyer_mix);
      const auto income = rng.categorical(income_mix);
      rec.push_back(pad_id(next_id++));
      rec.push_back(period.label);
      rec.emplace_back(kAgeGroups[age]);
      rec.emplace_back(kBuyerTypes[buyer]);
      rec.emplace_back(kIncomeBands[income]);
      for (std::size_t j = 0; j < cfg.noise_feature_count; ++j) {
        rec.push_back(format_double(std::round(rng.normal() * 1e4) / 1e4));
      }
      const bool canceled = rng.uniform() < cfg.cancel_rate;
      const auto& cell = prof.cell(age, buyer, income);
      const bool show = rng.uniform() < cell.p_show;
      const bool booked = rng.uniform() < cell.p_book_given_show && show;
      if (cfg.missing_rate > 0.0) {
        if (rng.uniform() < cfg.missing_rate) rec[4].clear();
        for (std::size_t j = 0; j < cfg.noise_feature_count; ++j) {
          if (rng.uniform() < cfg.missing_rate) rec[5 + j].clear();
        }
      }
      BookingStatus status = canceled ? BookingStatus::BookedCanceled
                             : booked ? BookingStatus::BookedCompleted
                             : show   ? BookingStatus::ShowedNoBook
                                      : BookingStatus::NoShow;
      corpus.canceled += canceled;
      rec.push_back(corpus.schema.status_token(status));
      corpus.records.push_back(std::move(rec));
    }
  }
  corpus.dataset = ColumnarDataset::from_records(corpus.schema, corpus.header, corpus.records, true,
                                                 "synthetic seed " + std::to_string(cfg.seed));
  return corpus;
}

void write_corpus_csv(std::ostream& out, const GeneratedCorpus& corpus) {
  write_csv_row(out, corpus.header);
  for (const auto& r : corpus.records) write_csv_row(out, r);
}

}  // namespace showcast
