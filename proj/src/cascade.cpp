#include "showcast/cascade.hpp"

#include <algorithm>
#include <exception>
#include <future>
#include <sstream>

#include "showcast/csv.hpp"
#include "showcast/error.hpp"
#include "showcast/io.hpp"
#include "showcast/kvconfig.hpp"

namespace showcast {

namespace {

using nlohmann::json;

constexpr std::string_view kBundleFormat = "showcast-cascade";
constexpr int kBundleVersion = 1;

double event_rate(std::span<const std::uint8_t> flags) {
  if (flags.empty()) return 0.0;
  return double(std::count(flags.begin(), flags.end(), std::uint8_t{1})) / double(flags.size());
}

CandidateResult run_candidate(const Candidate& c, const ColumnarDataset& fit, const ColumnarDataset& test,
                              Target target, std::span<const std::string> features, double threshold,
                              std::exception_ptr& failure) {
  CandidateResult result;
  result.id = c.id();
  result.kind = c.kind;
  result.config = c.config;
  try {
    auto model = train_model(c.kind, fit, target, c.config, features);
    const auto preds = predict_proba(model, test);
    result.report = evaluate(preds.p, test.flags(target), threshold);
    result.model = std::move(model);
  } catch (const std::exception& e) {
    result.error = e.what();
    failure = std::current_exception();
  }
  return result;
}

std::string balance_name(const std::optional<BalanceMode>& mode) {
  return mode ? std::string(to_string(*mode)) : std::string("off");
}

std::optional<BalanceMode> parse_balance_name(const std::string& text) {
  if (text == "off") return std::nullopt;
  return parse_balance_mode(text);
}

json learner_ids(std::span<const LearnerKind> kinds) {
  auto arr = json::array();
  for (auto k : kinds) arr.push_back(learner_id(k));
  return arr;
}

std::vector<LearnerKind> learners_from_json(const json& j) {
  std::vector<LearnerKind> out;
  for (const auto& id : j) out.push_back(parse_learner(id.get<std::string>()));
  return out;
}

}  // namespace

std::string Candidate::id() const {
  return variant.empty() ? std::string(learner_id(kind)) : std::string(learner_id(kind)) + "/" + variant;
}

std::vector<Candidate> make_candidates(std::span<const LearnerKind> kinds, const TrainConfig& base, bool grid) {
  std::vector<Candidate> out;
  for (auto kind : kinds) {
    out.push_back({kind, "", base});
    if (!grid) continue;
    switch (kind) {
      case LearnerKind::Cart:
        for (int depth : {4, 8}) {
          Candidate c{kind, "depth" + std::to_string(depth), base};
          c.config.max_depth = depth;
          out.push_back(std::move(c));
        }
        break;
      case LearnerKind::Chaid: {
        Candidate c{kind, "alpha0.01", base};
        c.config.alpha_split = c.config.alpha_merge = 0.01;
        out.push_back(std::move(c));
        break;
      }
      case LearnerKind::Logistic: {
        Candidate c{kind, "l2-0.01", base};
        c.config.l2 = 0.01;
        out.push_back(std::move(c));
        break;
      }
      case LearnerKind::Mlp:
        for (std::size_t hidden : {8u, 32u}) {
          Candidate c{kind, "hidden" + std::to_string(hidden), base};
          c.config.hidden_units = hidden;
          out.push_back(std::move(c));
        }
        break;
    }
  }
  return out;
}

std::vector<LearnerKind> show_finalists() { return {LearnerKind::Mlp, LearnerKind::Cart, LearnerKind::Chaid}; }
std::vector<LearnerKind> booked_finalists() { return {LearnerKind::Mlp, LearnerKind::Chaid, LearnerKind::Logistic}; }
std::vector<LearnerKind> all_learners() {
  return {LearnerKind::Mlp, LearnerKind::Cart, LearnerKind::Chaid, LearnerKind::Logistic};
}

std::vector<LearnerKind> parse_learner_list(std::string_view text) {
  std::vector<LearnerKind> out;
  for (const auto& id : split_list(text)) {
    const auto kind = parse_learner(id);
    if (std::find(out.begin(), out.end(), kind) != out.end()) {
      throw Error(ErrorCode::InvalidParams, "learner '" + id + "' listed twice");
    }
    out.push_back(kind);
  }
  return out;
}

bool ranks_before(const CandidateResult& a, const CandidateResult& b) {
  if (a.ok() != b.ok()) return a.ok();
  if (a.ok()) {
    if (a.report->auc != b.report->auc) return a.report->auc > b.report->auc;
    if (a.report->accuracy != b.report->accuracy) return a.report->accuracy > b.report->accuracy;
  }
  return a.id < b.id;
}

Leaderboard auto_classify(const ColumnarDataset& ds, Target target, std::span<const Candidate> candidates,
                          const ClassifySpec& spec) {
  if (candidates.size() < 2) throw Error(ErrorCode::InvalidParams, "the leaderboard needs at least two candidates");
  if (!ds.labeled()) throw Error(ErrorCode::InvalidParams, "the leaderboard needs a labeled dataset");
  Leaderboard board;
  board.target = target;
  board.features = spec.features.empty() ? ds.schema().predictor_names() : spec.features;
  const auto& status = ds.schema().status_column().name;
  if (std::find(board.features.begin(), board.features.end(), status) != board.features.end()) {
    throw Error(ErrorCode::InvalidParams, "the booking-status column cannot be a predictor");
  }

  const auto parts = partition(ds, spec.partition);
  const ColumnarDataset fit = spec.balance ? balance(parts.train, target, *spec.balance) : parts.train;
  board.train_rows = parts.train.n_rows();
  board.balanced_rows = fit.n_rows();
  board.test_rows = parts.test.n_rows();
  board.train_event_rate = event_rate(parts.train.flags(target));
  board.fit_event_rate = event_rate(fit.flags(target));
  board.test_event_rate = event_rate(parts.test.flags(target));
  board.test_balanced = parts.test.provenance().balanced;

  std::vector<std::exception_ptr> failures(candidates.size());
  if (spec.parallel) {
    std::vector<std::future<CandidateResult>> jobs;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, run_candidate, std::cref(candidates[i]), std::cref(fit),
                                std::cref(parts.test), target, std::span<const std::string>(board.features),
                                spec.threshold, std::ref(failures[i])));
    }
    for (auto& job : jobs) board.entries.push_back(job.get());
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      board.entries.push_back(
          run_candidate(candidates[i], fit, parts.test, target, board.features, spec.threshold, failures[i]));
    }
  }
  if (std::none_of(board.entries.begin(), board.entries.end(), [](const auto& e) { return e.ok(); })) {
    std::rethrow_exception(failures.front());
  }
  std::stable_sort(board.entries.begin(), board.entries.end(), ranks_before);

  board.champion = 0;
  if (spec.prefer_interpretable) {
    const double floor = board.entries.front().report->auc - spec.interpretable_margin;
    for (std::size_t i = 0; i < board.entries.size(); ++i) {
      const auto& e = board.entries[i];
      if (e.ok() && is_tree(e.kind) && e.report->auc >= floor) {
        board.champion = i;
        board.interpretable_pick = i != 0;
        break;
      }
    }
  }
  return board;
}

void CascadeConfig::validate() const {
  if (show_candidates.empty() || booked_candidates.empty()) {
    throw Error(ErrorCode::InvalidParams, "candidate sets must not be empty");
  }
  if (!(show_train_fraction > 0.0 && show_train_fraction < 1.0) ||
      !(booked_train_fraction > 0.0 && booked_train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidParams, "train fractions must be in (0, 1)");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidParams, "threshold must be in [0, 1]");
  train.validate();
}

nlohmann::json to_json(const CascadeConfig& cfg) {
  return {{"show_candidates", learner_ids(cfg.show_candidates)},
          {"booked_candidates", learner_ids(cfg.booked_candidates)},
          {"grid", cfg.grid},
          {"train", to_json(cfg.train)},
          {"show_train_fraction", cfg.show_train_fraction},
          {"booked_train_fraction", cfg.booked_train_fraction},
          {"stratify", cfg.stratify},
          {"balance", balance_name(cfg.balance)},
          {"imputation", cfg.imputation.describe()},
          {"threshold", cfg.threshold},
          {"prefer_interpretable", cfg.prefer_interpretable},
          {"seed", cfg.seed}};
}

CascadeConfig cascade_config_from_json(const nlohmann::json& j) {
  CascadeConfig cfg;
  cfg.show_candidates = learners_from_json(j.at("show_candidates"));
  cfg.booked_candidates = learners_from_json(j.at("booked_candidates"));
  cfg.grid = j.at("grid").get<bool>();
  cfg.train = train_config_from_json(j.at("train"));
  cfg.show_train_fraction = j.at("show_train_fraction").get<double>();
  cfg.booked_train_fraction = j.at("booked_train_fraction").get<double>();
  cfg.stratify = j.at("stratify").get<bool>();
  cfg.balance = parse_balance_name(j.at("balance").get<std::string>());
  cfg.imputation = ImputationPolicy::parse(j.at("imputation").get<std::string>());
  cfg.threshold = j.at("threshold").get<double>();
  cfg.prefer_interpretable = j.at("prefer_interpretable").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

CascadeModel train_cascade(const ColumnarDataset& ds, const CascadeConfig& cfg) {
  cfg.validate();
  if (!ds.labeled()) throw Error(ErrorCode::InvalidParams, "training needs a labeled dataset");
  std::vector<std::size_t> shown_rows;
  const auto show = ds.show_flags();
  for (std::size_t r = 0; r < show.size(); ++r) {
    if (show[r]) shown_rows.push_back(r);
  }
  if (shown_rows.empty()) throw Error(ErrorCode::EmptyShownSubset, "no customer in the data showed up");
  std::size_t shown_booked = 0;
  for (auto r : shown_rows) shown_booked += ds.booked_flags()[r];
  if (shown_booked == 0 || shown_booked == shown_rows.size()) {
    throw Error(ErrorCode::SingleClass, "shown customers all share one booked flag value");
  }

  CascadeModel cascade;
  cascade.schema = ds.schema();
  cascade.config = cfg;

  TrainConfig base = cfg.train;
  base.seed = cfg.seed;
  std::optional<BalanceSpec> balance_spec;
  if (cfg.balance) balance_spec = BalanceSpec{*cfg.balance, 0.5, cfg.seed};

  // Fill values come from the stage-1 training rows only.
  PartitionSpec show_split{cfg.show_train_fraction, cfg.seed, std::nullopt};
  if (cfg.stratify) show_split.stratify_on = Target::Show;
  cascade.imputation = fit_imputation(partition(ds, show_split).train, cfg.imputation);
  const auto data = apply_imputation(ds, cascade.imputation);

  ClassifySpec show_spec;
  show_spec.partition = show_split;
  show_spec.balance = balance_spec;
  show_spec.threshold = cfg.threshold;
  show_spec.prefer_interpretable = cfg.prefer_interpretable;
  show_spec.parallel = cfg.parallel;
  const auto show_candidates = make_candidates(cfg.show_candidates, base, cfg.grid);
  cascade.show = auto_classify(data, Target::Show, show_candidates, show_spec);

  const auto shown = data.take(shown_rows);
  ClassifySpec booked_spec = show_spec;
  booked_spec.partition = PartitionSpec{cfg.booked_train_fraction, cfg.seed, std::nullopt};
  if (cfg.stratify) booked_spec.partition.stratify_on = Target::Booked;
  const auto booked_candidates = make_candidates(cfg.booked_candidates, base, cfg.grid);
  cascade.booked = auto_classify(shown, Target::Booked, booked_candidates, booked_spec);
  return cascade;
}

double adjust_to_prior(double p, double fitted_rate, double population_rate) {
  if (fitted_rate == population_rate || p <= 0.0 || p >= 1.0) return p;
  const double a = p * population_rate * (1.0 - fitted_rate);
  const double b = (1.0 - p) * (1.0 - population_rate) * fitted_rate;
  return a / (a + b);
}

ScoredShortlist score_shortlist(const CascadeModel& cascade, const ColumnarDataset& ds, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidParams, "threshold must be in [0, 1]");
  const auto data = apply_imputation(ds, cascade.imputation);
  const auto show = predict_proba(cascade.show_model(), data);
  const auto booked = predict_proba(cascade.booked_model(), data);
  ScoredShortlist out;
  out.threshold = threshold;
  out.customers.reserve(data.n_rows());
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    ScoredCustomer c;
    c.row = r;
    c.id = data.row_label(r);
    c.p_show = adjust_to_prior(show.p[r], cascade.show.fit_event_rate, cascade.show.train_event_rate);
    c.p_book_given_show =
        adjust_to_prior(booked.p[r], cascade.booked.fit_event_rate, cascade.booked.train_event_rate);
    c.p_book = c.p_show * c.p_book_given_show;
    c.show_pred = c.p_show >= threshold;
    c.book_pred = c.show_pred && c.p_book_given_show >= threshold;
    c.unseen = show.unseen[r] || booked.unseen[r];
    out.unseen_rows += c.unseen;
    out.customers.push_back(std::move(c));
  }
  std::stable_sort(out.customers.begin(), out.customers.end(),
                   [](const ScoredCustomer& a, const ScoredCustomer& b) { return a.p_book > b.p_book; });
  return out;
}

DemandForecast forecast_demand(std::span<const ScoredCustomer> scored) {
  DemandForecast f;
  f.customers = scored.size();
  for (const auto& c : scored) {
    f.expected_shows += c.p_show;
    f.expected_bookings += c.p_book;
    f.predicted_shows += c.show_pred;
    f.predicted_bookings += c.book_pred;
  }
  return f;
}

void write_scored_csv(std::ostream& out, const ScoredShortlist& scored) {
  write_csv_row(out, {"row_id", "p_show", "p_book_given_show", "p_book", "show_pred", "book_pred"});
  for (const auto& c : scored.customers) {
    write_csv_row(out, {c.id, format_double(c.p_show), format_double(c.p_book_given_show), format_double(c.p_book),
                        c.show_pred ? "1" : "0", c.book_pred ? "1" : "0"});
  }
}

nlohmann::json to_json(const DemandForecast& f) {
  return {{"customers", f.customers},
          {"expected_shows", f.expected_shows},
          {"expected_bookings", f.expected_bookings},
          {"predicted_shows", f.predicted_shows},
          {"predicted_bookings", f.predicted_bookings}};
}

nlohmann::json to_json(const Leaderboard& board) {
  auto entries = json::array();
  for (std::size_t i = 0; i < board.entries.size(); ++i) {
    const auto& e = board.entries[i];
    json j{{"rank", i + 1},
           {"id", e.id},
           {"learner", learner_id(e.kind)},
           {"display_name", learner_display_name(e.kind)},
           {"config", to_json(e.config)},
           {"status", e.ok() ? "ok" : "failed"}};
    if (e.ok()) j["report"] = to_json(*e.report, false);
    else j["error"] = e.error;
    entries.push_back(std::move(j));
  }
  return {{"target", to_string(board.target)},
          {"features", board.features},
          {"champion", board.champion_entry().id},
          {"interpretable_pick", board.interpretable_pick},
          {"train_rows", board.train_rows},
          {"balanced_rows", board.balanced_rows},
          {"test_rows", board.test_rows},
          {"train_event_rate", board.train_event_rate},
          {"fit_event_rate", board.fit_event_rate},
          {"test_event_rate", board.test_event_rate},
          {"test_balanced", board.test_balanced},
          {"entries", std::move(entries)}};
}

Leaderboard leaderboard_from_json(const nlohmann::json& j) {
  Leaderboard board;
  board.target = parse_target(j.at("target").get<std::string>());
  board.features = j.at("features").get<std::vector<std::string>>();
  board.interpretable_pick = j.at("interpretable_pick").get<bool>();
  board.train_rows = j.at("train_rows").get<std::size_t>();
  board.balanced_rows = j.at("balanced_rows").get<std::size_t>();
  board.test_rows = j.at("test_rows").get<std::size_t>();
  board.train_event_rate = j.at("train_event_rate").get<double>();
  board.fit_event_rate = j.at("fit_event_rate").get<double>();
  board.test_event_rate = j.at("test_event_rate").get<double>();
  board.test_balanced = j.at("test_balanced").get<bool>();
  const auto champion = j.at("champion").get<std::string>();
  bool found = false;
  for (const auto& je : j.at("entries")) {
    CandidateResult e;
    e.id = je.at("id").get<std::string>();
    e.kind = parse_learner(je.at("learner").get<std::string>());
    e.config = train_config_from_json(je.at("config"));
    if (je.at("status").get<std::string>() == "ok") e.report = evaluation_report_from_json(je.at("report"));
    else e.error = je.at("error").get<std::string>();
    if (e.id == champion) {
      if (!e.ok()) throw Error(ErrorCode::CorruptBundle, "champion '" + champion + "' has no report");
      board.champion = board.entries.size();
      found = true;
    }
    board.entries.push_back(std::move(e));
  }
  if (!found) throw Error(ErrorCode::CorruptBundle, "champion '" + champion + "' missing from the leaderboard");
  return board;
}

void save_bundle(const std::filesystem::path& dir, const CascadeModel& cascade) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string());
  json j{{"format", kBundleFormat},
         {"version", kBundleVersion},
         {"schema_fingerprint", cascade.schema.fingerprint()},
         {"config", to_json(cascade.config)},
         {"imputation", to_json(cascade.imputation)},
         {"show", to_json(cascade.show)},
         {"booked", to_json(cascade.booked)}};
  write_file_atomic(dir / "schema.cfg", cascade.schema.to_config_text());
  save_model(dir / "show_model.json", cascade.show_model());
  save_model(dir / "booked_model.json", cascade.booked_model());
  write_file_atomic(dir / "cascade.json", j.dump(1) + "\n");
}

CascadeModel load_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::CorruptBundle, dir.string() + " is not a bundle directory");
  }
  CascadeModel cascade;
  try {
    cascade.schema = Schema::parse(read_file(dir / "schema.cfg"));
    const auto j = json::parse(read_file(dir / "cascade.json"));
    if (j.at("format").get<std::string>() != kBundleFormat || j.at("version").get<int>() != kBundleVersion) {
      throw Error(ErrorCode::CorruptBundle, "cascade.json is not a supported bundle document");
    }
    if (j.at("schema_fingerprint").get<std::string>() != cascade.schema.fingerprint()) {
      throw Error(ErrorCode::CorruptBundle, "schema.cfg does not match the bundle fingerprint");
    }
    cascade.config = cascade_config_from_json(j.at("config"));
    cascade.imputation = imputation_fit_from_json(j.at("imputation"));
    cascade.show = leaderboard_from_json(j.at("show"));
    cascade.booked = leaderboard_from_json(j.at("booked"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptBundle, dir.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptBundle) throw;
    throw Error(ErrorCode::CorruptBundle, dir.string() + ": " + e.what());
  }
  auto attach = [&](Leaderboard& board, const char* file) {
    if (!std::filesystem::is_regular_file(dir / file)) {
      throw Error(ErrorCode::CorruptBundle, dir.string() + ": " + file + " is missing");
    }
    auto model = load_model(dir / file);
    auto& entry = board.entries[board.champion];
    if (model.kind != entry.kind || model.target != board.target ||
        model.schema_fingerprint != cascade.schema.fingerprint()) {
      throw Error(ErrorCode::CorruptBundle, std::string(file) + " does not match the leaderboard champion");
    }
    entry.model = std::move(model);
  };
  attach(cascade.show, "show_model.json");
  attach(cascade.booked, "booked_model.json");
  return cascade;
}

nlohmann::json report_json(const CascadeModel& cascade) {
  return {{"schema_fingerprint", cascade.schema.fingerprint()},
          {"threshold", cascade.config.threshold},
          {"show", to_json(cascade.show)},
          {"booked", to_json(cascade.booked)}};
}

std::string render_report(const CascadeModel& cascade) {
  std::ostringstream out;
  auto stage = [&](const Leaderboard& board, const std::string& title) {
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < board.entries.size(); ++i) {
      const auto& e = board.entries[i];
      std::string name(learner_display_name(e.kind));
      if (e.id.find('/') != std::string::npos) name += " (" + e.id.substr(e.id.find('/') + 1) + ")";
      ReportRow row{name, e.ok() ? &*e.report : nullptr, ""};
      if (!e.ok()) row.note = "failed: " + e.error;
      else if (i == board.champion) row.note = board.interpretable_pick ? "<- champion (interpretable)" : "<- champion";
      rows.push_back(std::move(row));
    }
    out << render_comparison(title, rows);
    out << "train rows " << board.train_rows << " (event rate " << format_percent(board.train_event_rate)
        << "%), fitted on " << board.balanced_rows << " rows (event rate " << format_percent(board.fit_event_rate)
        << "%), test rows " << board.test_rows << " (event rate " << format_percent(board.test_event_rate)
        << "%)\n";
  };
  stage(cascade.show, "Stage 1: show flag");
  out << '\n';
  stage(cascade.booked, "Stage 2: booked flag, shown customers only");
  return out.str();
}

}  // namespace showcast
