#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "showcast/cascade.hpp"
#include "showcast/csv.hpp"
#include "showcast/dataset.hpp"
#include "showcast/error.hpp"
#include "showcast/evaluate.hpp"
#include "showcast/io.hpp"
#include "showcast/kvconfig.hpp"
#include "showcast/planner.hpp"
#include "showcast/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace showcast;

namespace {

constexpr std::string_view kToolVersion = "1.0.0";

// Bad flag values detected before any work starts; exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string schema;
};

// Collects everything a run needs to be reproduced.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  void flag(const std::string& name, json value) { flags_[name] = std::move(value); }
  void input(const std::string& role, const std::string& path) { inputs_[role] = path; }
  void output(const std::string& file) { outputs_.push_back(file); }
  void fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

  void write(const fs::path& dir, std::uint64_t seed) {
    std::sort(outputs_.begin(), outputs_.end());
    json j{{"tool", "showcast"},
           {"version", kToolVersion},
           {"subcommand", subcommand_},
           {"seed", seed},
           {"flags", flags_},
           {"inputs", inputs_},
           {"outputs", outputs_}};
    if (fingerprint_) j["schema_fingerprint"] = *fingerprint_;
    write_file_atomic(dir / "manifest.json", j.dump(1) + "\n");
  }

 private:
  std::string subcommand_;
  std::map<std::string, json> flags_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::optional<std::string> fingerprint_;
};

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw UsageError("--out <dir> is required; pass the directory to write artifacts into");
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir.string());
  return dir;
}

void emit(const fs::path& dir, const std::string& file, std::string_view contents, Manifest& manifest) {
  write_file_atomic(dir / file, contents);
  manifest.output(file);
}

template <class Fn>
auto validated(Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidParams || e.code() == ErrorCode::Config) throw UsageError(e.what());
    throw;
  }
}

// ---- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::optional<std::size_t> rows;
  std::string profile;
  std::optional<double> show_rate;
  std::optional<double> book_rate;
  std::size_t noise_features = 3;
  double cancel_rate = 0.005;
  double missing_rate = 0.0;
  bool period_drift = false;
};

int cmd_generate(const Globals& g, const GenerateArgs& a) {
  const auto dir = require_out(g);
  auto [cfg, profile] = validated([&] {
    auto cfg = a.rows ? GeneratorConfig::historical_scaled(*a.rows, g.seed) : GeneratorConfig::historical(g.seed);
    if (a.show_rate) cfg.target_show_rate = *a.show_rate;
    if (a.book_rate) cfg.target_book_rate = *a.book_rate;
    cfg.noise_feature_count = a.noise_features;
    cfg.cancel_rate = a.cancel_rate;
    cfg.missing_rate = a.missing_rate;
    cfg.period_drift = a.period_drift;
    cfg.validate();
    auto profile = a.profile.empty() ? BehaviorProfile::reference() : BehaviorProfile::load(a.profile);
    profile.validate();
    return std::pair{cfg, profile};
  });

  Manifest manifest("generate");
  manifest.flag("rows", cfg.total_rows());
  manifest.flag("show_rate", cfg.target_show_rate ? json(*cfg.target_show_rate) : json(nullptr));
  manifest.flag("book_rate", cfg.target_book_rate ? json(*cfg.target_book_rate) : json(nullptr));
  manifest.flag("noise_features", cfg.noise_feature_count);
  manifest.flag("cancel_rate", cfg.cancel_rate);
  manifest.flag("missing_rate", cfg.missing_rate);
  manifest.flag("period_drift", cfg.period_drift);
  manifest.flag("out", g.out);
  if (!a.profile.empty()) manifest.input("profile", a.profile);

  const auto corpus = generate(cfg, profile);
  std::ostringstream csv;
  write_corpus_csv(csv, corpus);
  emit(dir, "customers.csv", csv.str(), manifest);
  emit(dir, "schema.cfg", corpus.schema.to_config_text(), manifest);
  emit(dir, "profile.cfg", profile.to_config_text(), manifest);

  json calibration = json::array();
  for (const auto& c : corpus.calibrations) {
    calibration.push_back({{"show_shift", c.show_shift}, {"book_shift", c.book_shift}, {"iterations", c.iterations}});
  }
  const auto summary = summarize(corpus.dataset);
  auto summary_json = to_json(summary);
  summary_json["canceled_rows_discarded"] = corpus.canceled;
  summary_json["calibration"] = std::move(calibration);
  emit(dir, "summary.json", summary_json.dump(1) + "\n", manifest);
  const auto text = render_summary(summary);
  emit(dir, "summary.txt", text, manifest);
  manifest.fingerprint(corpus.schema.fingerprint());
  manifest.write(dir, g.seed);

  std::cout << text;
  std::cout << "wrote " << corpus.records.size() << " records (" << corpus.canceled << " canceled) to "
            << (dir / "customers.csv").string() << '\n';
  return 0;
}

// ---- train --------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  double train_frac = 0.8;
  double booked_train_frac = 0.5;
  std::string balance = "up";
  std::string candidates = "finalists";
  std::string show_candidates;
  std::string booked_candidates;
  bool grid = false;
  bool prefer_interpretable = false;
  bool no_stratify = false;
  std::string impute = "mode/median";
  double threshold = kDefaultThreshold;
  bool serial = false;
  TrainConfig learner;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const auto dir = require_out(g);
  const auto cfg = validated([&] {
    CascadeConfig cfg;
    if (a.candidates == "all") {
      cfg.show_candidates = cfg.booked_candidates = all_learners();
    } else if (a.candidates != "finalists") {
      throw UsageError("--candidates must be 'finalists' or 'all'");
    }
    if (!a.show_candidates.empty()) cfg.show_candidates = parse_learner_list(a.show_candidates);
    if (!a.booked_candidates.empty()) cfg.booked_candidates = parse_learner_list(a.booked_candidates);
    cfg.grid = a.grid;
    cfg.train = a.learner;
    cfg.train.seed = g.seed;
    cfg.show_train_fraction = a.train_frac;
    cfg.booked_train_fraction = a.booked_train_frac;
    cfg.stratify = !a.no_stratify;
    if (a.balance == "off") cfg.balance = std::nullopt;
    else cfg.balance = parse_balance_mode(a.balance);
    cfg.imputation = ImputationPolicy::parse(a.impute);
    cfg.threshold = a.threshold;
    cfg.prefer_interpretable = a.prefer_interpretable;
    cfg.parallel = !a.serial;
    cfg.seed = g.seed;
    cfg.validate();
    return cfg;
  });
  if (g.schema.empty()) throw UsageError("--schema <file> is required for train");
  const auto schema = Schema::load(g.schema);
  const auto ds = load_csv(a.data, schema);
  const auto cascade = train_cascade(ds, cfg);

  Manifest manifest("train");
  manifest.input("data", a.data);
  manifest.input("schema", g.schema);
  manifest.flag("out", g.out);
  manifest.flag("config", to_json(cfg));
  manifest.flag("serial", a.serial);
  manifest.fingerprint(schema.fingerprint());
  save_bundle(dir, cascade);
  for (const char* f : {"cascade.json", "schema.cfg", "show_model.json", "booked_model.json"}) manifest.output(f);
  const auto report = render_report(cascade);
  emit(dir, "report.txt", report, manifest);
  manifest.write(dir, g.seed);

  std::cout << report;
  std::cout << "bundle written to " << dir.string() << '\n';
  return 0;
}

// ---- evaluate -------------------------------------------------------------------

struct EvaluateArgs {
  std::string bundle;
  std::string data;
  std::optional<double> threshold;
  bool roc = false;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  const auto dir = require_out(g);
  if (a.threshold && !(*a.threshold >= 0.0 && *a.threshold <= 1.0)) throw UsageError("--threshold must be in [0, 1]");
  const auto cascade = load_bundle(a.bundle);
  const double threshold = a.threshold.value_or(cascade.config.threshold);
  const auto schema = g.schema.empty() ? cascade.schema : Schema::load(g.schema);
  const auto data = apply_imputation(load_csv(a.data, schema), cascade.imputation);

  const auto show_p = predict_proba(cascade.show_model(), data);
  const auto show_report = evaluate(show_p.p, data.show_flags(), threshold);
  std::vector<std::size_t> shown;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    if (data.show_flags()[r]) shown.push_back(r);
  }
  if (shown.empty()) throw Error(ErrorCode::EmptyShownSubset, "no customer in the data showed up");
  const auto shown_data = data.take(shown);
  const auto booked_p = predict_proba(cascade.booked_model(), shown_data);
  const auto booked_report = evaluate(booked_p.p, shown_data.booked_flags(), threshold);

  Manifest manifest("evaluate");
  manifest.input("bundle", a.bundle);
  manifest.input("data", a.data);
  if (!g.schema.empty()) manifest.input("schema", g.schema);
  manifest.flag("threshold", threshold);
  manifest.flag("roc", a.roc);
  manifest.flag("out", g.out);
  manifest.fingerprint(schema.fingerprint());

  const auto& sm = cascade.show.champion_entry();
  const auto& bm = cascade.booked.champion_entry();
  json j{{"threshold", threshold},
         {"show", {{"model", sm.id}, {"rows", data.n_rows()}, {"report", to_json(show_report, false)}}},
         {"booked", {{"model", bm.id}, {"rows", shown_data.n_rows()}, {"report", to_json(booked_report, false)}}}};
  emit(dir, "evaluation.json", j.dump(1) + "\n", manifest);
  std::string text;
  const ReportRow show_row[] = {{std::string(learner_display_name(sm.kind)), &show_report, ""}};
  const ReportRow booked_row[] = {{std::string(learner_display_name(bm.kind)), &booked_report, ""}};
  text += render_comparison("Stage 1: show flag (" + std::to_string(data.n_rows()) + " rows)", show_row);
  text += '\n';
  text += render_comparison("Stage 2: booked flag (" + std::to_string(shown_data.n_rows()) + " shown rows)",
                            booked_row);
  emit(dir, "evaluation.txt", text, manifest);
  if (a.roc) {
    std::ostringstream s, b;
    write_roc_csv(s, show_report.roc);
    write_roc_csv(b, booked_report.roc);
    emit(dir, "roc_show.csv", s.str(), manifest);
    emit(dir, "roc_booked.csv", b.str(), manifest);
  }
  manifest.write(dir, g.seed);
  std::cout << text;
  return 0;
}

// ---- score ----------------------------------------------------------------------

struct ScoreArgs {
  std::string bundle;
  std::string data;
  std::optional<double> threshold;
};

int cmd_score(const Globals& g, const ScoreArgs& a) {
  const auto dir = require_out(g);
  if (a.threshold && !(*a.threshold >= 0.0 && *a.threshold <= 1.0)) throw UsageError("--threshold must be in [0, 1]");
  const auto cascade = load_bundle(a.bundle);
  const double threshold = a.threshold.value_or(cascade.config.threshold);
  const auto schema = g.schema.empty() ? cascade.schema : Schema::load(g.schema);
  const auto data = load_unlabeled_csv(a.data, schema);
  const auto scored = score_shortlist(cascade, data, threshold);
  const auto forecast = forecast_demand(scored.customers);

  Manifest manifest("score");
  manifest.input("bundle", a.bundle);
  manifest.input("data", a.data);
  if (!g.schema.empty()) manifest.input("schema", g.schema);
  manifest.flag("threshold", threshold);
  manifest.flag("out", g.out);
  manifest.fingerprint(schema.fingerprint());
  std::ostringstream csv;
  write_scored_csv(csv, scored);
  emit(dir, "scored.csv", csv.str(), manifest);
  auto fj = to_json(forecast);
  fj["threshold"] = threshold;
  fj["unseen_category_rows"] = scored.unseen_rows;
  emit(dir, "forecast.json", fj.dump(1) + "\n", manifest);
  manifest.write(dir, g.seed);

  if (scored.unseen_rows) {
    std::cerr << "warning: " << scored.unseen_rows << " rows carry categories not seen in training\n";
  }
  std::cout << "scored " << forecast.customers << " customers; expected shows "
            << format_double_fixed(forecast.expected_shows, 2) << ", expected bookings "
            << format_double_fixed(forecast.expected_bookings, 2) << " (predicted shows " << forecast.predicted_shows
            << ", predicted show-and-book " << forecast.predicted_bookings << ")\n";
  return 0;
}

// ---- plan ----------------------------------------------------------------------

struct PlanArgs {
  std::int64_t staff = 0;
  double hours = 0.0;
  double utilization = 0.0;
  double days = 0.0;
  std::string customers;
  double service_minutes = 0.0;
  std::string what_if;
  std::string demand = "shows";
};

std::optional<double> parse_number(const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

// Sum of a probability column of a scored CSV.
double demand_from_scored(const std::string& path, const std::string& column) {
  std::istringstream in(read_file(path));
  CsvReader reader(in);
  const auto header = reader.next();
  if (!header) throw Error(ErrorCode::EmptyFile, path + " is empty");
  const auto it = std::find(header->begin(), header->end(), column);
  if (it == header->end()) throw Error(ErrorCode::SchemaMismatch, path + " has no '" + column + "' column");
  const auto pos = static_cast<std::size_t>(it - header->begin());
  double total = 0.0;
  while (auto rec = reader.next()) {
    if (rec->size() != header->size()) {
      throw Error(ErrorCode::SchemaMismatch, path + " line " + std::to_string(reader.record_line()) +
                                                 ": expected " + std::to_string(header->size()) + " fields");
    }
    total += parse_double((*rec)[pos], path + " line " + std::to_string(reader.record_line()) + ", column " + column);
  }
  return total;
}

int cmd_plan(const Globals& g, const PlanArgs& a) {
  if (a.demand != "shows" && a.demand != "bookings") throw UsageError("--demand must be 'shows' or 'bookings'");
  CapacityParams cap{a.staff, a.hours, a.utilization, a.days};
  validated([&] {
    cap.validate();
    return 0;
  });
  if (!(a.service_minutes > 0.0) || !std::isfinite(a.service_minutes)) {
    throw UsageError("--service-minutes must be > 0");
  }
  std::optional<std::pair<std::int64_t, std::int64_t>> range;
  if (!a.what_if.empty()) {
    const auto sep = a.what_if.find("..");
    std::int64_t lo = 0, hi = 0;
    bool ok = sep != std::string::npos;
    if (ok) {
      const auto l = a.what_if.substr(0, sep), h = a.what_if.substr(sep + 2);
      ok = std::from_chars(l.data(), l.data() + l.size(), lo).ptr == l.data() + l.size() && !l.empty() &&
           std::from_chars(h.data(), h.data() + h.size(), hi).ptr == h.data() + h.size() && !h.empty();
    }
    if (!ok || lo < 1 || lo > hi) throw UsageError("--what-if expects lo..hi with 1 <= lo <= hi, e.g. 5..10");
    range = std::pair{lo, hi};
  }

  double customers = 0.0;
  std::string customers_source = "number";
  if (auto n = parse_number(a.customers)) {
    if (!(*n >= 0.0) || !std::isfinite(*n)) throw UsageError("--customers must be >= 0");
    customers = *n;
  } else if (fs::is_regular_file(a.customers)) {
    customers = demand_from_scored(a.customers, a.demand == "shows" ? "p_show" : "p_book");
    customers_source = "scored-csv";
  } else {
    throw UsageError("--customers must be a number or the path of a scored CSV");
  }
  const DemandParams dem{customers, minutes_to_hours(a.service_minutes)};
  const auto p = plan(cap, dem);

  std::string text = render_plan(cap, dem, p);
  json j{{"capacity", to_json(cap)}, {"demand", to_json(dem)}, {"plan", to_json(p)}};
  if (range) {
    const auto table = what_if(cap, range->first, range->second, dem);
    text += "\n" + render_what_if(table);
    j["what_if"] = to_json(table);
  }
  std::cout << text;
  if (!g.out.empty()) {
    const auto dir = require_out(g);
    Manifest manifest("plan");
    manifest.flag("staff", a.staff);
    manifest.flag("hours", a.hours);
    manifest.flag("utilization", a.utilization);
    manifest.flag("days", a.days);
    manifest.flag("service_minutes", a.service_minutes);
    manifest.flag("demand", a.demand);
    manifest.flag("what_if", a.what_if);
    manifest.flag("out", g.out);
    if (customers_source == "number") manifest.flag("customers", a.customers);
    else manifest.input("customers", a.customers);
    emit(dir, "plan.json", j.dump(1) + "\n", manifest);
    emit(dir, "plan.txt", text, manifest);
    manifest.write(dir, g.seed);
  }
  return 0;
}

// ---- report -------------------------------------------------------------------

int cmd_report(const Globals& g, const std::string& bundle) {
  const auto cascade = load_bundle(bundle);
  const auto text = render_report(cascade);
  std::cout << text;
  if (!g.out.empty()) {
    const auto dir = require_out(g);
    Manifest manifest("report");
    manifest.input("bundle", bundle);
    manifest.flag("out", g.out);
    manifest.fingerprint(cascade.schema.fingerprint());
    emit(dir, "report.json", report_json(cascade).dump(1) + "\n", manifest);
    emit(dir, "report.txt", text, manifest);
    manifest.write(dir, g.seed);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage show/booking prediction and staff capacity planning"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--schema", g.schema, "Schema config file");

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic customer corpus");
  generate_cmd->add_option("--rows", gen.rows, "Customers to generate (default: historical 162,710)");
  generate_cmd->add_option("--profile", gen.profile, "Behavior profile config (default: built-in reference)")
      ->check(CLI::ExistingFile);
  generate_cmd->add_option("--show-rate", gen.show_rate, "Target show rate (default 0.872)");
  generate_cmd->add_option("--book-rate", gen.book_rate, "Target booked rate over all customers (default 0.202)");
  generate_cmd->add_option("--noise-features", gen.noise_features, "Uninformative numeric columns")
      ->capture_default_str();
  generate_cmd->add_option("--cancel-rate", gen.cancel_rate, "Share of booked-then-canceled rows")
      ->capture_default_str();
  generate_cmd->add_option("--missing-rate", gen.missing_rate, "Share of blank predictor cells")
      ->capture_default_str();
  generate_cmd->add_flag("--period-drift", gen.period_drift, "Calibrate each period to its own rates");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the two-stage cascade into a bundle directory");
  train_cmd->add_option("--data", tr.data, "Labeled customer CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--train-frac", tr.train_frac, "Stage-1 training share")->capture_default_str();
  train_cmd->add_option("--booked-train-frac", tr.booked_train_frac, "Stage-2 training share")->capture_default_str();
  train_cmd->add_option("--balance", tr.balance, "Training-side balancing")
      ->check(CLI::IsMember({"up", "down", "off"}))
      ->capture_default_str();
  train_cmd->add_option("--candidates", tr.candidates, "finalists or all")
      ->check(CLI::IsMember({"finalists", "all"}))
      ->capture_default_str();
  train_cmd->add_option("--show-candidates", tr.show_candidates, "Comma list of learners for stage 1");
  train_cmd->add_option("--booked-candidates", tr.booked_candidates, "Comma list of learners for stage 2");
  train_cmd->add_flag("--grid", tr.grid, "Add the named configuration grid per learner");
  train_cmd->add_flag("--prefer-interpretable", tr.prefer_interpretable,
                      "Pick the best tree within 0.02 AUC of the leader");
  train_cmd->add_flag("--no-stratify", tr.no_stratify, "Plain random partitions");
  train_cmd->add_option("--impute", tr.impute, "categorical/numeric fill, e.g. mode/median")->capture_default_str();
  train_cmd->add_option("--threshold", tr.threshold, "Classification cutoff")->capture_default_str();
  train_cmd->add_flag("--serial", tr.serial, "Train candidates one after another");
  train_cmd->add_option("--max-depth", tr.learner.max_depth)->capture_default_str();
  train_cmd->add_option("--min-leaf", tr.learner.min_leaf)->capture_default_str();
  train_cmd->add_option("--alpha-split", tr.learner.alpha_split)->capture_default_str();
  train_cmd->add_option("--alpha-merge", tr.learner.alpha_merge)->capture_default_str();
  train_cmd->add_option("--hidden-units", tr.learner.hidden_units)->capture_default_str();
  train_cmd->add_option("--learning-rate", tr.learner.learning_rate)->capture_default_str();
  train_cmd->add_option("--epochs", tr.learner.epochs)->capture_default_str();
  train_cmd->add_option("--l2", tr.learner.l2)->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a bundle's champions on labeled data");
  evaluate_cmd->add_option("--bundle", ev.bundle, "Bundle directory")->required();
  evaluate_cmd->add_option("--data", ev.data, "Labeled customer CSV")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--threshold", ev.threshold, "Classification cutoff (default: the bundle's)");
  evaluate_cmd->add_flag("--roc", ev.roc, "Also write ROC points as CSV");

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Score a shortlist, most likely bookers first");
  score_cmd->add_option("--bundle", sc.bundle, "Bundle directory")->required();
  score_cmd->add_option("--data", sc.data, "Shortlist CSV")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--threshold", sc.threshold, "Classification cutoff (default: the bundle's)");

  PlanArgs pl;
  auto* plan_cmd = app.add_subcommand("plan", "Staff capacity check and what-if table");
  plan_cmd->add_option("--staff", pl.staff, "Staff on duty")->required();
  plan_cmd->add_option("--hours", pl.hours, "Working hours per day")->required();
  plan_cmd->add_option("--utilization", pl.utilization, "Utilization rate in (0, 1]")->required();
  plan_cmd->add_option("--days", pl.days, "Working days in the period")->required();
  plan_cmd->add_option("--customers", pl.customers, "Forecasted customers, or a scored CSV")->required();
  plan_cmd->add_option("--service-minutes", pl.service_minutes, "Service time per customer")->required();
  plan_cmd->add_option("--what-if", pl.what_if, "Staff range lo..hi");
  plan_cmd->add_option("--demand", pl.demand, "With a scored CSV: shows (sum p_show) or bookings (sum p_book)")
      ->check(CLI::IsMember({"shows", "bookings"}))
      ->capture_default_str();

  std::string report_bundle;
  auto* report_cmd = app.add_subcommand("report", "Render a bundle's leaderboards");
  report_cmd->add_option("--bundle", report_bundle, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\nrun 'showcast --help' for usage\n";
    return 2;
  }

  try {
    if (*generate_cmd) return cmd_generate(g, gen);
    if (*train_cmd) return cmd_train(g, tr);
    if (*evaluate_cmd) return cmd_evaluate(g, ev);
    if (*score_cmd) return cmd_score(g, sc);
    if (*plan_cmd) return cmd_plan(g, pl);
    if (*report_cmd) return cmd_report(g, report_bundle);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\nrun 'showcast --help' for usage\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
