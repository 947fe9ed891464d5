#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace showcast {

enum class ColumnKind { Categorical, Numeric };
enum class ColumnRole { Predictor, BookingStatus, Identifier, Ignored };

// Raw outcome of one shortlisted appointment as recorded in the source data.
enum class BookingStatus { BookedCompleted, ShowedNoBook, NoShow, BookedCanceled };

// The two binary targets of the cascade.
enum class Target { Show, Booked };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(ColumnRole role);
std::string_view to_string(BookingStatus status);
std::string_view to_string(Target target);
Target parse_target(std::string_view text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Categorical;
  ColumnRole role = ColumnRole::Predictor;

  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

// Declared layout of a customer CSV.
//
// Config grammar (one entry per line, see kvconfig.hpp):
//
//   <column> = <categorical|numeric>, <predictor|booking-status|identifier|ignored>
//   @period = <column>              optional grouping column for summaries
//   @age_group = <column>           optional grouping column for summaries
//   @status.<canonical> = <token>   optional raw token for a booking status
//
// Canonical status tokens are booked_completed, showed_no_book, no_show and
// booked_canceled. Column order in the file is the CSV column order.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<ColumnSpec> columns, std::map<std::string, std::string> metadata = {});

  static Schema parse(std::string_view text);
  static Schema load(const std::filesystem::path& path);
  std::string to_config_text() const;

  const std::vector<ColumnSpec>& columns() const noexcept { return columns_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }
  std::optional<std::string> metadata_value(std::string_view key) const;

  std::optional<std::size_t> find(std::string_view name) const;
  const ColumnSpec& status_column() const;
  std::vector<std::string> predictor_names() const;
  std::optional<std::string> identifier_name() const;

  // Raw CSV token -> status, honoring @status.* overrides.
  std::optional<BookingStatus> parse_status(std::string_view token) const;
  std::string status_token(BookingStatus status) const;

  // FNV-1a 64 over the canonical column list, as 16 hex digits.
  std::string fingerprint() const;

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<ColumnSpec> columns_;
  std::map<std::string, std::string> metadata_;
};

inline constexpr std::int32_t kMissingCode = -1;

struct CategoricalColumn {
  std::vector<std::string> dictionary;  // first-seen order
  std::vector<std::int32_t> codes;      // kMissingCode when blank
};

struct NumericColumn {
  std::vector<double> values;  // NaN when blank
};

struct Column {
  ColumnSpec spec;
  std::variant<CategoricalColumn, NumericColumn> data;

  bool is_numeric() const noexcept { return std::holds_alternative<NumericColumn>(data); }
  const CategoricalColumn& categorical() const { return std::get<CategoricalColumn>(data); }
  const NumericColumn& numeric() const { return std::get<NumericColumn>(data); }
  std::size_t size() const;
  std::size_t missing_count() const;
  bool is_missing(std::size_t row) const;
  std::string cell_text(std::size_t row) const;  // "" when missing
};

struct DatasetProvenance {
  std::string source;
  std::size_t raw_rows = 0;
  std::size_t discarded_canceled = 0;
  std::string imputation = "none";
  bool balanced = false;
};

struct DerivedFlags {
  bool show = false;
  bool booked = false;
  bool discard = false;
};

DerivedFlags derive_flags(BookingStatus status) noexcept;

// Immutable typed table of customer records. Holds every schema column except
// the raw booking-status column, which is replaced by the derived show/booked
// flags. Unlabeled datasets (shortlists to score) carry no flags.
class ColumnarDataset {
 public:
  ColumnarDataset() = default;
  ColumnarDataset(Schema schema, std::vector<Column> columns, std::vector<std::uint8_t> show,
                  std::vector<std::uint8_t> booked, std::vector<std::size_t> row_ids,
                  DatasetProvenance provenance, bool labeled);

  // Builds a dataset from text cells laid out as the CSV would be. With
  // `labeled`, every row must carry the status column; otherwise the status
  // column must be absent from `header`.
  static ColumnarDataset from_records(const Schema& schema, const std::vector<std::string>& header,
                                      const std::vector<std::vector<std::string>>& rows,
                                      bool labeled, std::string source = "records");

  std::size_t n_rows() const noexcept { return n_rows_; }
  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::string_view name) const;
  const Column* find_column(std::string_view name) const;
  bool labeled() const noexcept { return labeled_; }

  std::span<const std::uint8_t> show_flags() const noexcept { return show_; }
  std::span<const std::uint8_t> booked_flags() const noexcept { return booked_; }
  std::span<const std::uint8_t> flags(Target target) const noexcept;
  std::span<const std::size_t> row_ids() const noexcept { return row_ids_; }
  const DatasetProvenance& provenance() const noexcept { return provenance_; }

  // Row label for output files: identifier column value, else the row id.
  std::string row_label(std::size_t row) const;

  // Copies the selected rows in the given order; repeats are allowed.
  ColumnarDataset take(std::span<const std::size_t> rows) const;
  ColumnarDataset with_columns(std::vector<Column> columns) const;
  ColumnarDataset with_provenance(DatasetProvenance provenance) const;

 private:
  Schema schema_;
  std::vector<Column> columns_;
  std::vector<std::uint8_t> show_;
  std::vector<std::uint8_t> booked_;
  std::vector<std::size_t> row_ids_;
  DatasetProvenance provenance_;
  std::size_t n_rows_ = 0;
  bool labeled_ = false;
};

// Header must equal the schema column list, in order.
ColumnarDataset load_csv(const std::filesystem::path& path, const Schema& schema);

// Shortlist without outcomes: every non-status schema column must be present
// (any order); a status column, if present, is ignored.
ColumnarDataset load_unlabeled_csv(const std::filesystem::path& path, const Schema& schema);

void write_csv(std::ostream& out, const ColumnarDataset& ds, bool with_status);

// ---- imputation -----------------------------------------------------------

enum class CategoricalFill { Mode, LeaveMissing };
enum class NumericFill { Mean, Median, LeaveMissing };

struct ImputationPolicy {
  CategoricalFill categorical = CategoricalFill::Mode;
  NumericFill numeric = NumericFill::Median;

  std::string describe() const;  // e.g. "mode/median"
  static ImputationPolicy parse(std::string_view text);
  bool fills_everything() const noexcept {
    return categorical != CategoricalFill::LeaveMissing && numeric != NumericFill::LeaveMissing;
  }
};

// Fill values learned from one dataset, applicable to another with the same schema.
struct ImputationFit {
  ImputationPolicy policy;
  std::map<std::string, std::string> categorical;
  std::map<std::string, double> numeric;
};

ImputationFit fit_imputation(const ColumnarDataset& ds, const ImputationPolicy& policy);
ColumnarDataset apply_imputation(const ColumnarDataset& ds, const ImputationFit& fit);
ColumnarDataset impute(const ColumnarDataset& ds, const ImputationPolicy& policy);

nlohmann::json to_json(const ImputationFit& fit);
ImputationFit imputation_fit_from_json(const nlohmann::json& j);

// ---- summaries --------------------------------------------------------------

struct GroupCount {
  std::string label;
  std::size_t rows = 0;
  std::size_t shows = 0;
  std::size_t booked = 0;

  double show_pct() const noexcept { return rows ? 100.0 * double(shows) / double(rows) : 0.0; }
  double booked_pct() const noexcept { return rows ? 100.0 * double(booked) / double(rows) : 0.0; }
  double booked_of_shown_pct() const noexcept {
    return shows ? 100.0 * double(booked) / double(shows) : 0.0;
  }
};

struct Summary {
  std::optional<std::string> period_column;
  std::optional<std::string> age_column;
  std::vector<GroupCount> periods;
  GroupCount total;
  std::vector<std::pair<std::string, std::size_t>> age_groups;

  double age_pct(std::size_t i) const noexcept {
    return total.rows ? 100.0 * double(age_groups[i].second) / double(total.rows) : 0.0;
  }
};

// Grouping columns default to the schema's @period / @age_group metadata.
Summary summarize(const ColumnarDataset& ds, std::optional<std::string> period_column = std::nullopt,
                  std::optional<std::string> age_column = std::nullopt);
std::string render_summary(const Summary& summary);
nlohmann::json to_json(const Summary& summary);

}  // namespace showcast
