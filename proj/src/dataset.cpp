#include "showcast/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "showcast/csv.hpp"
#include "showcast/error.hpp"
#include "showcast/kvconfig.hpp"

namespace showcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr BookingStatus kAllStatuses[] = {BookingStatus::BookedCompleted,
                                          BookingStatus::ShowedNoBook, BookingStatus::NoShow,
                                          BookingStatus::BookedCanceled};

ColumnKind parse_kind(std::string_view text, std::size_t line) {
  if (text == "categorical") return ColumnKind::Categorical;
  if (text == "numeric") return ColumnKind::Numeric;
  throw Error(ErrorCode::Config, "line " + std::to_string(line) + ": unknown column kind '" +
                                     std::string(text) + "'");
}

ColumnRole parse_role(std::string_view text, std::size_t line) {
  if (text == "predictor") return ColumnRole::Predictor;
  if (text == "booking-status") return ColumnRole::BookingStatus;
  if (text == "identifier") return ColumnRole::Identifier;
  if (text == "ignored") return ColumnRole::Ignored;
  throw Error(ErrorCode::Config, "line " + std::to_string(line) + ": unknown column role '" +
                                     std::string(text) + "'");
}

std::optional<double> parse_numeric_cell(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return kNaN;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::int32_t intern(CategoricalColumn& col, std::unordered_map<std::string, std::int32_t>& index,
                    const std::string& value) {
  auto [it, inserted] = index.emplace(value, static_cast<std::int32_t>(col.dictionary.size()));
  if (inserted) col.dictionary.push_back(value);
  return it->second;
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

std::string_view to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::Predictor: return "predictor";
    case ColumnRole::BookingStatus: return "booking-status";
    case ColumnRole::Identifier: return "identifier";
    case ColumnRole::Ignored: return "ignored";
  }
  return "ignored";
}

std::string_view to_string(BookingStatus status) {
  switch (status) {
    case BookingStatus::BookedCompleted: return "booked_completed";
    case BookingStatus::ShowedNoBook: return "showed_no_book";
    case BookingStatus::NoShow: return "no_show";
    case BookingStatus::BookedCanceled: return "booked_canceled";
  }
  return "no_show";
}

std::string_view to_string(Target target) { return target == Target::Show ? "show" : "booked"; }

Target parse_target(std::string_view text) {
  if (text == "show") return Target::Show;
  if (text == "booked") return Target::Booked;
  throw Error(ErrorCode::InvalidParams, "unknown target '" + std::string(text) + "'");
}

DerivedFlags derive_flags(BookingStatus status) noexcept {
  switch (status) {
    case BookingStatus::BookedCompleted: return {true, true, false};
    case BookingStatus::ShowedNoBook: return {true, false, false};
    case BookingStatus::NoShow: return {false, false, false};
    case BookingStatus::BookedCanceled: return {false, false, true};
  }
  return {false, false, true};
}

// ---- Schema -----------------------------------------------------------------

Schema::Schema(std::vector<ColumnSpec> columns, std::map<std::string, std::string> metadata)
    : columns_(std::move(columns)), metadata_(std::move(metadata)) {
  std::set<std::string> names;
  std::size_t status_count = 0;
  std::size_t predictor_count = 0;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw Error(ErrorCode::Config, "empty column name");
    if (!names.insert(c.name).second) {
      throw Error(ErrorCode::Config, "duplicate column '" + c.name + "'");
    }
    if (c.role == ColumnRole::BookingStatus) {
      ++status_count;
      if (c.kind != ColumnKind::Categorical) {
        throw Error(ErrorCode::Config, "booking-status column '" + c.name + "' must be categorical");
      }
    }
    if (c.role == ColumnRole::Predictor) ++predictor_count;
  }
  if (status_count != 1) {
    throw Error(ErrorCode::Config, "schema needs exactly one booking-status column, found " +
                                       std::to_string(status_count));
  }
  if (predictor_count == 0) throw Error(ErrorCode::Config, "schema declares no predictor");
  for (const auto& [key, value] : metadata_) {
    if (key == "period" || key == "age_group") {
      if (!names.count(value)) {
        throw Error(ErrorCode::Config, "@" + key + " names unknown column '" + value + "'");
      }
    } else if (key.rfind("status.", 0) == 0) {
      const auto canonical = key.substr(7);
      const bool known = std::any_of(std::begin(kAllStatuses), std::end(kAllStatuses),
                                     [&](BookingStatus s) { return to_string(s) == canonical; });
      if (!known) throw Error(ErrorCode::Config, "unknown status '" + canonical + "'");
    } else {
      throw Error(ErrorCode::Config, "unknown metadata key '@" + key + "'");
    }
  }
}

Schema Schema::parse(std::string_view text) {
  std::vector<ColumnSpec> columns;
  std::map<std::string, std::string> metadata;
  for (const auto& entry : parse_kv(text)) {
    if (entry.key.front() == '@') {
      metadata[entry.key.substr(1)] = entry.value;
      continue;
    }
    const auto parts = split_list(entry.value);
    if (parts.size() != 2) {
      throw Error(ErrorCode::Config,
                  "line " + std::to_string(entry.line) + ": expected '<kind>, <role>'");
    }
    columns.push_back(
        {entry.key, parse_kind(parts[0], entry.line), parse_role(parts[1], entry.line)});
  }
  return Schema(std::move(columns), std::move(metadata));
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open schema " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string Schema::to_config_text() const {
  std::ostringstream out;
  for (const auto& c : columns_) {
    out << c.name << " = " << to_string(c.kind) << ", " << to_string(c.role) << '\n';
  }
  for (const auto& [key, value] : metadata_) out << '@' << key << " = " << value << '\n';
  return out.str();
}

std::optional<std::string> Schema::metadata_value(std::string_view key) const {
  auto it = metadata_.find(std::string(key));
  if (it == metadata_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

const ColumnSpec& Schema::status_column() const {
  for (const auto& c : columns_) {
    if (c.role == ColumnRole::BookingStatus) return c;
  }
  throw Error(ErrorCode::Config, "schema has no booking-status column");
}

std::vector<std::string> Schema::predictor_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.role == ColumnRole::Predictor) out.push_back(c.name);
  }
  return out;
}

std::optional<std::string> Schema::identifier_name() const {
  for (const auto& c : columns_) {
    if (c.role == ColumnRole::Identifier) return c.name;
  }
  return std::nullopt;
}

std::string Schema::status_token(BookingStatus status) const {
  if (auto v = metadata_value("status." + std::string(to_string(status)))) return *v;
  return std::string(to_string(status));
}

std::optional<BookingStatus> Schema::parse_status(std::string_view token) const {
  token = trim(token);
  for (auto s : kAllStatuses) {
    if (status_token(s) == token) return s;
  }
  return std::nullopt;
}

std::string Schema::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& c : columns_) {
    mix(c.name);
    mix(":");
    mix(to_string(c.kind));
    mix(":");
    mix(to_string(c.role));
    mix(";");
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

// ---- Column -------------------------------------------------------------------

std::size_t Column::size() const {
  return is_numeric() ? numeric().values.size() : categorical().codes.size();
}

std::size_t Column::missing_count() const {
  if (is_numeric()) {
    const auto& v = numeric().values;
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }));
  }
  const auto& c = categorical().codes;
  return static_cast<std::size_t>(std::count(c.begin(), c.end(), kMissingCode));
}

bool Column::is_missing(std::size_t row) const {
  return is_numeric() ? std::isnan(numeric().values[row]) : categorical().codes[row] == kMissingCode;
}

std::string Column::cell_text(std::size_t row) const {
  if (is_numeric()) {
    const double v = numeric().values[row];
    return std::isnan(v) ? std::string() : format_double(v);
  }
  const auto code = categorical().codes[row];
  return code == kMissingCode ? std::string() : categorical().dictionary[code];
}

// ---- ColumnarDataset -------------------------------------------------------------

ColumnarDataset::ColumnarDataset(Schema schema, std::vector<Column> columns,
                                 std::vector<std::uint8_t> show, std::vector<std::uint8_t> booked,
                                 std::vector<std::size_t> row_ids, DatasetProvenance provenance,
                                 bool labeled)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      show_(std::move(show)),
      booked_(std::move(booked)),
      row_ids_(std::move(row_ids)),
      provenance_(std::move(provenance)),
      labeled_(labeled) {
  n_rows_ = row_ids_.size();
  if (labeled_) {
    if (show_.size() != n_rows_ || booked_.size() != n_rows_) {
      throw Error(ErrorCode::LengthMismatch, "flag vectors do not match row count");
    }
    for (std::size_t i = 0; i < n_rows_; ++i) {
      if (booked_[i] > show_[i] || show_[i] > 1) {
        throw Error(ErrorCode::TypeError, "row " + std::to_string(i) + ": booked without show");
      }
    }
  }
  for (const auto& c : columns_) {
    if (c.size() != n_rows_) {
      throw Error(ErrorCode::LengthMismatch, "column '" + c.spec.name + "' length mismatch");
    }
  }
}

ColumnarDataset ColumnarDataset::from_records(const Schema& schema,
                                              const std::vector<std::string>& header,
                                              const std::vector<std::vector<std::string>>& rows,
                                              bool labeled, std::string source) {
  // Map schema columns to header positions.
  const auto& specs = schema.columns();
  std::vector<std::optional<std::size_t>> position(specs.size());
  std::set<std::string> seen;
  for (std::size_t h = 0; h < header.size(); ++h) {
    const std::string name(trim(header[h]));
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::SchemaMismatch, "duplicate header column '" + name + "'");
    }
    auto idx = schema.find(name);
    if (!idx) throw Error(ErrorCode::SchemaMismatch, "unknown header column '" + name + "'");
    position[*idx] = h;
  }
  std::optional<std::size_t> status_pos;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].role == ColumnRole::BookingStatus) {
      status_pos = position[i];
      if (labeled && !status_pos) {
        throw Error(ErrorCode::SchemaMismatch, "missing column '" + specs[i].name + "'");
      }
      continue;
    }
    if (!position[i]) throw Error(ErrorCode::SchemaMismatch, "missing column '" + specs[i].name + "'");
  }

  std::vector<Column> columns;
  std::vector<std::unordered_map<std::string, std::int32_t>> index;
  std::vector<std::size_t> column_pos;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].role == ColumnRole::BookingStatus) continue;
    Column col{specs[i], specs[i].kind == ColumnKind::Numeric
                             ? std::variant<CategoricalColumn, NumericColumn>(NumericColumn{})
                             : std::variant<CategoricalColumn, NumericColumn>(CategoricalColumn{})};
    columns.push_back(std::move(col));
    index.emplace_back();
    column_pos.push_back(*position[i]);
  }

  std::vector<std::uint8_t> show, booked;
  std::vector<std::size_t> row_ids;
  DatasetProvenance prov;
  prov.source = std::move(source);
  prov.raw_rows = rows.size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(ErrorCode::SchemaMismatch, "data row " + std::to_string(r + 1) + ": expected " +
                                                 std::to_string(header.size()) + " fields, got " +
                                                 std::to_string(row.size()));
    }
    if (labeled) {
      const auto status = schema.parse_status(row[*status_pos]);
      if (!status) {
        throw Error(ErrorCode::TypeError, "data row " + std::to_string(r + 1) + ", column '" +
                                              schema.status_column().name +
                                              "': unknown booking status '" + row[*status_pos] + "'");
      }
      const auto flags = derive_flags(*status);
      if (flags.discard) {
        ++prov.discarded_canceled;
        continue;
      }
      show.push_back(flags.show);
      booked.push_back(flags.booked);
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& cell = row[column_pos[c]];
      if (columns[c].is_numeric()) {
        const auto value = parse_numeric_cell(cell);
        if (!value) {
          throw Error(ErrorCode::TypeError, "data row " + std::to_string(r + 1) + ", column '" +
                                                columns[c].spec.name + "': '" + cell +
                                                "' is not numeric");
        }
        std::get<NumericColumn>(columns[c].data).values.push_back(*value);
      } else {
        auto& cat = std::get<CategoricalColumn>(columns[c].data);
        const auto value = trim(cell);
        cat.codes.push_back(value.empty() ? kMissingCode
                                          : intern(cat, index[c], std::string(value)));
      }
    }
    row_ids.push_back(r);
  }
  return ColumnarDataset(schema, std::move(columns), std::move(show), std::move(booked),
                         std::move(row_ids), std::move(prov), labeled);
}

const Column* ColumnarDataset::find_column(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.spec.name == name) return &c;
  }
  return nullptr;
}

const Column& ColumnarDataset::column(std::string_view name) const {
  if (const auto* c = find_column(name)) return *c;
  throw Error(ErrorCode::SchemaMismatch, "dataset has no column '" + std::string(name) + "'");
}

std::span<const std::uint8_t> ColumnarDataset::flags(Target target) const noexcept {
  return target == Target::Show ? show_flags() : booked_flags();
}

std::string ColumnarDataset::row_label(std::size_t row) const {
  if (auto id = schema_.identifier_name()) {
    if (const auto* c = find_column(*id)) return c->cell_text(row);
  }
  return std::to_string(row_ids_[row]);
}

ColumnarDataset ColumnarDataset::take(std::span<const std::size_t> rows) const {
  std::vector<Column> columns;
  columns.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column out{c.spec, {}};
    if (c.is_numeric()) {
      NumericColumn n;
      n.values.reserve(rows.size());
      for (auto r : rows) n.values.push_back(c.numeric().values.at(r));
      out.data = std::move(n);
    } else {
      CategoricalColumn k;
      k.dictionary = c.categorical().dictionary;
      k.codes.reserve(rows.size());
      for (auto r : rows) k.codes.push_back(c.categorical().codes.at(r));
      out.data = std::move(k);
    }
    columns.push_back(std::move(out));
  }
  std::vector<std::uint8_t> show, booked;
  if (labeled_) {
    show.reserve(rows.size());
    booked.reserve(rows.size());
    for (auto r : rows) {
      show.push_back(show_.at(r));
      booked.push_back(booked_.at(r));
    }
  }
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (auto r : rows) ids.push_back(row_ids_.at(r));
  ColumnarDataset out(schema_, std::move(columns), std::move(show), std::move(booked),
                      std::move(ids), provenance_, labeled_);
  return out;
}

ColumnarDataset ColumnarDataset::with_columns(std::vector<Column> columns) const {
  return ColumnarDataset(schema_, std::move(columns), show_, booked_, row_ids_, provenance_,
                         labeled_);
}

ColumnarDataset ColumnarDataset::with_provenance(DatasetProvenance provenance) const {
  ColumnarDataset out = *this;
  out.provenance_ = std::move(provenance);
  return out;
}

// ---- CSV I/O ----------------------------------------------------------------------

namespace {

ColumnarDataset read_csv_dataset(const std::filesystem::path& path, const Schema& schema,
                                 bool labeled) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  CsvReader reader(in);
  auto header = reader.next();
  if (!header || (header->size() == 1 && trim((*header)[0]).empty())) {
    throw Error(ErrorCode::EmptyFile, path.string() + " has no header row");
  }
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) {
    header->front().erase(0, 3);
  }
  if (labeled) {
    std::vector<std::string> expected;
    for (const auto& c : schema.columns()) expected.push_back(c.name);
    for (std::size_t i = 0; i < std::max(expected.size(), header->size()); ++i) {
      const std::string got = i < header->size() ? std::string(trim((*header)[i])) : "";
      if (i >= expected.size()) {
        throw Error(ErrorCode::SchemaMismatch, "unexpected header column '" + got + "'");
      }
      if (i >= header->size()) {
        throw Error(ErrorCode::SchemaMismatch, "missing column '" + expected[i] + "'");
      }
      if (got != expected[i]) {
        throw Error(ErrorCode::SchemaMismatch, "header column " + std::to_string(i + 1) + " is '" +
                                                   got + "', schema expects '" + expected[i] + "'");
      }
    }
  }
  std::vector<std::vector<std::string>> rows;
  while (auto rec = reader.next()) {
    if (rec->size() == 1 && rec->front().empty() && header->size() > 1) continue;
    rows.push_back(std::move(*rec));
  }
  std::vector<std::string> names;
  names.reserve(header->size());
  for (const auto& h : *header) names.emplace_back(trim(h));
  if (!labeled) {
    // A status column in a shortlist is tolerated and dropped.
    const auto& status = schema.status_column().name;
    auto it = std::find(names.begin(), names.end(), status);
    if (it != names.end()) {
      const auto pos = static_cast<std::size_t>(it - names.begin());
      names.erase(it);
      for (auto& r : rows) {
        if (pos < r.size()) r.erase(r.begin() + static_cast<std::ptrdiff_t>(pos));
      }
    }
  }
  return ColumnarDataset::from_records(schema, names, rows, labeled, path.string());
}

}  // namespace

ColumnarDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  return read_csv_dataset(path, schema, true);
}

ColumnarDataset load_unlabeled_csv(const std::filesystem::path& path, const Schema& schema) {
  return read_csv_dataset(path, schema, false);
}

void write_csv(std::ostream& out, const ColumnarDataset& ds, bool with_status) {
  std::vector<std::string> header;
  for (const auto& c : ds.schema().columns()) {
    if (c.role == ColumnRole::BookingStatus && !with_status) continue;
    header.push_back(c.name);
  }
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    row.clear();
    for (const auto& c : ds.schema().columns()) {
      if (c.role == ColumnRole::BookingStatus) {
        if (!with_status) continue;
        const auto status = !ds.show_flags()[r]    ? BookingStatus::NoShow
                            : ds.booked_flags()[r] ? BookingStatus::BookedCompleted
                                                   : BookingStatus::ShowedNoBook;
        row.push_back(ds.schema().status_token(status));
        continue;
      }
      row.push_back(ds.column(c.name).cell_text(r));
    }
    write_csv_row(out, row);
  }
}

// ---- imputation --------------------------------------------------------------------

std::string ImputationPolicy::describe() const {
  std::string out = categorical == CategoricalFill::Mode ? "mode" : "leave";
  out += '/';
  switch (numeric) {
    case NumericFill::Mean: out += "mean"; break;
    case NumericFill::Median: out += "median"; break;
    case NumericFill::LeaveMissing: out += "leave"; break;
  }
  return out;
}

ImputationPolicy ImputationPolicy::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw Error(ErrorCode::InvalidParams,
                "imputation policy must look like 'mode/median' (categorical/numeric)");
  }
  const auto cat = trim(text.substr(0, slash));
  const auto num = trim(text.substr(slash + 1));
  ImputationPolicy p;
  if (cat == "mode") p.categorical = CategoricalFill::Mode;
  else if (cat == "leave") p.categorical = CategoricalFill::LeaveMissing;
  else throw Error(ErrorCode::InvalidParams, "categorical fill must be mode or leave");
  if (num == "mean") p.numeric = NumericFill::Mean;
  else if (num == "median") p.numeric = NumericFill::Median;
  else if (num == "leave") p.numeric = NumericFill::LeaveMissing;
  else throw Error(ErrorCode::InvalidParams, "numeric fill must be mean, median or leave");
  return p;
}

ImputationFit fit_imputation(const ColumnarDataset& ds, const ImputationPolicy& policy) {
  ImputationFit fit{policy, {}, {}};
  for (const auto& col : ds.columns()) {
    if (col.spec.role != ColumnRole::Predictor) continue;
    const auto missing = col.missing_count();
    if (missing == 0) continue;
    const bool leave = col.is_numeric() ? policy.numeric == NumericFill::LeaveMissing
                                        : policy.categorical == CategoricalFill::LeaveMissing;
    if (leave) continue;
    if (missing == col.size()) {
      throw Error(ErrorCode::AllMissingColumn,
                  "column '" + col.spec.name + "' has no values to impute from");
    }
    if (col.is_numeric()) {
      std::vector<double> present;
      for (double v : col.numeric().values) {
        if (!std::isnan(v)) present.push_back(v);
      }
      double fill;
      if (policy.numeric == NumericFill::Mean) {
        fill = std::accumulate(present.begin(), present.end(), 0.0) / double(present.size());
      } else {
        std::sort(present.begin(), present.end());
        const auto n = present.size();
        fill = n % 2 ? present[n / 2] : 0.5 * (present[n / 2 - 1] + present[n / 2]);
      }
      fit.numeric[col.spec.name] = fill;
    } else {
      const auto& cat = col.categorical();
      std::vector<std::size_t> counts(cat.dictionary.size(), 0);
      for (auto code : cat.codes) {
        if (code != kMissingCode) ++counts[code];
      }
      // max_element returns the first maximum: ties go to the earliest code.
      const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
      fit.categorical[col.spec.name] = cat.dictionary[best];
    }
  }
  return fit;
}

ColumnarDataset apply_imputation(const ColumnarDataset& ds, const ImputationFit& fit) {
  std::vector<Column> columns = ds.columns();
  for (auto& col : columns) {
    if (col.is_numeric()) {
      auto it = fit.numeric.find(col.spec.name);
      if (it == fit.numeric.end()) continue;
      for (double& v : std::get<NumericColumn>(col.data).values) {
        if (std::isnan(v)) v = it->second;
      }
    } else {
      auto it = fit.categorical.find(col.spec.name);
      if (it == fit.categorical.end()) continue;
      auto& cat = std::get<CategoricalColumn>(col.data);
      if (std::find(cat.codes.begin(), cat.codes.end(), kMissingCode) == cat.codes.end()) continue;
      auto pos = std::find(cat.dictionary.begin(), cat.dictionary.end(), it->second);
      const auto code = static_cast<std::int32_t>(pos - cat.dictionary.begin());
      if (pos == cat.dictionary.end()) cat.dictionary.push_back(it->second);
      for (auto& c : cat.codes) {
        if (c == kMissingCode) c = code;
      }
    }
  }
  auto prov = ds.provenance();
  prov.imputation = fit.policy.describe();
  return ds.with_columns(std::move(columns)).with_provenance(std::move(prov));
}

ColumnarDataset impute(const ColumnarDataset& ds, const ImputationPolicy& policy) {
  return apply_imputation(ds, fit_imputation(ds, policy));
}

nlohmann::json to_json(const ImputationFit& fit) {
  nlohmann::json j;
  j["policy"] = fit.policy.describe();
  j["categorical"] = fit.categorical;
  j["numeric"] = fit.numeric;
  return j;
}

ImputationFit imputation_fit_from_json(const nlohmann::json& j) {
  ImputationFit fit;
  fit.policy = ImputationPolicy::parse(j.at("policy").get<std::string>());
  fit.categorical = j.at("categorical").get<std::map<std::string, std::string>>();
  fit.numeric = j.at("numeric").get<std::map<std::string, double>>();
  return fit;
}

// ---- summaries ------------------------------------------------------------------------

Summary summarize(const ColumnarDataset& ds, std::optional<std::string> period_column,
                  std::optional<std::string> age_column) {
  if (!ds.labeled()) throw Error(ErrorCode::InvalidParams, "summaries need a labeled dataset");
  Summary s;
  s.period_column = period_column ? period_column : ds.schema().metadata_value("period");
  s.age_column = age_column ? age_column : ds.schema().metadata_value("age_group");

  auto group_of = [&](const std::string& name) -> const Column& {
    const auto* col = ds.find_column(name);
    if (!col) throw Error(ErrorCode::MissingGroupColumn, "no column '" + name + "' to group by");
    return *col;
  };
  const auto show = ds.show_flags();
  const auto booked = ds.booked_flags();
  s.total.label = "Total";
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    ++s.total.rows;
    s.total.shows += show[r];
    s.total.booked += booked[r];
  }

  // Groups are listed in first-seen order; blanks form a trailing "(missing)" group.
  auto group_rows = [&](const Column& col) {
    std::vector<std::string> labels;
    std::vector<std::size_t> slot(ds.n_rows());
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      std::string label = col.is_missing(r) ? std::string("(missing)") : col.cell_text(r);
      auto [it, inserted] = index.emplace(label, labels.size());
      if (inserted) labels.push_back(label);
      slot[r] = it->second;
    }
    return std::pair{labels, slot};
  };

  if (s.period_column) {
    const auto& col = group_of(*s.period_column);
    auto [labels, slot] = group_rows(col);
    s.periods.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) s.periods[i].label = labels[i];
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      auto& g = s.periods[slot[r]];
      ++g.rows;
      g.shows += show[r];
      g.booked += booked[r];
    }
  }
  if (s.age_column) {
    const auto& col = group_of(*s.age_column);
    auto [labels, slot] = group_rows(col);
    for (const auto& l : labels) s.age_groups.emplace_back(l, 0);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) ++s.age_groups[slot[r]].second;
  }
  return s;
}

std::string render_summary(const Summary& s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  auto line = [&](const GroupCount& g) {
    out << std::left << std::setw(20) << g.label << std::right << std::setw(12) << g.rows
        << std::setw(11) << g.show_pct() << '%' << std::setw(11) << g.booked_pct() << "%\n";
  };
  out << std::left << std::setw(20) << (s.period_column ? *s.period_column : std::string("period"))
      << std::right << std::setw(12) << "customers" << std::setw(12) << "show" << std::setw(12)
      << "booked" << '\n';
  for (const auto& g : s.periods) line(g);
  line(s.total);
  if (s.age_column) {
    out << '\n' << std::left << std::setw(20) << *s.age_column << std::right << std::setw(12)
        << "customers" << std::setw(12) << "share" << '\n';
    for (std::size_t i = 0; i < s.age_groups.size(); ++i) {
      out << std::left << std::setw(20) << s.age_groups[i].first << std::right << std::setw(12)
          << s.age_groups[i].second << std::setw(11) << s.age_pct(i) << "%\n";
    }
  }
  return out.str();
}

nlohmann::json to_json(const Summary& s) {
  auto group = [](const GroupCount& g) {
    return nlohmann::json{{"label", g.label},
                          {"customers", g.rows},
                          {"shows", g.shows},
                          {"booked", g.booked},
                          {"show_pct", g.show_pct()},
                          {"booked_pct", g.booked_pct()},
                          {"booked_of_shown_pct", g.booked_of_shown_pct()}};
  };
  nlohmann::json j;
  j["period_column"] = s.period_column ? nlohmann::json(*s.period_column) : nlohmann::json();
  j["age_column"] = s.age_column ? nlohmann::json(*s.age_column) : nlohmann::json();
  j["periods"] = nlohmann::json::array();
  for (const auto& g : s.periods) j["periods"].push_back(group(g));
  j["total"] = group(s.total);
  j["age_groups"] = nlohmann::json::array();
  for (std::size_t i = 0; i < s.age_groups.size(); ++i) {
    j["age_groups"].push_back({{"label", s.age_groups[i].first},
                               {"customers", s.age_groups[i].second},
                               {"pct", s.age_pct(i)}});
  }
  return j;
}

}  // namespace showcast
