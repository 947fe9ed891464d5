#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "showcast/dataset.hpp"

namespace showcast {

// A predictor as seen at training time. Categorical features remember the
// training dictionary so that codes can be remapped on new data.
struct FeatureSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Categorical;
  std::vector<std::string> categories;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct FeatureLayout {
  std::vector<FeatureSpec> features;

  static FeatureLayout from_dataset(const ColumnarDataset& ds, std::span<const std::string> names);
  bool contains(std::string_view name) const;

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

nlohmann::json to_json(const FeatureLayout& layout);
FeatureLayout feature_layout_from_json(const nlohmann::json& j);

// Encoded value conventions: numeric values as-is, categorical values as the
// training code; NaN marks a missing value and kUnseenCategory a category
// that did not exist at training time.
inline constexpr double kUnseenCategory = -1.0;

struct EncodedData {
  std::size_t n_rows = 0;
  std::vector<std::vector<double>> columns;  // one per layout feature
  std::vector<std::uint8_t> unseen;          // row carries an unseen category

  double at(std::size_t feature, std::size_t row) const { return columns[feature][row]; }
};

// Throws SchemaMismatch if a feature column is absent or has a different kind.
EncodedData encode(const FeatureLayout& layout, const ColumnarDataset& ds);

// Row-major dense matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Numeric design for the gradient-based learners: numeric features are
// standardized with training statistics, categorical features are one-hot
// with the first training category as the dropped reference level. Unseen
// categories map to the reference level.
struct DesignEncoding {
  FeatureLayout layout;
  std::vector<double> mean;   // per feature; unused for categorical
  std::vector<double> scale;  // per feature; unused for categorical

  static DesignEncoding fit(const FeatureLayout& layout, const EncodedData& data);
  std::size_t width() const;
  std::vector<std::string> column_names() const;
  // Throws MissingValues when a row has a blank predictor.
  DenseMatrix matrix(const EncodedData& data) const;

  friend bool operator==(const DesignEncoding&, const DesignEncoding&) = default;
};

nlohmann::json to_json(const DesignEncoding& enc);
DesignEncoding design_encoding_from_json(const nlohmann::json& j);

}  // namespace showcast
