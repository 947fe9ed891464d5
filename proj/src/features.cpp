#include "showcast/features.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "showcast/error.hpp"

namespace showcast {

FeatureLayout FeatureLayout::from_dataset(const ColumnarDataset& ds, std::span<const std::string> names) {
  FeatureLayout layout;
  for (const auto& name : names) {
    const auto& col = ds.column(name);
    FeatureSpec spec{name, col.spec.kind, {}};
    if (!col.is_numeric()) spec.categories = col.categorical().dictionary;
    layout.features.push_back(std::move(spec));
  }
  return layout;
}

bool FeatureLayout::contains(std::string_view name) const {
  for (const auto& f : features) {
    if (f.name == name) return true;
  }
  return false;
}

nlohmann::json to_json(const FeatureLayout& layout) {
  auto arr = nlohmann::json::array();
  for (const auto& f : layout.features) {
    nlohmann::json j{{"name", f.name}, {"kind", to_string(f.kind)}};
    if (f.kind == ColumnKind::Categorical) j["categories"] = f.categories;
    arr.push_back(std::move(j));
  }
  return arr;
}

FeatureLayout feature_layout_from_json(const nlohmann::json& j) {
  FeatureLayout layout;
  for (const auto& f : j) {
    FeatureSpec spec;
    spec.name = f.at("name").get<std::string>();
    const auto kind = f.at("kind").get<std::string>();
    spec.kind = kind == "numeric" ? ColumnKind::Numeric : ColumnKind::Categorical;
    if (spec.kind == ColumnKind::Categorical) {
      spec.categories = f.at("categories").get<std::vector<std::string>>();
    }
    layout.features.push_back(std::move(spec));
  }
  return layout;
}

EncodedData encode(const FeatureLayout& layout, const ColumnarDataset& ds) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  EncodedData out;
  out.n_rows = ds.n_rows();
  out.unseen.assign(out.n_rows, 0);
  for (const auto& f : layout.features) {
    const auto* col = ds.find_column(f.name);
    if (!col) throw Error(ErrorCode::SchemaMismatch, "missing predictor column '" + f.name + "'");
    if (col->spec.kind != f.kind) {
      throw Error(ErrorCode::SchemaMismatch, "column '" + f.name + "' should be " +
                                                 std::string(to_string(f.kind)));
    }
    std::vector<double> values(out.n_rows);
    if (f.kind == ColumnKind::Numeric) {
      values = col->numeric().values;
    } else {
      const auto& cat = col->categorical();
      std::unordered_map<std::string, double> code_of;
      for (std::size_t k = 0; k < f.categories.size(); ++k) code_of.emplace(f.categories[k], double(k));
      std::vector<double> remap(cat.dictionary.size(), kUnseenCategory);
      for (std::size_t k = 0; k < cat.dictionary.size(); ++k) {
        if (auto it = code_of.find(cat.dictionary[k]); it != code_of.end()) remap[k] = it->second;
      }
      for (std::size_t r = 0; r < out.n_rows; ++r) {
        const auto code = cat.codes[r];
        if (code == kMissingCode) {
          values[r] = kNaN;
        } else {
          values[r] = remap[code];
          if (values[r] == kUnseenCategory) out.unseen[r] = 1;
        }
      }
    }
    out.columns.push_back(std::move(values));
  }
  return out;
}

DesignEncoding DesignEncoding::fit(const FeatureLayout& layout, const EncodedData& data) {
  DesignEncoding enc;
  enc.layout = layout;
  enc.mean.assign(layout.features.size(), 0.0);
  enc.scale.assign(layout.features.size(), 1.0);
  for (std::size_t f = 0; f < layout.features.size(); ++f) {
    if (layout.features[f].kind != ColumnKind::Numeric) continue;
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (double v : data.columns[f]) {
      if (std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / double(n);
    for (double v : data.columns[f]) {
      if (!std::isnan(v)) sq += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(sq / double(n));
    enc.mean[f] = mean;
    enc.scale[f] = sd > 0.0 ? sd : 1.0;
  }
  return enc;
}

std::size_t DesignEncoding::width() const {
  std::size_t w = 0;
  for (const auto& f : layout.features) {
    w += f.kind == ColumnKind::Numeric ? 1 : (f.categories.empty() ? 0 : f.categories.size() - 1);
  }
  return w;
}

std::vector<std::string> DesignEncoding::column_names() const {
  std::vector<std::string> out;
  for (const auto& f : layout.features) {
    if (f.kind == ColumnKind::Numeric) {
      out.push_back(f.name);
    } else {
      for (std::size_t k = 1; k < f.categories.size(); ++k) out.push_back(f.name + "=" + f.categories[k]);
    }
  }
  return out;
}

DenseMatrix DesignEncoding::matrix(const EncodedData& data) const {
  DenseMatrix X(data.n_rows, width());
  for (std::size_t r = 0; r < data.n_rows; ++r) {
    double* out = X.row(r);
    std::size_t c = 0;
    for (std::size_t f = 0; f < layout.features.size(); ++f) {
      const double v = data.columns[f][r];
      const auto& spec = layout.features[f];
      if (std::isnan(v)) {
        throw Error(ErrorCode::MissingValues, "row " + std::to_string(r) + ", column '" + spec.name +
                                                  "' is blank; impute before using this learner");
      }
      if (spec.kind == ColumnKind::Numeric) {
        out[c++] = (v - mean[f]) / scale[f];
      } else {
        const std::size_t levels = spec.categories.empty() ? 0 : spec.categories.size() - 1;
        if (v >= 1.0) out[c + static_cast<std::size_t>(v) - 1] = 1.0;
        c += levels;
      }
    }
  }
  return X;
}

nlohmann::json to_json(const DesignEncoding& enc) {
  return {{"layout", to_json(enc.layout)}, {"mean", enc.mean}, {"scale", enc.scale}};
}

DesignEncoding design_encoding_from_json(const nlohmann::json& j) {
  DesignEncoding enc;
  enc.layout = feature_layout_from_json(j.at("layout"));
  enc.mean = j.at("mean").get<std::vector<double>>();
  enc.scale = j.at("scale").get<std::vector<double>>();
  return enc;
}

}  // namespace showcast
