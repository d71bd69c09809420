#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace survbias {

// A raw cell: missing, numeric, or categorical text.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::string label_column;
  // Raw label 1 marks a defaulted loan; the Dataset stores the inverse.
  bool positive_means_default = true;

  std::size_t column_index(std::string_view name) const;
};

// Dense row-major matrix of features.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t c) const;

  void append_row(std::span<const double> values);

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Numeric features and binary labels, y = 1 meaning "will repay".
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> feature_names;
  std::string provenance;

  std::size_t size() const { return y.size(); }
  std::size_t features() const { return X.cols(); }
  std::size_t positives() const;
  // Share of the larger class.
  double majority_share() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  void validate() const;
};

// Share of the majority class, in [0.5, 1].
class ImbalanceRatio {
public:
  explicit ImbalanceRatio(double value);
  double value() const { return value_; }

private:
  double value_;
};

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column,
                  bool positive_means_default);
RawTable read_raw_table(std::istream& in, const std::string& label_column,
                        bool positive_means_default);

RawTable drop_columns(const RawTable& t, std::span<const std::string> names);
RawTable drop_high_null_columns(const RawTable& t, std::size_t k);
RawTable drop_null_rows(const RawTable& t);

// Numeric columns pass through; categorical columns are one-hot encoded with
// categories in lexicographic order. The label is inverted when the raw
// table marks defaults.
Dataset to_dataset(const RawTable& t);

// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

Dataset correlation_feature_select(const Dataset& ds, std::size_t top_m, double pair_threshold);

Dataset downsample_to_ratio(const Dataset& ds, ImbalanceRatio target, std::uint64_t seed);

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);
// Index form of split, sorted ascending on each side.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed);

Dataset synth_generate(std::size_t n, std::size_t d, double class_sep, double majority_share,
                       std::uint64_t seed);

// Cache format: header of feature names plus a final "y" column.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& ds, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

struct DatasetSchema {
  std::string label_column = "y";
  std::string positive_class = "repay";
  std::string source_label_column;
  bool source_positive_means_default = true;
  std::size_t rows = 0;
  std::size_t features = 0;
  double majority_share = 0.0;
  std::string provenance;
};

void write_schema(const DatasetSchema& s, const std::filesystem::path& path);
DatasetSchema read_schema(const std::filesystem::path& path);

}  // namespace survbias
