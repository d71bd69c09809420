#include "survbias/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "survbias/csv.hpp"
#include "survbias/rng.hpp"

namespace survbias {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

Cell parse_cell(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::monostate{};
  double v = 0.0;
  const char* first = text.data();
  if (text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(v)) return v;
  return std::string(text);
}

}  // namespace

std::size_t RawTable::column_index(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument("no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw std::invalid_argument("Matrix::append_row: arity mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

double Dataset::majority_share() const {
  if (y.empty()) return 0.0;
  const std::size_t pos = positives();
  return static_cast<double>(std::max(pos, y.size() - pos)) / static_cast<double>(y.size());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.X = Matrix(indices.size(), features());
  out.y.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t r = indices[i];
    if (r >= size()) throw std::out_of_range("Dataset::subset: row index out of range");
    std::copy_n(X.row(r).begin(), features(), out.X.row(i).begin());
    out.y[i] = y[r];
  }
  out.feature_names = feature_names;
  out.provenance = provenance;
  return out;
}

void Dataset::validate() const {
  if (X.rows() != y.size()) throw std::invalid_argument("Dataset: row count of X differs from |y|");
  if (feature_names.size() != X.cols())
    throw std::invalid_argument("Dataset: feature name count differs from column count");
  for (int v : y)
    if (v != 0 && v != 1) throw std::invalid_argument("Dataset: labels must be 0 or 1");
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (double v : X.row(r))
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: missing or non-finite feature value");
}

ImbalanceRatio::ImbalanceRatio(double value) : value_(value) {
  if (!(value > 0.0 && value <= 1.0))
    throw std::invalid_argument("ImbalanceRatio must lie in (0, 1]");
}

RawTable read_raw_table(std::istream& in, const std::string& label_column,
                        bool positive_means_default) {
  auto records = csv::read_all(in);
  if (records.empty()) throw std::runtime_error("csv: missing header row");
  RawTable t;
  t.columns = std::move(records.front());
  for (auto& c : t.columns) c = std::string(trim(c));
  std::set<std::string> seen;
  for (const auto& c : t.columns)
    if (!seen.insert(c).second) throw std::runtime_error("csv: duplicate header name '" + c + "'");
  t.label_column = label_column;
  t.positive_means_default = positive_means_default;
  if (!label_column.empty() && !seen.contains(label_column))
    throw std::runtime_error("csv: label column '" + label_column + "' not found");

  t.rows.reserve(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.columns.size())
      throw std::runtime_error("csv: ragged row " + std::to_string(i + 1) + " has " +
                               std::to_string(records[i].size()) + " fields, expected " +
                               std::to_string(t.columns.size()));
    std::vector<Cell> row;
    row.reserve(records[i].size());
    for (const auto& f : records[i]) row.push_back(parse_cell(f));
    t.rows.push_back(std::move(row));
  }
  return t;
}

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column,
                  bool positive_means_default) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_raw_table(in, label_column, positive_means_default);
}

RawTable drop_columns(const RawTable& t, std::span<const std::string> names) {
  std::vector<bool> keep(t.columns.size(), true);
  for (const auto& n : names) {
    const std::size_t c = t.column_index(n);
    if (t.columns[c] == t.label_column) throw std::invalid_argument("cannot drop the label column");
    keep[c] = false;
  }
  RawTable out;
  out.label_column = t.label_column;
  out.positive_means_default = t.positive_means_default;
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (keep[c]) out.columns.push_back(t.columns[c]);
  out.rows.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    std::vector<Cell> r;
    r.reserve(out.columns.size());
    for (std::size_t c = 0; c < row.size(); ++c)
      if (keep[c]) r.push_back(row[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

RawTable drop_high_null_columns(const RawTable& t, std::size_t k) {
  if (k >= t.columns.size())
    throw std::invalid_argument("drop_high_null_columns: k must be below the column count");
  if (k == 0) return t;

  std::vector<std::size_t> nulls(t.columns.size(), 0);
  for (const auto& row : t.rows)
    for (std::size_t c = 0; c < row.size(); ++c) nulls[c] += is_missing(row[c]) ? 1 : 0;

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (t.columns[c] != t.label_column) order.push_back(c);
  // stable: equal counts keep column order, so the leftmost goes first
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return nulls[a] > nulls[b]; });
  if (k > order.size()) throw std::invalid_argument("drop_high_null_columns: k exceeds feature columns");

  std::vector<std::string> victims;
  for (std::size_t i = 0; i < k; ++i) victims.push_back(t.columns[order[i]]);
  return drop_columns(t, victims);
}

RawTable drop_null_rows(const RawTable& t) {
  RawTable out;
  out.columns = t.columns;
  out.label_column = t.label_column;
  out.positive_means_default = t.positive_means_default;
  for (const auto& row : t.rows)
    if (std::none_of(row.begin(), row.end(), is_missing)) out.rows.push_back(row);
  return out;
}

Dataset to_dataset(const RawTable& t) {
  const std::size_t label = t.column_index(t.label_column);

  struct Column {
    std::size_t source;
    bool categorical;
    std::vector<std::string> categories;
  };
  std::vector<Column> plan;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c == label) continue;
    Column col{c, false, {}};
    std::set<std::string> cats;
    for (const auto& row : t.rows) {
      if (is_missing(row[c]))
        throw std::invalid_argument("to_dataset: column '" + t.columns[c] +
                                    "' has missing cells; drop null rows first");
      if (const auto* s = std::get_if<std::string>(&row[c])) {
        col.categorical = true;
        cats.insert(*s);
      }
    }
    if (col.categorical) {
      // a mixed column treats its numbers as categories too
      for (const auto& row : t.rows)
        if (const auto* v = std::get_if<double>(&row[c])) cats.insert(csv::format_number(*v));
      col.categories.assign(cats.begin(), cats.end());
    }
    plan.push_back(std::move(col));
  }

  Dataset ds;
  for (const auto& col : plan) {
    if (!col.categorical) {
      ds.feature_names.push_back(t.columns[col.source]);
    } else {
      for (const auto& cat : col.categories) ds.feature_names.push_back(t.columns[col.source] + "=" + cat);
    }
  }

  ds.X = Matrix(t.rows.size(), ds.feature_names.size());
  ds.y.resize(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto* lv = std::get_if<double>(&row[label]);
    if (lv == nullptr || (*lv != 0.0 && *lv != 1.0))
      throw std::invalid_argument("to_dataset: label column '" + t.label_column + "' must hold 0/1 values");
    const int raw = static_cast<int>(*lv);
    ds.y[r] = t.positive_means_default ? 1 - raw : raw;

    std::size_t out = 0;
    for (const auto& col : plan) {
      const Cell& cell = row[col.source];
      if (!col.categorical) {
        ds.X(r, out++) = std::get<double>(cell);
        continue;
      }
      const std::string key = std::holds_alternative<double>(cell) ? csv::format_number(std::get<double>(cell))
                                                                   : std::get<std::string>(cell);
      for (const auto& cat : col.categories) ds.X(r, out++) = cat == key ? 1.0 : 0.0;
    }
  }
  ds.provenance = "csv label=" + t.label_column + (t.positive_means_default ? " (inverted)" : "");
  return ds;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

Dataset correlation_feature_select(const Dataset& ds, std::size_t top_m, double pair_threshold) {
  const std::size_t d = ds.features();
  if (top_m == 0 || top_m > d) throw std::invalid_argument("correlation_feature_select: need 0 < top_m <= d");
  if (!(pair_threshold > 0.0 && pair_threshold <= 1.0))
    throw std::invalid_argument("correlation_feature_select: pair_threshold must lie in (0, 1]");

  std::vector<double> label(ds.y.begin(), ds.y.end());
  std::vector<std::vector<double>> cols(d);
  std::vector<double> label_corr(d);
  for (std::size_t f = 0; f < d; ++f) {
    cols[f] = ds.X.column(f);
    label_corr[f] = std::abs(pearson(cols[f], label));
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return label_corr[a] > label_corr[b]; });
  order.resize(top_m);
  std::sort(order.begin(), order.end());

  // Every over-threshold pair among the top_m drops its weaker member.
  std::vector<bool> dropped(order.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const double r = std::abs(pearson(cols[order[i]], cols[order[j]]));
      if (r <= pair_threshold) continue;
      if (label_corr[order[j]] > label_corr[order[i]])
        dropped[i] = true;
      else
        dropped[j] = true;
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (!dropped[i]) keep.push_back(order[i]);

  Dataset out;
  out.X = Matrix(ds.size(), keep.size());
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t j = 0; j < keep.size(); ++j) out.X(r, j) = ds.X(r, keep[j]);
  out.y = ds.y;
  for (std::size_t f : keep) out.feature_names.push_back(ds.feature_names[f]);
  out.provenance = ds.provenance + "; correlation select top " + std::to_string(top_m);
  return out;
}

Dataset downsample_to_ratio(const Dataset& ds, ImbalanceRatio target, std::uint64_t seed) {
  const double t = target.value();
  const std::size_t n = ds.size();
  if (n == 0) throw std::invalid_argument("downsample_to_ratio: empty dataset");
  if (t < 0.5)
    throw std::invalid_argument("downsample_to_ratio: target below the minority share");

  const std::size_t pos = ds.positives();
  const int majority_label = pos * 2 >= n ? 1 : 0;
  const std::size_t majority = majority_label == 1 ? pos : n - pos;
  const std::size_t minority = n - majority;

  if (t >= 1.0) {
    if (minority != 0) throw std::invalid_argument("downsample_to_ratio: share 1 requires no minority rows");
    return ds;
  }
  const auto wanted = static_cast<std::size_t>(
      std::llround(t * static_cast<double>(minority) / (1.0 - t)));
  if (wanted >= majority) {
    if (ds.majority_share() + 1.0 / static_cast<double>(n) >= t) return ds;
    throw std::invalid_argument("downsample_to_ratio: target exceeds the current majority share");
  }

  std::vector<std::size_t> majority_rows;
  for (std::size_t r = 0; r < n; ++r)
    if (ds.y[r] == majority_label) majority_rows.push_back(r);
  Rng rng(seed);
  std::vector<bool> remove(n, false);
  for (std::size_t i : rng.sample_indices(majority_rows.size(), majority - wanted))
    remove[majority_rows[i]] = true;

  std::vector<std::size_t> keep;
  keep.reserve(minority + wanted);
  for (std::size_t r = 0; r < n; ++r)
    if (!remove[r]) keep.push_back(r);
  Dataset out = ds.subset(keep);
  out.provenance = ds.provenance + "; downsampled to majority share " + csv::format_number(t);
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train == n) throw std::invalid_argument("split: one side would be empty");
  Rng rng(seed);
  auto perm = rng.sample_indices(n, n);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  auto [train, test] = split_indices(ds.size(), train_fraction, seed);
  return {ds.subset(train), ds.subset(test)};
}

Dataset synth_generate(std::size_t n, std::size_t d, double class_sep, double majority_share,
                       std::uint64_t seed) {
  if (n < 2 || d < 1) throw std::invalid_argument("synth_generate: need n >= 2 and d >= 1");
  if (!(majority_share >= 0.5 && majority_share < 1.0))
    throw std::invalid_argument("synth_generate: majority_share must lie in [0.5, 1)");

  Rng rng(seed);
  std::vector<double> dir(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& v : dir) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& v : dir) v /= norm;

  const auto n_major = static_cast<std::size_t>(std::llround(static_cast<double>(n) * majority_share));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  Dataset ds;
  ds.X = Matrix(n, d);
  ds.y.assign(n, 0);
  for (std::size_t i = 0; i < n_major; ++i) ds.y[order[i]] = 1;
  for (std::size_t r = 0; r < n; ++r) {
    const double offset = (ds.y[r] == 1 ? 0.5 : -0.5) * class_sep;
    for (std::size_t f = 0; f < d; ++f) ds.X(r, f) = offset * dir[f] + rng.normal();
  }
  for (std::size_t f = 0; f < d; ++f) ds.feature_names.push_back("x" + std::to_string(f));
  ds.provenance = "synthetic n=" + std::to_string(n) + " d=" + std::to_string(d) +
                  " sep=" + csv::format_number(class_sep) + " share=" + csv::format_number(majority_share) +
                  " seed=" + std::to_string(seed);
  return ds;
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  for (const auto& name : ds.feature_names) out << csv::quote(name) << ',';
  out << "y\n";
  char buf[40];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.X.row(r)) {
      // round-trip precision so the cache reproduces the exact doubles
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << ds.y[r] << '\n';
  }
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset_csv(ds, out);
}

Dataset read_dataset_csv(std::istream& in) {
  RawTable t = read_raw_table(in, "y", false);
  Dataset ds;
  const std::size_t label = t.column_index("y");
  if (label + 1 != t.columns.size()) throw std::runtime_error("dataset cache: 'y' must be the final column");
  for (std::size_t c = 0; c < label; ++c) ds.feature_names.push_back(t.columns[c]);
  ds.X = Matrix(t.rows.size(), label);
  ds.y.resize(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < label; ++c) {
      const auto* v = std::get_if<double>(&t.rows[r][c]);
      if (v == nullptr) throw std::runtime_error("dataset cache: non-numeric cell in row " + std::to_string(r + 2));
      ds.X(r, c) = *v;
    }
    const auto* v = std::get_if<double>(&t.rows[r][label]);
    if (v == nullptr || (*v != 0.0 && *v != 1.0))
      throw std::runtime_error("dataset cache: label must be 0/1 in row " + std::to_string(r + 2));
    ds.y[r] = static_cast<int>(*v);
  }
  ds.provenance = "dataset cache";
  return ds;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Dataset ds = read_dataset_csv(in);
  ds.provenance = path.string();
  return ds;
}

void write_schema(const DatasetSchema& s, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["label_column"] = s.label_column;
  j["positive_class"] = s.positive_class;
  j["source_label_column"] = s.source_label_column;
  j["source_positive_means_default"] = s.source_positive_means_default;
  j["rows"] = s.rows;
  j["features"] = s.features;
  j["majority_share"] = s.majority_share;
  j["provenance"] = s.provenance;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DatasetSchema read_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const auto j = nlohmann::json::parse(in);
  DatasetSchema s;
  s.label_column = j.at("label_column").get<std::string>();
  s.positive_class = j.at("positive_class").get<std::string>();
  s.source_label_column = j.value("source_label_column", "");
  s.source_positive_means_default = j.value("source_positive_means_default", true);
  s.rows = j.value("rows", std::size_t{0});
  s.features = j.value("features", std::size_t{0});
  s.majority_share = j.value("majority_share", 0.0);
  s.provenance = j.value("provenance", "");
  return s;
}

}  // namespace survbias
