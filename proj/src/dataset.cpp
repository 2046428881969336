#include "mvb/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "mvb/random.hpp"

namespace mvb {

namespace {

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  // std::from_chars does not accept a leading '+'.
  if (s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

bool parse_index(std::string_view s, long long& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_char(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

// Canonical class order: ascending numeric value when every label parses as a
// number (so "+1" and "1" are the same class), lexicographic otherwise.
struct LabelRemap {
  std::vector<std::int32_t> mapped;
  std::vector<std::string> class_names;
};

LabelRemap remap_labels(const std::vector<std::string>& raw) {
  std::vector<double> numeric(raw.size());
  bool all_numeric = true;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!parse_double(raw[i], numeric[i])) {
      all_numeric = false;
      break;
    }
  }

  LabelRemap out;
  out.mapped.resize(raw.size());
  if (all_numeric) {
    std::map<double, std::int32_t> order;
    for (double v : numeric) order.emplace(v, 0);
    std::int32_t next = 0;
    for (auto& [value, id] : order) {
      id = next++;
      double canonical = value;
      if (canonical == static_cast<double>(static_cast<long long>(canonical))) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(canonical));
        out.class_names.emplace_back(buf);
      } else {
        out.class_names.push_back(format_double(canonical));
      }
    }
    for (std::size_t i = 0; i < raw.size(); ++i) out.mapped[i] = order[numeric[i]];
  } else {
    std::map<std::string, std::int32_t> order;
    for (const auto& s : raw) order.emplace(s, 0);
    std::int32_t next = 0;
    for (auto& [name, id] : order) {
      id = next++;
      out.class_names.push_back(name);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) out.mapped[i] = order[raw[i]];
  }
  return out;
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
  throw InputError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

void Dataset::validate() const {
  if (n_samples() < 1) throw InputError("dataset has no samples");
  if (n_features() < 1) throw InputError("dataset has no features");
  if (n_classes < 2) throw InputError("dataset has fewer than two classes");
  if (labels.size() != n_samples()) throw InputError("label count does not match sample count");
  for (std::int32_t y : labels) {
    if (y < 0 || y >= n_classes) throw InputError("label out of range");
  }
  if (!class_names.empty() && class_names.size() != static_cast<std::size_t>(n_classes))
    throw InputError("class name table does not match class count");
}

Dataset parse_libsvm(std::string_view text) {
  std::vector<std::string> raw_labels;
  std::vector<std::vector<std::pair<long long, double>>> rows;
  long long max_index = 0;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;

    const auto tokens = split_ws(line);
    raw_labels.emplace_back(tokens[0]);
    std::vector<std::pair<long long, double>> row;
    long long prev_index = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::size_t colon = tokens[t].find(':');
      if (colon == std::string_view::npos) fail_line(line_no, "expected index:value pair");
      long long idx = 0;
      if (!parse_index(tokens[t].substr(0, colon), idx) || idx < 1)
        fail_line(line_no, "bad feature index");
      if (idx <= prev_index) fail_line(line_no, "feature indices must be strictly increasing");
      double value = 0.0;
      if (!parse_double(tokens[t].substr(colon + 1), value)) fail_line(line_no, "non-numeric feature value");
      row.emplace_back(idx, value);
      prev_index = idx;
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw InputError("no data lines in input");
  if (max_index < 1) throw InputError("input has no features");

  Dataset ds;
  ds.X.n_samples = rows.size();
  ds.X.n_features = static_cast<std::size_t>(max_index);
  ds.X.values.assign(ds.X.n_samples * ds.X.n_features, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [idx, value] : rows[i]) {
      ds.X.values[i * ds.X.n_features + static_cast<std::size_t>(idx - 1)] = value;
    }
  }

  auto remap = remap_labels(raw_labels);
  ds.labels = std::move(remap.mapped);
  ds.class_names = std::move(remap.class_names);
  ds.n_classes = static_cast<int>(ds.class_names.size());
  if (ds.n_classes < 2) throw InputError("fewer than two classes in input");
  ds.validate();
  return ds;
}

Dataset parse_csv(std::string_view text, std::size_t label_column) {
  std::vector<std::vector<std::string>> table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  std::vector<std::size_t> line_numbers;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_char(trim(line), ',');
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (auto c : cells) row.emplace_back(trim(c));
    table.push_back(std::move(row));
    line_numbers.push_back(line_no);
  }
  if (table.empty()) throw InputError("empty csv input");

  const std::size_t n_cols = table[0].size();
  if (n_cols < 2) throw InputError("csv needs at least one feature column and a label column");
  if (label_column >= n_cols) throw InputError("label column out of range");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].size() != n_cols) fail_line(line_numbers[i], "ragged row");
  }

  // Header row: some feature cell in the first row is non-numeric.
  bool header = false;
  for (std::size_t j = 0; j < n_cols && !header; ++j) {
    if (j == label_column) continue;
    double tmp = 0.0;
    if (!parse_double(table[0][j], tmp)) header = true;
  }
  const std::size_t first_row = header ? 1 : 0;
  if (first_row >= table.size()) throw InputError("csv has a header but no data rows");

  Dataset ds;
  ds.X.n_samples = table.size() - first_row;
  ds.X.n_features = n_cols - 1;
  ds.X.values.assign(ds.X.n_samples * ds.X.n_features, 0.0);
  std::vector<std::string> raw_labels;
  raw_labels.reserve(ds.X.n_samples);
  for (std::size_t i = first_row; i < table.size(); ++i) {
    std::size_t out_col = 0;
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (j == label_column) continue;
      double value = 0.0;
      if (!parse_double(table[i][j], value)) fail_line(line_numbers[i], "non-numeric feature value");
      ds.X.values[(i - first_row) * ds.X.n_features + out_col] = value;
      ++out_col;
    }
    raw_labels.push_back(table[i][label_column]);
  }

  auto remap = remap_labels(raw_labels);
  ds.labels = std::move(remap.mapped);
  ds.class_names = std::move(remap.class_names);
  ds.n_classes = static_cast<int>(ds.class_names.size());
  if (ds.n_classes < 2) throw InputError("fewer than two classes in input");
  ds.validate();
  return ds;
}

std::string write_libsvm(const Dataset& ds) {
  std::string out;
  out.reserve(ds.n_samples() * (ds.n_features() * 12 + 8));
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    out += ds.class_names[static_cast<std::size_t>(ds.labels[i])];
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
      out += ' ';
      out += std::to_string(j + 1);
      out += ':';
      out += format_double(ds.X.at(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string write_csv(const Dataset& ds) {
  std::string out;
  out.reserve(ds.n_samples() * (ds.n_features() * 12 + 8));
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
      out += format_double(ds.X.at(i, j));
      out += ',';
    }
    out += ds.class_names[static_cast<std::size_t>(ds.labels[i])];
    out += '\n';
  }
  return out;
}

namespace {

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.X.n_samples = indices.size();
  out.X.n_features = ds.n_features();
  out.X.values.resize(indices.size() * ds.n_features());
  out.labels.resize(indices.size());
  out.n_classes = ds.n_classes;
  out.class_names = ds.class_names;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double* src = ds.X.row(indices[k]);
    std::copy(src, src + ds.n_features(), out.X.values.begin() + k * ds.n_features());
    out.labels[k] = ds.labels[indices[k]];
  }
  return out;
}

// Largest-remainder apportionment of round(total * fraction) across classes.
std::vector<std::size_t> per_class_counts(const std::vector<std::size_t>& class_sizes,
                                          double fraction) {
  const std::size_t n_classes = class_sizes.size();
  std::size_t total = 0;
  for (auto s : class_sizes) total += s;
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(total) * fraction));

  std::vector<std::size_t> counts(n_classes);
  std::vector<std::pair<double, std::size_t>> fractional;  // (-frac, class) for descending order
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    const double quota = static_cast<double>(class_sizes[k]) * fraction;
    counts[k] = static_cast<std::size_t>(std::floor(quota));
    assigned += counts[k];
    fractional.emplace_back(-(quota - static_cast<double>(counts[k])), k);
  }
  std::sort(fractional.begin(), fractional.end());
  std::size_t remainder = target > assigned ? target - assigned : 0;
  for (std::size_t r = 0; r < fractional.size() && remainder > 0; ++r) {
    const std::size_t k = fractional[r].second;
    if (counts[k] < class_sizes[k]) {
      ++counts[k];
      --remainder;
    }
  }
  return counts;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.n_classes));
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, const SplitSpec& spec) {
  ds.validate();
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw InputError("test fraction must be in (0,1)");

  auto by_class = indices_by_class(ds);
  std::vector<std::size_t> class_sizes;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].size() == 1)
      throw ComputationError("class " + std::to_string(k) + " has a single sample; cannot split");
    class_sizes.push_back(by_class[k].size());
  }

  const auto test_counts = per_class_counts(class_sizes, spec.test_fraction);

  Rng rng(spec.seed);
  std::vector<std::size_t> test_idx, train_idx;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto members = by_class[k];
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < test_counts[k] ? test_idx : train_idx).push_back(members[i]);
    }
  }
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  if (train_idx.empty() || test_idx.empty())
    throw ComputationError("stratified split produced an empty side");
  return {subset(ds, train_idx), subset(ds, test_idx)};
}

UnlabeledSplit split_unlabeled(const Dataset& ds, double labeled_fraction, std::uint64_t seed) {
  ds.validate();
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0))
    throw InputError("labeled fraction must be in (0,1]");

  if (labeled_fraction == 1.0) {
    UnlabeledSplit out;
    out.labeled = ds;
    out.unlabeled.n_features = ds.n_features();
    return out;
  }

  auto by_class = indices_by_class(ds);
  std::vector<std::size_t> class_sizes;
  for (const auto& members : by_class) class_sizes.push_back(members.size());
  const auto labeled_counts = per_class_counts(class_sizes, labeled_fraction);

  Rng rng(seed);
  std::vector<std::size_t> labeled_idx, unlabeled_idx;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto members = by_class[k];
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < labeled_counts[k] ? labeled_idx : unlabeled_idx).push_back(members[i]);
    }
  }
  std::sort(labeled_idx.begin(), labeled_idx.end());
  std::sort(unlabeled_idx.begin(), unlabeled_idx.end());
  if (labeled_idx.empty()) throw ComputationError("labeled subset is empty");

  UnlabeledSplit out;
  out.labeled = subset(ds, labeled_idx);
  out.unlabeled.n_samples = unlabeled_idx.size();
  out.unlabeled.n_features = ds.n_features();
  out.unlabeled.values.resize(unlabeled_idx.size() * ds.n_features());
  for (std::size_t k = 0; k < unlabeled_idx.size(); ++k) {
    const double* src = ds.X.row(unlabeled_idx[k]);
    std::copy(src, src + ds.n_features(), out.unlabeled.values.begin() + k * ds.n_features());
  }
  return out;
}

std::uint64_t dataset_hash(const Dataset& ds) {
  Fnv1a h;
  h.add_u64(ds.n_samples());
  h.add_u64(ds.n_features());
  h.add_u64(static_cast<std::uint64_t>(ds.n_classes));
  for (double x : ds.X.values) h.add_f64(x);
  for (std::int32_t y : ds.labels) h.add_i32(y);
  for (const auto& name : ds.class_names) h.add_str(name);
  return h.state;
}

}  // namespace mvb
