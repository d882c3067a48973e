#include "imba/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace imba {

namespace {

void check_label(int label, int class_count, bool hidden) {
  const bool sentinel = hidden ? label == kOutOfDistribution : label == kUnlabeled;
  if (sentinel) return;
  if (label < 0 || label >= class_count) {
    throw Error(ErrorKind::InvalidSpec, "label " + std::to_string(label) +
                                            " outside [0, " + std::to_string(class_count) + ")");
  }
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

int parse_int(std::string_view text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Io, "bad integer field '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Dataset::Dataset(MatrixXr features, std::vector<int> labels, int class_count,
                 std::optional<std::vector<int>> true_labels)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      true_labels_(std::move(true_labels)),
      class_count_(class_count) {
  if (class_count_ < 1) throw Error(ErrorKind::InvalidSpec, "class_count must be positive");
  if (static_cast<Index>(labels_.size()) != features_.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "label count differs from feature rows");
  }
  if (true_labels_ && true_labels_->size() != labels_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "true label count differs from feature rows");
  }
  for (int label : labels_) check_label(label, class_count_, false);
  if (true_labels_) {
    for (int label : *true_labels_) check_label(label, class_count_, true);
  }
}

std::span<const int> Dataset::true_labels() const {
  if (!true_labels_) throw Error(ErrorKind::Unsupported, "dataset has no retained true labels");
  return *true_labels_;
}

std::vector<Index> Dataset::class_counts() const {
  std::vector<Index> counts(static_cast<std::size_t>(class_count_), 0);
  for (int label : labels_) {
    if (label >= 0) ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

Dataset Dataset::with_labels(std::vector<int> labels) const {
  return Dataset(features_, std::move(labels), class_count_, true_labels_);
}

Dataset Dataset::hide_labels() const {
  return Dataset(features_, std::vector<int>(labels_.size(), kUnlabeled), class_count_, labels_);
}

Dataset Dataset::select_rows(std::span<const Index> rows) const {
  MatrixXr features(static_cast<Index>(rows.size()), dim());
  std::vector<int> labels;
  labels.reserve(rows.size());
  std::optional<std::vector<int>> hidden;
  if (true_labels_) hidden.emplace().reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    features.row(static_cast<Index>(i)) = features_.row(r);
    labels.push_back(labels_[static_cast<std::size_t>(r)]);
    if (hidden) hidden->push_back((*true_labels_)[static_cast<std::size_t>(r)]);
  }
  return Dataset(std::move(features), std::move(labels), class_count_, std::move(hidden));
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.class_count_ == b.class_count_ && a.labels_ == b.labels_ &&
         a.true_labels_ == b.true_labels_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.class_count() != b.class_count()) {
    throw Error(ErrorKind::DimensionMismatch, "class counts differ");
  }
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "feature dimensions differ");
  MatrixXr features(a.size() + b.size(), a.dim());
  features << a.features(), b.features();
  std::vector<int> labels(a.labels().begin(), a.labels().end());
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  std::optional<std::vector<int>> hidden;
  if (a.has_true_labels() && b.has_true_labels()) {
    hidden.emplace(a.true_labels().begin(), a.true_labels().end());
    hidden->insert(hidden->end(), b.true_labels().begin(), b.true_labels().end());
  }
  return Dataset(std::move(features), std::move(labels), a.class_count(), std::move(hidden));
}

std::string format_real(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Io, "bad numeric field '" + std::string(text) + "'");
  }
  return value;
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "label,true_label";
  for (Index j = 0; j < data.dim(); ++j) out << ",f" << j;
  out << '\n';
  const auto labels = data.labels();
  for (Index i = 0; i < data.size(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label == kUnlabeled) {
      out << 'U';
    } else {
      out << label;
    }
    out << ',';
    if (data.has_true_labels()) {
      const int hidden = data.true_labels()[static_cast<std::size_t>(i)];
      if (hidden == kOutOfDistribution) {
        out << "OOD";
      } else {
        out << hidden;
      }
    }
    for (Index j = 0; j < data.dim(); ++j) out << ',' << format_real(data.features()(i, j));
    out << '\n';
  }
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  write_csv(out, data);
}

Dataset read_csv(std::istream& in, int class_count) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "missing CSV header");
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "label" || header[1] != "true_label") {
    throw Error(ErrorKind::Io, "CSV header must start with label,true_label");
  }
  const Index dim = static_cast<Index>(header.size()) - 2;
  for (Index j = 0; j < dim; ++j) {
    if (header[static_cast<std::size_t>(j + 2)] != "f" + std::to_string(j)) {
      throw Error(ErrorKind::Io, "unexpected feature column name");
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<int> hidden;
  std::size_t hidden_present = 0;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (static_cast<Index>(fields.size()) != dim + 2) {
      throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": wrong field count");
    }
    labels.push_back(fields[0] == "U" ? kUnlabeled : parse_int(fields[0]));
    if (fields[1].empty()) {
      hidden.push_back(kUnlabeled);
    } else {
      ++hidden_present;
      hidden.push_back(fields[1] == "OOD" ? kOutOfDistribution : parse_int(fields[1]));
    }
    for (Index j = 0; j < dim; ++j) values.push_back(parse_real(fields[static_cast<std::size_t>(j + 2)]));
  }
  if (hidden_present != 0 && hidden_present != hidden.size()) {
    throw Error(ErrorKind::Io, "true_label column must be filled on every row or none");
  }

  if (class_count == 0) {
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);
    if (hidden_present) {
      for (int l : hidden) max_label = std::max(max_label, l);
    }
    class_count = max_label + 1;
  }
  const Index rows = static_cast<Index>(labels.size());
  MatrixXr features = rows == 0 ? MatrixXr(0, dim)
                                : MatrixXr(Eigen::Map<const MatrixXr>(values.data(), rows, dim));
  std::optional<std::vector<int>> true_labels;
  if (hidden_present) true_labels = std::move(hidden);
  return Dataset(std::move(features), std::move(labels), class_count, std::move(true_labels));
}

Dataset read_csv(const std::string& path, int class_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_csv(in, class_count);
}

}  // namespace imba
