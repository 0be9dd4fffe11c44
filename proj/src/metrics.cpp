#include "leafnet/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "leafnet/errors.hpp"

namespace leafnet {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names, std::vector<std::int64_t> counts)
    : names_(std::move(class_names)), counts_(std::move(counts)) {
  if (counts_.size() != names_.size() * names_.size()) throw ArgumentError("confusion matrix must be K x K");
  for (const auto c : counts_) {
    if (c < 0) throw ArgumentError("confusion matrix counts must be non-negative");
  }
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (const auto c : counts_) s += c;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (std::size_t k = 0; k < classes(); ++k) s += at(k, k);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const auto t = total();
  return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
}

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels, std::size_t classes,
                                 std::vector<std::string> class_names) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw ArgumentError("confusion_matrix: need equal, non-zero numbers of predictions and labels");
  }
  if (classes < 1) throw ArgumentError("confusion_matrix: need at least one class");
  if (class_names.empty()) {
    for (std::size_t k = 0; k < classes; ++k) class_names.push_back(std::to_string(k));
  }
  if (class_names.size() != classes) throw ArgumentError("confusion_matrix: class name count differs from K");
  std::vector<std::int64_t> counts(classes * classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
      throw ArgumentError("confusion_matrix: class index out of range at sample " + std::to_string(i));
    }
    ++counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
  }
  return ConfusionMatrix(std::move(class_names), std::move(counts));
}

FeatureMatrix extract_features(const Model& model, const ImageSet& data, std::size_t batch_size) {
  if (data.empty()) throw ArgumentError("extract_features: empty dataset");
  const std::int64_t d = model.layers().size() >= 2 ? model.output_shapes()[model.layers().size() - 2].elements()
                                                    : model.input_shape().elements();
  FeatureMatrix out{Tensor64(Shape{static_cast<std::int64_t>(data.size()), d}), data.labels()};
  std::size_t row = 0;
  for (const auto& idx : plan_eval_batches(data.size(), batch_size)) {
    const auto trace = model_forward(model, gather_batch(data, idx).images, Mode::Eval);
    const Tensor& pen = trace.penultimate();
    for (std::size_t i = 0; i < pen.size(); ++i) out.features[row * static_cast<std::size_t>(d) + i] = pen[i];
    row += idx.size();
  }
  return out;
}

std::string metrics_csv(std::span<const EpochRecord> records) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,duration_s\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + ',' + fixed6(r.train_loss) + ',' + fixed6(r.train_acc) + ',' +
           fixed6(r.val_loss) + ',' + fixed6(r.val_acc) + ',' + fixed6(r.duration_seconds) + '\n';
  }
  return out;
}

void write_metrics_csv(std::span<const EpochRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw ArgumentError("write_metrics_csv: no epoch records");
  write_text_file(path, metrics_csv(records));
}

std::vector<EpochRecord> parse_metrics_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "epoch,train_loss,train_acc,val_loss,val_acc,duration_s") {
    throw ArgumentError("metrics CSV: missing or unexpected header");
  }
  std::vector<EpochRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 6) throw ArgumentError("metrics CSV: line " + std::to_string(i + 1) + " needs 6 fields");
    EpochRecord r;
    r.epoch = std::stoi(f[0]);
    r.train_loss = std::stod(f[1]);
    r.train_acc = std::stod(f[2]);
    r.val_loss = std::stod(f[3]);
    r.val_acc = std::stod(f[4]);
    r.duration_seconds = std::stod(f[5]);
    records.push_back(r);
  }
  return records;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "class";
  for (const auto& n : cm.class_names()) out += ',' + csv_field(n);
  out += '\n';
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    out += csv_field(cm.class_names()[t]);
    for (std::size_t p = 0; p < cm.classes(); ++p) out += ',' + std::to_string(cm.at(t, p));
    out += '\n';
  }
  return out;
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
  write_text_file(path, confusion_csv(cm));
}

ConfusionMatrix parse_confusion_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ArgumentError("confusion CSV: empty");
  auto header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "class") throw ArgumentError("confusion CSV: unexpected header");
  std::vector<std::string> names(header.begin() + 1, header.end());
  const std::size_t K = names.size();
  if (lines.size() != K + 1) throw ArgumentError("confusion CSV: expected " + std::to_string(K + 1) + " rows");
  std::vector<std::int64_t> counts;
  for (std::size_t t = 0; t < K; ++t) {
    const auto f = split_csv_line(lines[t + 1]);
    if (f.size() != K + 1) throw ArgumentError("confusion CSV: row " + std::to_string(t + 2) + " has wrong width");
    for (std::size_t p = 0; p < K; ++p) counts.push_back(std::stoll(f[p + 1]));
  }
  return ConfusionMatrix(std::move(names), std::move(counts));
}

std::string embeddings_csv(const Tensor64& points, std::span<const int> labels,
                           std::span<const std::string> class_names) {
  if (points.shape().rank() != 2 || points.shape()[1] != 2 ||
      static_cast<std::size_t>(points.shape()[0]) != labels.size()) {
    throw ShapeError("embeddings_csv: expected (n, 2) points with n labels");
  }
  std::string out = "x,y,label,class_name\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    const std::string name = l >= 0 && static_cast<std::size_t>(l) < class_names.size() ? class_names[l] : "";
    out += fixed6(points[2 * i]) + ',' + fixed6(points[2 * i + 1]) + ',' + std::to_string(l) + ',' +
           csv_field(name) + '\n';
  }
  return out;
}

void export_metrics(std::span<const EpochRecord> records, const ConfusionMatrix& cm,
                    const std::filesystem::path& dir) {
  write_metrics_csv(records, dir / "metrics.csv");
  write_confusion_csv(cm, dir / "confusion.csv");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace leafnet
