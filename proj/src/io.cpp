#include "coreset/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace coreset {

namespace {

std::vector<std::uint8_t> read_maybe_gzip(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("cannot open '" + path.string() + "': no such file");
  gzFile file = gzopen(path.c_str(), "rb");
  if (!file) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes;
  std::uint8_t buffer[1 << 16];
  int got = 0;
  while ((got = gzread(file, buffer, sizeof buffer)) > 0) bytes.insert(bytes.end(), buffer, buffer + got);
  int err = Z_OK;
  const char* msg = got < 0 ? gzerror(file, &err) : nullptr;
  gzclose(file);
  if (got < 0) throw DataError("failed to read '" + path.string() + "': " + (msg ? msg : "gzip error"));
  return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const fs::path& path) {
  if (offset + 4 > bytes.size()) throw DataError("truncated IDX header in '" + path.string() + "'");
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(char((v >> shift) & 0xFF));
}

std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(path.string() + ":" + std::to_string(line) + ": non-numeric cell '" + cell + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_le64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw DataError("truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(in[pos + std::size_t(i)])) << (8 * i);
  pos += 8;
  return v;
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_le64(out, bits);
}

double get_f64(const std::string& in, std::size_t& pos) {
  const std::uint64_t bits = get_le64(in, pos);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

constexpr char kModelMagic[8] = {'P', 'B', 'C', 'S', 'M', 'D', 'L', '1'};

} // namespace

Dataset load_idx(const fs::path& images, const fs::path& labels) {
  const auto img = read_maybe_gzip(images);
  const auto lab = read_maybe_gzip(labels);

  const auto img_magic = read_be32(img, 0, images);
  if (img_magic != kIdxImageMagic)
    throw DataError("wrong magic in image file '" + images.string() + "': expected 0x00000803");
  const auto lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kIdxLabelMagic)
    throw DataError("wrong magic in label file '" + labels.string() + "': expected 0x00000801");

  const auto n = read_be32(img, 4, images);
  const auto rows = read_be32(img, 8, images);
  const auto cols = read_be32(img, 12, images);
  const auto n_labels = read_be32(lab, 4, labels);
  if (n != n_labels)
    throw DataError("count mismatch: " + std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");

  const std::size_t d = std::size_t(rows) * cols;
  if (img.size() < 16 + std::size_t(n) * d) throw DataError("truncated image payload in '" + images.string() + "'");
  if (lab.size() < 8 + std::size_t(n)) throw DataError("truncated label payload in '" + labels.string() + "'");
  if (n == 0 || d == 0) throw DataError("IDX files describe an empty dataset");

  RowMatrixXd X(n, Index(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) X(Index(i), Index(j)) = double(img[16 + i * d + j]) / 255.0;
  std::vector<int> y(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = lab[8 + i];
    max_label = std::max(max_label, y[i]);
  }
  return Dataset(std::move(X), std::move(y), max_label + 1);
}

void write_idx(const fs::path& images, const fs::path& labels, const Dataset& data, std::uint32_t rows,
               std::uint32_t cols) {
  if (Index(rows) * Index(cols) != data.feature_dim()) throw ConfigError("IDX dimensions do not match feature_dim");
  std::string img, lab;
  put_be32(img, kIdxImageMagic);
  put_be32(img, std::uint32_t(data.size()));
  put_be32(img, rows);
  put_be32(img, cols);
  for (Index i = 0; i < data.size(); ++i)
    for (Index j = 0; j < data.feature_dim(); ++j)
      img.push_back(char(std::uint8_t(std::lround(std::clamp(data.features()(i, j), 0.0, 1.0) * 255.0))));
  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, std::uint32_t(data.size()));
  for (int y : data.labels()) lab.push_back(char(std::uint8_t(y)));
  write_file_atomic(images, img);
  write_file_atomic(labels, lab);
}

Dataset load_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split(trim(line), ',');
      break;
    }
  }
  if (header.empty() || header.front() != "label")
    throw DataError(path.string() + ": missing header row 'label,f0,f1,...'");
  const std::size_t d = header.size() - 1;
  if (d == 0) throw DataError(path.string() + ": header declares no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<double> raw_labels;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (cells.size() != header.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": ragged row with " +
                      std::to_string(cells.size() - 1) + " features, expected " + std::to_string(d));
    raw_labels.push_back(parse_number(cells[0], path, line_no));
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = parse_number(cells[j + 1], path, line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");

  std::map<double, int> dense;
  for (double v : raw_labels) dense.emplace(v, 0);
  int next = 0;
  for (auto& [value, id] : dense) id = next++;

  RowMatrixXd X(Index(rows.size()), Index(d));
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) X(Index(i), Index(j)) = rows[i][j];
    labels[i] = dense.at(raw_labels[i]);
  }
  return Dataset(std::move(X), std::move(labels), next);
}

void write_csv(const fs::path& path, const Dataset& data) {
  std::string out = "label";
  for (Index j = 0; j < data.feature_dim(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (Index i = 0; i < data.size(); ++i) {
    out += std::to_string(data.labels()[std::size_t(i)]);
    for (Index j = 0; j < data.feature_dim(); ++j) out += "," + format_double(data.features()(i, j));
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "': unable to open temporary file");
    out.write(contents.data(), std::streamsize(contents.size()));
    out.flush();
    if (!out) throw IoError("cannot write '" + path.string() + "': write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot write '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_indices(const IndexSet& indices) {
  std::string out;
  for (auto i : indices) out += std::to_string(i) + '\n';
  return out;
}

std::string format_values(const VectorXd& values) {
  std::string out;
  for (Index i = 0; i < values.size(); ++i) out += format_double(values[i]) + '\n';
  return out;
}

VectorXd parse_values(const std::string& text) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    values.push_back(parse_number(t, "<vector>", line_no));
  }
  return Eigen::Map<VectorXd>(values.data(), Index(values.size()));
}

IndexSet parse_indices(const std::string& text) {
  IndexSet out;
  const VectorXd v = parse_values(text);
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0 || v[i] != std::floor(v[i])) throw DataError("invalid index value");
    out.push_back(std::size_t(v[i]));
  }
  return out;
}

std::string format_pgm(const Mask& mask, Index side) {
  if (side * side != mask.size()) throw ConfigError("mask is not a square image");
  std::string out = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  for (Index i = 0; i < mask.size(); ++i) out.push_back(char(mask[i] ? 0xFF : 0x00));
  return out;
}

std::string format_jsonl(std::span<const nlohmann::json> records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + '\n';
  return out;
}

std::string serialize_model(const TrainedModel& model) {
  const auto& arch = model.architecture();
  std::string out(kModelMagic, sizeof kModelMagic);
  put_le64(out, std::uint64_t(arch.kind));
  put_le64(out, std::uint64_t(arch.input_dim));
  put_le64(out, std::uint64_t(arch.num_classes));
  put_le64(out, arch.hidden.size());
  for (auto h : arch.hidden) put_le64(out, std::uint64_t(h));
  put_f64(out, model.final_loss());
  put_le64(out, std::uint64_t(model.parameters().size()));
  for (Index i = 0; i < model.parameters().size(); ++i) put_f64(out, model.parameters()[i]);
  return out;
}

TrainedModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < sizeof kModelMagic || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0)
    throw DataError("not a model file (bad magic)");
  std::size_t pos = sizeof kModelMagic;
  Architecture arch;
  const auto kind = get_le64(bytes, pos);
  if (kind > std::uint64_t(LearnerKind::ridge)) throw DataError("model file has an unknown learner kind");
  arch.kind = LearnerKind(kind);
  arch.input_dim = Index(get_le64(bytes, pos));
  arch.num_classes = Index(get_le64(bytes, pos));
  const auto layers = get_le64(bytes, pos);
  if (layers > 64) throw DataError("model file declares too many hidden layers");
  for (std::uint64_t l = 0; l < layers; ++l) arch.hidden.push_back(Index(get_le64(bytes, pos)));
  const double final_loss = get_f64(bytes, pos);
  const auto count = get_le64(bytes, pos);
  if (Index(count) != arch.parameter_count()) throw DataError("model file parameter count does not match its architecture");
  if (bytes.size() - pos != count * 8) throw DataError("model file payload has the wrong length");
  VectorXd params(static_cast<Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) params[Index(i)] = get_f64(bytes, pos);
  return TrainedModel(std::move(arch), std::move(params), final_loss);
}

void save_model(const fs::path& path, const TrainedModel& model) { write_file_atomic(path, serialize_model(model)); }

TrainedModel load_model(const fs::path& path) { return deserialize_model(read_file(path)); }

void emit_report(const ReportFiles& results, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec || !fs::is_directory(directory))
    throw IoError("cannot create output directory '" + directory.string() + "'" + (ec ? ": " + ec.message() : ""));
  write_file_atomic(directory / "metrics.jsonl", format_jsonl(results.metrics));
  if (results.coreset) write_file_atomic(directory / "coreset.txt", format_indices(*results.coreset));
  if (results.probabilities) write_file_atomic(directory / "probabilities.txt", format_values(*results.probabilities));
  if (results.image_mask && results.image_side > 0)
    write_file_atomic(directory / "mask.pgm", format_pgm(*results.image_mask, results.image_side));
  if (results.trace) {
    std::ostringstream ss;
    write_jsonl(ss, *results.trace);
    write_file_atomic(directory / "trace.jsonl", ss.str());
  }
  if (results.model) save_model(directory / "model.bin", *results.model);
}

} // namespace coreset
