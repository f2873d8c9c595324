#include "banditbench/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "banditbench/rng.hpp"

namespace banditbench::data {

namespace {

ColumnType parse_column_type(const std::string& text) {
  if (text == "numeric") return ColumnType::numeric;
  if (text == "categorical") return ColumnType::categorical;
  if (text == "ignore") return ColumnType::ignore;
  throw std::invalid_argument("unknown column type '" + text + "'");
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + text + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Reads a file through zlib, which passes uncompressed input through as-is.
std::string read_maybe_gzip(const std::filesystem::path& path) {
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (file == nullptr) throw std::runtime_error("cannot read " + path.string());
  std::string out;
  char buf[1 << 16];
  int got = 0;
  while ((got = gzread(file, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(got));
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw std::runtime_error("corrupt gzip stream in " + path.string());
  return out;
}

std::vector<std::string> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"') {
      if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else {
        quoted = !quoted;
      }
    } else if (c == delimiter && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

std::uint32_t read_be32(const std::string& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw std::runtime_error(path.string() + ": truncated IDX header");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  }
  return v;
}

}  // namespace

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw std::invalid_argument("dataset: feature rows and labels differ in count");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument("dataset: label out of range");
  }
  if (features.hasNaN()) throw std::invalid_argument("dataset: NaN feature");
}

CsvSchema CsvSchema::from_keyvalue(const KeyValueFile& kv) {
  CsvSchema s;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "label") {
      s.label_column = value;
    } else if (key == "header") {
      s.header = parse_bool(value);
    } else if (key == "delimiter") {
      if (value == "tab" || value == "\\t") {
        s.delimiter = '\t';
      } else if (value.size() == 1) {
        s.delimiter = value[0];
      } else {
        throw std::invalid_argument("schema: delimiter must be one character or 'tab'");
      }
    } else if (key == "missing") {
      s.missing_tokens = split_list(value);
    } else if (key == "default") {
      s.default_type = parse_column_type(value);
    } else if (key == "labels") {
      s.labels = split_list(value);
    } else if (key.starts_with("column.")) {
      s.column_types[key.substr(7)] = parse_column_type(value);
    } else {
      throw std::invalid_argument("schema: unknown key '" + key + "'");
    }
  }
  return s;
}

CsvSchema CsvSchema::load(const std::filesystem::path& path) {
  return from_keyvalue(KeyValueFile::load(path));
}

LabeledDataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  const std::string text = read_file(path);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, schema.delimiter);
    if (schema.header && header.empty()) {
      header = std::move(fields);
      width = header.size();
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " fields, found " +
                               std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }

  auto column_index = [&](const std::string& ref) -> std::size_t {
    if (!header.empty()) {
      const auto it = std::find(header.begin(), header.end(), ref);
      if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    }
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), idx);
    if (ec != std::errc() || ptr != ref.data() + ref.size() || (width != 0 && idx >= width)) {
      throw std::invalid_argument("schema: unknown column '" + ref + "'");
    }
    return idx;
  };

  const std::size_t label_col = column_index(schema.label_column);
  std::vector<ColumnType> types(width, schema.default_type);
  for (const auto& [ref, type] : schema.column_types) types[column_index(ref)] = type;

  auto is_missing = [&](const std::string& field) {
    return field.empty() || std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(),
                                      field) != schema.missing_tokens.end();
  };

  LabeledDataset out;
  out.provenance = path.string();
  out.checksum = fnv1a64(text);

  std::vector<const std::vector<std::string>*> usable;
  for (const auto& row : rows) {
    bool missing = false;
    for (std::size_t c = 0; c < width; ++c) {
      if ((c == label_col || types[c] != ColumnType::ignore) && is_missing(row[c])) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++out.dropped_rows;
    } else {
      usable.push_back(&row);
    }
  }
  if (usable.empty()) throw std::runtime_error(path.string() + ": no usable rows");

  // Class index assignment: declared order, else sorted distinct values.
  std::vector<std::string> classes = schema.labels;
  if (classes.empty()) {
    std::set<std::string> seen;
    for (const auto* row : usable) seen.insert((*row)[label_col]);
    classes.assign(seen.begin(), seen.end());
  }
  out.class_names = classes;
  out.num_classes = static_cast<int>(classes.size());

  // Column layout of the expanded feature matrix.
  struct Block {
    std::size_t column;
    ColumnType type;
    std::vector<std::string> levels;
  };
  std::vector<Block> blocks;
  std::size_t dim = 0;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col || types[c] == ColumnType::ignore) continue;
    Block b{c, types[c], {}};
    const std::string name = header.empty() ? "col" + std::to_string(c) : header[c];
    if (b.type == ColumnType::categorical) {
      std::set<std::string> levels;
      for (const auto* row : usable) levels.insert((*row)[c]);
      b.levels.assign(levels.begin(), levels.end());
      for (const auto& level : b.levels) out.feature_names.push_back(name + "=" + level);
      dim += b.levels.size();
    } else {
      out.feature_names.push_back(name);
      dim += 1;
    }
    blocks.push_back(std::move(b));
  }

  out.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(usable.size()),
                                       static_cast<Eigen::Index>(dim));
  out.labels.reserve(usable.size());
  for (std::size_t r = 0; r < usable.size(); ++r) {
    const auto& row = *usable[r];
    const auto label_it = std::find(classes.begin(), classes.end(), row[label_col]);
    if (label_it == classes.end()) {
      throw std::runtime_error(path.string() + ": unknown label value '" + row[label_col] + "'");
    }
    out.labels.push_back(static_cast<int>(label_it - classes.begin()));

    Eigen::Index offset = 0;
    for (const Block& b : blocks) {
      const std::string& field = row[b.column];
      if (b.type == ColumnType::categorical) {
        const auto it = std::lower_bound(b.levels.begin(), b.levels.end(), field);
        out.features(static_cast<Eigen::Index>(r), offset + (it - b.levels.begin())) = 1.0;
        offset += static_cast<Eigen::Index>(b.levels.size());
      } else {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
          throw std::runtime_error(path.string() + ": non-numeric value '" + field +
                                   "' in numeric column " + std::to_string(b.column));
        }
        out.features(static_cast<Eigen::Index>(r), offset) = v;
        offset += 1;
      }
    }
  }
  out.validate();
  return out;
}

LabeledDataset ingest_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path) {
  const std::string images = read_maybe_gzip(images_path);
  const std::string labels = read_maybe_gzip(labels_path);

  if (read_be32(images, 0, images_path) != 0x00000803U) {
    throw std::runtime_error(images_path.string() + ": bad IDX image magic");
  }
  if (read_be32(labels, 0, labels_path) != 0x00000801U) {
    throw std::runtime_error(labels_path.string() + ": bad IDX label magic");
  }
  const std::size_t n = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n != n_labels) throw std::runtime_error("IDX image and label counts differ");
  const std::size_t dim = rows * cols;
  if (images.size() < 16 + n * dim) throw std::runtime_error(images_path.string() + ": truncated");
  if (labels.size() < 8 + n) throw std::runtime_error(labels_path.string() + ": truncated");

  LabeledDataset out;
  out.provenance = images_path.string() + "," + labels_path.string();
  out.checksum = fnv1a64(labels, fnv1a64(images));
  out.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  out.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<unsigned char>(images[16 + i * dim + j]) / 255.0;
    }
    out.labels[i] = static_cast<unsigned char>(labels[8 + i]);
    max_label = std::max(max_label, out.labels[i]);
  }
  if (n == 0) throw std::runtime_error(images_path.string() + ": no images");
  out.num_classes = max_label + 1;
  for (int k = 0; k < out.num_classes; ++k) out.class_names.push_back(std::to_string(k));
  for (std::size_t j = 0; j < dim; ++j) out.feature_names.push_back("px" + std::to_string(j));
  out.validate();
  return out;
}

Eigen::VectorXd normalize_unit(const Eigen::Ref<const Eigen::VectorXd>& x,
                               std::size_t* zero_count) {
  if (x.size() == 0) throw std::invalid_argument("normalize_unit: empty vector");
  const double norm = x.norm();
  if (norm > 0.0) return x / norm;
  if (zero_count != nullptr) ++*zero_count;
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(x.size());
  e1[0] = 1.0;
  return e1;
}

Eigen::VectorXd duplicate_half(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (std::abs(x.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("duplicate_half: input must have unit norm");
  }
  const Eigen::Index d = x.size();
  Eigen::VectorXd out(2 * d);
  out.head(d) = x / std::sqrt(2.0);
  out.tail(d) = out.head(d);
  return out;
}

std::vector<Eigen::VectorXd> disjoint_encode(const Eigen::Ref<const Eigen::VectorXd>& x,
                                             int num_arms) {
  if (num_arms < 2) throw std::invalid_argument("disjoint_encode: need at least 2 arms");
  const Eigen::Index d = x.size();
  std::vector<Eigen::VectorXd> arms(static_cast<std::size_t>(num_arms),
                                    Eigen::VectorXd::Zero(d * num_arms));
  for (int k = 0; k < num_arms; ++k) arms[static_cast<std::size_t>(k)].segment(k * d, d) = x;
  return arms;
}

LabeledDataset shuffle(const LabeledDataset& dataset, std::uint64_t seed) {
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  LabeledDataset out = dataset;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        dataset.features.row(static_cast<Eigen::Index>(order[i]));
    out.labels[i] = dataset.labels[order[i]];
  }
  return out;
}

int ContextPipeline::encoded_dim(int raw_dim, int num_arms) const {
  return raw_dim * (duplicate_half ? 2 : 1) * num_arms;
}

std::vector<Eigen::VectorXd> ContextPipeline::encode(const Eigen::Ref<const Eigen::VectorXd>& raw,
                                                     int num_arms,
                                                     std::size_t* zero_count) const {
  // Duplication is applied to each whole arm context: arm k then occupies
  // block k of both halves and x_j = x_{j + D/2} holds for the full input.
  std::vector<Eigen::VectorXd> arms = disjoint_encode(normalize_unit(raw, zero_count), num_arms);
  if (duplicate_half) {
    for (Eigen::VectorXd& arm : arms) arm = data::duplicate_half(arm);
  }
  return arms;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json manifest(const LabeledDataset& dataset, const ContextPipeline& pipeline) {
  std::size_t zero_rows = 0;
  for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) {
    if (dataset.features.row(i).squaredNorm() == 0.0) ++zero_rows;
  }
  char checksum[17];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(dataset.checksum));
  return nlohmann::json{
      {"provenance", dataset.provenance},
      {"n", dataset.size()},
      {"K", dataset.num_classes},
      {"d_raw", dataset.raw_dim()},
      {"context_dim", pipeline.encoded_dim(dataset.raw_dim(), dataset.num_classes)},
      {"duplicate_half", pipeline.duplicate_half},
      {"dropped_rows", dataset.dropped_rows},
      {"zero_feature_rows", zero_rows},
      {"checksum", checksum},
      {"classes", dataset.class_names},
  };
}

}  // namespace banditbench::data
