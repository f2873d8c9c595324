#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "banditbench/keyvalue.hpp"

namespace banditbench::data {

/// Rows of raw features with a class label in [0, num_classes).
struct LabeledDataset {
  Eigen::MatrixXd features;  // one row per example
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::string provenance;
  std::size_t dropped_rows = 0;
  std::uint64_t checksum = 0;

  std::size_t size() const { return labels.size(); }
  int raw_dim() const { return static_cast<int>(features.cols()); }
  /// Throws if labels are out of range or any feature is NaN.
  void validate() const;
};

enum class ColumnType { numeric, categorical, ignore };

/// Column layout of a delimited text file, read from the key-value format:
///
///   label = 0            # label column (index, or name when header = true)
///   header = false
///   delimiter = ,
///   missing = ?          # extra tokens that mark a missing value
///   default = categorical
///   column.3 = numeric   # per-column override (index or header name)
///   labels = e, p        # optional closed label set, in class order
struct CsvSchema {
  std::string label_column = "0";
  bool header = false;
  char delimiter = ',';
  std::vector<std::string> missing_tokens;
  ColumnType default_type = ColumnType::numeric;
  std::map<std::string, ColumnType> column_types;
  std::vector<std::string> labels;

  static CsvSchema from_keyvalue(const KeyValueFile& kv);
  static CsvSchema load(const std::filesystem::path& path);
};

/// Categorical columns are one-hot expanded (levels in sorted order); rows
/// with an empty field or a missing token are dropped and counted. Row order
/// follows the file.
LabeledDataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// IDX image/label pair (gzip accepted). Pixels are scaled to [0, 1].
LabeledDataset ingest_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path);

/// x / ||x||. A zero vector maps to e_1 and bumps `zero_count` if given.
Eigen::VectorXd normalize_unit(const Eigen::Ref<const Eigen::VectorXd>& x,
                               std::size_t* zero_count = nullptr);

/// [x / sqrt(2); x / sqrt(2)] for a unit-norm x.
Eigen::VectorXd duplicate_half(const Eigen::Ref<const Eigen::VectorXd>& x);

/// K copies of a zero vector of length K * len(x), arm k holding x in block k.
std::vector<Eigen::VectorXd> disjoint_encode(const Eigen::Ref<const Eigen::VectorXd>& x,
                                             int num_arms);

/// Fisher-Yates permutation of the rows driven by std::mt19937_64(seed).
LabeledDataset shuffle(const LabeledDataset& dataset, std::uint64_t seed);

/// normalize -> disjoint_encode -> (duplicate_half per arm). Each arm context
/// has unit norm; arm k is nonzero only in block k (of each half when
/// duplicated).
struct ContextPipeline {
  bool duplicate_half = true;

  int encoded_dim(int raw_dim, int num_arms) const;
  std::vector<Eigen::VectorXd> encode(const Eigen::Ref<const Eigen::VectorXd>& raw,
                                      int num_arms, std::size_t* zero_count = nullptr) const;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// n, K, d_raw, drop counts, checksum and class names.
nlohmann::json manifest(const LabeledDataset& dataset, const ContextPipeline& pipeline);

}  // namespace banditbench::data
