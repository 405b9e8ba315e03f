#pragma once

// Dataset ingestion and result persistence.

#include "coreset/core.hpp"
#include "coreset/learner.hpp"
#include "coreset/trace.hpp"
#include "coreset/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coreset {

namespace fs = std::filesystem;

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image/label pair (gzip-compressed or raw). Pixels are scaled to [0, 1].
Dataset load_idx(const fs::path& images, const fs::path& labels);

/// Writes an uncompressed IDX pair; features are mapped back to bytes by round(255 x).
void write_idx(const fs::path& images, const fs::path& labels, const Dataset& data, std::uint32_t rows,
               std::uint32_t cols);

/// CSV with header `label,f0,f1,...`; labels are re-indexed densely in ascending numeric order.
Dataset load_csv(const fs::path& path);
void write_csv(const fs::path& path, const Dataset& data);

/// Writes `contents` to a temporary sibling file and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& contents);
std::string read_file(const fs::path& path);

/// One decimal index per line.
std::string format_indices(const IndexSet& indices);
/// One value per line, round-trip precision.
std::string format_values(const VectorXd& values);
VectorXd parse_values(const std::string& text);
IndexSet parse_indices(const std::string& text);

/// Binary P5 graymap of a side x side mask (set bits white).
std::string format_pgm(const Mask& mask, Index side);

std::string format_jsonl(std::span<const nlohmann::json> records);

/// Flat model file: magic "PBCSMDL1", architecture descriptor, little-endian float64 parameters.
void save_model(const fs::path& path, const TrainedModel& model);
TrainedModel load_model(const fs::path& path);
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(const std::string& bytes);

struct ReportFiles {
  std::vector<nlohmann::json> metrics;
  std::optional<IndexSet> coreset;
  std::optional<VectorXd> probabilities;
  std::optional<Mask> image_mask;
  Index image_side = 0;
  std::optional<SelectionTrace> trace;
  std::optional<TrainedModel> model;
};

/// Writes metrics.jsonl and, when present, coreset.txt, probabilities.txt, mask.pgm,
/// trace.jsonl and model.bin under `directory`.
void emit_report(const ReportFiles& results, const fs::path& directory);

} // namespace coreset
