#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace elinspect {

enum class Wafer { mono, poly };

const char* to_string(Wafer w);

/// One row of the cell index: image path, 4-level defect probability and
/// wafer type. p is always one of exactly {0, 1/3, 2/3, 1} after parsing.
struct CellRecord {
  std::string image_path;
  double p = 0.0;
  Wafer wafer = Wafer::mono;
};

enum class Label : int { functional = 0, defective = 1 };

/// Binary label plus rater-confidence weight derived from the 4-level p:
///   p=0   -> (functional, 1.00)      p=1/3 -> (defective, 0.33)
///   p=2/3 -> (defective, 0.67)       p=1   -> (defective, 1.00)
struct LabeledSample {
  CellRecord record;
  Label y = Label::functional;
  double w = 1.0;
};

struct SplitSpec {
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
};

struct ClassWeights {
  double functional = 1.0;
  double defective = 1.0;
};

/**
 * Parses a cell index file. One record per non-comment line with three
 * whitespace- or comma-separated fields: path, decimal probability, wafer
 * type ("mono"/"poly"). Lines starting with '#' are ignored. Probabilities
 * within 1e-3 of a legal value are snapped to it exactly; anything farther
 * is a DataError carrying the line number. An empty file yields an empty
 * list.
 */
std::vector<CellRecord> load_index(const std::filesystem::path& index_file);

LabeledSample to_labeled(const CellRecord& record);

std::vector<LabeledSample> to_labeled(const std::vector<CellRecord>& records);

/**
 * Deterministic stratified split. Strata are the joint (p-level, wafer)
 * keys, ordered mono before poly with ascending p; the test quota
 * round(test_fraction * N) is apportioned to strata by the largest-remainder
 * method (ties by stratum order), then per-stratum membership is drawn by a
 * seeded shuffle. Every stratum must hold at least 2 samples. Both returned
 * lists preserve the input order.
 */
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
stratified_split(const std::vector<LabeledSample>& samples, const SplitSpec& spec);

/// Inverse-proportion class weights c_j = S / (2 n_j) over a training set.
/// Both classes must be present.
ClassWeights class_weights(const std::vector<LabeledSample>& train);

/// Stratified subsample keeping per-stratum proportions within one sample.
/// fraction = 1 returns the input unchanged.
std::vector<LabeledSample> stratified_subsample(const std::vector<LabeledSample>& train,
                                                double fraction, std::uint64_t seed);

/// Writes the canonical split manifest: CSV with header
/// path,p,wafer,assignment and one row per sample (train rows first).
void write_split_manifest(const std::filesystem::path& file,
                          const std::vector<LabeledSample>& train,
                          const std::vector<LabeledSample>& test);

}  // namespace elinspect
