#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "elinspect/dataset.hpp"
#include "elinspect/image.hpp"

namespace elinspect::test {

/// Deterministic EL-cell lookalike: wafer texture plus busbars; cells with
/// p > 0 get dark cracks and blobs whose extent scales with p, so the
/// defective class is learnable.
GrayImage synthetic_cell(std::uint64_t seed, Wafer wafer, double p, int size = 96);

struct SyntheticDataset {
  std::filesystem::path dir;
  std::filesystem::path index;
  std::vector<CellRecord> records;
};

/// Writes `count` synthetic cell PNGs plus a labels.csv index. All four
/// p-levels and both wafer types are represented (deterministic by seed).
SyntheticDataset make_synthetic_dataset(const std::filesystem::path& dir, int count,
                                        std::uint64_t seed, int size = 96);

/// Fresh directory under the system temp dir.
std::filesystem::path unique_temp_dir(const std::string& tag);

}  // namespace elinspect::test
