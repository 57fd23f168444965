#pragma once

#include <filesystem>

#include "iva/synthgen.hpp"

namespace iva {

// On-disk format: <prefix>.json carries a small header, <prefix>.bin the
// payload as little-endian float64 in row-major order. A trailing ".json"
// on the prefix is tolerated and stripped.

void write_dataset(const std::filesystem::path& prefix, const DatasetStack& data);
DatasetStack read_dataset(const std::filesystem::path& prefix);

void write_ground_truth(const std::filesystem::path& prefix,
                        const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& prefix);

void write_demixing(const std::filesystem::path& prefix,
                    const DemixingTensor& demixing);
DemixingTensor read_demixing(const std::filesystem::path& prefix);

}  // namespace iva
