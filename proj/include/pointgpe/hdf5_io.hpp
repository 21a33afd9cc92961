#pragma once

#include <string>
#include <vector>

#include "pointgpe/types.hpp"

namespace pointgpe::h5 {

/// Decoded contents of one archive file: B clouds of P x 3 float32
/// coordinates plus B integer labels.
struct PointsFile {
  std::vector<PointMatrix<float>> clouds;
  std::vector<long long> labels;
};

/// Reads an archive file holding dataset "data" (float, B x P x 3) and
/// dataset "label" (integer, B or B x 1). Shape or dtype violations raise
/// io_error naming the file.
PointsFile read_points_file(const std::string& path);

/// Writes the same layout (used by tests and fixtures). All clouds must have
/// equal point counts. Labels are written as rank-2 B x 1 when label_rank2 is
/// set, rank-1 B otherwise.
void write_points_file(const std::string& path, const std::vector<PointMatrix<float>>& clouds,
                       const std::vector<long long>& labels, bool label_rank2 = true);

}  // namespace pointgpe::h5
