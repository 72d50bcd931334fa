#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "calib/partition.hpp"
#include "calib/pav.hpp"
#include "calib/types.hpp"

namespace calib {

// On-disk model: method tag, dimensions, smoothing, fit metadata, and exactly
// one payload. Floats round-trip bit-exactly through the JSON form.
struct ModelFile {
  int schema_version = 1;
  std::string method;  // pav | fixed-bins | mc-irp | recursive-bins
  int k = 0;
  double alpha = 0.0;
  std::size_t n = 0;  // fit set size
  std::uint64_t seed = 0;
  std::string candidate_source;
  std::string timestamp;
  std::optional<IsotonicModel> binned;
  std::optional<SimplexPartitionModel> partition;
};

std::string model_to_json(const ModelFile& mf);
ModelFile model_from_json(const std::string& text);

void save_model(const ModelFile& mf, const std::string& path);
ModelFile load_model(const std::string& path);

// Calibrated forecast vector for one input forecast.
std::vector<double> apply_model_file(const ModelFile& mf, std::span<const double> p);

// Nonempty bins or leaves.
std::size_t model_bins(const ModelFile& mf);

}  // namespace calib
