#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace calib {

// Tolerances shared across the library.
constexpr double kIngestTol = 1e-6;     // CSV rows renormalized when |sum-1| <= this
constexpr double kSimplexTol = 1e-9;    // internal invariant on probability/threshold sums
constexpr std::size_t kGridCap = 1000000;  // max lattice thresholds enumerated

// Raised on malformed user input (files, flags). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a request violates an interface contract (e.g. K mismatch). CLI exit code 3.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an internal invariant breaks. CLI exit code 4.
class InternalError : public std::runtime_error {
 public:
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

// One prediction vector on the simplex with its observed class and weight.
// Labels are 0-based in memory; file formats use 1-based class ids.
struct LabeledForecast {
  std::vector<double> p;  // length K, entries in [0,1], sums to 1
  int label = 0;          // 0..K-1
  double weight = 1.0;    // > 0
};

struct Dataset {
  std::vector<LabeledForecast> samples;
  int k = 0;

  std::size_t size() const { return samples.size(); }
};

// A point of the affine hyperplane {x : sum(x) = 1}. Coordinates may leave
// [0,1]; splitting thresholds are allowed outside the simplex.
struct AffineThreshold {
  std::vector<double> coords;

  AffineThreshold() = default;
  explicit AffineThreshold(std::vector<double> c);

  int k() const { return static_cast<int>(coords.size()); }
};

// Execution policy for the data-parallel kernels. Every parallel kernel has a
// serial twin producing bit-identical output; tests compare the two.
enum class Exec { serial, parallel };

}  // namespace calib
