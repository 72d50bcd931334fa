#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "calib/types.hpp"

namespace calib {

// Reads a dataset CSV with header `p1,...,pK,y` and optional trailing `w`.
// Labels are 1..K in the file. Rows whose probability sum deviates from 1 by
// at most 1e-6 are renormalized; larger deviations are rejected. Errors carry
// the offending line number.
Dataset load_csv(const std::string& path);
Dataset load_csv_stream(std::istream& in, const std::string& origin);

void save_csv(const Dataset& ds, const std::string& path);
std::string dataset_to_csv(const Dataset& ds);

// Forecast tables (`r1,...,rK`, no labels) as produced by the apply command.
std::vector<std::vector<double>> load_forecasts_csv(const std::string& path);
void save_forecasts_csv(const std::vector<std::vector<double>>& rows,
                        const std::string& path);

// n points uniform on the K-simplex; label = argmax with probability
// 1 - noise, otherwise uniform over the other K-1 classes.
Dataset synth_simplex(std::size_t n, int k, double noise, std::uint64_t seed);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Scale to unit sum, then nudge the largest coordinate until the float sum is
// exactly 1. Idempotent; ingestion and synthesis both emit this canonical
// form, which is what makes save/load an identity.
void normalize_probability_vector(std::vector<double>& p);

}  // namespace calib
