#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "noisycp/types.hpp"

namespace noisycp::cli {

/// Headerless comma-separated rows of numbers. Blank lines are skipped.
std::vector<std::vector<double>> parse_csv(std::istream& in, const std::string& source);

ProbabilityMatrix read_probabilities(const std::filesystem::path& path);
std::vector<int> read_labels(const std::filesystem::path& path);
Matrix read_matrix(const std::filesystem::path& path);

void write_probabilities(const std::filesystem::path& path, const ProbabilityMatrix& probs);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

/// Shortest representation that round-trips the double exactly.
std::string format_double(double value);

}  // namespace noisycp::cli
