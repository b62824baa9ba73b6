#include "noisycp/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "noisycp/error.hpp"

namespace noisycp::cli {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::vector<double>> parse_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::vector<double> row;
    while (true) {
      const std::size_t comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      double value = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (field.empty() || ec != std::errc{} || ptr != last) {
        throw Error(Errc::Format, source + ":" + std::to_string(line_no) + ": bad number '" +
                                      std::string(field) + "'");
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::Format, source + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(rows.front().size()) + " columns, got " +
                                    std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ProbabilityMatrix read_probabilities(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto rows = parse_csv(in, path.string());
  if (rows.empty()) throw Error(Errc::Format, path.string() + ": no rows");
  return ProbabilityMatrix::validate(rows);
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto rows = parse_csv(in, path.string());
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != 1 || row[0] != std::floor(row[0]) || std::abs(row[0]) > 1e9) {
      throw Error(Errc::Format, path.string() + ": labels must be one integer per line");
    }
    labels.push_back(static_cast<int>(row[0]));
  }
  return labels;
}

Matrix read_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto rows = parse_csv(in, path.string());
  if (rows.empty()) throw Error(Errc::Format, path.string() + ": no rows");
  std::vector<double> data;
  for (const auto& row : rows) data.insert(data.end(), row.begin(), row.end());
  return Matrix(rows.size(), rows.front().size(), std::move(data));
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_probabilities(const std::filesystem::path& path, const ProbabilityMatrix& probs) {
  auto out = open_out(path);
  std::string line;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    line.clear();
    const auto row = probs.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) line += ',';
      line += format_double(row[j]);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error(Errc::Io, "write failed for '" + path.string() + "'");
}

void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  auto out = open_out(path);
  for (int y : labels) out << y << '\n';
  if (!out) throw Error(Errc::Io, "write failed for '" + path.string() + "'");
}

}  // namespace noisycp::cli
