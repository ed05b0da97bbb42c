#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace fbas {

/// Median of a copy of v; even length averages the middle two.
double median(std::vector<double> v);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

/// Runs f(0..n-1) on up to `jobs` threads. Results must be written to
/// index-addressed slots so the output is independent of scheduling; the
/// first exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Reads a text file, returning lines without terminators. Throws
/// fbas::Error when the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace fbas
