#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gral::util {

std::string sha256_hex(const std::string& data);

std::string base64_encode(const uint8_t* data, size_t len);
std::vector<uint8_t> base64_decode(const std::string& text);

std::string base64_encode_doubles(const std::vector<double>& values);
std::vector<double> base64_decode_doubles(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& data);

// Splits delimited text into rows of fields. Fields may be double-quoted;
// quoted fields can contain commas, quote pairs ("") and newlines. A trailing
// newline does not produce an empty row.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
// Quotes a field only when needed so round trips stay byte-stable.
std::string csv_field(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::string lowercase(std::string s);
std::string trim(const std::string& s);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

// Replaces ${NAME} with the value of the environment variable NAME.
// Unset variables expand to the empty string.
std::string interpolate_env(const std::string& text);

bool all_finite(const std::vector<double>& v);

using Rng = std::mt19937_64;

std::vector<double> gaussian_vector(Rng& rng, size_t dim, double stddev = 1.0);
std::vector<double> unit_vector(Rng& rng, size_t dim);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& v);
std::vector<double> normalized(std::vector<double> v);

}  // namespace gral::util
