#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ibg {

// Shortest round-trip decimal form, locale independent. All CSV/JSON payloads
// go through this so reruns are byte-identical.
std::string format_double(double v);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// f64 vectors are serialized little-endian regardless of host order.
std::string encode_f64_base64(const std::vector<double>& values);
std::vector<double> decode_f64_base64(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Minimal CSV support for the report formats used here (no quoting needed:
// fields are identifiers and numbers).
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace ibg
