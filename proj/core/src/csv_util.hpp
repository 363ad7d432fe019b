#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eoli::detail {

/// Splits text into lines, accepting LF and CRLF; a trailing newline does not
/// produce an extra empty line. A leading UTF-8 BOM is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

/// Comma split with RFC-4180 style double-quote handling.
std::vector<std::string> split_fields(std::string_view line);

/// Strict decimal parse: the whole field must be consumed and finite.
std::optional<double> parse_real(std::string_view field);
std::optional<long long> parse_integer(std::string_view field);

/// Shortest decimal (no exponent) that round-trips to the same double.
std::string format_exact(double value);
/// Fixed notation with the given number of decimals, `.` separator.
std::string format_fixed(double value, int decimals);

std::string quote_if_needed(std::string_view field);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view content);

} // namespace eoli::detail
