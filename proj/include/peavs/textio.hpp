#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the CSV/JSONL file formats.
namespace peavs::textio {

using Row = std::vector<std::string>;

// RFC 4180 style: quoted fields may contain commas, quotes ("") and newlines.
std::vector<Row> parse_csv(std::string_view text);
std::string csv_field(std::string_view s);
std::string join(const Row& fields, std::string_view sep);

// Shortest representation that round-trips.
std::string format_double(double v);
double parse_double(std::string_view s);
int parse_int(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
void append_text(const std::filesystem::path& path, std::string_view text);

}  // namespace peavs::textio
