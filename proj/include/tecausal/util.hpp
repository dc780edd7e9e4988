#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tecausal {

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);

// Strict parse of a full token; throws DataError on trailing garbage.
double parse_double(std::string_view token);

std::vector<std::string> split(std::string_view line, char sep);

// 16-hex-digit FNV-1a digest, used for config and output fingerprints.
std::string hex_digest(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// visited exactly once; callers write results by index, so output does not
// depend on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace tecausal
