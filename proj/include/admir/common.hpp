#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace admir {

namespace fs = std::filesystem;

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable / malformed / missing user-supplied input (maps to exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Time ranges (seconds)
// ---------------------------------------------------------------------------

struct TimeRange {
  double start = 0.0;
  double end = 0.0;

  double duration() const { return end - start; }
  bool valid() const { return end > start; }
  bool contains(double t) const { return t >= start && t < end; }
  double midpoint() const { return 0.5 * (start + end); }
};

inline double intersection_length(const TimeRange& a, const TimeRange& b) {
  const double lo = std::max(a.start, b.start);
  const double hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0.0;
}

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Splits on a single-character delimiter; keeps empty fields.
std::vector<std::string> split(std::string_view s, char delim);

/// Splits on runs of whitespace; drops empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

int count_words(std::string_view s);

/// Keeps the first `max_words` whitespace-delimited words.
std::string truncate_words(std::string_view s, int max_words);

/// Replaces every "{key}" occurrence for each key in `vars`. Unknown braces
/// are left untouched, so JSON examples inside templates survive rendering.
std::string render_template(std::string_view tpl,
                            const std::vector<std::pair<std::string, std::string>>& vars);

// ---------------------------------------------------------------------------
// Hashing / encoding
// ---------------------------------------------------------------------------

uint64_t fnv1a64(std::string_view data);
std::string to_hex(uint64_t value);

std::string base64_encode(const void* data, size_t len);
std::vector<uint8_t> base64_decode(std::string_view text);

/// Embeddings are stored as base64 little-endian 32-bit floats.
std::string encode_embedding(const std::vector<float>& v);
std::vector<float> decode_embedding(std::string_view b64);

// ---------------------------------------------------------------------------
// Vector math (embeddings are L2-normalized at the backend boundary, so
// cosine reduces to a dot product downstream)
// ---------------------------------------------------------------------------

double dot(const std::vector<float>& a, const std::vector<float>& b);
double l2_norm(const std::vector<float>& v);
void l2_normalize(std::vector<float>& v);
double cosine(const std::vector<float>& a, const std::vector<float>& b);

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);

}  // namespace admir
