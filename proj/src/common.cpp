#include "admir/common.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace admir {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  size_t begin = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(s.substr(begin, i - begin));
      begin = i + 1;
    }
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

int count_words(std::string_view s) {
  return static_cast<int>(split_whitespace(s).size());
}

std::string truncate_words(std::string_view s, int max_words) {
  auto words = split_whitespace(s);
  if (static_cast<int>(words.size()) <= max_words) return trim(s);
  words.resize(static_cast<size_t>(max_words));
  return join(words, " ");
}

std::string render_template(std::string_view tpl,
                            const std::vector<std::pair<std::string, std::string>>& vars) {
  std::string out(tpl);
  for (const auto& [key, value] : vars) {
    const std::string marker = "{" + key + "}";
    size_t pos = 0;
    while ((pos = out.find(marker, pos)) != std::string::npos) {
      out.replace(pos, marker.size(), value);
      pos += value.size();
    }
  }
  return out;
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

static const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const void* data, size_t len) {
  const auto* bytes = static_cast<const uint8_t*>(data);
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (size_t i = 0; i < len; i += 3) {
    uint32_t chunk = static_cast<uint32_t>(bytes[i]) << 16;
    if (i + 1 < len) chunk |= static_cast<uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < len) chunk |= static_cast<uint32_t>(bytes[i + 2]);
    out.push_back(kB64Alphabet[(chunk >> 18) & 0x3f]);
    out.push_back(kB64Alphabet[(chunk >> 12) & 0x3f]);
    out.push_back(i + 1 < len ? kB64Alphabet[(chunk >> 6) & 0x3f] : '=');
    out.push_back(i + 2 < len ? kB64Alphabet[chunk & 0x3f] : '=');
  }
  return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  std::array<int8_t, 256> rev;
  rev.fill(-1);
  for (int i = 0; i < 64; ++i) rev[static_cast<uint8_t>(kB64Alphabet[i])] = static_cast<int8_t>(i);

  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  uint32_t chunk = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || std::isspace(static_cast<unsigned char>(c))) continue;
    const int8_t v = rev[static_cast<uint8_t>(c)];
    if (v < 0) throw Error("base64: invalid character in input");
    chunk = (chunk << 6) | static_cast<uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<uint8_t>((chunk >> bits) & 0xff));
    }
  }
  return out;
}

std::string encode_embedding(const std::vector<float>& v) {
  std::vector<uint8_t> bytes(v.size() * 4);
  for (size_t i = 0; i < v.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, &v[i], 4);
    bytes[i * 4 + 0] = static_cast<uint8_t>(bits & 0xff);
    bytes[i * 4 + 1] = static_cast<uint8_t>((bits >> 8) & 0xff);
    bytes[i * 4 + 2] = static_cast<uint8_t>((bits >> 16) & 0xff);
    bytes[i * 4 + 3] = static_cast<uint8_t>((bits >> 24) & 0xff);
  }
  return base64_encode(bytes.data(), bytes.size());
}

std::vector<float> decode_embedding(std::string_view b64) {
  const auto bytes = base64_decode(b64);
  if (bytes.size() % 4 != 0) throw Error("embedding: payload size not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (size_t i = 0; i < out.size(); ++i) {
    uint32_t bits = static_cast<uint32_t>(bytes[i * 4 + 0]) |
                    static_cast<uint32_t>(bytes[i * 4 + 1]) << 8 |
                    static_cast<uint32_t>(bytes[i * 4 + 2]) << 16 |
                    static_cast<uint32_t>(bytes[i * 4 + 3]) << 24;
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw Error("dot: dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double l2_norm(const std::vector<float>& v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * x;
  return std::sqrt(acc);
}

void l2_normalize(std::vector<float>& v) {
  const double norm = l2_norm(v);
  if (norm <= 0.0) throw Error("normalize: zero-norm vector");
  for (float& x : v) x = static_cast<float>(x / norm);
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na <= 0.0 || nb <= 0.0) throw Error("cosine: zero-norm vector");
  return dot(a, b) / (na * nb);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("short write: " + path.string());
}

}  // namespace admir
