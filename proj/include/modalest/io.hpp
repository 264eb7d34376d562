// Copyright 2026 The modalest Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
//
// Matrix persistence.
//
// CSV: first line `# rows=<N> cols=<p>` optionally followed by more
// `key=value` tokens (e.g. `kind=basis`). Then one line per matrix column
// holding that column's N entries, so the file body is column-major.
// Values are written in shortest round-trip form.
//
// Binary: ASCII magic `SNAP1`, u64 rows, u64 cols, then rows*cols IEEE-754
// doubles, all little-endian, column-major.

#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "modalest/datasets.hpp"
#include "modalest/errors.hpp"
#include "modalest/numerics.hpp"

namespace modalest {

enum class FileFormat { kCsv, kBinary };

inline FileFormat format_from_path(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return FileFormat::kCsv;
  return FileFormat::kBinary;
}

/// Header metadata carried by CSV files beyond rows/cols.
using HeaderTags = std::map<std::string, std::string>;

namespace detail {

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Split one RFC-4180 record; quoted fields may contain commas and "".
inline std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace detail

inline void save_matrix_csv(const Matrix& m, const std::string& path, const HeaderTags& tags = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << "# rows=" << m.rows() << " cols=" << m.cols();
  for (const auto& [k, v] : tags) out << ' ' << k << '=' << v;
  out << '\n';
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) {
      if (r) out << ',';
      out << detail::format_double(m(r, c));
    }
    out << '\n';
  }
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline Matrix load_matrix_csv(const std::string& path, HeaderTags* tags_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("#", 0) != 0) {
    throw InputError(path + ": missing '# rows=<N> cols=<p>' header");
  }
  HeaderTags tags;
  {
    std::istringstream hs(line.substr(1));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw InputError(path + ": malformed header token '" + tok + "'");
      tags[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  auto header_count = [&](const char* key) -> Index {
    const auto it = tags.find(key);
    if (it == tags.end()) throw InputError(path + ": header lacks '" + key + "='");
    long long v = -1;
    const auto& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < 0) {
      throw InputError(path + ": malformed header value " + key + "=" + s);
    }
    return static_cast<Index>(v);
  };
  const Index rows = header_count("rows");
  const Index cols = header_count("cols");
  Matrix m(rows, cols);
  Index c = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    if (c >= cols) throw InputError(path + ": more than cols=" + std::to_string(cols) + " data lines");
    const auto fields = detail::split_csv_record(line);
    if (static_cast<Index>(fields.size()) != rows) {
      throw InputError(path + ": column " + std::to_string(c) + " has " + std::to_string(fields.size()) +
                       " entries, expected rows=" + std::to_string(rows));
    }
    for (Index r = 0; r < rows; ++r) {
      const auto f = detail::trim(fields[static_cast<std::size_t>(r)]);
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
        throw InputError(path + ": unparseable value '" + std::string(f) + "' at row " + std::to_string(r) +
                         ", col " + std::to_string(c));
      }
      if (!std::isfinite(v)) {
        throw InputError(path + ": non-finite value at row " + std::to_string(r) + ", col " + std::to_string(c));
      }
      m(r, c) = v;
    }
    ++c;
  }
  if (c != cols) {
    throw InputError(path + ": found " + std::to_string(c) + " data lines, header says cols=" + std::to_string(cols));
  }
  if (tags_out) {
    tags.erase("rows");
    tags.erase("cols");
    *tags_out = std::move(tags);
  }
  return m;
}

inline constexpr std::string_view kBinaryMagic = "SNAP1";

inline void save_matrix_binary(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.write(kBinaryMagic.data(), static_cast<std::streamsize>(kBinaryMagic.size()));
  auto put_u64 = [&](std::uint64_t v) {
    v = detail::to_le(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  put_u64(static_cast<std::uint64_t>(m.rows()));
  put_u64(static_cast<std::uint64_t>(m.cols()));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  } else {
    for (Index i = 0; i < m.size(); ++i) put_u64(std::bit_cast<std::uint64_t>(m.data()[i]));
  }
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline Matrix load_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  char magic[5] = {};
  in.read(magic, 5);
  if (!in || std::string_view(magic, 5) != kBinaryMagic) throw InputError(path + ": bad magic, expected SNAP1");
  auto get_u64 = [&](const char* what) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw InputError(path + ": truncated header (" + what + ")");
    return detail::to_le(v);
  };
  const std::uint64_t rows = get_u64("rows");
  const std::uint64_t cols = get_u64("cols");
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw InputError(path + ": implausible dimensions");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  const auto count = static_cast<std::streamsize>(rows * cols);
  in.read(reinterpret_cast<char*>(m.data()), count * static_cast<std::streamsize>(sizeof(double)));
  if (in.gcount() != count * static_cast<std::streamsize>(sizeof(double))) {
    throw InputError(path + ": dimension mismatch, payload shorter than " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (Index i = 0; i < m.size(); ++i) {
      m.data()[i] = std::bit_cast<double>(detail::to_le(std::bit_cast<std::uint64_t>(m.data()[i])));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InputError(path + ": trailing bytes after payload");
  for (Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) {
      throw InputError(path + ": non-finite value at row " + std::to_string(i % m.rows()) + ", col " +
                       std::to_string(i / m.rows()));
    }
  }
  return m;
}

inline void save_matrix(const Matrix& m, const std::string& path, FileFormat format, const HeaderTags& tags = {}) {
  if (format == FileFormat::kCsv) {
    save_matrix_csv(m, path, tags);
  } else {
    save_matrix_binary(m, path);
  }
}

inline Matrix load_matrix(const std::string& path, FileFormat format, HeaderTags* tags = nullptr) {
  return format == FileFormat::kCsv ? load_matrix_csv(path, tags) : load_matrix_binary(path);
}

inline void save_snapshots(const SnapshotMatrix& x, const std::string& path, FileFormat format) {
  save_matrix(x.data, path, format, {{"kind", "snapshots"}});
}

inline SnapshotMatrix load_snapshots(const std::string& path, FileFormat format) {
  return SnapshotMatrix{load_matrix(path, format), std::nullopt};
}

}  // namespace modalest
