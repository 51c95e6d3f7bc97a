#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bhps/core.hpp"
#include "bhps/husimi.hpp"
#include "bhps/series.hpp"

namespace bhps {

namespace fs = std::filesystem;

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Generic numeric table as written to and parsed from CSV.
struct Table {
  Metadata metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return v;
    return {};
  }
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string table_to_csv(const Table& t) {
  std::string s;
  for (const auto& [k, v] : t.metadata) s += "# " + k + ": " + v + "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) s += (c ? "," : "") + t.columns[c];
  s += "\n";
  for (const auto& r : t.rows) {
    require(r.size() == t.columns.size(), "table_to_csv: row width does not match columns");
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) s += ",";
      s += format_double(r[c]);
    }
    s += "\n";
  }
  return s;
}

inline Table parse_csv(const std::string& text, const std::string& origin = "<string>") {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) throw IoError(origin + ":" + std::to_string(lineno) + ": malformed metadata line");
      std::string key = line.substr(1, colon - 1);
      std::string val = colon + 1 < line.size() ? line.substr(colon + 1) : "";
      auto trim = [](std::string& x) {
        const auto a = x.find_first_not_of(' ');
        const auto b = x.find_last_not_of(' ');
        x = a == std::string::npos ? "" : x.substr(a, b - a + 1);
      };
      trim(key);
      trim(val);
      t.metadata.emplace_back(key, val);
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw IoError(origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) + " fields");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') throw IoError(origin + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw IoError(origin + ": missing column header");
  return t;
}

inline void write_table(const fs::path& path, const Table& t) { write_text(path, table_to_csv(t)); }
inline Table read_table(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

inline void write_series(const fs::path& path, const ObservableSeries& s, const Metadata& meta = {}) {
  write_table(path, Table{meta, s.columns, s.rows});
}

inline ObservableSeries read_series(const fs::path& path, Metadata* meta = nullptr) {
  Table t = read_table(path);
  if (meta) *meta = t.metadata;
  ObservableSeries s(t.columns);
  s.rows = std::move(t.rows);
  return s;
}

/// Husimi grid in long format with columns p, q, Q.
inline Table grid_table(const HusimiGrid& g, const Metadata& meta = {}) {
  Table t{meta, {"p", "q", "Q"}, {}};
  t.metadata.emplace_back("particles", std::to_string(g.particles));
  t.metadata.emplace_back("shape", std::to_string(g.p.size()) + "x" + std::to_string(g.q.size()));
  t.rows.reserve(g.p.size() * g.q.size());
  for (std::size_t i = 0; i < g.p.size(); ++i)
    for (std::size_t j = 0; j < g.q.size(); ++j)
      t.rows.push_back({g.p[i], g.q[j], g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  return t;
}

/// 64-bit FNV-1a hash.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string file_checksum(const fs::path& path) { return hex64(fnv1a64(read_text(path))); }

}  // namespace bhps
