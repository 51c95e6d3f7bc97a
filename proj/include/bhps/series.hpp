#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bhps/core.hpp"

namespace bhps {

/// Time-stamped table of observables; the first column is always "t".
struct ObservableSeries {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  ObservableSeries() = default;
  explicit ObservableSeries(std::vector<std::string> cols) : columns(std::move(cols)) {
    require(!columns.empty() && columns.front() == "t", "ObservableSeries: first column must be 't'");
  }

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  void add_row(std::vector<double> row) {
    require(row.size() == columns.size(), "ObservableSeries: row width does not match columns");
    rows.push_back(std::move(row));
  }

  int column_index(const std::string& name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k] == name) return static_cast<int>(k);
    return -1;
  }

  std::vector<double> column(const std::string& name) const {
    const int k = column_index(name);
    require(k >= 0, "ObservableSeries: no column named '" + name + "'");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(k)]);
    return out;
  }

  std::vector<double> times() const { return column("t"); }

  double at(std::size_t row, const std::string& name) const {
    const int k = column_index(name);
    require(k >= 0, "ObservableSeries: no column named '" + name + "'");
    return rows.at(row)[static_cast<std::size_t>(k)];
  }
};

/// n+1 equally spaced times from t0 to t1 inclusive.
inline std::vector<double> linspace(double t0, double t1, int n) {
  require(n >= 1, "linspace: need at least one interval");
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * k / n;
  v.back() = t1;
  return v;
}

}  // namespace bhps
