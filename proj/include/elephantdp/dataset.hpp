// Copyright 2026 The ElephantDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "elephantdp/bytes.hpp"
#include "elephantdp/codec.hpp"

namespace elephantdp {

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct UnboundedError : std::runtime_error {
  explicit UnboundedError(const std::string& what) : std::runtime_error(what) {}
};

// Declared value range of a column. Sensitivity bounds are derived from these
// declared ranges, never from the data.
struct ColumnBounds {
  double lo = 0.0;
  double hi = 0.0;

  double range() const { return hi - lo; }
  double max_abs() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool operator==(const ColumnBounds&) const = default;
};

using BoundsMap = std::map<std::string, ColumnBounds>;

// Named numeric columns of equal length. Values are clamped into their
// column's declared bounds on ingest so the bounds are true by construction.
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_columns(std::vector<std::pair<std::string, std::vector<double>>> cols,
                              BoundsMap bounds) {
    Dataset d;
    size_t rows = cols.empty() ? 0 : cols.front().second.size();
    for (auto& [name, values] : cols) {
      if (values.size() != rows) throw SchemaError("columns differ in length");
      auto it = bounds.find(name);
      if (it == bounds.end()) throw UnboundedError("no bounds declared for column " + name);
      if (!(std::isfinite(it->second.lo) && std::isfinite(it->second.hi)) ||
          !(it->second.lo < it->second.hi)) {
        throw UnboundedError("bounds for column " + name + " are not a finite range");
      }
      for (double& v : values) v = std::clamp(v, it->second.lo, it->second.hi);
      d.names_.push_back(name);
      d.columns_.push_back(std::move(values));
    }
    d.bounds_ = std::move(bounds);
    d.rows_ = rows;
    return d;
  }

  // CSV with a header row naming the columns; bounds come from configuration.
  static Dataset from_csv(std::istream& in, const BoundsMap& bounds) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty CSV input");
    std::vector<std::string> names = split_csv_line(line);
    std::vector<std::vector<double>> cols(names.size());
    size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<std::string> cells = split_csv_line(line);
      if (cells.size() != names.size()) {
        throw SchemaError("CSV line " + std::to_string(lineno) + " has wrong field count");
      }
      for (size_t i = 0; i < cells.size(); ++i) {
        try {
          cols[i].push_back(std::stod(cells[i]));
        } catch (const std::exception&) {
          throw SchemaError("CSV line " + std::to_string(lineno) + ": bad number '" + cells[i] + "'");
        }
      }
    }
    std::vector<std::pair<std::string, std::vector<double>>> pairs;
    for (size_t i = 0; i < names.size(); ++i) pairs.emplace_back(names[i], std::move(cols[i]));
    return from_columns(std::move(pairs), bounds);
  }

  size_t row_count() const { return rows_; }

  bool has_column(const std::string& name) const { return index_of(name) >= 0; }

  const std::vector<double>& column(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw SchemaError("unknown column " + name);
    return columns_[static_cast<size_t>(i)];
  }

  const ColumnBounds& bounds(const std::string& name) const {
    auto it = bounds_.find(name);
    if (it == bounds_.end()) throw UnboundedError("no bounds declared for column " + name);
    return it->second;
  }

  const BoundsMap& bounds() const { return bounds_; }
  const std::vector<std::string>& column_names() const { return names_; }

  // Rows [begin, end) as a new dataset; used for chunked ingest and the
  // per-chunk aggregation path.
  Dataset slice(size_t begin, size_t end) const {
    end = std::min(end, rows_);
    begin = std::min(begin, end);
    std::vector<std::pair<std::string, std::vector<double>>> pairs;
    for (size_t c = 0; c < names_.size(); ++c) {
      pairs.emplace_back(names_[c], std::vector<double>(columns_[c].begin() + begin,
                                                        columns_[c].begin() + end));
    }
    return from_columns(std::move(pairs), bounds_);
  }

  Bytes encode() const {
    Writer w;
    w.u64(names_.size());
    w.u64(rows_);
    for (size_t c = 0; c < names_.size(); ++c) {
      w.str(names_[c]);
      const ColumnBounds& b = bounds_.at(names_[c]);
      w.f64(b.lo);
      w.f64(b.hi);
      for (double v : columns_[c]) w.f64(v);
    }
    return w.take();
  }

  static Dataset decode(const Bytes& in) {
    Reader r(in);
    size_t ncols = r.u64();
    size_t rows = r.u64();
    std::vector<std::pair<std::string, std::vector<double>>> pairs;
    BoundsMap bounds;
    for (size_t c = 0; c < ncols; ++c) {
      std::string name = r.str();
      ColumnBounds b;
      b.lo = r.f64();
      b.hi = r.f64();
      std::vector<double> col(rows);
      for (size_t i = 0; i < rows; ++i) col[i] = r.f64();
      bounds[name] = b;
      pairs.emplace_back(std::move(name), std::move(col));
    }
    r.expect_done();
    return from_columns(std::move(pairs), std::move(bounds));
  }

  bool operator==(const Dataset&) const = default;

 private:
  static std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      size_t s = cell.find_first_not_of(' ');
      out.push_back(s == std::string::npos ? "" : cell.substr(s));
    }
    return out;
  }

  int index_of(const std::string& name) const {
    for (size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return static_cast<int>(i);
    }
    return -1;
  }

  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  BoundsMap bounds_;
  size_t rows_ = 0;
};

}  // namespace elephantdp
