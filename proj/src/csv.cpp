/*
 * Copyright 2026 The magslam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "magslam/csv.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <fmt/format.h>

namespace magslam {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

} // namespace

int CsvTable::column(const std::string &name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw DataError("missing CSV column '" + name + "'");
  }
  return static_cast<int>(it - header.begin());
}

void CsvTable::require_columns(const std::vector<std::string> &names) const {
  if (header.size() < names.size() ||
      !std::equal(names.begin(), names.end(), header.begin())) {
    std::string want;
    for (const auto &n : names) {
      want += (want.empty() ? "" : ",") + n;
    }
    throw DataError("unexpected CSV header, expected " + want);
  }
}

double CsvTable::num(size_t row, int col) const {
  const auto &c = cells.at(row).at(col);
  double v = 0.0;
  const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
  if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size()) {
    throw DataError(fmt::format("row {}: non-numeric field '{}' in column {}", row + 1, c,
                                header.at(col)));
  }
  return v;
}

CsvTable read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path);
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path + ": empty file");
  }
  table.header = split(line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw DataError(fmt::format("{}:{}: expected {} fields, got {}", path, line_no,
                                  table.header.size(), cells.size()));
    }
    table.cells.push_back(cells);
  }
  return table;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

CsvWriter::CsvWriter(const std::string &path, const std::vector<std::string> &header)
    : out_(path), path_(path) {
  if (!out_) {
    throw DataError("cannot write " + path);
  }
  for (size_t i = 0; i < header.size(); ++i) {
    out_ << (i ? "," : "") << header[i];
  }
  out_ << '\n';
}

void CsvWriter::sep() {
  if (row_started_) {
    out_ << ',';
  }
  row_started_ = true;
}

CsvWriter &CsvWriter::operator<<(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter &CsvWriter::operator<<(long long v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter &CsvWriter::operator<<(const std::string &v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_started_ = false;
  if (!out_) {
    throw DataError("write failed: " + path_);
  }
}

} // namespace magslam
