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

#ifndef MAGSLAM_CSV_HPP_
#define MAGSLAM_CSV_HPP_

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace magslam {

/// Raised for unreadable or malformed data files.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// CSV table with a single header row; cells kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;

  size_t n_rows() const { return cells.size(); }
  /// Numeric value of a cell; throws DataError when it does not parse.
  double num(size_t row, int col) const;
  const std::string &text(size_t row, int col) const { return cells[row][col]; }

  /// Index of a named column; throws DataError when absent.
  int column(const std::string &name) const;
  /// Throws DataError unless the header starts with exactly these names.
  void require_columns(const std::vector<std::string> &names) const;
};

CsvTable read_csv(const std::string &path);

/// Writes rows with round-trip precision ("%.17g").
class CsvWriter {
public:
  CsvWriter(const std::string &path, const std::vector<std::string> &header);

  CsvWriter &operator<<(double v);
  CsvWriter &operator<<(long long v);
  CsvWriter &operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter &operator<<(const std::string &v);
  void end_row();

private:
  void sep();
  std::ofstream out_;
  bool row_started_ = false;
  std::string path_;
};

std::string format_double(double v);

} // namespace magslam

#endif // MAGSLAM_CSV_HPP_
