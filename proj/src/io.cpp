/*
 * Copyright 2026 The gbrtl Authors
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
#include "gbrtl/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gbrtl/error.hpp"

namespace gbrtl {

namespace fs = std::filesystem;

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kContract: return "contract violation";
  }
  return "error";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::kIo, "failed reading '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorKind::kIo, "failed writing '" + path + "'");
}

void write_files_atomically(const std::string& directory,
                            const std::map<std::string, std::string>& files) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create directory '" + directory + "': " + ec.message());

  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  try {
    for (const auto& [name, text] : files) {
      fs::path tmp = fs::path(directory) / ("." + name + ".tmp");
      temps.push_back(tmp);
      write_text_file(tmp.string(), text);
    }
  } catch (...) {
    cleanup();
    throw;
  }
  std::size_t i = 0;
  for (const auto& [name, text] : files) {
    fs::path dst = fs::path(directory) / name;
    fs::rename(temps[i], dst, ec);
    if (ec) {
      cleanup();
      fail(ErrorKind::kIo, "cannot rename into '" + dst.string() + "': " + ec.message());
    }
    ++i;
  }
}

LabelColumn parse_label_column(const std::string& text) {
  if (text == "none") return LabelColumn::kNone;
  if (text == "first") return LabelColumn::kFirst;
  if (text == "last") return LabelColumn::kLast;
  fail(ErrorKind::kConfig, "label column must be one of last|first|none, got '" + text + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t line, std::size_t col) {
  cell = trim(cell);
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    fail(ErrorKind::kData, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                               ": not a number: '" + std::string(cell) + "'");
  }
  if (!std::isfinite(v)) {
    fail(ErrorKind::kData, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                               ": non-finite value");
  }
  return v;
}

}  // namespace

Dataset parse_csv(const std::string& text, LabelColumn label_column) {
  Dataset ds;
  if (label_column != LabelColumn::kNone) ds.labels.emplace();

  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<double> cells;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    cells.clear();
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view cell =
          line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      cells.push_back(parse_cell(cell, line_no, cells.size() + 1));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }

    std::size_t feature_cols = cells.size();
    std::size_t feature_begin = 0;
    if (label_column != LabelColumn::kNone) {
      if (cells.size() < 2) {
        fail(ErrorKind::kData, "line " + std::to_string(line_no) + ": need a label and at least one feature");
      }
      std::size_t label_idx = label_column == LabelColumn::kFirst ? 0 : cells.size() - 1;
      double lv = cells[label_idx];
      if (lv != std::floor(lv) || lv < 0) {
        fail(ErrorKind::kData, "line " + std::to_string(line_no) + ": label must be a nonnegative integer");
      }
      ds.labels->push_back(static_cast<int>(lv));
      feature_cols -= 1;
      if (label_column == LabelColumn::kFirst) feature_begin = 1;
    }

    if (ds.rows == 0) {
      ds.cols = feature_cols;
    } else if (feature_cols != ds.cols) {
      fail(ErrorKind::kData, "line " + std::to_string(line_no) + ": expected " + std::to_string(ds.cols) +
                                 " feature columns, found " + std::to_string(feature_cols));
    }
    ds.values.insert(ds.values.end(), cells.begin() + static_cast<std::ptrdiff_t>(feature_begin),
                     cells.begin() + static_cast<std::ptrdiff_t>(feature_begin + feature_cols));
    ++ds.rows;
  }
  if (ds.rows == 0) fail(ErrorKind::kData, "dataset is empty");
  return ds;
}

Dataset read_csv(const std::string& path, LabelColumn label_column) {
  try {
    return parse_csv(read_text_file(path), label_column);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kData) fail(ErrorKind::kData, path + ": " + e.what());
    throw;
  }
}

}  // namespace gbrtl
