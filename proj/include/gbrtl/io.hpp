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
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gbrtl {

std::string read_text_file(const std::string& path);

/// Writes every file to a temporary sibling first and renames them into
/// place only after all writes succeeded. On failure nothing is left behind.
void write_files_atomically(const std::string& directory,
                            const std::map<std::string, std::string>& files);

void write_text_file(const std::string& path, const std::string& text);

enum class LabelColumn { kNone, kFirst, kLast };

LabelColumn parse_label_column(const std::string& text);

/// Dense row-major sample matrix with optional integer labels.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::optional<std::vector<int>> labels;

  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
};

/// Parses headerless CSV. All cells must be finite numbers; labels must be
/// integral. Errors name the 1-based line and column.
Dataset parse_csv(const std::string& text, LabelColumn label_column);
Dataset read_csv(const std::string& path, LabelColumn label_column);

}  // namespace gbrtl
