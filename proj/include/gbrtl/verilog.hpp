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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gbrtl/netlist.hpp"

namespace gbrtl {

struct EmitOptions {
  std::string top_name = "treelut_top";
  bool emit_testbench = false;
  /// Stimulus file read by the testbench (rows of features then expected
  /// outputs, decimal, space-separated).
  std::string vector_file;
};

/// Throws Error(kConfig) unless `name` is a usable Verilog module name.
void validate_top_name(const std::string& name);

/// Synthesizable Verilog-2001 for the whole design.
///
/// Port contract of the top module:
///   clk                    present iff latency > 0, registers on posedge, no reset
///   features[N*W-1:0]      feature i at [i*W +: W]
///   y                      binary decision (binary models)
///   scores[C*WS-1:0]       class n sum at [n*WS +: WS], zero-extended (multiclass)
std::string emit_verilog(const Netlist& netlist, const EmitOptions& options);

/// Self-checking testbench: one vector per cycle, outputs checked LATENCY
/// cycles later, prints "PASS <n> FAIL <m>". The vector file may be
/// overridden at run time with +vectors=<path>.
std::string emit_testbench(const Netlist& netlist, const EmitOptions& options);

/// All files for a design, keyed by file name: "<top>.v" and, when
/// requested, "<top>_tb.v".
std::map<std::string, std::string> emit(const Netlist& netlist, const EmitOptions& options);

/// Testbench stimulus rows with expectations from interpret_netlist.
std::string format_vectors(const Netlist& netlist, std::span<const std::vector<QValue>> inputs);

/// Parses a vector file, checking the column count and value ranges.
/// Returns the number of rows.
std::size_t count_vectors(const Netlist& netlist, const std::string& text);

}  // namespace gbrtl
