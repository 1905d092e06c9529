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
#include "gbrtl/verilog.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <regex>
#include <sstream>

#include "gbrtl/error.hpp"
#include "gbrtl/io.hpp"
#include "gbrtl/version.hpp"

namespace gbrtl {

namespace {

constexpr const char* kKeywords[] = {
    "always", "and", "assign", "automatic", "begin", "buf", "bufif0", "bufif1", "case", "casex", "casez", "cell",
    "cmos", "config", "deassign", "default", "defparam", "design", "disable", "edge", "else", "end", "endcase",
    "endconfig", "endfunction", "endgenerate", "endmodule", "endprimitive", "endspecify", "endtable", "endtask",
    "event", "for", "force", "forever", "fork", "function", "generate", "genvar", "highz0", "highz1", "if",
    "ifnone", "incdir", "include", "initial", "inout", "input", "instance", "integer", "join", "large", "liblist",
    "library", "localparam", "macromodule", "medium", "module", "nand", "negedge", "nmos", "nor",
    "noshowcancelled", "not", "notif0", "notif1", "or", "output", "parameter", "pmos", "posedge", "primitive",
    "pull0", "pull1", "pulldown", "pullup", "pulsestyle_onevent", "pulsestyle_ondetect", "rcmos", "real",
    "realtime", "reg", "release", "repeat", "rnmos", "rpmos", "rtran", "rtranif0", "rtranif1", "scalared",
    "showcancelled", "signed", "small", "specify", "specparam", "strong0", "strong1", "supply0", "supply1",
    "table", "task", "time", "tran", "tranif0", "tranif1", "tri", "tri0", "tri1", "triand", "trior", "trireg",
    "unsigned", "use", "vectored", "wait", "wand", "weak0", "weak1", "while", "wire", "wor", "xnor", "xor"};

std::string lit(int width, std::uint64_t value) {
  return std::to_string(width) + "'d" + std::to_string(value);
}

std::string range(int width) { return "[" + std::to_string(width - 1) + ":0]"; }

// Port type column padded for alignment.
std::string bus(int width) {
  std::string r = width == 1 ? "" : range(width);
  return r + std::string(r.size() < 12 ? 12 - r.size() : 1, ' ');
}

std::string tree_module_name(const TreeLogic& t) {
  return "tree_" + std::to_string(t.class_index) + "_" + std::to_string(t.tree_index);
}

std::string product(const Path& p) {
  if (p.empty()) return "1'b1";
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += " & ";
    s += (p[i].positive ? "k[" : "~k[") + std::to_string(p[i].key) + "]";
  }
  return s;
}

std::string sum_of_products(const Selector& sel) {
  if (sel.paths.size() == 1) return product(sel.paths.front());
  std::string s;
  for (std::size_t i = 0; i < sel.paths.size(); ++i) {
    if (i) s += " | ";
    s += sel.paths[i].size() > 1 ? "(" + product(sel.paths[i]) + ")" : product(sel.paths[i]);
  }
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_tree_module(std::ostringstream& out, const TreeLogic& t, std::size_t num_keys) {
  out << "module " << tree_module_name(t) << " (\n";
  if (num_keys > 0) out << "    input  wire " << bus(static_cast<int>(num_keys)) << "k,\n";
  out << "    output wire " << bus(t.out_width) << "qf\n";
  out << ");\n";
  for (const auto& s : t.selectors)
    out << "    wire sel_" << s.value << " = " << sum_of_products(s) << ";\n";
  out << "    assign qf = ";
  const std::string indent(16, ' ');
  for (const auto& s : t.selectors) out << "sel_" << s.value << " ? " << lit(t.out_width, s.value) << " :\n" << indent;
  out << lit(t.out_width, t.default_value) << ";\n";
  out << "endmodule\n\n";
}

struct TopNames {
  // Name of adder node (group, level, index) as seen by its consumer.
  static std::string comb(std::size_t g, std::size_t level, std::size_t i) {
    return "s" + std::to_string(g) + "_" + std::to_string(level) + "_" + std::to_string(i);
  }
  static std::string reg(std::size_t g, std::size_t level, std::size_t i) { return comb(g, level, i) + "_q"; }
};

}  // namespace

void validate_top_name(const std::string& name) {
  static const std::regex ident("[A-Za-z_][A-Za-z0-9_]*");
  static const std::regex generated("tree_[0-9]+_[0-9]+");
  if (!std::regex_match(name, ident)) fail(ErrorKind::kConfig, "top name '" + name + "' is not a Verilog identifier");
  if (std::regex_match(name, generated)) {
    fail(ErrorKind::kConfig, "top name '" + name + "' collides with generated tree module names");
  }
  for (const char* kw : kKeywords)
    if (name == kw) fail(ErrorKind::kConfig, "top name '" + name + "' is a Verilog keyword");
}

std::string emit_verilog(const Netlist& n, const EmitOptions& options) {
  validate_top_name(options.top_name);
  const bool binary = n.task == TaskKind::kBinaryLogistic;
  const int latency = n.latency_cycles();
  const std::size_t K = n.keys.size();
  const int W = n.w_feature;
  const int feature_bits = std::max(1, n.num_features * W);
  const std::size_t per_group = n.trees_per_group();

  std::ostringstream out;
  out << "// Generated by gbrtl " << kVersion << ". Do not edit.\n";
  out << "//\n";
  out << "// task             : " << (binary ? "binary" : "multiclass (" + std::to_string(n.num_classes) + " classes)")
      << "\n";
  out << "// features         : " << n.num_features << " x " << W << " bits\n";
  out << "// trees            : " << n.trees.size() << " (" << per_group << " per class), w_tree = " << n.w_tree
      << "\n";
  out << "// keys             : " << K << "\n";
  out << "// leaf scale       : " << format_double(n.scale) << "\n";
  out << "// biases           :";
  for (auto b : n.biases) out << " " << b;
  out << "\n";
  out << "// pipeline         : " << n.pipeline.to_string() << ", latency " << latency
      << " cycle(s), initiation interval 1\n";
  if (binary) {
    out << "// decision         : y = (sum of tree outputs >= " << n.threshold << ")"
        << (n.constant_classifier ? ", constant classifier" : "") << "\n";
  }
  out << "//\n";
  out << "// Ports: features[i*" << W << " +: " << W << "] is feature i.";
  if (binary) {
    out << " y is the predicted class.\n";
  } else {
    out << " scores[n*" << n.sum_width << " +: " << n.sum_width << "] is the\n"
        << "// zero-extended sum of class n; the predicted class is the argmax.\n";
  }
  if (latency > 0) {
    out << "// Registers load on the rising edge of clk. There is no reset; outputs are\n"
        << "// valid " << latency << " cycle(s) after the first input is applied.\n";
  } else {
    out << "// Fully combinational.\n";
  }
  out << "\n";

  for (const auto& t : n.trees) emit_tree_module(out, t, K);

  out << "module " << options.top_name << " (\n";
  if (latency > 0) out << "    input  wire " << bus(1) << "clk,\n";
  out << "    input  wire " << bus(feature_bits) << "features,\n";
  if (binary) {
    out << "    output wire " << bus(1) << "y\n";
  } else {
    out << "    output wire " << bus(n.num_classes * n.sum_width) << "scores\n";
  }
  out << ");\n";

  // Key generator.
  if (K > 0) {
    out << "\n    // Key generator\n";
    out << "    wire " << range(static_cast<int>(K)) << " key_c;\n";
    for (const auto& k : n.keys) {
      const int lo = k.feature * W;
      out << "    assign key_c[" << k.id << "] = features[" << lo + W - 1 << ":" << lo << "] < " << lit(W, k.threshold)
          << ";\n";
    }
    if (n.pipeline.p0) {
      out << "    reg  " << range(static_cast<int>(K)) << " key_q;\n";
      out << "    always @(posedge clk) key_q <= key_c;\n";
    }
    out << "    wire " << range(static_cast<int>(K)) << " key = " << (n.pipeline.p0 ? "key_q" : "key_c") << ";\n";
  }

  // Trees.
  out << "\n    // Decision trees\n";
  for (const auto& t : n.trees) {
    const std::string name = tree_module_name(t);
    out << "    wire " << range(t.out_width) << " " << name << "_c;\n";
    out << "    " << name << " u_" << name << " (";
    if (K > 0) out << ".k(key), ";
    out << ".qf(" << name << "_c));\n";
  }
  if (n.pipeline.p1) {
    for (const auto& t : n.trees)
      out << "    reg  " << range(t.out_width) << " " << tree_module_name(t) << "_q;\n";
    out << "    always @(posedge clk) begin\n";
    for (const auto& t : n.trees) {
      const std::string name = tree_module_name(t);
      out << "        " << name << "_q <= " << name << "_c;\n";
    }
    out << "    end\n";
  }

  // Adder trees.
  std::vector<std::string> roots;
  for (std::size_t g = 0; g < n.adders.size(); ++g) {
    const AdderTree& at = n.adders[g];
    out << "\n    // Adder tree" << (binary ? "" : ", class " + std::to_string(g)) << "\n";
    auto consumer_name = [&](std::size_t level, std::size_t i) {
      const AdderNode& node = at.levels[level][i];
      return at.registered_after(static_cast<int>(level)) && !node.constant ? TopNames::reg(g, level, i)
                                                                             : TopNames::comb(g, level, i);
    };
    for (std::size_t level = 0; level < at.levels.size(); ++level) {
      const auto& nodes = at.levels[level];
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const AdderNode& node = nodes[i];
        out << "    wire " << range(node.width) << " " << TopNames::comb(g, level, i) << " = ";
        if (level == 0) {
          if (i < at.tree_operands) {
            const std::string tn = tree_module_name(n.trees[g * per_group + i]);
            out << tn << (n.pipeline.p1 ? "_q" : "_c");
          } else {
            out << lit(node.width, node.constant_value);
          }
        } else {
          out << consumer_name(level - 1, static_cast<std::size_t>(node.left));
          if (node.right >= 0) out << " + " << consumer_name(level - 1, static_cast<std::size_t>(node.right));
        }
        out << ";\n";
      }
      if (at.registered_after(static_cast<int>(level))) {
        bool any = false;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          if (nodes[i].constant) continue;
          out << "    reg  " << range(nodes[i].width) << " " << TopNames::reg(g, level, i) << ";\n";
          any = true;
        }
        if (any) {
          out << "    always @(posedge clk) begin\n";
          for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].constant) continue;
            out << "        " << TopNames::reg(g, level, i) << " <= " << TopNames::comb(g, level, i) << ";\n";
          }
          out << "    end\n";
        }
      }
    }
    roots.push_back(TopNames::comb(g, at.levels.size() - 1, 0));
  }

  // Outputs.
  out << "\n    // Outputs\n";
  if (binary) {
    if (n.threshold <= 0) {
      out << "    assign y = 1'b1;\n";
    } else {
      const int rw = n.adders.front().root().width;
      const int cw = std::max(rw, bits_for(static_cast<std::uint64_t>(n.threshold)));
      out << "    assign y = " << roots.front() << " >= " << lit(cw, static_cast<std::uint64_t>(n.threshold)) << ";\n";
    }
  } else {
    const int ws = n.sum_width;
    for (std::size_t g = 0; g < n.adders.size(); ++g) {
      const int rw = n.adders[g].root().width;
      const std::size_t lo = g * static_cast<std::size_t>(ws);
      out << "    assign scores[" << lo + static_cast<std::size_t>(ws) - 1 << ":" << lo << "] = ";
      if (rw < ws) {
        out << "{{" << ws - rw << "{1'b0}}, " << roots[g] << "};\n";
      } else {
        out << roots[g] << ";\n";
      }
    }
  }
  out << "endmodule\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Testbench

std::string format_vectors(const Netlist& n, std::span<const std::vector<QValue>> inputs) {
  std::ostringstream out;
  for (const auto& x : inputs) {
    NetlistOutput o = interpret_netlist(n, x);
    for (std::size_t i = 0; i < x.size(); ++i) out << (i ? " " : "") << x[i];
    if (n.task == TaskKind::kBinaryLogistic) {
      out << " " << o.y;
    } else {
      for (auto s : o.sums) out << " " << s;
    }
    out << "\n";
  }
  return out.str();
}

std::size_t count_vectors(const Netlist& n, const std::string& text) {
  const std::size_t outputs = n.task == TaskKind::kBinaryLogistic ? 1 : static_cast<std::size_t>(n.num_classes);
  const std::size_t columns = static_cast<std::size_t>(n.num_features) + outputs;
  std::istringstream in(text);
  std::string line;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> cells;
    std::string cell;
    while (ls >> cell) cells.push_back(cell);
    if (cells.empty()) continue;
    if (cells.size() != columns) {
      fail(ErrorKind::kData, "vector line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                                 " values, found " + std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[i].size() || cells[i].front() == '-') {
        fail(ErrorKind::kData, "vector line " + std::to_string(line_no) + ": '" + cells[i] + "' is not a decimal integer");
      }
      if (i < static_cast<std::size_t>(n.num_features) && v > n.max_feature_code()) {
        fail(ErrorKind::kData, "vector line " + std::to_string(line_no) + ": feature value out of range");
      }
    }
    ++rows;
  }
  return rows;
}

std::string emit_testbench(const Netlist& n, const EmitOptions& options) {
  validate_top_name(options.top_name);
  if (options.vector_file.empty()) fail(ErrorKind::kConfig, "testbench needs a vector file");
  const std::size_t rows = count_vectors(n, read_text_file(options.vector_file));
  if (rows == 0) fail(ErrorKind::kData, "vector file '" + options.vector_file + "' has no vectors");

  const bool binary = n.task == TaskKind::kBinaryLogistic;
  const int latency = n.latency_cycles();
  const int F = n.num_features;
  const int W = n.w_feature;
  const int outputs = binary ? 1 : n.num_classes;
  const int ws = binary ? 1 : n.sum_width;
  const std::string vector_name = std::filesystem::path(options.vector_file).filename().string();

  std::ostringstream out;
  out << "// Generated by gbrtl " << kVersion << ". Self-checking testbench for " << options.top_name << ".\n";
  out << "// Applies one vector per cycle and checks outputs " << latency << " cycle(s) later.\n";
  out << "// Override the stimulus with +vectors=<path>.\n";
  out << "`timescale 1ns/1ps\n\n";
  out << "module " << options.top_name << "_tb;\n";
  out << "    localparam integer NUM_VECTORS  = " << rows << ";\n";
  out << "    localparam integer NUM_FEATURES = " << F << ";\n";
  out << "    localparam integer W_FEATURE    = " << W << ";\n";
  out << "    localparam integer NUM_OUTPUTS  = " << outputs << ";\n";
  out << "    localparam integer W_OUT        = " << ws << ";\n";
  out << "    localparam integer LATENCY      = " << latency << ";\n\n";
  out << "    reg clk = 1'b0;\n";
  out << "    reg  [" << std::max(1, F * W) - 1 << ":0] features = 0;\n";
  if (binary) {
    out << "    wire y;\n";
  } else {
    out << "    wire [" << n.num_classes * ws - 1 << ":0] scores;\n";
  }
  out << "\n    " << options.top_name << " dut (";
  if (latency > 0) out << ".clk(clk), ";
  out << ".features(features), " << (binary ? ".y(y)" : ".scores(scores)") << ");\n\n";

  out << "    reg [W_FEATURE-1:0] in_mem  [0:NUM_VECTORS*NUM_FEATURES-1];\n";
  out << "    reg [63:0]          exp_mem [0:NUM_VECTORS*NUM_OUTPUTS-1];\n";
  out << "    reg [63:0]          value;\n";
  out << "    reg [63:0]          got;\n";
  out << "    reg [8*1024-1:0]    path;\n";
  out << "    integer fd, rc, t, j, v, pass_count, fail_count, bad;\n\n";

  out << "    initial begin\n";
  out << "        if (!$value$plusargs(\"vectors=%s\", path)) path = \"" << vector_name << "\";\n";
  out << "        fd = $fopen(path, \"r\");\n";
  out << "        if (fd == 0) begin\n";
  out << "            $display(\"ERROR cannot open vector file\");\n";
  out << "            $finish;\n";
  out << "        end\n";
  out << "        for (v = 0; v < NUM_VECTORS; v = v + 1) begin\n";
  out << "            for (j = 0; j < NUM_FEATURES; j = j + 1) begin\n";
  out << "                rc = $fscanf(fd, \"%d\", value);\n";
  out << "                in_mem[v*NUM_FEATURES + j] = value[W_FEATURE-1:0];\n";
  out << "            end\n";
  out << "            for (j = 0; j < NUM_OUTPUTS; j = j + 1) begin\n";
  out << "                rc = $fscanf(fd, \"%d\", value);\n";
  out << "                exp_mem[v*NUM_OUTPUTS + j] = value;\n";
  out << "            end\n";
  out << "        end\n";
  out << "        $fclose(fd);\n\n";
  out << "        pass_count = 0;\n";
  out << "        fail_count = 0;\n";
  out << "        for (t = 0; t < NUM_VECTORS + LATENCY; t = t + 1) begin\n";
  out << "            if (t < NUM_VECTORS)\n";
  out << "                for (j = 0; j < NUM_FEATURES; j = j + 1)\n";
  out << "                    features[j*W_FEATURE +: W_FEATURE] = in_mem[t*NUM_FEATURES + j];\n";
  out << "            #1;\n";
  out << "            if (t >= LATENCY) begin\n";
  out << "                bad = 0;\n";
  out << "                for (j = 0; j < NUM_OUTPUTS; j = j + 1) begin\n";
  if (binary) {
    out << "                    got = {63'd0, y};\n";
  } else {
    out << "                    got = 64'd0;\n";
    out << "                    got[W_OUT-1:0] = scores[j*W_OUT +: W_OUT];\n";
  }
  out << "                    if (got !== exp_mem[(t-LATENCY)*NUM_OUTPUTS + j]) bad = 1;\n";
  out << "                end\n";
  out << "                if (bad) begin\n";
  out << "                    fail_count = fail_count + 1;\n";
  out << "                    if (fail_count <= 10) $display(\"FAIL vector %0d\", t - LATENCY);\n";
  out << "                end else begin\n";
  out << "                    pass_count = pass_count + 1;\n";
  out << "                end\n";
  out << "            end\n";
  out << "            #4 clk = 1'b1;\n";
  out << "            #5 clk = 1'b0;\n";
  out << "        end\n";
  out << "        $display(\"PASS %0d FAIL %0d\", pass_count, fail_count);\n";
  out << "        $finish;\n";
  out << "    end\n";
  out << "endmodule\n";
  return out.str();
}

std::map<std::string, std::string> emit(const Netlist& n, const EmitOptions& options) {
  std::map<std::string, std::string> files;
  files[options.top_name + ".v"] = emit_verilog(n, options);
  if (options.emit_testbench) files[options.top_name + "_tb.v"] = emit_testbench(n, options);
  return files;
}

}  // namespace gbrtl
