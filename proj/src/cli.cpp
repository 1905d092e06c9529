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
#include "gbrtl/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "gbrtl/ensemble.hpp"
#include "gbrtl/error.hpp"
#include "gbrtl/evaluator.hpp"
#include "gbrtl/feature_quantizer.hpp"
#include "gbrtl/io.hpp"
#include "gbrtl/leaf_quantizer.hpp"
#include "gbrtl/netlist.hpp"
#include "gbrtl/verilog.hpp"
#include "gbrtl/version.hpp"

namespace gbrtl {

namespace {

struct Design {
  FeatureQuantizer quantizer;
  QuantizedEnsemble q;
};

Design load_design(const std::string& model_path, const std::string& quantizer_path, int w_tree) {
  Design d;
  d.quantizer = load_quantizer_file(quantizer_path);
  const GbdtEnsemble model = load_model_file(model_path);
  if (model.num_features != d.quantizer.num_features()) {
    fail(ErrorKind::kData, "model has " + std::to_string(model.num_features) + " features, quantizer has " +
                               std::to_string(d.quantizer.num_features()));
  }
  d.q = quantize_leaves(model, d.quantizer.w_feature, w_tree);
  return d;
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::kConfig ? kExitUsage : kExitFailure;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

bool same_output(const NetlistOutput& a, const NetlistOutput& b) { return a == b; }

// Evaluator result expressed in the netlist's output form.
NetlistOutput expected_output(const Netlist& n, const QuantizedPrediction& p) {
  NetlistOutput o;
  if (n.task == TaskKind::kBinaryLogistic) {
    o.y = p.predicted_class;
    o.sums = {static_cast<std::uint64_t>(p.qf[0] - n.biases[0])};
  } else {
    for (std::int64_t v : p.qf) o.sums.push_back(static_cast<std::uint64_t>(v));
  }
  return o;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compiles gradient boosted tree classifiers to pipelined Verilog", "gbrtl"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string data_path, quantizer_path, model_path, out_path, out_dir, vectors_path, label_col = "last";
  std::string pipeline_text = "0,0,0", top = "treelut_top", json_out, netlist_out;
  int w_feature = 0, w_tree = 0;
  bool emit_tb = false;
  std::size_t random_rows = 0;
  std::uint64_t seed = 1;

  const auto label_opt = [&](CLI::App* c) {
    c->add_option("--label-col", label_col, "Label column: last, first or none")
        ->check(CLI::IsMember({"last", "first", "none"}));
  };
  const auto model_opts = [&](CLI::App* c) {
    c->add_option("--model", model_path, "Model JSON (XGBoost or canonical)")->required();
    c->add_option("--quantizer", quantizer_path, "Quantizer JSON")->required();
    c->add_option("--w-tree", w_tree, "Leaf bitwidth")->required();
  };

  auto* fit = app.add_subcommand("fit-quantizer", "Fit min-max feature quantizer on a CSV");
  fit->add_option("--data", data_path)->required();
  fit->add_option("--w-feature", w_feature)->required();
  fit->add_option("--out", out_path)->required();
  label_opt(fit);

  auto* qdata = app.add_subcommand("quantize-data", "Write integer feature codes as CSV");
  qdata->add_option("--quantizer", quantizer_path)->required();
  qdata->add_option("--data", data_path)->required();
  qdata->add_option("--out", out_path)->required();
  label_opt(qdata);

  auto* compile = app.add_subcommand("compile", "Emit Verilog for a model");
  model_opts(compile);
  compile->add_option("--pipeline", pipeline_text, "p0,p1,p2")->required();
  compile->add_option("--out-dir", out_dir)->required();
  compile->add_option("--top", top, "Top module name");
  auto* tb_flag = compile->add_flag("--emit-testbench", emit_tb, "Also emit a self-checking testbench");
  compile->add_option("--vectors", vectors_path, "Vector file for the testbench")->needs(tb_flag);

  auto* vectors = app.add_subcommand("vectors", "Write testbench vectors with expected outputs");
  model_opts(vectors);
  vectors->add_option("--out", out_path)->required();
  auto* vdata = vectors->add_option("--data", data_path, "CSV of raw features");
  vectors->add_option("--random", random_rows, "Number of uniformly random inputs")->excludes(vdata);
  vectors->add_option("--seed", seed);
  label_opt(vectors);

  auto* predict = app.add_subcommand("predict", "Quantized predictions and accuracy");
  model_opts(predict);
  predict->add_option("--data", data_path)->required();
  predict->add_option("--json-out", json_out, "Also write per-sample predictions as JSON");
  label_opt(predict);

  auto* simulate = app.add_subcommand("simulate", "Cross-check evaluator, netlist and pipeline");
  model_opts(simulate);
  simulate->add_option("--pipeline", pipeline_text)->required();
  simulate->add_option("--data", data_path)->required();
  label_opt(simulate);

  auto* report = app.add_subcommand("report", "Netlist statistics as JSON");
  model_opts(report);
  report->add_option("--pipeline", pipeline_text);
  report->add_option("--netlist-out", netlist_out, "Also write the full netlist as JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "gbrtl: error: " << one_line(e.what()) << "\n" << app.help();
    return kExitUsage;
  }

  try {
    const LabelColumn labels = parse_label_column(label_col);

    if (fit->parsed()) {
      const FeatureQuantizer fq = fit_quantizer(read_csv(data_path, labels), w_feature);
      write_text_file(out_path, to_json(fq));
      out << "quantizer: " << fq.num_features() << " features, w_feature " << fq.w_feature << " -> " << out_path
          << "\n";
      return kExitOk;
    }

    if (qdata->parsed()) {
      const FeatureQuantizer fq = load_quantizer_file(quantizer_path);
      const Dataset data = read_csv(data_path, labels);
      const std::vector<QValue> codes = transform_dataset(fq, data);
      std::ostringstream csv;
      for (std::size_t r = 0; r < data.rows; ++r) {
        if (data.labels && labels == LabelColumn::kFirst) csv << (*data.labels)[r] << ",";
        for (std::size_t c = 0; c < data.cols; ++c) csv << (c ? "," : "") << codes[r * data.cols + c];
        if (data.labels && labels == LabelColumn::kLast) csv << "," << (*data.labels)[r];
        csv << "\n";
      }
      write_text_file(out_path, csv.str());
      out << "quantized " << data.rows << " rows -> " << out_path << "\n";
      return kExitOk;
    }

    const Design d = load_design(model_path, quantizer_path, w_tree);
    const PipelineConfig pipeline = PipelineConfig::parse(pipeline_text);

    if (compile->parsed()) {
      const Netlist n = build_netlist(d.q, pipeline);
      EmitOptions options;
      options.top_name = top;
      options.emit_testbench = emit_tb;
      options.vector_file = vectors_path;
      std::map<std::string, std::string> files = emit(n, options);
      if (emit_tb) {
        const std::string name = std::filesystem::path(vectors_path).filename().string();
        if (!files.count(name)) files[name] = read_text_file(vectors_path);
      }
      const std::string stats_json = to_json(stats(n));
      files[top + "_quantized.json"] = to_json(d.q);
      files[top + "_stats.json"] = stats_json;
      write_files_atomically(out_dir, files);
      for (const auto& [name, text] : files) out << "wrote " << (std::filesystem::path(out_dir) / name).string() << "\n";
      out << stats_json;
      return kExitOk;
    }

    if (vectors->parsed()) {
      const Netlist n = build_netlist(d.q, pipeline);
      std::vector<std::vector<QValue>> inputs;
      if (!data_path.empty()) {
        const Dataset data = read_csv(data_path, labels);
        for (std::size_t r = 0; r < data.rows; ++r) inputs.push_back(transform(d.quantizer, data.row(r)));
      } else {
        if (random_rows == 0) fail(ErrorKind::kConfig, "vectors needs --data or --random N");
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<QValue> code(0, n.max_feature_code());
        inputs.assign(random_rows, std::vector<QValue>(static_cast<std::size_t>(n.num_features)));
        for (auto& row : inputs)
          for (auto& v : row) v = code(rng);
      }
      write_text_file(out_path, format_vectors(n, inputs));
      out << "wrote " << inputs.size() << " vectors -> " << out_path << "\n";
      return kExitOk;
    }

    if (predict->parsed()) {
      const PredictionReport rep = evaluate_dataset(d.q, d.quantizer, read_csv(data_path, labels));
      out << format_table(rep);
      if (!json_out.empty()) write_text_file(json_out, to_json(rep));
      return kExitOk;
    }

    if (simulate->parsed()) {
      const Netlist n = build_netlist(d.q, pipeline);
      const Dataset data = read_csv(data_path, labels);
      std::vector<std::vector<QValue>> inputs;
      inputs.reserve(data.rows);
      for (std::size_t r = 0; r < data.rows; ++r) inputs.push_back(transform(d.quantizer, data.row(r)));

      const PredictionReport batch = evaluate_dataset(d.q, d.quantizer, data);
      const auto timeline = simulate_pipelined(n, inputs);
      const auto L = static_cast<std::size_t>(n.latency_cycles());
      const auto G = static_cast<std::size_t>(d.q.num_groups());
      std::size_t agree = 0;
      std::string first_mismatch;
      for (std::size_t t = 0; t < inputs.size(); ++t) {
        const QuantizedPrediction p = predict_quantized(d.q, inputs[t]);
        const NetlistOutput want = expected_output(n, p);
        const NetlistOutput comb = interpret_netlist(n, inputs[t]);
        const auto& piped = timeline[t + L];
        bool ok = same_output(want, comb) && piped && same_output(*piped, comb) && batch.predicted[t] == p.predicted_class;
        for (std::size_t g = 0; ok && g < G; ++g) ok = batch.qf[t * G + g] == p.qf[g];
        if (ok) {
          ++agree;
        } else if (first_mismatch.empty()) {
          first_mismatch = "first mismatch at row " + std::to_string(t + 1);
        }
      }
      const double pct = inputs.empty() ? 100.0 : 100.0 * static_cast<double>(agree) / static_cast<double>(inputs.size());
      char buf[64];
      std::snprintf(buf, sizeof buf, "%g", pct);
      out << "samples " << inputs.size() << ", latency " << L << " cycles\n";
      out << "agreement " << buf << "% (" << agree << "/" << inputs.size() << ")\n";
      if (agree != inputs.size()) {
        err << "gbrtl: error: evaluator, netlist and pipeline disagree: " << first_mismatch << "\n";
        return kExitMismatch;
      }
      return kExitOk;
    }

    if (report->parsed()) {
      const Netlist n = build_netlist(d.q, pipeline);
      if (!netlist_out.empty()) write_text_file(netlist_out, netlist_to_json(n));
      out << to_json(stats(n));
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "gbrtl: error: " << one_line(e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "gbrtl: error: " << one_line(e.what()) << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace gbrtl
