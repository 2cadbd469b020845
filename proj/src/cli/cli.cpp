// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/cli/cli.hpp"

#include "sss/core/errors.hpp"
#include "sss/net/counting.hpp"
#include "sss/net/prune.hpp"
#include "sss/optim/verify.hpp"
#include "sss/train/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace sss::cli {

namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw ValidationError("write failed for '" + path.string() + "'");
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::string resume;
  std::int64_t stop_after = -1;
};

void write_logs(const fs::path& dir, const train::Trainer& t) {
  train::save_checkpoint(t.checkpoint(), (dir / "checkpoint.ckpt").string());
  write_text(dir / "metrics.csv", train::metrics_csv(t.metrics()));
  write_text(dir / "objective.csv", train::objective_csv(t.metrics()));
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  if (a.config.empty() == a.resume.empty()) {
    throw ValidationError("train: pass exactly one of --config or --resume");
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::optional<train::Trainer> t;
  if (!a.resume.empty()) {
    const train::Checkpoint ckpt = train::load_checkpoint(a.resume);
    if (ckpt.kind != "train") throw ValidationError("train: '" + a.resume + "' is not a training checkpoint");
    auto [tr, te] = train::load_datasets(train::parse_train_config(ckpt.config_text).dataset);
    t.emplace(train::Trainer::resume(ckpt, std::move(tr), std::move(te)));
  } else {
    const train::TrainConfig config = train::load_train_config(a.config);
    const net::NetworkSpec spec = net::load_spec(config.spec);
    auto [tr, te] = train::load_datasets(config.dataset);
    t.emplace(config, spec, std::move(tr), std::move(te));
  }
  write_text(dir / "config.yaml", train::write_train_config(t->config()));
  t->run(
      [&](const train::Trainer& tr, const train::EpochRecord& r) {
        write_logs(dir, tr);
        out << "epoch " << r.epoch << " loss " << train::format_double(r.train_loss) << " test_error "
            << train::format_double(r.test_error) << " nonzero_lambda " << r.nonzero_lambda
            << " flops_if_pruned " << r.flops_if_pruned << "\n";
      },
      a.stop_after);
  write_logs(dir, *t);
  return kExitOk;
}

int cmd_prune(const std::string& ckpt_path, const std::string& out_path, std::ostream& out) {
  const train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
  const net::Network net = train::restore_network(ckpt);
  const Eigen::VectorXd lambda = net.lambda();
  net::PruneResult r = net::prune(net, lambda);
  train::save_checkpoint(train::model_checkpoint(r.network), out_path);
  write_text(out_path + ".report.csv", r.report.to_csv());
  out << "params " << r.report.before.params << " -> " << r.report.after.params << "\n";
  out << "flops_madd " << r.report.before.flops << " -> " << r.report.after.flops << "\n";
  return kExitOk;
}

int cmd_count(const std::string& spec_path, const std::string& shape, bool stages, std::ostream& out) {
  const net::NetworkSpec spec = net::load_spec(spec_path);
  std::optional<net::ImageShape> input;
  if (!shape.empty()) input = net::parse_image_shape(shape);
  const net::CountBreakdown c = net::count(spec, input);
  out << "params=" << c.total.params << "\n";
  out << "flops_madd=" << c.total.flops << "\n";
  if (stages) {
    for (const auto& s : c.stages) {
      out << "stage " << s.name << " params=" << s.counts.params << " flops_madd=" << s.counts.flops << "\n";
    }
  }
  return kExitOk;
}

int cmd_verify(std::ostream& out) {
  bool ok = true;
  for (const auto& r : optim::verify_optim_suite()) {
    char value[32], tol[32];
    std::snprintf(value, sizeof value, "%.3e", r.value);
    std::snprintf(tol, sizeof tol, "%.1e", r.tolerance);
    out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << value << " (tolerance " << tol << "; " << r.detail
        << ")\n";
    ok = ok && r.pass;
  }
  if (!ok) throw NumericalError("verify-optim: optimizer checks failed");
  return kExitOk;
}

int cmd_report(const std::string& metrics_path, const std::string& out_path, std::ostream& out) {
  const std::string csv = train::error_vs_flops_csv(train::parse_metrics_csv(read_text(metrics_path)));
  if (out_path.empty()) {
    out << csv;
  } else {
    write_text(out_path, csv);
  }
  return kExitOk;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scaling-factor structured pruning: training, pruning and counting for CNNs", "sss"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train weights and scaling factors jointly");
  train->add_option("--config", train_args.config, "Training config (sss-train-v1)");
  train->add_option("--out", train_args.out, "Output directory")->required();
  train->add_option("--resume", train_args.resume, "Continue from a training checkpoint");
  train->add_option("--stop-after", train_args.stop_after, "Stop after this many more epochs");

  std::string prune_ckpt, prune_out;
  auto* prune = app.add_subcommand("prune", "Remove zero-factor structures from a checkpoint");
  prune->add_option("--checkpoint", prune_ckpt, "Training or model checkpoint")->required();
  prune->add_option("--out", prune_out, "Pruned model checkpoint; the report goes to <out>.report.csv")
      ->required();

  std::string count_spec, count_shape;
  bool count_stages = false;
  auto* count = app.add_subcommand("count", "Print parameter and multiply-add counts");
  count->add_option("--spec", count_spec, "Network spec")->required();
  count->add_option("--input-shape", count_shape, "HxWxC, overriding the network spec input");
  count->add_flag("--stages", count_stages, "Also print per-stage counts");

  auto* verify = app.add_subcommand("verify-optim", "Run the optimizer equivalence and LASSO checks");

  std::string report_metrics, report_out;
  auto* report = app.add_subcommand("report", "Error-vs-FLOPs CSV from a metrics log");
  report->add_option("--metrics", report_metrics, "metrics.csv from a training run")->required();
  report->add_option("--out", report_out, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args, out);
    if (*prune) return cmd_prune(prune_ckpt, prune_out, out);
    if (*count) return cmd_count(count_spec, count_shape, count_stages, out);
    if (*verify) return cmd_verify(out);
    if (*report) return cmd_report(report_metrics, report_out, out);
  } catch (const NumericalError& e) {
    err << "error: numerical: " << one_line(e.what()) << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "error: validation: " << one_line(e.what()) << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace sss::cli
