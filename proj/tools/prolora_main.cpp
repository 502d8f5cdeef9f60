// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: pair / transfer / analyze / synth.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "prolora/errors.hpp"
#include "prolora/job.hpp"

namespace {

struct Options {
  prolora::JobConfig config;
  std::string mode = "full";
  std::string combine = "mean";
  long long rank = -1;
  std::vector<std::string> overrides;
  std::string spec_path;  // synth only
};

void add_common_flags(CLI::App* cmd, Options& opts) {
  cmd->set_config("--config");
  cmd->add_option("--threshold", opts.config.threshold,
                  "Minimum combined similarity for a module pair")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--rank-tol", opts.config.rank_tolerance,
                  "Relative tolerance for the numerical rank cutoff")
      ->capture_default_str();
  cmd->add_option("--combine", opts.combine, "How left/right similarities combine (mean|min)")
      ->check(CLI::IsMember({"mean", "min"}))
      ->capture_default_str();
  cmd->add_option("--jobs", opts.config.jobs,
                  "Worker threads (0 = one per available core)");
}

void finalize(Options& opts) {
  opts.config.mode = prolora::parse_transfer_mode(opts.mode);
  opts.config.combine = prolora::parse_combine_rule(opts.combine);
  if (opts.rank >= 0) {
    opts.config.output_rank = static_cast<prolora::Index>(opts.rank);
  }
  for (const std::string& spec : opts.overrides) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw prolora::Error("override must look like <glob>=<mode>: " + spec);
    }
    opts.config.overrides.emplace_back(
        spec.substr(0, eq), prolora::parse_transfer_mode(spec.substr(eq + 1)));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free transfer of low-rank adapters between checkpoints"};
  app.require_subcommand(1);
  Options opts;

  CLI::App* pair = app.add_subcommand("pair", "Score and pair modules of two checkpoints");
  pair->add_option("--source", opts.config.source_model, "Source checkpoint")->required();
  pair->add_option("--target", opts.config.target_model, "Target checkpoint")->required();
  pair->add_option("--adapter", opts.config.adapter,
                   "Adapter whose modules decide the unmatched exit code");
  pair->add_option("--out", opts.config.output, "Pairing + score matrix JSON")->required();
  add_common_flags(pair, opts);

  CLI::App* transfer = app.add_subcommand("transfer", "Project an adapter onto a target model");
  transfer->add_option("--source", opts.config.source_model, "Source checkpoint")->required();
  transfer->add_option("--target", opts.config.target_model, "Target checkpoint")->required();
  transfer->add_option("--adapter", opts.config.adapter, "Adapter to transfer")->required();
  transfer->add_option("--out", opts.config.output, "Output adapter archive")->required();
  transfer->add_option("--report", opts.config.report, "Per-module report (.json or .csv)");
  transfer->add_option("--mode", opts.mode,
                       "full|subspace_only|nullspace_only|copy|copy_projected|factorwise")
      ->capture_default_str();
  transfer->add_option("--rank", opts.rank, "Output adapter rank (default: input rank)");
  transfer->add_option("--override", opts.overrides,
                       "Per-module mode override, <glob>=<mode>; first match wins");
  transfer->add_flag("--f16", opts.config.half_precision_output,
                     "Store the output adapter in half precision");
  add_common_flags(transfer, opts);

  CLI::App* analyze = app.add_subcommand("analyze", "Decompose an adapter against its model");
  analyze->add_option("--source", opts.config.source_model, "Source checkpoint")->required();
  analyze->add_option("--adapter", opts.config.adapter, "Adapter to decompose")->required();
  analyze->add_option("--report", opts.config.report, "Per-module norms CSV")->required();
  add_common_flags(analyze, opts);

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic checkpoint pair");
  std::string out_dir;
  synth->add_option("--spec", opts.spec_path, "Synth spec JSON")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    finalize(opts);
    if (pair->parsed()) {
      return prolora::run_pair(opts.config, std::cout, std::cerr);
    }
    if (transfer->parsed()) {
      return prolora::run_transfer(opts.config, std::cout, std::cerr);
    }
    if (analyze->parsed()) {
      return prolora::run_analyze(opts.config, std::cout, std::cerr);
    }
    return prolora::run_synth(opts.spec_path, out_dir, std::cout, std::cerr);
  } catch (const prolora::NumericalFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kNumerical;
  } catch (const prolora::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kIo;
  } catch (const prolora::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kIo;
  } catch (const prolora::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kIo;
  } catch (const prolora::KeyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kIo;
  } catch (const prolora::EmptyModel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kIo;
  } catch (const prolora::RankError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return prolora::exit_code::kFailure;
  }
}
