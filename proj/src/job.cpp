// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/job.hpp"

#include <fnmatch.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <set>
#include <thread>

#include "prolora/adapter.hpp"
#include "prolora/report.hpp"
#include "prolora/spectral_cache.hpp"
#include "prolora/synth.hpp"

namespace prolora {

namespace {

using ordered_json = nlohmann::ordered_json;

void parallel_for(std::size_t count, unsigned jobs,
                  const std::function<void(std::size_t)>& fn) {
  unsigned workers = jobs == 0 ? std::thread::hardware_concurrency() : jobs;
  if (workers == 0) {
    workers = 1;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) {
          return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) {
            first_error = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread& t : pool) {
    t.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

struct LoadedModel {
  std::filesystem::path path;
  TensorArchive archive;
  std::vector<ModuleWeight> modules;
  SpectralCache cache;
  std::vector<std::shared_ptr<const SpectralBases>> bases;  // parallel to modules

  const ModuleWeight* find_module(const std::string& id) const {
    for (const ModuleWeight& m : modules) {
      if (m.id == id) {
        return &m;
      }
    }
    return nullptr;
  }
  std::shared_ptr<const SpectralBases> bases_of(const std::string& id) const {
    for (std::size_t i = 0; i < modules.size(); ++i) {
      if (modules[i].id == id) {
        return bases[i];
      }
    }
    return nullptr;
  }
};

LoadedModel load_model(const std::filesystem::path& path, double rel_tol, unsigned jobs) {
  LoadedModel model{path, TensorArchive::load(path), {}, SpectralCache::open(path, rel_tol),
                    {}};
  model.modules = load_modules(model.archive);
  model.bases.resize(model.modules.size());
  parallel_for(model.modules.size(), jobs, [&](std::size_t i) {
    model.bases[i] = model.cache.get_or_compute(
        model.modules[i].id, [&] { return model.modules[i].weight; });
  });
  return model;
}

ScoreMatrix score_from_bases(const LoadedModel& source, const LoadedModel& target,
                             CombineRule rule, unsigned jobs) {
  ScoreMatrix scores;
  for (const ModuleWeight& m : source.modules) {
    scores.source_ids.push_back(m.id);
  }
  for (const ModuleWeight& m : target.modules) {
    scores.target_ids.push_back(m.id);
  }
  scores.cells.assign(source.modules.size(),
                      std::vector<std::optional<SimilarityScore>>(target.modules.size()));
  parallel_for(source.modules.size(), jobs, [&](std::size_t i) {
    const SpectralBases& s = *source.bases[i];
    for (std::size_t j = 0; j < target.modules.size(); ++j) {
      const SpectralBases& t = *target.bases[j];
      if (s.rows != t.rows || s.cols != t.cols || s.rank == 0 || t.rank == 0) {
        continue;
      }
      scores.cells[i][j] = module_similarity(s, t, rule);
    }
  });
  return scores;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << content;
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

std::string fmt_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

ordered_json pairing_to_json(const ScoreMatrix& scores, const ModulePairing& pairing,
                             const JobConfig& config) {
  ordered_json root;
  root["schema"] = "pairing/1";
  root["threshold"] = pairing.threshold;
  root["combine"] = to_string(config.combine);
  root["source_modules"] = scores.source_ids;
  root["target_modules"] = scores.target_ids;
  ordered_json matrix = ordered_json::array();
  for (const auto& row : scores.cells) {
    ordered_json json_row = ordered_json::array();
    for (const auto& cell : row) {
      if (cell) {
        ordered_json s;
        s["left"] = cell->left;
        s["right"] = cell->right;
        s["combined"] = cell->combined;
        json_row.push_back(std::move(s));
      } else {
        json_row.push_back(nullptr);
      }
    }
    matrix.push_back(std::move(json_row));
  }
  root["scores"] = std::move(matrix);
  ordered_json pairs = ordered_json::array();
  for (const ModulePairing::Pair& p : pairing.pairs) {
    ordered_json entry;
    entry["source"] = p.source;
    entry["target"] = p.target;
    entry["left"] = p.score.left;
    entry["right"] = p.score.right;
    entry["combined"] = p.score.combined;
    pairs.push_back(std::move(entry));
  }
  root["pairs"] = std::move(pairs);
  root["unmatched_sources"] = pairing.unmatched_sources;
  return root;
}

// Module paths whose transfer matters for exit-code purposes: the adapter's
// modules when an adapter is given, every source module otherwise.
std::set<std::string> adapter_bearing_modules(const JobConfig& config,
                                              const LoadedModel& source,
                                              std::ostream& diag) {
  std::set<std::string> bearing;
  if (config.adapter.empty()) {
    for (const ModuleWeight& m : source.modules) {
      bearing.insert(m.id);
    }
    return bearing;
  }
  const AdapterSet adapter = load_adapter(config.adapter);
  for (const AdapterEntry& entry : adapter.entries) {
    if (source.find_module(entry.module_path) == nullptr) {
      diag << "warning: adapter module '" << entry.module_path
           << "' does not exist in the source model\n";
    }
    bearing.insert(entry.module_path);
  }
  return bearing;
}

}  // namespace

TransferMode mode_for_module(const JobConfig& config, const std::string& module_path) {
  for (const auto& [glob, mode] : config.overrides) {
    if (::fnmatch(glob.c_str(), module_path.c_str(), 0) == 0) {
      return mode;
    }
  }
  return config.mode;
}

int run_pair(const JobConfig& config, std::ostream& summary, std::ostream& diag) {
  LoadedModel source = load_model(config.source_model, config.rank_tolerance, config.jobs);
  LoadedModel target = load_model(config.target_model, config.rank_tolerance, config.jobs);
  if (source.modules.empty()) {
    throw EmptyModel("source model has no weight modules");
  }
  const ScoreMatrix scores = score_from_bases(source, target, config.combine, config.jobs);
  const ModulePairing pairing = pair_from_scores(scores, config.threshold);

  if (!config.output.empty()) {
    write_text_file(config.output, pairing_to_json(scores, pairing, config).dump(2) + "\n");
  }
  source.cache.save(source.path);
  target.cache.save(target.path);

  const std::set<std::string> bearing = adapter_bearing_modules(config, source, diag);
  std::size_t unmatched_bearing = 0;
  std::set<std::string> matched;
  for (const ModulePairing::Pair& p : pairing.pairs) {
    matched.insert(p.source);
  }
  for (const std::string& id : bearing) {
    if (matched.find(id) == matched.end()) {
      diag << "warning: no target module matched '" << id << "'\n";
      ++unmatched_bearing;
    }
  }
  summary << "paired " << pairing.pairs.size() << "/" << source.modules.size()
          << " modules at threshold " << config.threshold << " -> "
          << config.output.string() << "\n";
  return unmatched_bearing > 0 ? exit_code::kNoMatches : exit_code::kOk;
}

namespace {

struct TransferTask {
  const AdapterEntry* entry = nullptr;
  std::string target_module;
  SimilarityScore similarity;
};

struct TransferResult {
  ModuleTransferOutcome outcome;
  AdapterEntry output_entry;
};

TransferResult transfer_one(const JobConfig& config, const TransferTask& task,
                            const SpectralBases& source_bases,
                            const SpectralBases& target_bases) {
  const AdapterEntry& entry = *task.entry;
  const TransferMode mode = mode_for_module(config, entry.module_path);
  const Matrix delta = entry.dense_delta();

  TransferResult result;
  ModuleTransferOutcome& outcome = result.outcome;
  outcome.source_module = entry.module_path;
  outcome.target_module = task.target_module;
  outcome.similarity = task.similarity;
  outcome.decomposed = decompose_adapter(delta, source_bases);

  if (mode == TransferMode::kFactorwise) {
    auto [up, down] = transfer_factorwise(entry.up, entry.down, source_bases, target_bases,
                                          TransferMode::kFull);
    up *= entry.scale;  // output adapters carry scale 1
    outcome.transferred.dense = up * down;
    const DecomposedDelta target_split =
        decompose_adapter(outcome.transferred.dense, target_bases);
    outcome.transferred.par_component = target_split.par;
    outcome.transferred.perp_component = target_split.perp;
    outcome.transferred.mode = mode;
    outcome.recompression_residual = 0.0;  // rank preserved, no recompression
    result.output_entry = AdapterEntry{task.target_module, std::move(down), std::move(up), 1.0};
    return result;
  }

  if (mode == TransferMode::kCopy || mode == TransferMode::kCopyProjected) {
    outcome.transferred = copy_transfer(delta, mode, target_bases);
  } else {
    outcome.transferred = transfer_adapter(outcome.decomposed, target_bases, mode);
  }
  outcome.transferred.source_module = entry.module_path;
  outcome.transferred.target_module = task.target_module;

  Index rank = config.output_rank.value_or(entry.rank());
  const Index rank_cap = std::min(outcome.transferred.dense.rows(),
                                  outcome.transferred.dense.cols());
  if (!config.output_rank && rank > rank_cap) {
    rank = rank_cap;  // default rank can exceed a small module; an explicit
                      // --rank that does so is an error instead
  }
  TruncatedSvd factors = recompress(outcome.transferred, rank);
  outcome.recompression_residual = factors.residual_fro;
  result.output_entry =
      AdapterEntry{task.target_module, std::move(factors.down), std::move(factors.up), 1.0};
  return result;
}

}  // namespace

int run_transfer(const JobConfig& config, std::ostream& summary, std::ostream& diag) {
  const auto start = std::chrono::steady_clock::now();
  LoadedModel source = load_model(config.source_model, config.rank_tolerance, config.jobs);
  LoadedModel target = load_model(config.target_model, config.rank_tolerance, config.jobs);
  if (source.modules.empty()) {
    throw EmptyModel("source model has no weight modules");
  }
  const AdapterSet adapter = load_adapter(config.adapter);

  const ScoreMatrix scores = score_from_bases(source, target, config.combine, config.jobs);
  const ModulePairing pairing = pair_from_scores(scores, config.threshold);
  std::map<std::string, std::pair<std::string, SimilarityScore>> matched;
  for (const ModulePairing::Pair& p : pairing.pairs) {
    matched[p.source] = {p.target, p.score};
  }

  std::vector<TransferTask> tasks;
  for (const AdapterEntry& entry : adapter.entries) {
    if (source.find_module(entry.module_path) == nullptr) {
      diag << "warning: adapter module '" << entry.module_path
           << "' does not exist in the source model; omitted\n";
      continue;
    }
    const auto it = matched.find(entry.module_path);
    if (it == matched.end()) {
      diag << "warning: no target module matched '" << entry.module_path
           << "'; omitted\n";
      continue;
    }
    tasks.push_back({&entry, it->second.first, it->second.second});
  }
  if (tasks.empty()) {
    diag << "error: no adapter module could be matched to the target model\n";
    return exit_code::kNoMatches;
  }

  std::vector<TransferResult> results(tasks.size());
  parallel_for(tasks.size(), config.jobs, [&](std::size_t i) {
    const auto source_bases = source.bases_of(tasks[i].entry->module_path);
    const auto target_bases = target.bases_of(tasks[i].target_module);
    results[i] = transfer_one(config, tasks[i], *source_bases, *target_bases);
  });

  AdapterSet output;
  std::vector<ModuleTransferOutcome> outcomes;
  outcomes.reserve(results.size());
  for (TransferResult& r : results) {
    output.entries.push_back(std::move(r.output_entry));
    outcomes.push_back(std::move(r.outcome));
  }
  std::sort(output.entries.begin(), output.entries.end(),
            [](const AdapterEntry& a, const AdapterEntry& b) {
              return a.module_path < b.module_path;
            });
  const Index out_rank = output.entries.front().rank();
  output.metadata["format_version"] = "1";
  output.metadata["prolora.mode"] = to_string(config.mode);
  output.metadata["prolora.rank"] = std::to_string(out_rank);
  output.metadata["prolora.alpha"] = fmt_double(static_cast<double>(out_rank));
  output.metadata["prolora.source_hash"] = source.cache.model_hash();
  output.metadata["prolora.threshold"] = fmt_double(config.threshold);
  save_adapter(output, config.output,
               config.half_precision_output ? Dtype::kF16 : Dtype::kF32);

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const TransferReport report = build_report(outcomes, pairing, elapsed);
  if (!config.report.empty()) {
    const bool csv = config.report.extension() == ".csv";
    write_text_file(config.report, csv ? emit_csv(report) : emit_json(report));
  }
  source.cache.save(source.path);
  target.cache.save(target.path);

  char timing[32];
  std::snprintf(timing, sizeof(timing), "%.2f", elapsed);
  summary << "transferred " << tasks.size() << "/" << adapter.entries.size()
          << " adapter modules (mode=" << to_string(config.mode) << ", rank=" << out_rank
          << ") in " << timing << "s -> " << config.output.string() << "\n";
  return exit_code::kOk;
}

int run_analyze(const JobConfig& config, std::ostream& summary, std::ostream& diag) {
  LoadedModel source = load_model(config.source_model, config.rank_tolerance, config.jobs);
  const AdapterSet adapter = load_adapter(config.adapter);

  struct Row {
    std::string module;
    DecomposedDelta decomposed;
  };
  std::vector<const AdapterEntry*> entries;
  for (const AdapterEntry& entry : adapter.entries) {
    if (source.find_module(entry.module_path) == nullptr) {
      diag << "warning: adapter module '" << entry.module_path
           << "' does not exist in the source model; omitted\n";
      continue;
    }
    entries.push_back(&entry);
  }
  if (entries.empty()) {
    diag << "error: no adapter module exists in the source model\n";
    return exit_code::kNoMatches;
  }
  std::vector<Row> rows(entries.size());
  parallel_for(entries.size(), config.jobs, [&](std::size_t i) {
    const auto bases = source.bases_of(entries[i]->module_path);
    rows[i] = {entries[i]->module_path,
               decompose_adapter(entries[i]->dense_delta(), *bases)};
  });

  std::string csv = "module,delta_norm,par_norm,perp_norm,residual_norm\n";
  for (const Row& row : rows) {
    csv += row.module + ',' + fmt_double(row.decomposed.delta_norm) + ',' +
           fmt_double(row.decomposed.par_norm) + ',' +
           fmt_double(row.decomposed.perp_norm) + ',' +
           fmt_double(row.decomposed.residual_norm) + '\n';
  }
  if (!config.report.empty()) {
    write_text_file(config.report, csv);
  }
  source.cache.save(source.path);
  summary << "analyzed " << rows.size() << "/" << adapter.entries.size()
          << " adapter modules -> " << config.report.string() << "\n";
  return exit_code::kOk;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

SynthModuleSpec module_spec_from_json(const ordered_json& j) {
  SynthModuleSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.rows = j.at("rows").get<Index>();
    spec.cols = j.at("cols").get<Index>();
    spec.rank_s = j.at("rank_s").get<Index>();
    spec.rank_t = j.at("rank_t").get<Index>();
    if (j.contains("angles")) {
      spec.principal_angles = j.at("angles").get<std::vector<double>>();
    } else if (j.contains("angles_deg")) {
      for (double deg : j.at("angles_deg").get<std::vector<double>>()) {
        spec.principal_angles.push_back(deg * std::numbers::pi / 180.0);
      }
    }
    if (j.contains("singular_values")) {
      spec.singular_value_profile = j.at("singular_values").get<std::vector<double>>();
    } else {
      const Index n = std::max(spec.rank_s, spec.rank_t);
      double value = 10.0;
      for (Index i = 0; i < n; ++i) {
        spec.singular_value_profile.push_back(value);
        value *= 0.9;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("invalid synth module spec: ") + e.what());
  }
  return spec;
}

struct SynthAdapterParams {
  Index rank_par = 0;
  Index rank_perp = 0;
  Index rank_cross = 0;
  double scale = 1.0;
};

// Exactly factored adapter: delta = up * down with the coefficient blocks
// living in the source model's own singular frame.
struct BuiltAdapter {
  Matrix up;
  Matrix down;
  GeneratedAdapter generated;
};

BuiltAdapter build_synth_adapter(const SpectralBases& bases, const SynthAdapterParams& params,
                                 std::uint64_t seed) {
  const Index r = bases.rank;
  const Index mp = bases.rows - r;
  const Index np = bases.cols - r;
  if (params.rank_par > r || params.rank_perp > std::min(mp, np) ||
      params.rank_cross > std::min({r, mp, np})) {
    throw SpecError("adapter coefficient ranks exceed the module geometry");
  }
  Rng rng(seed);
  const Matrix a_par = rng.gaussian_matrix(r, params.rank_par);
  const Matrix b_par = rng.gaussian_matrix(r, params.rank_par);
  const Matrix a_perp = rng.gaussian_matrix(mp, params.rank_perp);
  const Matrix b_perp = rng.gaussian_matrix(np, params.rank_perp);
  const Matrix a_c1 = rng.gaussian_matrix(r, params.rank_cross);
  const Matrix b_c1 = rng.gaussian_matrix(np, params.rank_cross);
  const Matrix a_c2 = rng.gaussian_matrix(mp, params.rank_cross);
  const Matrix b_c2 = rng.gaussian_matrix(r, params.rank_cross);

  AdapterCoeffs coeffs;
  coeffs.par = a_par * b_par.transpose();
  coeffs.perp = a_perp * b_perp.transpose();
  coeffs.cross_par_perp = a_c1 * b_c1.transpose();
  coeffs.cross_perp_par = a_c2 * b_c2.transpose();

  BuiltAdapter built;
  built.generated = generate_adapter(bases, coeffs);

  const Index total = params.rank_par + params.rank_perp + 2 * params.rank_cross;
  built.up.resize(bases.rows, total);
  built.down.resize(total, bases.cols);
  Index col = 0;
  auto add_block = [&](const Matrix& left, const Matrix& right) {
    if (left.cols() == 0) {
      return;
    }
    built.up.middleCols(col, left.cols()) = left;
    built.down.middleRows(col, left.cols()) = right;
    col += left.cols();
  };
  add_block(bases.u_par * a_par, b_par.transpose() * bases.v_par.transpose());
  add_block(bases.u_perp * a_perp, b_perp.transpose() * bases.v_perp.transpose());
  add_block(bases.u_par * a_c1, b_c1.transpose() * bases.v_perp.transpose());
  add_block(bases.u_perp * a_c2, b_c2.transpose() * bases.v_par.transpose());
  return built;
}

}  // namespace

int run_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
              std::ostream& summary, std::ostream& diag) {
  std::ifstream in(spec_path);
  if (!in) {
    throw IoError("cannot open spec " + spec_path.string());
  }
  ordered_json spec_json;
  try {
    spec_json = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("invalid synth spec: ") + e.what());
  }
  if (!spec_json.contains("modules") || !spec_json["modules"].is_array() ||
      spec_json["modules"].empty()) {
    throw SpecError("synth spec needs a non-empty 'modules' array");
  }
  std::uint64_t seed = 0;
  std::optional<SynthAdapterParams> adapter_params;
  try {
    seed = spec_json.value("seed", 0ull);
    if (spec_json.contains("adapter")) {
      const auto& a = spec_json["adapter"];
      SynthAdapterParams params;
      params.rank_par = a.value("rank_par", 0ll);
      params.rank_perp = a.value("rank_perp", 0ll);
      params.rank_cross = a.value("rank_cross", 0ll);
      params.scale = a.value("scale", 1.0);
      if (params.rank_par < 0 || params.rank_perp < 0 || params.rank_cross < 0 ||
          !(params.scale > 0.0)) {
        throw SpecError("adapter ranks must be non-negative and scale positive");
      }
      adapter_params = params;
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("invalid synth spec: ") + e.what());
  }

  std::filesystem::create_directories(out_dir);
  ArchiveWriter source_writer;
  ArchiveWriter target_writer;
  ArchiveWriter adapter_writer;
  ordered_json truth;
  truth["schema"] = "synth-truth/1";
  truth["seed"] = seed;
  ordered_json truth_modules = ordered_json::array();

  std::size_t index = 0;
  for (const auto& module_json : spec_json["modules"]) {
    const SynthModuleSpec spec = module_spec_from_json(module_json);
    const ModulePairTruth pair = generate_model_pair(spec, mix_seed(seed, 2 * index));
    source_writer.add_matrix(spec.name + ".weight", Dtype::kF64, pair.w_s);
    target_writer.add_matrix(spec.name + ".weight", Dtype::kF64, pair.w_t);

    ordered_json m;
    m["name"] = spec.name;
    m["rows"] = spec.rows;
    m["cols"] = spec.cols;
    m["rank_s"] = spec.rank_s;
    m["rank_t"] = spec.rank_t;
    m["expected_similarity"] = pair.expected_similarity;
    if (adapter_params) {
      const BuiltAdapter built =
          build_synth_adapter(pair.source_bases, *adapter_params, mix_seed(seed, 2 * index + 1));
      adapter_writer.add_matrix(spec.name + ".lora_up.weight", Dtype::kF64, built.up);
      adapter_writer.add_matrix(spec.name + ".lora_down.weight", Dtype::kF64, built.down);
      if (adapter_params->scale != 1.0) {
        const double alpha = adapter_params->scale * static_cast<double>(built.up.cols());
        adapter_writer.add(spec.name + ".alpha", Dtype::kF64, {}, &alpha, 1);
      }
      ordered_json a;
      a["rank"] = built.up.cols();
      a["scale"] = adapter_params->scale;
      a["delta_norm"] = adapter_params->scale * built.generated.expected.delta_norm;
      a["par_norm"] = adapter_params->scale * built.generated.expected.par_norm;
      a["perp_norm"] = adapter_params->scale * built.generated.expected.perp_norm;
      a["residual_norm"] = adapter_params->scale * built.generated.expected.residual_norm;
      m["adapter"] = std::move(a);
    }
    truth_modules.push_back(std::move(m));
    ++index;
  }
  truth["modules"] = std::move(truth_modules);

  source_writer.write(out_dir / "source_model.safetensors");
  target_writer.write(out_dir / "target_model.safetensors");
  if (adapter_params) {
    adapter_writer.set_metadata("format_version", "1");
    adapter_writer.write(out_dir / "adapter.safetensors");
  }
  write_text_file(out_dir / "truth.json", truth.dump(2) + "\n");

  (void)diag;
  summary << "generated " << index << " module pair(s) -> " << out_dir.string() << "\n";
  return exit_code::kOk;
}

}  // namespace prolora
