// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "prolora/errors.hpp"

namespace prolora {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) {
    return std::nullopt;
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    return std::nullopt;  // constant series: correlation undefined
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TransferReport build_report(const std::vector<ModuleTransferOutcome>& outcomes,
                            const ModulePairing& pairing, double elapsed_seconds) {
  if (outcomes.empty()) {
    throw EmptyReport("no transfers to report");
  }
  TransferReport report;
  report.threshold = pairing.threshold;
  report.elapsed_seconds = elapsed_seconds;
  report.modules.reserve(outcomes.size());
  for (const ModuleTransferOutcome& o : outcomes) {
    ModuleRecord rec;
    rec.source_module = o.source_module;
    rec.target_module = o.target_module;
    rec.similarity = o.similarity;
    rec.source_norm = o.decomposed.delta_norm;
    rec.source_par_norm = o.decomposed.par_norm;
    rec.source_perp_norm = o.decomposed.perp_norm;
    rec.source_residual_norm = o.decomposed.residual_norm;
    rec.transferred_norm = o.transferred.dense.norm();
    rec.transferred_par_norm = o.transferred.par_component.norm();
    rec.transferred_perp_norm = o.transferred.perp_component.norm();
    rec.recompression_residual = o.recompression_residual;
    rec.mode = to_string(o.transferred.mode);
    report.modules.push_back(std::move(rec));
  }
  std::sort(report.modules.begin(), report.modules.end(),
            [](const ModuleRecord& a, const ModuleRecord& b) {
              return a.source_module < b.source_module;
            });

  std::vector<double> src, dst, src_par, dst_par, src_perp, dst_perp;
  for (const ModuleRecord& rec : report.modules) {
    src.push_back(rec.source_norm);
    dst.push_back(rec.transferred_norm);
    src_par.push_back(rec.source_par_norm);
    dst_par.push_back(rec.transferred_par_norm);
    src_perp.push_back(rec.source_perp_norm);
    dst_perp.push_back(rec.transferred_perp_norm);
  }
  report.correlation_overall = pearson(src, dst);
  report.correlation_subspace = pearson(src_par, dst_par);
  report.correlation_nullspace = pearson(src_perp, dst_perp);
  return report;
}

std::string emit_json(const TransferReport& report) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json root;
  root["schema"] = "report/1";
  root["threshold"] = report.threshold;
  ordered_json corr;
  corr["overall"] = report.correlation_overall ? ordered_json(*report.correlation_overall)
                                               : ordered_json(nullptr);
  corr["subspace"] = report.correlation_subspace
                         ? ordered_json(*report.correlation_subspace)
                         : ordered_json(nullptr);
  corr["nullspace"] = report.correlation_nullspace
                          ? ordered_json(*report.correlation_nullspace)
                          : ordered_json(nullptr);
  root["correlations"] = std::move(corr);
  ordered_json modules = ordered_json::array();
  for (const ModuleRecord& rec : report.modules) {
    ordered_json m;
    m["source_module"] = rec.source_module;
    m["target_module"] = rec.target_module;
    m["similarity_left"] = rec.similarity.left;
    m["similarity_right"] = rec.similarity.right;
    m["similarity_combined"] = rec.similarity.combined;
    m["source_norm"] = rec.source_norm;
    m["source_par_norm"] = rec.source_par_norm;
    m["source_perp_norm"] = rec.source_perp_norm;
    m["source_residual_norm"] = rec.source_residual_norm;
    m["transferred_norm"] = rec.transferred_norm;
    m["transferred_par_norm"] = rec.transferred_par_norm;
    m["transferred_perp_norm"] = rec.transferred_perp_norm;
    m["recompression_residual"] = rec.recompression_residual;
    m["mode"] = rec.mode;
    modules.push_back(std::move(m));
  }
  root["modules"] = std::move(modules);
  return root.dump(2) + "\n";
}

namespace {

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

std::string emit_csv(const TransferReport& report) {
  std::string out =
      "source_module,target_module,similarity_left,similarity_right,"
      "similarity_combined,source_norm,source_par_norm,source_perp_norm,"
      "source_residual_norm,transferred_norm,transferred_par_norm,"
      "transferred_perp_norm,recompression_residual,mode\n";
  for (const ModuleRecord& rec : report.modules) {
    out += rec.source_module + ',' + rec.target_module + ',' +
           fmt(rec.similarity.left) + ',' + fmt(rec.similarity.right) + ',' +
           fmt(rec.similarity.combined) + ',' + fmt(rec.source_norm) + ',' +
           fmt(rec.source_par_norm) + ',' + fmt(rec.source_perp_norm) + ',' +
           fmt(rec.source_residual_norm) + ',' + fmt(rec.transferred_norm) + ',' +
           fmt(rec.transferred_par_norm) + ',' + fmt(rec.transferred_perp_norm) + ',' +
           fmt(rec.recompression_residual) + ',' + rec.mode + '\n';
  }
  return out;
}

}  // namespace prolora
