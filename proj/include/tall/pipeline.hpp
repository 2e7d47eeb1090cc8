#pragma once

#include <filesystem>
#include <string>

#include "tall/config.hpp"

namespace tall {

// Artifact layout under cfg.out_dir:
//   manifest/                     split manifest (prepare)
//   <preset>/config.txt           expanded config the variant ran with
//   <preset>/checkpoint/          best-validation model (train)
//   <preset>/history.csv          per-epoch training record (train)
//   <preset>/weights.csv          per-epoch per-user weights (train)
//   <preset>/report.{csv,json}    subgroup NDCG report (evaluate)
//   report.csv                    combined variant table (report)
std::filesystem::path manifest_dir(const RunConfig& cfg);
std::filesystem::path variant_dir(const RunConfig& cfg);

void cmd_prepare(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
// baseline_report: path to another variant's report.json ("" for none).
void cmd_evaluate(const RunConfig& cfg, const std::string& baseline_report);
// baseline_variant: variant name whose row anchors the delta rows ("" for none).
void cmd_report(const RunConfig& cfg, const std::string& baseline_variant);

}  // namespace tall
