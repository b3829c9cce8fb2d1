// Copyright (c) 2026 The h2nh-vc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef H2NH_CONFIG_HPP_
#define H2NH_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h2nh/dsp.hpp"
#include "h2nh/features.hpp"
#include "h2nh/linguistic.hpp"
#include "h2nh/losses.hpp"
#include "h2nh/model.hpp"
#include "h2nh/perturbation.hpp"
#include "h2nh/train_config.hpp"

namespace h2nh {

// Process exit codes of the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kData = 3,
  kModelState = 4,
};

struct PathsConfig {
  std::string cache_dir = "cache";
  std::string checkpoint_dir = "checkpoints";
  std::string metrics_log = "metrics.jsonl";

  bool operator==(const PathsConfig&) const = default;
};

struct RunConfig {
  dsp::StftConfig stft;
  int n_mels = 128;
  double mel_f_min = 0.0;
  double mel_f_max = kSampleRate / 2.0;
  perturb::PerturbConfig perturb;
  linguistic::LinguisticConfig linguistic;
  model::ModelConfig model;
  training::TrainConfig train;
  losses::FdrlConfig fdrl;
  losses::LossWeights weights;
  double temperature = 0.667;
  PathsConfig paths;

  // Checks every section and the cross-section shape agreements.
  void validate() const;
  features::PipelineConfig pipeline() const;

  // Desk-scale preset: tiny model, batch 1, short anneal.
  static RunConfig tiny();
};

nlohmann::json to_json(const RunConfig& cfg);
// Rejects unknown keys at every level; missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// 64-bit FNV-1a of the canonical JSON, as 16 hex digits. config_hash covers
// everything but paths; feature_hash only the sections that change cached
// features.
std::string config_hash(const RunConfig& cfg);
std::string feature_hash(const RunConfig& cfg);
std::string fnv1a_hex(std::string_view text);

// One manifest record. There is deliberately no style or speaker field.
struct ManifestItem {
  std::filesystem::path path;
  ClipCategory category = ClipCategory::kExclamation;
  double duration_s = 0.0;
};

// Newline-delimited JSON records {path, category, duration_s}. Relative
// paths resolve against the manifest directory; every path must exist.
std::vector<ManifestItem> load_manifest(const std::filesystem::path& path);
ManifestItem parse_manifest_record(const nlohmann::json& record,
                                   const std::filesystem::path& base_dir);

}  // namespace h2nh

#endif  // H2NH_CONFIG_HPP_
