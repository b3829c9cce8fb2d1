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


#ifndef H2NH_EVALUATION_HPP_
#define H2NH_EVALUATION_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h2nh/dsp.hpp"

namespace h2nh::evaluation {

// Pearson r; nullopt when either sequence has zero variance. Lengths must
// match and be >= 2.
std::optional<double> pcc_energy(std::span<const double> a, std::span<const double> b);
std::optional<double> pcc_energy(const dsp::EnergyContour& a, const dsp::EnergyContour& b);

double rmse_energy(std::span<const double> a, std::span<const double> b);
double rmse_energy(const dsp::EnergyContour& a, const dsp::EnergyContour& b);

// Normalized energy contour on the training STFT grid.
dsp::EnergyContour energy_contour(const AudioClip& clip, const dsp::StftConfig& cfg = {});

// Edit-distance rates; both are 0 for two empty strings.
double character_error_rate(const std::string& reference, const std::string& hypothesis);
double word_error_rate(const std::string& reference, const std::string& hypothesis);

class AsrPlugin {
 public:
  virtual ~AsrPlugin() = default;
  virtual std::string transcribe(const AudioClip& clip) = 0;
};

// POSTs the clip as 16-bit WAV (Content-Type audio/wav) to an http:// URL and
// reads {"text": "..."} from the response.
class HttpAsrPlugin : public AsrPlugin {
 public:
  explicit HttpAsrPlugin(std::string url, int timeout_s = 60);
  std::string transcribe(const AudioClip& clip) override;

 private:
  std::string host_, path_;
  int timeout_s_;
};

// Runs "<command> <wav path>" and takes its trimmed stdout as the transcript.
class CommandAsrPlugin : public AsrPlugin {
 public:
  explicit CommandAsrPlugin(std::string command);
  std::string transcribe(const AudioClip& clip) override;

 private:
  std::string command_;
};

struct EvalPair {
  std::string id;
  AudioClip source;
  AudioClip converted;
  bool linguistic = false;  // scored by ASR only when set
};

struct PairRecord {
  std::string id;
  int64_t frames = 0;
  std::optional<double> pcc_e;
  double rmse_e = 0.0;
  std::optional<double> cer;
  std::optional<double> wer;
};

struct EvalReport {
  std::vector<PairRecord> pairs;
  int64_t count = 0;
  int64_t pcc_count = 0;  // pairs with a defined correlation
  std::optional<double> mean_pcc_e;
  std::optional<double> mean_rmse_e;
  std::optional<double> mean_cer;
  std::optional<double> mean_wer;
  int64_t asr_count = 0;
  std::optional<std::string> asr_error;  // set when the plug-in failed
};

// Contours whose frame counts differ by one (a converted clip of T * hop
// samples analyses to T + 1 frames) are cut to the shorter; larger
// differences raise DimensionError.
EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, AsrPlugin* asr = nullptr,
                          const dsp::StftConfig& cfg = {});

nlohmann::json to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path,
                  const std::string& config_hash = "");

}  // namespace h2nh::evaluation

#endif  // H2NH_EVALUATION_HPP_
