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


#include "h2nh/evaluation.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <glog/logging.h>
#include <httplib.h>

#include "h2nh/errors.hpp"

namespace h2nh::evaluation {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionError("energy contours differ in length (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
}

template <typename Seq>
size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<size_t> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diag = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double rate(size_t errors, size_t ref_len) {
  if (ref_len == 0) return errors == 0 ? 0.0 : 1.0;
  return static_cast<double>(errors) / static_cast<double>(ref_len);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::optional<double> pcc_energy(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  if (a.size() < 2) throw DomainError("correlation needs at least two frames");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> pcc_energy(const dsp::EnergyContour& a, const dsp::EnergyContour& b) {
  return pcc_energy(std::span<const double>(a.values), std::span<const double>(b.values));
}

double rmse_energy(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  if (a.empty()) throw DomainError("empty energy contours");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double rmse_energy(const dsp::EnergyContour& a, const dsp::EnergyContour& b) {
  return rmse_energy(std::span<const double>(a.values), std::span<const double>(b.values));
}

dsp::EnergyContour energy_contour(const AudioClip& clip, const dsp::StftConfig& cfg) {
  auto resampled = dsp::resample(clip, cfg.sample_rate);
  return dsp::normalize_energy(dsp::frame_energy(dsp::stft(resampled, cfg)));
}

double character_error_rate(const std::string& reference, const std::string& hypothesis) {
  return rate(edit_distance(reference, hypothesis), reference.size());
}

double word_error_rate(const std::string& reference, const std::string& hypothesis) {
  const auto r = words(reference), h = words(hypothesis);
  return rate(edit_distance(r, h), r.size());
}

HttpAsrPlugin::HttpAsrPlugin(std::string url, int timeout_s) : timeout_s_(timeout_s) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0)
    throw ConfigError("ASR endpoint must be an http:// URL: " + url);
  const auto slash = url.find('/', scheme.size());
  host_ = slash == std::string::npos ? url : url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

std::string HttpAsrPlugin::transcribe(const AudioClip& clip) {
  httplib::Client client(host_);
  client.set_connection_timeout(timeout_s_);
  client.set_read_timeout(timeout_s_);
  const auto bytes = dsp::encode_wav(clip);
  auto res = client.Post(path_, reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                         "audio/wav");
  if (!res) throw Error("ASR request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error("ASR endpoint returned HTTP " + std::to_string(res->status));
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.contains("text") || !j["text"].is_string())
    throw Error("ASR response lacks a string 'text' field");
  return j["text"].get<std::string>();
}

CommandAsrPlugin::CommandAsrPlugin(std::string command) : command_(std::move(command)) {
  if (command_.empty()) throw ConfigError("empty ASR command");
}

std::string CommandAsrPlugin::transcribe(const AudioClip& clip) {
  char tmpl[] = "/tmp/h2nh_asr_XXXXXX.wav";
  const int fd = mkstemps(tmpl, 4);
  if (fd < 0) throw Error("cannot create a temporary WAV file");
  close(fd);
  const std::filesystem::path wav(tmpl);
  dsp::save_wav(clip, wav);
  const std::string cmd = command_ + " '" + wav.string() + "'";
  std::string out;
  int status = -1;
  if (FILE* pipe = popen(cmd.c_str(), "r")) {
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    status = pclose(pipe);
  }
  std::filesystem::remove(wav);
  if (status != 0) throw Error("ASR command failed: " + command_);
  return trim(out);
}

EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, AsrPlugin* asr,
                          const dsp::StftConfig& cfg) {
  EvalReport report;
  std::vector<double> pccs, rmses, cers, wers;
  for (const auto& p : pairs) {
    auto a = energy_contour(p.source, cfg).values;
    auto b = energy_contour(p.converted, cfg).values;
    const auto diff = static_cast<int64_t>(a.size()) - static_cast<int64_t>(b.size());
    if (std::abs(diff) > 1)
      throw DimensionError("pair '" + p.id + "': frame counts " + std::to_string(a.size()) +
                           " and " + std::to_string(b.size()) + " differ by more than one");
    const size_t n = std::min(a.size(), b.size());
    a.resize(n);
    b.resize(n);
    PairRecord r;
    r.id = p.id;
    r.frames = static_cast<int64_t>(n);
    r.pcc_e = pcc_energy(a, b);
    r.rmse_e = rmse_energy(a, b);
    if (r.pcc_e) pccs.push_back(*r.pcc_e);
    rmses.push_back(r.rmse_e);
    report.pairs.push_back(std::move(r));
  }
  if (asr) {
    try {
      for (size_t i = 0; i < pairs.size(); ++i) {
        if (!pairs[i].linguistic) continue;
        const auto ref = asr->transcribe(pairs[i].source);
        const auto hyp = asr->transcribe(pairs[i].converted);
        report.pairs[i].cer = character_error_rate(ref, hyp);
        report.pairs[i].wer = word_error_rate(ref, hyp);
      }
      for (const auto& r : report.pairs)
        if (r.cer) {
          cers.push_back(*r.cer);
          wers.push_back(*r.wer);
        }
    } catch (const std::exception& e) {
      LOG(WARNING) << "ASR plug-in failed, reporting energy metrics only: " << e.what();
      report.asr_error = e.what();
      for (auto& r : report.pairs) r.cer = r.wer = std::nullopt;
      cers.clear();
      wers.clear();
    }
  }
  report.count = static_cast<int64_t>(report.pairs.size());
  report.pcc_count = static_cast<int64_t>(pccs.size());
  report.asr_count = static_cast<int64_t>(cers.size());
  report.mean_pcc_e = mean_of(pccs);
  report.mean_rmse_e = mean_of(rmses);
  report.mean_cer = mean_of(cers);
  report.mean_wer = mean_of(wers);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& r : report.pairs)
    pairs.push_back({{"id", r.id},
                     {"frames", r.frames},
                     {"pcc_e", opt(r.pcc_e)},
                     {"rmse_e", r.rmse_e},
                     {"cer", opt(r.cer)},
                     {"wer", opt(r.wer)}});
  nlohmann::json agg = {{"count", report.count},
                        {"pcc_count", report.pcc_count},
                        {"asr_count", report.asr_count},
                        {"mean_pcc_e", opt(report.mean_pcc_e)},
                        {"mean_rmse_e", opt(report.mean_rmse_e)},
                        {"mean_cer", opt(report.mean_cer)},
                        {"mean_wer", opt(report.mean_wer)}};
  if (report.asr_error) agg["asr_error"] = *report.asr_error;
  return {{"pairs", pairs}, {"aggregate", agg}};
}

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  const std::string& config_hash) {
  auto j = to_json(report);
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write report " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace h2nh::evaluation
