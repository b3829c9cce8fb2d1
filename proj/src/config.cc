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

#include "h2nh/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "h2nh/errors.hpp"

namespace h2nh {

using nlohmann::json;

namespace {

// Reads known keys from one JSON object and rejects everything else.
class StrictReader {
 public:
  StrictReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  StrictReader& get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
    return *this;
  }

  template <typename Fn>
  StrictReader& section(const char* key, Fn&& fn) {
    seen_.insert(key);
    if (j_.contains(key)) fn(StrictReader(j_.at(key), where_ + "." + key));
    return *this;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("unknown config key '" + where_ + "." + item.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json stft_json(const dsp::StftConfig& c) {
  return {{"sample_rate", c.sample_rate}, {"win_samples", c.win_samples},
          {"hop_samples", c.hop_samples}, {"fft_size", c.fft_size},
          {"center", c.center}};
}

json perturb_json(const perturb::PerturbConfig& c) {
  return {{"formant_shift_max", c.formant_shift_max},
          {"pitch_shift_max", c.pitch_shift_max},
          {"pitch_range_max", c.pitch_range_max},
          {"peq_bands", c.peq_bands},
          {"peq_gain_db_range", c.peq_gain_db_range},
          {"seed", c.seed}};
}

json linguistic_json(const linguistic::LinguisticConfig& c) {
  return {{"backend", c.backend}, {"weights_path", c.weights_path},
          {"layer", c.layer},     {"feature_dim", c.feature_dim},
          {"seed", c.seed}};
}

json model_json(const model::ModelConfig& c) {
  const auto& d = c.discriminator;
  return {{"spec_channels", c.spec_channels},
          {"hidden_dim", c.hidden_dim},
          {"latent_dim", c.latent_dim},
          {"style_dim", c.style_dim},
          {"ref_hidden", c.ref_hidden},
          {"ref_kernel", c.ref_kernel},
          {"ref_heads", c.ref_heads},
          {"ref_dropout", c.ref_dropout},
          {"n_mels_ref", c.n_mels_ref},
          {"ssl_dim", c.ssl_dim},
          {"d_ling", c.d_ling},
          {"posterior_layers", c.posterior_layers},
          {"posterior_kernel", c.posterior_kernel},
          {"posterior_dilation", c.posterior_dilation},
          {"energy_kernel", c.energy_kernel},
          {"fusion_kernel", c.fusion_kernel},
          {"flow_layers", c.flow_layers},
          {"flow_wavenet_layers", c.flow_wavenet_layers},
          {"flow_kernel", c.flow_kernel},
          {"flow_mean_only", c.flow_mean_only},
          {"upsample_rates", c.upsample_rates},
          {"decoder_initial_channels", c.decoder_initial_channels},
          {"resblock_kernels", c.resblock_kernels},
          {"resblock_dilations", c.resblock_dilations},
          {"discriminator",
           {{"periods", d.periods},
            {"period_channels", d.period_channels},
            {"fft_sizes", d.fft_sizes},
            {"band_channels", d.band_channels},
            {"bands", d.bands}}},
          {"seed", c.seed}};
}

json train_json(const training::TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"max_steps", c.max_steps},
          {"segment_frames", c.segment_frames},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"lr_decay", c.lr_decay},
          {"t_anneal", c.t_anneal},
          {"kl_annealing", c.kl_annealing},
          {"checkpoint_every", c.checkpoint_every},
          {"log_every", c.log_every},
          {"seed", c.seed}};
}

json fdrl_json(const losses::FdrlConfig& c) {
  return {{"hops", c.hops},           {"window_factor", c.window_factor},
          {"n_mels", c.n_mels},       {"sample_rate", c.sample_rate},
          {"f_min", c.f_min},         {"f_max", c.f_max},
          {"include_linear", c.include_linear}};
}

json without_paths(const RunConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("paths");
  return j;
}

}  // namespace

json to_json(const RunConfig& cfg) {
  return {{"stft", stft_json(cfg.stft)},
          {"n_mels", cfg.n_mels},
          {"mel_f_min", cfg.mel_f_min},
          {"mel_f_max", cfg.mel_f_max},
          {"perturb", perturb_json(cfg.perturb)},
          {"linguistic", linguistic_json(cfg.linguistic)},
          {"model", model_json(cfg.model)},
          {"train", train_json(cfg.train)},
          {"fdrl", fdrl_json(cfg.fdrl)},
          {"weights",
           {{"rec", cfg.weights.rec}, {"fm", cfg.weights.fm}, {"adv", cfg.weights.adv}}},
          {"temperature", cfg.temperature},
          {"paths",
           {{"cache_dir", cfg.paths.cache_dir},
            {"checkpoint_dir", cfg.paths.checkpoint_dir},
            {"metrics_log", cfg.paths.metrics_log}}}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  StrictReader r(j, "config");
  r.section("stft", [&](StrictReader s) {
     s.get("sample_rate", c.stft.sample_rate)
         .get("win_samples", c.stft.win_samples)
         .get("hop_samples", c.stft.hop_samples)
         .get("fft_size", c.stft.fft_size)
         .get("center", c.stft.center)
         .finish();
   })
      .get("n_mels", c.n_mels)
      .get("mel_f_min", c.mel_f_min)
      .get("mel_f_max", c.mel_f_max)
      .section("perturb", [&](StrictReader s) {
        s.get("formant_shift_max", c.perturb.formant_shift_max)
            .get("pitch_shift_max", c.perturb.pitch_shift_max)
            .get("pitch_range_max", c.perturb.pitch_range_max)
            .get("peq_bands", c.perturb.peq_bands)
            .get("peq_gain_db_range", c.perturb.peq_gain_db_range)
            .get("seed", c.perturb.seed)
            .finish();
      })
      .section("linguistic", [&](StrictReader s) {
        s.get("backend", c.linguistic.backend)
            .get("weights_path", c.linguistic.weights_path)
            .get("layer", c.linguistic.layer)
            .get("feature_dim", c.linguistic.feature_dim)
            .get("seed", c.linguistic.seed)
            .finish();
      })
      .section("model", [&](StrictReader s) {
        auto& m = c.model;
        s.get("spec_channels", m.spec_channels)
            .get("hidden_dim", m.hidden_dim)
            .get("latent_dim", m.latent_dim)
            .get("style_dim", m.style_dim)
            .get("ref_hidden", m.ref_hidden)
            .get("ref_kernel", m.ref_kernel)
            .get("ref_heads", m.ref_heads)
            .get("ref_dropout", m.ref_dropout)
            .get("n_mels_ref", m.n_mels_ref)
            .get("ssl_dim", m.ssl_dim)
            .get("d_ling", m.d_ling)
            .get("posterior_layers", m.posterior_layers)
            .get("posterior_kernel", m.posterior_kernel)
            .get("posterior_dilation", m.posterior_dilation)
            .get("energy_kernel", m.energy_kernel)
            .get("fusion_kernel", m.fusion_kernel)
            .get("flow_layers", m.flow_layers)
            .get("flow_wavenet_layers", m.flow_wavenet_layers)
            .get("flow_kernel", m.flow_kernel)
            .get("flow_mean_only", m.flow_mean_only)
            .get("upsample_rates", m.upsample_rates)
            .get("decoder_initial_channels", m.decoder_initial_channels)
            .get("resblock_kernels", m.resblock_kernels)
            .get("resblock_dilations", m.resblock_dilations)
            .section("discriminator", [&](StrictReader d) {
              d.get("periods", m.discriminator.periods)
                  .get("period_channels", m.discriminator.period_channels)
                  .get("fft_sizes", m.discriminator.fft_sizes)
                  .get("band_channels", m.discriminator.band_channels)
                  .get("bands", m.discriminator.bands)
                  .finish();
            })
            .get("seed", m.seed)
            .finish();
      })
      .section("train", [&](StrictReader s) {
        auto& t = c.train;
        s.get("batch_size", t.batch_size)
            .get("max_steps", t.max_steps)
            .get("segment_frames", t.segment_frames)
            .get("lr", t.lr)
            .get("weight_decay", t.weight_decay)
            .get("beta1", t.beta1)
            .get("beta2", t.beta2)
            .get("lr_decay", t.lr_decay)
            .get("t_anneal", t.t_anneal)
            .get("kl_annealing", t.kl_annealing)
            .get("checkpoint_every", t.checkpoint_every)
            .get("log_every", t.log_every)
            .get("seed", t.seed)
            .finish();
      })
      .section("fdrl", [&](StrictReader s) {
        s.get("hops", c.fdrl.hops)
            .get("window_factor", c.fdrl.window_factor)
            .get("n_mels", c.fdrl.n_mels)
            .get("sample_rate", c.fdrl.sample_rate)
            .get("f_min", c.fdrl.f_min)
            .get("f_max", c.fdrl.f_max)
            .get("include_linear", c.fdrl.include_linear)
            .finish();
      })
      .section("weights", [&](StrictReader s) {
        s.get("rec", c.weights.rec)
            .get("fm", c.weights.fm)
            .get("adv", c.weights.adv)
            .finish();
      })
      .get("temperature", c.temperature)
      .section("paths", [&](StrictReader s) {
        s.get("cache_dir", c.paths.cache_dir)
            .get("checkpoint_dir", c.paths.checkpoint_dir)
            .get("metrics_log", c.paths.metrics_log)
            .finish();
      })
      .finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void RunConfig::validate() const {
  stft.validate();
  model.validate();
  if (stft.n_bins() != model.spec_channels)
    throw ConfigError("model.spec_channels must equal fft_size / 2 + 1 (" +
                      std::to_string(stft.n_bins()) + ")");
  if (stft.hop_samples != model.hop_samples())
    throw ConfigError("stft.hop_samples must equal the product of the decoder "
                      "upsample rates (" +
                      std::to_string(model.hop_samples()) + ")");
  if (n_mels != model.n_mels_ref)
    throw ConfigError("n_mels must equal model.n_mels_ref");
  if (!(0.0 <= mel_f_min && mel_f_min < mel_f_max &&
        mel_f_max <= stft.sample_rate / 2.0))
    throw ConfigError("mel range must satisfy 0 <= f_min < f_max <= sr / 2");
  perturb.validate();
  if (linguistic.backend == "stub" && linguistic.feature_dim != model.ssl_dim)
    throw ConfigError("linguistic.feature_dim must equal model.ssl_dim");
  train.validate();
  fdrl.validate();
  if (fdrl.sample_rate != stft.sample_rate)
    throw ConfigError("fdrl.sample_rate must equal stft.sample_rate");
  weights.validate();
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

features::PipelineConfig RunConfig::pipeline() const {
  return {stft, n_mels, mel_f_min, mel_f_max, perturb};
}

RunConfig RunConfig::tiny() {
  RunConfig c;
  c.model = model::ModelConfig::tiny();
  c.model.ssl_dim = c.linguistic.feature_dim;
  c.train.batch_size = 1;
  c.train.t_anneal = 200;
  c.train.checkpoint_every = 100;
  c.train.log_every = 10;
  c.train.max_steps = 500;
  return c;
}

std::string fnv1a_hex(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& cfg) {
  return fnv1a_hex(without_paths(cfg).dump());
}

std::string feature_hash(const RunConfig& cfg) {
  json j = {{"stft", stft_json(cfg.stft)},
            {"n_mels", cfg.n_mels},
            {"mel_f_min", cfg.mel_f_min},
            {"mel_f_max", cfg.mel_f_max},
            {"perturb", perturb_json(cfg.perturb)},
            {"linguistic", linguistic_json(cfg.linguistic)}};
  return fnv1a_hex(j.dump());
}

ManifestItem parse_manifest_record(const json& record,
                                   const std::filesystem::path& base_dir) {
  if (!record.is_object()) throw FormatError("manifest record must be an object");
  for (const auto& item : record.items()) {
    const auto& k = item.key();
    if (k == "path" || k == "category" || k == "duration_s") continue;
    if (k.find("style") != std::string::npos || k.find("speaker") != std::string::npos)
      throw FormatError("manifest field '" + k +
                        "' is not allowed: training data carries no style or "
                        "speaker labels");
    throw FormatError("unknown manifest field '" + k + "'");
  }
  if (!record.contains("path") || !record["path"].is_string())
    throw FormatError("manifest record needs a string 'path'");
  if (!record.contains("category") || !record["category"].is_string())
    throw FormatError("manifest record needs a string 'category'");
  ManifestItem item;
  item.path = record["path"].get<std::string>();
  if (item.path.is_relative()) item.path = base_dir / item.path;
  const auto cat = parse_category(record["category"].get<std::string>());
  if (!cat)
    throw FormatError("manifest category must be exclamation, designed or animal");
  item.category = *cat;
  if (record.contains("duration_s")) {
    if (!record["duration_s"].is_number() || record["duration_s"].get<double>() < 0.0)
      throw FormatError("manifest duration_s must be a non-negative number");
    item.duration_s = record["duration_s"].get<double>();
  }
  if (!std::filesystem::exists(item.path))
    throw FormatError("manifest path does not exist: " + item.path.string());
  return item;
}

std::vector<ManifestItem> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  std::vector<ManifestItem> items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(parse_manifest_record(json::parse(line), path.parent_path()));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return items;
}

}  // namespace h2nh
