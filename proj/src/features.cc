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

#include "h2nh/features.hpp"

#include <cstring>
#include <fstream>

#include "h2nh/errors.hpp"

namespace h2nh::features {

namespace {

constexpr char kMagic[4] = {'H', '2', 'N', 'F'};
constexpr const char* kArrayNames[] = {"wave", "x_linear", "mel", "energy", "ling"};

torch::Tensor to_frame_tensor(const dsp::EnergyContour& e) {
  return torch::tensor(e.values, torch::kFloat64).to(torch::kFloat32);
}

torch::Tensor* array_slot(ClipFeatures& f, std::string_view name) {
  if (name == "wave") return &f.wave;
  if (name == "x_linear") return &f.x_linear;
  if (name == "mel") return &f.mel;
  if (name == "energy") return &f.energy;
  if (name == "ling") return &f.ling;
  return nullptr;
}

}  // namespace

FeaturePipeline::FeaturePipeline(
    PipelineConfig cfg, std::shared_ptr<const linguistic::SslBackend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)) {
  if (!backend_) throw ConfigError("feature pipeline needs an SSL backend");
  cfg_.stft.validate();
  cfg_.perturb.validate();
  filterbank_ = dsp::mel_filterbank(cfg_.stft, cfg_.n_mels, cfg_.mel_f_min,
                                    cfg_.mel_f_max);
}

AudioClip FeaturePipeline::ingest(const AudioClip& clip) const {
  if (clip.empty()) throw DomainError("empty clip");
  return dsp::resample(clip, cfg_.stft.sample_rate);
}

dsp::LinearSpectrogram FeaturePipeline::linear(const AudioClip& clip) const {
  return dsp::stft(clip, cfg_.stft);
}

dsp::MelSpectrogram FeaturePipeline::reference_mel(
    const dsp::LinearSpectrogram& linear) const {
  return dsp::mel_spectrogram(linear, filterbank_, /*log_scale=*/true);
}

dsp::EnergyContour FeaturePipeline::energy(
    const dsp::LinearSpectrogram& linear) const {
  return dsp::normalize_energy(dsp::frame_energy(linear));
}

torch::Tensor FeaturePipeline::linguistic(const AudioClip& clip,
                                          int64_t frames) const {
  auto clip16k = dsp::resample(clip, linguistic::kSslSampleRate);
  auto feats = linguistic::extract_features(clip16k, *backend_);
  return linguistic::retime_to_hop(feats, frames);
}

ClipFeatures FeaturePipeline::build(const AudioClip& clip,
                                    const AudioClip& content) const {
  ClipFeatures f;
  auto lin = linear(clip);
  const int64_t frames = lin.num_frames();
  f.x_linear = lin.frames;
  f.mel = reference_mel(lin).frames;
  f.energy = to_frame_tensor(energy(lin));
  f.ling = linguistic(content, frames);
  f.num_samples = clip.size();
  f.wave = torch::zeros({frames * cfg_.stft.hop_samples}, torch::kFloat32);
  f.wave.narrow(0, 0, clip.size()).copy_(clip.tensor());
  f.source_path = clip.source_path.value_or("");
  f.category = clip.category;
  return f;
}

ClipFeatures FeaturePipeline::extract(const AudioClip& raw,
                                      uint64_t perturb_seed) const {
  auto clip = ingest(raw);
  auto cfg = cfg_.perturb;
  cfg.seed = cfg.seed * 0x9E3779B97F4A7C15ULL + perturb_seed;
  return build(clip, perturb::perturb_timbre(clip, cfg));
}

ClipFeatures FeaturePipeline::extract_unperturbed(const AudioClip& raw) const {
  auto clip = ingest(raw);
  return build(clip, clip);
}

void write_cache(const std::filesystem::path& path, const ClipFeatures& f,
                 const std::string& config_hash) {
  nlohmann::json header;
  header["format"] = "h2nh-features";
  header["version"] = kCacheVersion;
  header["config_hash"] = config_hash;
  header["source_path"] = f.source_path;
  header["category"] =
      f.category ? nlohmann::json(std::string(to_string(*f.category))) : nlohmann::json();
  header["frames"] = f.num_frames();
  header["num_samples"] = f.num_samples;
  header["sample_rate"] = kSampleRate;
  std::vector<torch::Tensor> blobs;
  int64_t offset = 0;
  for (const char* name : kArrayNames) {
    auto t = array_slot(const_cast<ClipFeatures&>(f), name)
                 ->to(torch::kFloat32)
                 .contiguous();
    header["arrays"].push_back({{"name", name},
                                {"shape", t.sizes().vec()},
                                {"dtype", "float32"},
                                {"offset", offset}});
    offset += t.numel() * static_cast<int64_t>(sizeof(float));
    blobs.push_back(t);
  }
  const std::string text = header.dump();
  const uint64_t header_len = text.size();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kCacheVersion), sizeof kCacheVersion);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blobs)
      out.write(reinterpret_cast<const char*>(b.data_ptr<float>()),
                static_cast<std::streamsize>(b.numel() * sizeof(float)));
    if (!out) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

nlohmann::json read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[4];
  uint32_t version = 0;
  uint64_t header_len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path.string() + ": not a feature cache file");
  if (version != kCacheVersion)
    throw FormatError(path.string() + ": unsupported cache version " +
                      std::to_string(version));
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError(path.string() + ": truncated header");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
}

}  // namespace

nlohmann::json read_cache_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_header(in, path);
}

CacheEntry read_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  CacheEntry entry;
  entry.header = read_header(in, path);
  const auto data_start = in.tellg();
  auto& f = entry.features;
  try {
    for (const auto& a : entry.header.at("arrays")) {
      auto* slot = array_slot(f, a.at("name").get<std::string>());
      if (slot == nullptr || a.at("dtype") != "float32") continue;
      auto shape = a.at("shape").get<std::vector<int64_t>>();
      auto t = torch::empty(shape, torch::kFloat32);
      in.seekg(data_start + static_cast<std::streamoff>(a.at("offset").get<int64_t>()));
      in.read(reinterpret_cast<char*>(t.data_ptr<float>()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
      if (!in) throw FormatError(path.string() + ": truncated array data");
      *slot = t;
    }
    f.num_samples = entry.header.at("num_samples").get<int64_t>();
    f.source_path = entry.header.at("source_path").get<std::string>();
    if (entry.header.at("category").is_string())
      f.category = parse_category(entry.header["category"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  for (const char* name : kArrayNames)
    if (!array_slot(f, name)->defined())
      throw FormatError(path.string() + ": missing array " + name);
  return entry;
}

}  // namespace h2nh::features
