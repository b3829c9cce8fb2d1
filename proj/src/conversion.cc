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


#include "h2nh/conversion.hpp"

#include <sstream>

#include "h2nh/errors.hpp"
#include "h2nh/training.hpp"

namespace h2nh::conversion {

namespace {

model::Synthesizer snapshot(model::Synthesizer& src, const model::ModelConfig& cfg) {
  std::stringstream buf;
  {
    torch::serialize::OutputArchive ar;
    src->save(ar);
    ar.save_to(buf);
  }
  model::Synthesizer copy(cfg);
  torch::serialize::InputArchive ar;
  ar.load_from(buf);
  copy->load(ar);
  return copy;
}

at::Generator seeded(uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

}  // namespace

VoiceModel::VoiceModel(RunConfig cfg, model::Synthesizer generator,
                       std::shared_ptr<const linguistic::SslBackend> backend)
    : cfg_(std::move(cfg)), generator_(std::move(generator)) {
  if (!backend) backend = linguistic::make_backend(cfg_.linguistic);
  pipeline_ = std::make_shared<features::FeaturePipeline>(cfg_.pipeline(), std::move(backend));
  generator_->eval();
  for (auto& p : generator_->parameters()) p.set_requires_grad(false);
}

VoiceModel VoiceModel::from_state(training::TrainState& state,
                                  std::shared_ptr<const linguistic::SslBackend> backend) {
  const auto& cfg = state.config();
  return VoiceModel(cfg, snapshot(state.generator(), cfg.model), std::move(backend));
}

VoiceModel VoiceModel::from_checkpoint(const std::filesystem::path& path,
                                       std::shared_ptr<const linguistic::SslBackend> backend) {
  auto state = training::load_checkpoint(path);
  return VoiceModel(state.config(), state.generator(), std::move(backend));
}

void VoiceModel::require_ready() const {
  if (!generator_) throw StateError("voice model is not loaded");
}

const features::FeaturePipeline& VoiceModel::pipeline() const {
  require_ready();
  return *pipeline_;
}

model::Synthesizer& VoiceModel::generator() {
  require_ready();
  return generator_;
}

AudioClip VoiceModel::convert(const ConversionRequest& req) const {
  require_ready();
  if (req.source.empty()) throw DomainError("empty source clip");
  if (req.reference.empty()) throw DomainError("empty reference clip");
  if (req.temperature < 0.0) throw DomainError("temperature must be >= 0");
  torch::NoGradGuard no_grad;
  auto g = generator_;

  auto reference = pipeline_->ingest(req.reference);
  auto ref_mel = pipeline_->reference_mel(pipeline_->linear(reference)).frames;
  auto style = g->reference_encode(ref_mel.unsqueeze(0));

  auto src = pipeline_->extract_unperturbed(req.source);
  auto prior = g->prior(src.ling.unsqueeze(0), src.energy.unsqueeze(0), style);
  auto z_prime = prior.sample(req.temperature, seeded(req.seed));
  auto z = g->flow_inverse(z_prime, style);
  auto wave = g->decode(z).reshape({-1});
  return AudioClip::from_tensor(wave, cfg_.stft.sample_rate);
}

AudioClip VoiceModel::reconstruct(const AudioClip& clip, double temperature,
                                  uint64_t seed) const {
  require_ready();
  if (clip.empty()) throw DomainError("empty clip");
  if (temperature < 0.0) throw DomainError("temperature must be >= 0");
  torch::NoGradGuard no_grad;
  auto g = generator_;
  auto x = pipeline_->linear(pipeline_->ingest(clip)).frames;
  auto posterior = g->posterior_encode(x.unsqueeze(0));
  auto z = posterior.sample(temperature, seeded(seed));
  auto wave = g->decode(z).reshape({-1});
  return AudioClip::from_tensor(wave, cfg_.stft.sample_rate);
}

AudioClip convert(const ConversionRequest& req, const VoiceModel& model) {
  return model.convert(req);
}

AudioClip reconstruct(const AudioClip& clip, const VoiceModel& model,
                      double temperature, uint64_t seed) {
  return model.reconstruct(clip, temperature, seed);
}

}  // namespace h2nh::conversion
