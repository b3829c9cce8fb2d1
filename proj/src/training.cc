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


#include "h2nh/training.hpp"

#include <cmath>
#include <regex>
#include <sstream>

#include <glog/logging.h>
#include <nlohmann/json.hpp>

#include "h2nh/errors.hpp"

namespace h2nh::training {

namespace {

void set_requires_grad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.set_requires_grad(on);
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + ids[i];
  return s;
}

double item(const torch::Tensor& t) { return t.item<double>(); }

c10::IValue read_value(torch::serialize::InputArchive& ar, const char* key) {
  c10::IValue v;
  if (!ar.try_read(key, v)) throw StateError(std::string("checkpoint lacks '") + key + "'");
  return v;
}

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw StateError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw StateError("cannot read checkpoint " + path.string() + ": " +
                     e.what_without_backtrace());
  }
  return ar;
}

CheckpointInfo info_from(torch::serialize::InputArchive& ar) {
  CheckpointInfo info;
  info.format_version = read_value(ar, "format_version").toInt();
  if (info.format_version != kCheckpointVersion)
    throw StateError("checkpoint format version " +
                     std::to_string(info.format_version) + " is not supported (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  info.config_hash = read_value(ar, "config_hash").toStringRef();
  info.step = read_value(ar, "step").toInt();
  try {
    info.config = run_config_from_json(
        nlohmann::json::parse(read_value(ar, "config_json").toStringRef()));
  } catch (const ConfigError& e) {
    throw StateError(std::string("checkpoint config is invalid: ") + e.what());
  }
  return info;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
  if (segment_frames < 1) throw ConfigError("train.segment_frames must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("train betas must lie in [0, 1)");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw ConfigError("train.lr_decay must lie in (0, 1]");
  if (t_anneal < 1) throw ConfigError("train.t_anneal must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
  if (log_every < 1) throw ConfigError("train.log_every must be >= 1");
}

std::optional<Segment> sample_segment(const features::ClipFeatures& clip,
                                      int64_t segment_frames,
                                      std::mt19937_64& rng) {
  if (segment_frames < 1) throw DomainError("segment_frames must be >= 1");
  const int64_t frames = clip.num_frames();
  if (frames < segment_frames) {
    LOG(WARNING) << "skipping " << (clip.source_path.empty() ? "<clip>" : clip.source_path)
                 << ": " << frames << " frames < segment of " << segment_frames;
    return std::nullopt;
  }
  const int64_t hop = clip.wave.size(0) / frames;
  std::uniform_int_distribution<int64_t> pick(0, frames - segment_frames);
  Segment s;
  s.start = pick(rng);
  s.x_linear = clip.x_linear.narrow(1, s.start, segment_frames);
  s.energy = clip.energy.narrow(0, s.start, segment_frames);
  s.ling = clip.ling.narrow(1, s.start, segment_frames);
  s.wave = clip.wave.narrow(0, s.start * hop, segment_frames * hop);
  return s;
}

Batch sample_batch(const std::vector<TrainItem>& items, int batch_size,
                   int64_t segment_frames, std::mt19937_64& rng) {
  if (items.empty()) throw DomainError("no training items");
  std::uniform_int_distribution<size_t> pick(0, items.size() - 1);
  std::vector<torch::Tensor> xs, es, ls, ws;
  Batch b;
  // Bounded number of draws so a set of short clips cannot loop forever.
  for (int tries = 0; static_cast<int>(xs.size()) < batch_size && tries < 8 * batch_size;
       ++tries) {
    const auto& it = items[pick(rng)];
    auto seg = sample_segment(it.features, segment_frames, rng);
    if (!seg) continue;
    xs.push_back(seg->x_linear);
    es.push_back(seg->energy);
    ls.push_back(seg->ling);
    ws.push_back(seg->wave.unsqueeze(0));
    b.ref_mels.push_back(it.features.mel);
    b.ids.push_back(it.id);
  }
  if (xs.empty())
    throw DomainError("no training item is long enough for a " +
                      std::to_string(segment_frames) + "-frame segment");
  b.x_linear = torch::stack(xs);
  b.energy = torch::stack(es);
  b.ling = torch::stack(ls);
  b.wave = torch::stack(ws);
  return b;
}

void RunningLosses::update(const LossReport& r, double decay) {
  const double a = count == 0 ? 0.0 : decay;
  kl = a * kl + (1 - a) * r.kl;
  rec = a * rec + (1 - a) * r.rec;
  fm = a * fm + (1 - a) * r.fm;
  adv = a * adv + (1 - a) * r.adv;
  disc = a * disc + (1 - a) * r.disc;
  ++count;
}

TrainState::TrainState(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  torch::manual_seed(cfg_.model.seed);
  generator_ = model::Synthesizer(cfg_.model);
  discriminator_ = model::Discriminator(cfg_.model.discriminator);
  const auto& t = cfg_.train;
  auto opts = torch::optim::AdamWOptions(t.lr)
                  .betas({t.beta1, t.beta2})
                  .weight_decay(t.weight_decay);
  opt_g_ = std::make_unique<torch::optim::AdamW>(generator_->parameters(), opts);
  opt_d_ = std::make_unique<torch::optim::AdamW>(discriminator_->parameters(), opts);
  rng_.seed(t.seed);
  noise_ = at::make_generator<at::CPUGeneratorImpl>(t.seed ^ 0x5bd1e995ULL);
  fdrl_ = std::make_unique<losses::FdrlLoss>(cfg_.fdrl);
}

double TrainState::kl_weight() const {
  return cfg_.train.kl_annealing ? losses::kl_anneal_weight(step_, cfg_.train.t_anneal)
                                 : 1.0;
}

double TrainState::learning_rate() const {
  return cfg_.train.lr * std::pow(cfg_.train.lr_decay, static_cast<double>(step_));
}

void TrainState::apply_learning_rate() {
  const double lr = learning_rate();
  for (auto* opt : {opt_g_.get(), opt_d_.get()})
    for (auto& group : opt->param_groups())
      static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
}

LossReport train_step(TrainState& state, const Batch& batch,
                      const std::function<void()>& after_discriminator) {
  auto& g = state.generator_;
  auto& d = state.discriminator_;
  g->train();
  d->train();
  state.apply_learning_rate();

  LossReport report;
  report.step = state.step_;
  report.kl_weight = state.kl_weight();
  report.lr = state.learning_rate();
  auto abort = [&](const std::string& what) {
    throw TrainingAbort(what + " at step " + std::to_string(state.step_) +
                        " (batch: " + join_ids(batch.ids) + ")");
  };

  std::vector<torch::Tensor> styles;
  for (const auto& mel : batch.ref_mels)
    styles.push_back(g->reference_encode(mel.unsqueeze(0)));
  const auto style = torch::cat(styles, 0);
  auto out = g->forward(batch.x_linear, batch.ling, batch.energy, style, state.noise_);

  // Discriminator phase.
  set_requires_grad(*d, true);
  state.opt_d_->zero_grad();
  auto real_d = d->forward(batch.wave);
  auto fake_d = d->forward(out.wave.detach());
  auto loss_d = losses::discriminator_adversarial_loss(losses::logits_of(real_d),
                                                       losses::logits_of(fake_d));
  report.disc = item(loss_d);
  if (!std::isfinite(report.disc)) abort("non-finite discriminator loss");
  loss_d.backward();
  state.opt_d_->step();
  if (after_discriminator) after_discriminator();

  // Generator phase; the discriminator is frozen.
  set_requires_grad(*d, false);
  state.opt_g_->zero_grad();
  std::vector<model::DiscriminatorOutput> real_g;
  {
    torch::NoGradGuard no_grad;
    real_g = d->forward(batch.wave);
  }
  auto fake_g = d->forward(out.wave);
  losses::LossParts parts;
  parts.kl = losses::kl_loss(out.posterior, out.z, out.prior, out.z_prime, out.log_det);
  parts.rec = (*state.fdrl_)(batch.wave, out.wave);
  parts.fm = losses::feature_matching_loss(real_g, fake_g);
  parts.adv = losses::generator_adversarial_loss(losses::logits_of(fake_g));
  torch::Tensor total;
  try {
    total = losses::total_generator_loss(parts, state.cfg_.weights, report.kl_weight);
  } catch (const TrainingAbort& e) {
    abort(e.what());
  } catch (const NumericError& e) {
    abort(e.what());
  }
  total.backward();
  state.opt_g_->step();
  set_requires_grad(*d, true);

  report.kl = item(parts.kl);
  report.rec = item(parts.rec);
  report.fm = item(parts.fm);
  report.adv = item(parts.adv);
  report.total = item(total);
  ++state.step_;
  state.running_.update(report);
  return report;
}

void save_checkpoint(TrainState& state, const std::filesystem::path& path) {
  torch::serialize::OutputArchive ar;
  ar.write("format_version", c10::IValue(kCheckpointVersion));
  ar.write("config_json", c10::IValue(to_json(state.cfg_).dump()));
  ar.write("config_hash", c10::IValue(config_hash(state.cfg_)));
  ar.write("step", c10::IValue(state.step_));
  std::ostringstream rng;
  rng << state.rng_;
  ar.write("rng", c10::IValue(rng.str()));
  ar.write("noise_state", state.noise_.get_state());
  {
    auto global = at::detail::getDefaultCPUGenerator();
    std::lock_guard<std::mutex> lock(global.mutex());
    ar.write("global_rng_state", global.get_state());
  }
  const auto& r = state.running_;
  ar.write("running", torch::tensor({r.kl, r.rec, r.fm, r.adv, r.disc},
                                    torch::kFloat64));
  ar.write("running_count", c10::IValue(r.count));

  torch::serialize::OutputArchive g, d, og, od;
  state.generator_->save(g);
  state.discriminator_->save(d);
  state.opt_g_->save(og);
  state.opt_d_->save(od);
  ar.write("generator", g);
  ar.write("discriminator", d);
  ar.write("opt_g", og);
  ar.write("opt_d", od);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  ar.save_to(tmp.string());
  std::filesystem::rename(tmp, path);
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  auto ar = open_archive(path);
  return info_from(ar);
}

TrainState load_checkpoint(const std::filesystem::path& path, const RunConfig* current) {
  auto ar = open_archive(path);
  auto info = info_from(ar);
  if (config_hash(info.config) != info.config_hash)
    LOG(WARNING) << path << ": stored config hash " << info.config_hash
                 << " does not match its embedded config";
  if (current && config_hash(*current) != info.config_hash)
    LOG(WARNING) << path << ": checkpoint config hash " << info.config_hash
                 << " differs from the run config " << config_hash(*current)
                 << "; using the checkpoint's config";
  auto cfg = info.config;
  if (current) cfg.paths = current->paths;

  TrainState state(cfg);
  try {
    torch::serialize::InputArchive g, d, og, od;
    ar.read("generator", g);
    ar.read("discriminator", d);
    ar.read("opt_g", og);
    ar.read("opt_d", od);
    state.generator_->load(g);
    state.discriminator_->load(d);
    state.opt_g_->load(og);
    state.opt_d_->load(od);
    torch::Tensor noise, global_state, running;
    ar.read("noise_state", noise);
    ar.read("global_rng_state", global_state);
    ar.read("running", running);
    state.noise_.set_state(noise);
    auto global = at::detail::getDefaultCPUGenerator();
    {
      std::lock_guard<std::mutex> lock(global.mutex());
      global.set_state(global_state);
    }
    auto rv = running.accessor<double, 1>();
    state.running_ = {rv[0], rv[1], rv[2], rv[3], rv[4],
                      read_value(ar, "running_count").toInt()};
  } catch (const c10::Error& e) {
    throw StateError("corrupt checkpoint " + path.string() + ": " +
                     e.what_without_backtrace());
  }
  std::istringstream rng(read_value(ar, "rng").toStringRef());
  rng >> state.rng_;
  if (!rng) throw StateError("corrupt rng state in " + path.string());
  state.step_ = info.step;
  state.apply_learning_rate();
  return state;
}

MetricsLog::MetricsLog(const std::filesystem::path& path)
    : start_(std::chrono::steady_clock::now()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw ConfigError("cannot open metrics log " + path.string());
}

void MetricsLog::append(const LossReport& r) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json j = {{"step", r.step}, {"kl", r.kl},     {"rec", r.rec},
                      {"fm", r.fm},     {"adv", r.adv},   {"disc", r.disc},
                      {"total", r.total}, {"lambda_kl", r.kl_weight},
                      {"lr", r.lr},     {"wall_time", wall}};
  out_ << j.dump() << '\n';
  out_.flush();
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int64_t step) {
  char name[64];
  std::snprintf(name, sizeof name, "ckpt_%08lld.pt", static_cast<long long>(step));
  return dir / name;
}

std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  static const std::regex pattern(R"(ckpt_(\d+)\.pt)");
  std::optional<std::filesystem::path> best;
  long long best_step = -1;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const auto name = e.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stoll(m[1]) > best_step) {
      best_step = std::stoll(m[1]);
      best = e.path();
    }
  }
  return best;
}

int64_t run_training(TrainState& state, const std::vector<TrainItem>& items,
                     const LoopOptions& options) {
  const auto& t = state.config().train;
  std::optional<MetricsLog> log;
  if (!options.metrics_log.empty()) log.emplace(options.metrics_log);
  int64_t taken = 0;
  while (state.step() < options.until_step) {
    auto batch = sample_batch(items, t.batch_size, t.segment_frames, state.rng());
    auto report = train_step(state, batch);
    ++taken;
    if (report.step % t.log_every == 0) {
      if (log) log->append(report);
      LOG(INFO) << "step " << report.step << " rec " << report.rec << " kl "
                << report.kl << " fm " << report.fm << " adv " << report.adv
                << " disc " << report.disc << " lambda_kl " << report.kl_weight;
    }
    if (options.on_step) options.on_step(report);
    if (!options.checkpoint_dir.empty() && state.step() % t.checkpoint_every == 0)
      save_checkpoint(state, checkpoint_path(options.checkpoint_dir, state.step()));
  }
  if (!options.checkpoint_dir.empty() && taken > 0 &&
      state.step() % t.checkpoint_every != 0)
    save_checkpoint(state, checkpoint_path(options.checkpoint_dir, state.step()));
  return taken;
}

}  // namespace h2nh::training
