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


#ifndef H2NH_TRAINING_HPP_
#define H2NH_TRAINING_HPP_

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "h2nh/config.hpp"
#include "h2nh/discriminator.hpp"
#include "h2nh/features.hpp"
#include "h2nh/losses.hpp"
#include "h2nh/model.hpp"
#include "h2nh/train_config.hpp"

namespace h2nh::training {

// Aligned crop of all four tracks.
struct Segment {
  torch::Tensor x_linear;  // [n_bins, S]
  torch::Tensor energy;    // [S]
  torch::Tensor ling;      // [D, S]
  torch::Tensor wave;      // [S * hop]
  int64_t start = 0;
};

// Uniform start frame in [0, T - S]. Returns nullopt (and logs a warning)
// when the clip has fewer than S frames.
std::optional<Segment> sample_segment(const features::ClipFeatures& clip,
                                      int64_t segment_frames,
                                      std::mt19937_64& rng);

struct TrainItem {
  std::string id;
  features::ClipFeatures features;
};

struct Batch {
  torch::Tensor x_linear;              // [B, n_bins, S]
  torch::Tensor energy;                // [B, S]
  torch::Tensor ling;                  // [B, D, S]
  torch::Tensor wave;                  // [B, 1, S * hop]
  std::vector<torch::Tensor> ref_mels;  // whole-utterance mels, [n_mels, T_i]
  std::vector<std::string> ids;
};

// Draws batch_size items with replacement; items too short for a segment are
// skipped. Throws DomainError if nothing usable remains.
Batch sample_batch(const std::vector<TrainItem>& items, int batch_size,
                   int64_t segment_frames, std::mt19937_64& rng);

// Unweighted loss parts of one (D, G) step.
struct LossReport {
  int64_t step = 0;
  double kl = 0.0;
  double rec = 0.0;
  double fm = 0.0;
  double adv = 0.0;
  double disc = 0.0;
  double total = 0.0;
  double kl_weight = 0.0;
  double lr = 0.0;
};

struct RunningLosses {
  double kl = 0.0, rec = 0.0, fm = 0.0, adv = 0.0, disc = 0.0;
  int64_t count = 0;

  void update(const LossReport& r, double decay = 0.98);
};

class TrainState {
 public:
  explicit TrainState(RunConfig cfg);
  TrainState(TrainState&&) = default;
  TrainState& operator=(TrainState&&) = default;

  const RunConfig& config() const { return cfg_; }
  model::Synthesizer& generator() { return generator_; }
  model::Discriminator& discriminator() { return discriminator_; }
  torch::optim::AdamW& opt_g() { return *opt_g_; }
  torch::optim::AdamW& opt_d() { return *opt_d_; }
  std::mt19937_64& rng() { return rng_; }
  at::Generator& noise() { return noise_; }
  const losses::FdrlLoss& fdrl() const { return *fdrl_; }
  RunningLosses& running() { return running_; }

  int64_t step() const { return step_; }
  // KL weight and learning rate that the next step will use.
  double kl_weight() const;
  double learning_rate() const;

 private:
  friend LossReport train_step(TrainState& state, const Batch& batch,
                               const std::function<void()>& after_discriminator);
  friend void save_checkpoint(TrainState& state, const std::filesystem::path& path);
  friend TrainState load_checkpoint(const std::filesystem::path& path,
                                    const RunConfig* current);
  void apply_learning_rate();

  RunConfig cfg_;
  model::Synthesizer generator_{nullptr};
  model::Discriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::AdamW> opt_g_;
  std::unique_ptr<torch::optim::AdamW> opt_d_;
  std::mt19937_64 rng_;
  at::Generator noise_;
  std::unique_ptr<losses::FdrlLoss> fdrl_;
  RunningLosses running_;
  int64_t step_ = 0;
};

// One discriminator update on the detached generator output, then one
// generator update. Throws TrainingAbort naming the step and batch ids when a
// loss is not finite. `after_discriminator` runs between the two updates.
LossReport train_step(TrainState& state, const Batch& batch,
                      const std::function<void()>& after_discriminator = {});

inline constexpr int64_t kCheckpointVersion = 1;

// Atomic: written to "<path>.tmp" then renamed.
void save_checkpoint(TrainState& state, const std::filesystem::path& path);
// Refuses files with another format version (StateError) before building any
// state. When `current` is given and its hash differs from the stored one, a
// warning is logged and the stored config wins.
TrainState load_checkpoint(const std::filesystem::path& path,
                           const RunConfig* current = nullptr);
// Format version and config hash without building the model.
struct CheckpointInfo {
  int64_t format_version = 0;
  std::string config_hash;
  int64_t step = 0;
  RunConfig config;
};
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

// Newline-delimited JSON: step, loss parts, lambda_kl, lr, wall_time.
class MetricsLog {
 public:
  explicit MetricsLog(const std::filesystem::path& path);
  void append(const LossReport& report);

 private:
  std::ofstream out_;
  std::chrono::steady_clock::time_point start_;
};

struct LoopOptions {
  int64_t until_step = 0;  // stop once state.step() reaches this
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::filesystem::path metrics_log;     // empty: no metrics log
  std::function<void(const LossReport&)> on_step;
};

// Runs train_step until until_step, logging every log_every steps and
// checkpointing every checkpoint_every steps plus once at the end. Returns
// the number of steps taken.
int64_t run_training(TrainState& state, const std::vector<TrainItem>& items,
                     const LoopOptions& options);

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int64_t step);
// Highest-step checkpoint in dir, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir);

}  // namespace h2nh::training

#endif  // H2NH_TRAINING_HPP_
