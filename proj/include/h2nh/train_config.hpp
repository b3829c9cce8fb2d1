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

#ifndef H2NH_TRAIN_CONFIG_HPP_
#define H2NH_TRAIN_CONFIG_HPP_

#include <cstdint>

namespace h2nh::training {

struct TrainConfig {
  int batch_size = 4;            // 128 on the full multi-accelerator setup
  int64_t max_steps = 400000;
  int64_t segment_frames = 100;
  double lr = 2e-4;
  double weight_decay = 0.01;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double lr_decay = 0.999875;    // per step
  int64_t t_anneal = 50000;
  bool kl_annealing = true;      // false: constant KL weight of 1
  int64_t checkpoint_every = 10000;
  int64_t log_every = 100;
  uint64_t seed = 1234;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

}  // namespace h2nh::training

#endif  // H2NH_TRAIN_CONFIG_HPP_
