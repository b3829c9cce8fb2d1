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


#ifndef H2NH_TESTS_MODEL_UTIL_HPP_
#define H2NH_TESTS_MODEL_UTIL_HPP_

#include <torch/torch.h>

#include "h2nh/model.hpp"

namespace h2nh::test {

// Coupling output layers start at zero, which makes a fresh flow the
// identity. Give them small random weights so the flow behaves like a
// trained one.
inline void randomize_flow(model::Synthesizer& g, double stddev = 0.05, uint64_t seed = 99) {
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& layer : g->flow()->layers()) {
    auto& post = layer->post();
    post->weight.copy_(at::normal(0.0, stddev, post->weight.sizes(), gen));
    post->bias.copy_(at::normal(0.0, stddev, post->bias.sizes(), gen));
  }
}

}  // namespace h2nh::test

#endif  // H2NH_TESTS_MODEL_UTIL_HPP_
