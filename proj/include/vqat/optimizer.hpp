// Copyright 2026 The vqat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "vqat/autograd.hpp"

namespace vqat::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a subset of a ParameterSet. Parameters outside the subset are
// never written.
class Adam {
 public:
  // Empty `trainable` means every parameter.
  Adam(ad::ParameterSet& params, AdamConfig cfg, const std::set<std::string>& trainable = {});

  void step(double lr);
  size_t steps() const { return t_; }
  const std::vector<ad::Parameter*>& trainable() const { return targets_; }

 private:
  AdamConfig cfg_;
  std::vector<ad::Parameter*> targets_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  size_t t_ = 0;
};

}  // namespace vqat::train
