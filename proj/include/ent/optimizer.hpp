#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ent/model.hpp"

namespace ent {

enum class OptimizerKind : std::uint32_t { none = 0, sgd = 1, adam = 2 };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::none;
  std::uint64_t step = 0;
  std::vector<double> m;  // adam first moment
  std::vector<double> v;  // adam second moment

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t param_count);

  void step(ModelParams& params, const ParamGradient& grad);

  const OptimizerState& state() const noexcept { return state_; }
  void restore(OptimizerState state);

 private:
  OptimizerConfig config_;
  OptimizerState state_;
};

}  // namespace ent
