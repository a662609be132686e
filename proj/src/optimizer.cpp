#include "ent/optimizer.hpp"

#include <cmath>
#include <string>

namespace ent {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::none: return "none";
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
  }
  return "none";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw InvalidInput("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

void OptimizerConfig::validate() const {
  if (kind == OptimizerKind::none) throw InvalidInput("optimizer kind must be sgd or adam");
  if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidInput("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidInput("adam epsilon must be > 0");
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t param_count) : config_(config) {
  config_.validate();
  state_.kind = config_.kind;
  if (config_.kind == OptimizerKind::adam) {
    state_.m.assign(param_count, 0.0);
    state_.v.assign(param_count, 0.0);
  }
}

void Optimizer::restore(OptimizerState state) {
  if (state.kind != config_.kind) throw InvalidInput("optimizer state kind mismatch");
  if (state.kind == OptimizerKind::adam && state.m.size() != state_.m.size()) {
    throw InvalidInput("optimizer state size mismatch");
  }
  state_ = std::move(state);
}

void Optimizer::step(ModelParams& params, const ParamGradient& grad) {
  if (grad.values.size() != params.values.size()) throw InvalidInput("gradient size mismatch");
  auto& w = params.values;
  const auto& g = grad.values;
  ++state_.step;
  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config_.learning_rate * g[i];
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    state_.m[i] = b1 * state_.m[i] + (1.0 - b1) * g[i];
    state_.v[i] = b2 * state_.v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = state_.m[i] / c1;
    const double v_hat = state_.v[i] / c2;
    w[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace ent
