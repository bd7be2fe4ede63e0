#ifndef LOGLG_ADAM_HPP_
#define LOGLG_ADAM_HPP_

#include <cmath>

#include "loglg/common.hpp"

namespace loglg {

struct AdamConfig {
  Scalar lr = 1e-4;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
  /// Global gradient-norm clip; <= 0 disables clipping.
  Scalar clip_norm = 5.0;
};

/// Adam over one flat parameter vector.
class Adam {
 public:
  Adam(Eigen::Index size, AdamConfig cfg) : cfg_(cfg), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

  void step(Vector& params, Vector grad) {
    if (cfg_.clip_norm > 0) {
      const Scalar norm = grad.norm();
      if (norm > cfg_.clip_norm) grad *= cfg_.clip_norm / norm;
    }
    ++t_;
    m_ = cfg_.beta1 * m_ + (1 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1 - cfg_.beta2) * grad.cwiseProduct(grad);
    const Scalar c1 = 1 - std::pow(cfg_.beta1, static_cast<Scalar>(t_));
    const Scalar c2 = 1 - std::pow(cfg_.beta2, static_cast<Scalar>(t_));
    params.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  Vector m_, v_;
  long t_ = 0;
};

}  // namespace loglg

#endif  // LOGLG_ADAM_HPP_
