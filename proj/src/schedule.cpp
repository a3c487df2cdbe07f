#include "jsi/schedule.hpp"

#include <stdexcept>

namespace jsi {

std::string to_string(Phase p) { return p == Phase::pretrain ? "pretrain" : "gan"; }

Phase phase_from_string(const std::string& s) {
  if (s == "pretrain") return Phase::pretrain;
  if (s == "gan") return Phase::gan;
  throw std::invalid_argument("unknown phase: " + s + " (expected pretrain or gan)");
}

Schedule pretrain_schedule() { return Schedule{}; }

Schedule gan_schedule() {
  Schedule s;
  s.phase = Phase::gan;
  s.base_lr = 1e-6;
  s.milestones.clear();
  s.decay_start = 5;
  s.total_epochs = 10;
  return s;
}

Schedule default_schedule(Phase p) {
  return p == Phase::pretrain ? pretrain_schedule() : gan_schedule();
}

double lr_at(const Schedule& s, double epoch, double step_in_epoch, double steps_per_epoch) {
  if (!(steps_per_epoch > 0)) throw std::invalid_argument("steps_per_epoch must be positive");
  const double t = epoch + step_in_epoch / steps_per_epoch;
  if (!(t >= 0) || t > s.total_epochs)
    throw std::out_of_range("epoch " + std::to_string(t) + " outside [0, " +
                            std::to_string(s.total_epochs) + "]");
  if (s.phase == Phase::pretrain) {
    double lr = s.base_lr;
    for (double m : s.milestones)
      if (t >= m) lr *= s.decay_factor;
    return lr;
  }
  if (t < s.decay_start) return s.base_lr;
  const double span = s.total_epochs - s.decay_start;
  return s.base_lr * (1.0 - (t - s.decay_start) / span);
}

}  // namespace jsi
