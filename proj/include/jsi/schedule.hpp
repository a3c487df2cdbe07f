#pragma once

#include <string>
#include <vector>

namespace jsi {

enum class Phase { pretrain, gan };

std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

struct Schedule {
  Phase phase = Phase::pretrain;
  double base_lr = 1e-4;
  std::vector<double> milestones{200, 225};  // step decays (pretrain)
  double decay_factor = 0.1;
  double decay_start = 5;    // linear decay start epoch (gan)
  double total_epochs = 250;
};

/// 1e-4 with x0.1 drops at epochs 200 and 225, 250 epochs.
Schedule pretrain_schedule();
/// 1e-6 through epoch 5, then linear to zero at epoch 10.
Schedule gan_schedule();
Schedule default_schedule(Phase p);

/// Learning rate at epoch + step_in_epoch / steps_per_epoch. Throws
/// std::out_of_range outside [0, total_epochs].
double lr_at(const Schedule& s, double epoch, double step_in_epoch = 0,
             double steps_per_epoch = 1);

}  // namespace jsi
