#pragma once

#include <cstdint>
#include <string>

#include "trajgan/losses_training.hpp"

namespace trajgan {

// Inputs of the compute-cost summary C = alpha * P * T_train + beta * T_opt.
// The coefficients carry the unit conversion and default to 1, so the result
// is in parameter-seconds unless the caller says otherwise.
struct ComplexityRecord {
  std::int64_t parameter_count = 0;
  double train_seconds = 0.0;
  double tune_seconds = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
};

// Throws ConfigError when any field is negative.
double complexity(const ComplexityRecord& record);

// Total trainable elements across both generators and both critics
// (batch-norm running statistics are not trainable and are excluded).
// Uninitialized networks count as zero.
std::int64_t count_parameters(CycleGanModel& model);

// One CSV line (with header): parameters,train_seconds,tune_seconds,
// alpha,beta,complexity.
std::string render_complexity_csv(const ComplexityRecord& record);

}  // namespace trajgan
