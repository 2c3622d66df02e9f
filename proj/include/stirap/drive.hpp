#pragma once

namespace stirap {

/// Instantaneous drive parameters in the doubly rotating frame (rad/ns, rad).
/// Detunings follow delta01 = w~01 - w01^(drive), delta12 = w~12 - w12^(drive).
struct DriveSample {
  double omega01 = 0.0;
  double omega12 = 0.0;
  double detuning01 = 0.0;
  double detuning12 = 0.0;
  double phase01 = 0.0;
  double phase12 = 0.0;
};

}  // namespace stirap
