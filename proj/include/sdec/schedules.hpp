#pragma once

// Per-epoch controls: probability of feeding the gold token (epsilon) and
// the soft-argmax temperature (alpha).

#include <string_view>

namespace sdec {

inline constexpr double kMaxTemperature = 1000.0;

struct MixingSchedule {
  enum class Kind { inverse_sigmoid, constant, always_sample };
  Kind kind = Kind::inverse_sigmoid;
  double k = 10.0;    // decay strength, inverse_sigmoid only
  double eps = 1.0;   // constant only

  static MixingSchedule inverse_sigmoid(double k) { return {Kind::inverse_sigmoid, k, 1.0}; }
  static MixingSchedule constant(double eps) { return {Kind::constant, 10.0, eps}; }
  static MixingSchedule always_sample() { return {Kind::always_sample, 10.0, 0.0}; }
};

struct TemperatureSchedule {
  enum class Kind { fixed, exponential };
  Kind kind = Kind::fixed;
  double alpha0 = 1.0;
  double rate = 1.0;

  static TemperatureSchedule fixed(double alpha0) { return {Kind::fixed, alpha0, 1.0}; }
  static TemperatureSchedule exponential(double alpha0, double rate) {
    return {Kind::exponential, alpha0, rate};
  }
};

/// Epoch 0 is always fully teacher-forced (1.0). From epoch 1 on the
/// inverse sigmoid gives k / (k + exp(epoch / k)).
double mixing_probability(const MixingSchedule& schedule, int epoch);

/// alpha0 for fixed, alpha0 * rate^epoch for exponential, capped at
/// kMaxTemperature.
double temperature(const TemperatureSchedule& schedule, int epoch);

MixingSchedule::Kind parse_mixing_kind(std::string_view name);
TemperatureSchedule::Kind parse_temperature_kind(std::string_view name);
std::string_view to_string(MixingSchedule::Kind kind);
std::string_view to_string(TemperatureSchedule::Kind kind);

}  // namespace sdec
