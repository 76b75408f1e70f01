#include "sdec/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sdec {

double mixing_probability(const MixingSchedule& schedule, int epoch) {
  if (epoch < 0) throw std::invalid_argument("mixing_probability: negative epoch");
  if (schedule.kind == MixingSchedule::Kind::inverse_sigmoid && !(schedule.k > 0.0)) {
    throw std::invalid_argument("mixing schedule: decay strength k must be > 0");
  }
  if (schedule.kind == MixingSchedule::Kind::constant &&
      !(schedule.eps >= 0.0 && schedule.eps <= 1.0)) {
    throw std::invalid_argument("mixing schedule: constant eps must lie in [0, 1]");
  }
  if (epoch == 0) return 1.0;
  switch (schedule.kind) {
    case MixingSchedule::Kind::inverse_sigmoid: {
      const double k = schedule.k;
      return k / (k + std::exp(static_cast<double>(epoch) / k));
    }
    case MixingSchedule::Kind::constant: return schedule.eps;
    case MixingSchedule::Kind::always_sample: return 0.0;
  }
  return 0.0;
}

double temperature(const TemperatureSchedule& schedule, int epoch) {
  if (epoch < 0) throw std::invalid_argument("temperature: negative epoch");
  if (!(schedule.alpha0 > 0.0)) throw std::invalid_argument("temperature schedule: alpha0 must be > 0");
  if (!(schedule.rate > 0.0)) throw std::invalid_argument("temperature schedule: rate must be > 0");
  double alpha = schedule.alpha0;
  if (schedule.kind == TemperatureSchedule::Kind::exponential) {
    alpha = schedule.alpha0 * std::pow(schedule.rate, static_cast<double>(epoch));
  }
  return std::min(alpha, kMaxTemperature);
}

MixingSchedule::Kind parse_mixing_kind(std::string_view name) {
  if (name == "inverse-sigmoid") return MixingSchedule::Kind::inverse_sigmoid;
  if (name == "constant") return MixingSchedule::Kind::constant;
  if (name == "always-sample") return MixingSchedule::Kind::always_sample;
  throw std::invalid_argument("unknown mixing.kind '" + std::string(name) +
                              "' (expected inverse-sigmoid, constant or always-sample)");
}

TemperatureSchedule::Kind parse_temperature_kind(std::string_view name) {
  if (name == "fixed") return TemperatureSchedule::Kind::fixed;
  if (name == "exponential") return TemperatureSchedule::Kind::exponential;
  throw std::invalid_argument("unknown temp.kind '" + std::string(name) +
                              "' (expected fixed or exponential)");
}

std::string_view to_string(MixingSchedule::Kind kind) {
  switch (kind) {
    case MixingSchedule::Kind::inverse_sigmoid: return "inverse-sigmoid";
    case MixingSchedule::Kind::constant: return "constant";
    case MixingSchedule::Kind::always_sample: return "always-sample";
  }
  return "?";
}

std::string_view to_string(TemperatureSchedule::Kind kind) {
  return kind == TemperatureSchedule::Kind::fixed ? "fixed" : "exponential";
}

}  // namespace sdec
