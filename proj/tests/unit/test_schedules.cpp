#include <doctest.h>

#include <cmath>

#include "sdec/schedules.hpp"

using namespace sdec;

TEST_CASE("epoch 0 is fully teacher-forced for every mixing schedule") {
  CHECK(mixing_probability(MixingSchedule::inverse_sigmoid(10), 0) == 1.0);
  CHECK(mixing_probability(MixingSchedule::constant(0.3), 0) == 1.0);
  CHECK(mixing_probability(MixingSchedule::always_sample(), 0) == 1.0);
}

TEST_CASE("inverse sigmoid decay") {
  CHECK(mixing_probability(MixingSchedule::inverse_sigmoid(10), 20) ==
        doctest::Approx(0.5750743423396601).epsilon(1e-14));
  CHECK(mixing_probability(MixingSchedule::inverse_sigmoid(10), 1) ==
        doctest::Approx(0.9004814130076302).epsilon(1e-14));
  double prev = 1.0;
  for (int e = 1; e <= 200; ++e) {
    const double eps = mixing_probability(MixingSchedule::inverse_sigmoid(10), e);
    CHECK(eps <= prev);
    CHECK(eps >= 0.0);
    prev = eps;
  }
  CHECK(prev < 1e-6);
  // Gentler decay for larger k at every epoch.
  for (int e = 1; e <= 50; ++e) {
    CHECK(mixing_probability(MixingSchedule::inverse_sigmoid(100), e) >
          mixing_probability(MixingSchedule::inverse_sigmoid(10), e));
    CHECK(mixing_probability(MixingSchedule::inverse_sigmoid(10), e) >
          mixing_probability(MixingSchedule::inverse_sigmoid(1), e));
  }
  CHECK_THROWS(mixing_probability(MixingSchedule::inverse_sigmoid(0), 1));
  CHECK_THROWS(mixing_probability(MixingSchedule::inverse_sigmoid(-2), 1));
  CHECK_THROWS(mixing_probability(MixingSchedule::constant(1.5), 1));
  CHECK_THROWS(mixing_probability(MixingSchedule::inverse_sigmoid(10), -1));
}

TEST_CASE("constant and always-sample") {
  CHECK(mixing_probability(MixingSchedule::constant(0.25), 4) == 0.25);
  CHECK(mixing_probability(MixingSchedule::always_sample(), 5) == 0.0);
}

TEST_CASE("temperature schedules") {
  CHECK(temperature(TemperatureSchedule::fixed(2), 7) == 2.0);
  CHECK(temperature(TemperatureSchedule::exponential(1, 2), 3) == 8.0);
  CHECK(temperature(TemperatureSchedule::exponential(1, 1.5), 2) == 2.25);
  CHECK(temperature(TemperatureSchedule::exponential(1, 2), 40) == kMaxTemperature);
  CHECK_THROWS(temperature(TemperatureSchedule::fixed(0), 1));
  CHECK_THROWS(temperature(TemperatureSchedule::exponential(1, 0), 1));
  CHECK_THROWS(temperature(TemperatureSchedule::exponential(-1, 2), 1));
}

TEST_CASE("schedule names round trip") {
  for (auto k : {MixingSchedule::Kind::inverse_sigmoid, MixingSchedule::Kind::constant,
                 MixingSchedule::Kind::always_sample}) {
    CHECK(parse_mixing_kind(to_string(k)) == k);
  }
  for (auto k : {TemperatureSchedule::Kind::fixed, TemperatureSchedule::Kind::exponential}) {
    CHECK(parse_temperature_kind(to_string(k)) == k);
  }
  CHECK_THROWS(parse_mixing_kind("linear"));
  CHECK_THROWS(parse_temperature_kind("cosine"));
}
