#include <doctest.h>

#include <fstream>

#include "sdec/config.hpp"

using namespace sdec;

TEST_CASE("defaults cover every key") {
  const Config c;
  for (const auto& k : config_keys()) CHECK(c.get(k.name) == k.default_value);
  CHECK(c.get_seeds() == std::vector<std::uint64_t>{1});
  CHECK(c.get_doubles("sweep.alphas") == std::vector<double>{1.0, 5.0});
}

TEST_CASE("parse, override and resolve") {
  const Config c = Config::parse("# comment\nregime = relaxed-greedy\n\n  epochs=3  # trailing\nseeds = 1, 2,3\n");
  CHECK(c.get("regime") == "relaxed-greedy");
  CHECK(c.get_int("epochs") == 3);
  CHECK(c.get_seeds() == std::vector<std::uint64_t>{1, 2, 3});

  Config d = c;
  d.apply_overrides({"--epochs=7", "--model.bidirectional=false"});
  CHECK(d.get_int("epochs") == 7);
  CHECK_FALSE(d.get_bool("model.bidirectional"));

  const Config back = Config::parse(d.resolved());
  CHECK(back == d);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(Config::parse("bogus = 1"), ConfigError);
  CHECK_THROWS_AS(Config::parse("just words"), ConfigError);
  try {
    Config::parse("epochs = 2\nnope = 3\n", "x.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x.cfg:2") != std::string::npos);
  }
  try {
    Config::from_file("no/such/file.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("no/such/file.cfg") != std::string::npos);
  }
  Config c;
  CHECK_THROWS_AS(c.apply_overrides({"--nope=1"}), ConfigError);
  CHECK_THROWS_AS(c.apply_overrides({"--epochs"}), ConfigError);
  CHECK_THROWS_AS(c.apply_overrides({"epochs=1"}), ConfigError);
  c.set("epochs", "ten");
  CHECK_THROWS_AS(c.get_int("epochs"), ConfigError);
  c.set("lr", "");
  CHECK_THROWS_AS(c.get_double("lr"), ConfigError);
  c.set("wallclock", "maybe");
  CHECK_THROWS_AS(c.get_bool("wallclock"), ConfigError);
  c.set("seeds", "1,-2");
  CHECK_THROWS_AS(c.get_seeds(), ConfigError);
}

TEST_CASE("from_file") {
  std::ofstream("config_test.cfg") << "name = demo\nlr = 0.05\n";
  const Config c = Config::from_file("config_test.cfg");
  CHECK(c.get("name") == "demo");
  CHECK(c.get_double("lr") == 0.05);
}
