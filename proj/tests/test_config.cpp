#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "nhns/config.hpp"
#include "nhns/error.hpp"
#include "nhns/io.hpp"

using namespace nhns;

TEST_CASE("defaults") {
  const Config c;
  CHECK(c.get_double("tau") == 1.0);
  CHECK(c.get_double("eps") == 0.01);
  CHECK(c.get_size("n") == 512);
  CHECK(c.get_size("epochs") == 500);
  CHECK(c.get_double("lr0") == 4e-4);
  CHECK(c.get_double("eps_tol") == 1e-8);
  CHECK(c.get_doubles("taus") == std::vector<double>{0.5, 1.0, 2.0});
  CHECK_FALSE(c.get_bool("decay_2d"));
}

TEST_CASE("file layer") {
  Config c;
  c.merge_text("# comment\n\n tau = 2 \nseed=41\ntaus = 0.25, 0.5\n");
  CHECK(c.get_double("tau") == 2.0);
  CHECK(c.get_u64("seed") == 41);
  CHECK(c.get_doubles("taus") == std::vector<double>{0.25, 0.5});
  CHECK_THROWS_AS(c.merge_text("bogus = 1\n"), DomainError);
  CHECK_THROWS_AS(c.merge_text("no equals sign\n"), FormatError);
  c.set("tau", "abc");
  CHECK_THROWS_AS(c.get_double("tau"), DomainError);
  CHECK_THROWS_AS(c.get("missing"), DomainError);
  CHECK_THROWS_AS(Config().merge_file("/nonexistent/cfg.txt"), IoError);
}

TEST_CASE("precedence: defaults < file < environment < overrides") {
  const auto path = std::filesystem::temp_directory_path() / "nhns_cfg_test.txt";
  write_text_file(path, "seed = 5\ntau = 0.5\n");
  Config c;
  c.merge_file(path);
  CHECK(c.get_u64("seed") == 5);
  ::setenv("NHNS_SEED", "77", 1);
  c.merge_env();
  CHECK(c.get_u64("seed") == 77);
  c.set("seed", "3");
  CHECK(c.get_u64("seed") == 3);
  CHECK(c.get_double("tau") == 0.5);
  ::setenv("NHNS_SEED", "x1", 1);
  CHECK_THROWS_AS(Config().merge_env(), DomainError);
  ::unsetenv("NHNS_SEED");
}

TEST_CASE("dump lists every key once") {
  const std::string d = Config().dump();
  CHECK(d.find("tau = 1\n") != std::string::npos);
  CHECK(static_cast<std::size_t>(std::count(d.begin(), d.end(), '\n')) == Config::defaults().size());
}
