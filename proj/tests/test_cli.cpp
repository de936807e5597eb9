#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "lcm/csv.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(LCM_CLI_PATH) + " --quiet " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("synth then run") {
  const auto dir = testutil::scratch("cli_run");
  CHECK(run("synth --out " + (dir / "sc").string() + " --seed 3") == 0);
  REQUIRE(fs::exists(dir / "sc" / "scenario.ini"));
  const std::string cfg = (dir / "sc" / "scenario.ini").string();
  CHECK(run("run --config " + cfg + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "report" / "report.txt"));
  CHECK(run("markov -c " + cfg + " -o " + (dir / "single").string()) == 0);
  CHECK(fs::exists(dir / "single" / "markov" / "transition.csv"));
}

TEST_CASE("exit codes") {
  const auto dir = testutil::scratch("cli_codes");
  CHECK(run("") == 2);
  CHECK(run("run") == 2);
  CHECK(run("run --config " + (dir / "missing.ini").string()) == 2);
  lcm::write_text_file(dir / "bad.ini", "[run]\nmodel = nonsense\n");
  CHECK(run("run --config " + (dir / "bad.ini").string()) == 2);

  CHECK(run("synth --out " + (dir / "sc").string()) == 0);
  lcm::write_text_file(dir / "sc" / "roads.asc", "NCOLS 2\nNROWS 1\n1 2\n");
  CHECK(run("criteria -c " + (dir / "sc" / "scenario.ini").string()) == 3);
}

#include "lcm/error.hpp"

TEST_CASE("error kinds map to exit codes") {
  CHECK(lcm::exit_code(lcm::ErrorKind::config) == 2);
  CHECK(lcm::exit_code(lcm::ErrorKind::data) == 3);
  CHECK(lcm::exit_code(lcm::ErrorKind::numerical) == 4);
}
