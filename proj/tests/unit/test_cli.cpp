#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "mobfair/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(MOBFAIR_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("cli happy path") {
  const auto dir = oracle::scratch_dir("cli_ok");
  const std::string out = "-q -o " + q(dir) + " --seed 5";
  CHECK(cli("generate " + out + " --objects 200 --days 4") == 0);
  CHECK(cli("inject " + out + " --objects-per-hotspot 40 --regions 1") == 0);
  CHECK(cli("assess " + out + " --resolutions 200,500 --shifts 2 --sims 99") == 0);
  CHECK(cli("export " + out) == 0);
  CHECK(fs::is_regular_file(dir / "bundle.json"));
  CHECK(fs::is_regular_file(dir / "scan_result.json"));
  CHECK(cli("--help") == 0);
}

TEST_CASE("cli exit codes") {
  const auto dir = oracle::scratch_dir("cli_err");
  const std::string out = "-q -o " + q(dir);
  CHECK(cli("") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("assess --no-such-flag") == 2);
  CHECK(cli("generate " + out) == 2);
  CHECK(cli("assess " + out + " --alpha 2") == 2);
  CHECK(cli("assess " + out + " --tail sideways") == 2);
  mobfair::io::write_file(dir / "cfg.json", R"({"scan": {"alfa": 0.1}})");
  CHECK(cli("assess " + out + " -c " + q(dir / "cfg.json")) == 2);

  CHECK(cli("assess " + out + " --stops " + q(dir / "missing.csv") + " --labels " + q(dir / "missing.csv")) == 3);
  mobfair::io::write_file(dir / "bad.csv", "object_id,x\na,1\n");
  mobfair::io::write_file(dir / "labels.csv", "object_id,label\na,1\n");
  CHECK(cli("assess " + out + " --stops " + q(dir / "bad.csv") + " --labels " + q(dir / "labels.csv")) == 3);
  CHECK(cli("export " + out) == 3);
  CHECK(cli("serve --bundle " + q(dir / "absent.json")) == 3);

  const auto gen = oracle::scratch_dir("cli_runtime");
  CHECK(cli("generate -q -o " + q(gen) + " --seed 1 --objects 50 --days 2") == 0);
  CHECK(cli("inject -q -o " + q(gen) + " --seed 1 --objects-per-hotspot 100000") == 4);
}
