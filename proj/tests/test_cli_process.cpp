// Exit-code and determinism checks against the real binary, driven through
// std::system. The binary path arrives in the STYLEREC_CLI environment
// variable set by ctest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "support/synth.hpp"

namespace ts = stylerec::testsupport;

namespace {

std::string cli() {
  const char* path = std::getenv("STYLEREC_CLI");
  REQUIRE(path != nullptr);
  return path;
}

int run(const std::string& args) {
  std::string command = cli() + " " + args + " > /dev/null 2>&1";
  int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("help exits zero") {
  CHECK(run("--help") == 0);
  CHECK(run("extract --help") == 0);
}

TEST_CASE("missing subcommand and bad flags exit 1") {
  CHECK(run("") == 1);
  CHECK(run("extract") == 1);  // required flags absent
  CHECK(run("no-such-command") == 1);
}

TEST_CASE("usage errors exit 1, data errors exit 2") {
  std::string dir = ts::make_temp_dir("proc");
  std::string manifest = ts::write_styled_corpus(dir, 2, 3);

  // Unknown channel name: usage.
  CHECK(run("extract --manifest " + manifest + " --channel wavelet --out " +
            dir + "/w.fvec") == 1);
  // Missing manifest file: data.
  CHECK(run("extract --manifest " + dir + "/nope.jsonl --channel lab_hist "
            "--out " + dir + "/x.fvec") == 2);

  SUBCASE("successful extraction exits 0 and is byte-stable across runs") {
    CHECK(run("extract --manifest " + manifest + " --channel lab_hist --out " +
              dir + "/a.fvec") == 0);
    CHECK(run("extract --manifest " + manifest + " --channel lab_hist --out " +
              dir + "/b.fvec") == 0);
    CHECK(ts::read_file_bytes(dir + "/a.fvec") ==
          ts::read_file_bytes(dir + "/b.fvec"));
  }
  ts::remove_dir(dir);
}

TEST_CASE("config files preset subcommand flags") {
  std::string dir = ts::make_temp_dir("proc_cfg");
  std::string manifest = ts::write_styled_corpus(dir, 2, 4);
  {
    std::ofstream cfg(dir + "/preset.cfg");
    cfg << "[extract]\n";
    cfg << "manifest=" << manifest << "\n";
    cfg << "channel=lab_hist\n";
    cfg << "out=" << dir << "/from_cfg.fvec\n";
  }
  CHECK(run("--config " + dir + "/preset.cfg extract") == 0);
  CHECK(ts::read_file_bytes(dir + "/from_cfg.fvec").size() > 17);

  // Command-line flags override the file.
  CHECK(run("--config " + dir + "/preset.cfg extract --out " + dir +
            "/override.fvec") == 0);
  CHECK(ts::read_file_bytes(dir + "/override.fvec") ==
        ts::read_file_bytes(dir + "/from_cfg.fvec"));
  ts::remove_dir(dir);
}
