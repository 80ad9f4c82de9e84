#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "tooldag/persistence.hpp"

namespace fs = std::filesystem;
using namespace tooldag;

namespace {

struct Run {
  int code;
  std::string out, err;
};

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("tooldag_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  Run run(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" + CLI_PATH + "' " + args + " >out.txt 2>err.txt";
    int status = std::system(cmd.c_str());
    Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(path("out.txt")), read_file(path("err.txt"))};
    return r;
  }
};

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

}  // namespace

TEST_CASE("init, insert, stats and export") {
  Sandbox box;
  auto r = box.run("init");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(box.path("library.txt")));
  auto lib = load_library(box.path("library.txt"));
  CHECK(lib.size() > 5);
  CHECK(lib.composite_count() == 0);

  fs::copy_file(fixture("case_library.txt"), box.path("case.txt"));
  r = box.run("--library case.txt insert '" + fixture("case_candidates.txt") + "'");
  REQUIRE(r.code == 0);
  CHECK(r.out == read_file(fixture("case_outcomes.txt")));

  r = box.run("--library case.txt stats");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("tools\t") == 0);
  CHECK(r.out.find("depth 0\t") != std::string::npos);

  r = box.run("--library case.txt export-dot lib.dot");
  REQUIRE(r.code == 0);
  CHECK(read_file(box.path("lib.dot")) == dot_text(load_library(box.path("case.txt"))));

  r = box.run("--library empty.txt init --profile empty");
  REQUIRE(r.code == 0);
  CHECK(box.run("--library empty.txt stats").out.find("tools\t0\n") == 0);
}

TEST_CASE("retrieve prints the winner and the trace") {
  Sandbox box;
  const std::string lib = "--library '" + fixture("h1_library.txt") + "' ";
  auto r = box.run(lib + "retrieve --goal '(float, float) -> float' --intent 'total spend' --budget 'O(n)' --trace");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("add\n", 0) == 0);
  CHECK(r.out.find("L1") != std::string::npos);

  // the same answer over the line protocol
  auto remote = box.run(lib + "retrieve --goal '(float, float) -> float' --intent 'total spend' --budget 'O(n)' --trace --remote '" +
                        std::string(CLI_PATH) + " --library " + fixture("h1_library.txt") + " serve-scorer'");
  REQUIRE(remote.code == 0);
  CHECK(remote.out == r.out);

  r = box.run(lib + "retrieve --goal '(str) -> bool' --intent 'nothing like this'");
  REQUIRE(r.code == 0);
  CHECK(r.out == "no match\n");
}

TEST_CASE("exit codes") {
  Sandbox box;
  CHECK(box.run("").code == 1);
  CHECK(box.run("init --no-such-flag").code == 1);
  CHECK(box.run("retrieve --intent x").code == 1);
  CHECK(box.run("--lattice sideways init").code == 1);

  auto r = box.run("stats");
  CHECK(r.code == 2);
  CHECK(r.err.find("error:") == 0);

  write_file(box.path("library.txt"), "format : 1\nthis is not a library\n");
  r = box.run("stats");
  CHECK(r.code == 2);
  CHECK(r.err.find("ParseError") != std::string::npos);

  REQUIRE(box.run("init").code == 0);
  CHECK(box.run("retrieve --goal '(int -> int' --intent x").code == 2);
  CHECK(box.run("retrieve --goal '(int) -> int' --intent x --budget 'O(whatever)'").code == 2);
  CHECK(box.run("insert missing.txt").code == 2);

  write_file(box.path("bench.json"), "{\"sizes\": [50], \"bogus\": 1}");
  CHECK(box.run("bench --config bench.json").code == 2);
}

TEST_CASE("bench writes rows and a summary") {
  Sandbox box;
  write_file(box.path("bench.json"), "{\"sizes\": [50, 100], \"queries\": 5, \"out\": \"b\"}");
  auto r = box.run("bench --config bench.json");
  REQUIRE(r.code == 0);
  auto rows = read_file(box.path("b/bench.csv"));
  CHECK(rows.rfind("substrate,n,query_id,", 0) == 0);
  // header plus three substrates, two sizes, five queries
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 1 + 3 * 2 * 5);
  CHECK(read_file(box.path("b/summary.txt")) == r.out);
  CHECK(box.run("--seed 8 bench --config bench.json").code == 0);
  CHECK(read_file(box.path("b/bench.csv")) != rows);
}
