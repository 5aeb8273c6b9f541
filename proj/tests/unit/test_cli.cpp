#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = CROSSFUZZ_CLI;
const std::string kData = std::string(CROSSFUZZ_SOURCE_DIR) + "/data";

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("crossfuzz_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) n += !l.empty();
  return n;
}

const std::string kBackends = " --backends liba=ref:stable --backends libb=ref:ftz";

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("") == 2);
  CHECK(run("nosuchcommand") == 2);
  CHECK(run("match --corpus " + kData + "/lookalikes/pytorch.jsonl --out /tmp/x.jsonl") == 2);
  CHECK(run("fuzz --groups " + kData + "/refops/groups.jsonl --out /tmp/x") == 2);
  CHECK(run("fuzz --groups " + kData + "/refops/groups.jsonl --backends bad --out /tmp/x") == 2);
  CHECK(run("fuzz --groups /nonexistent.jsonl" + kBackends + " --out /tmp/x") != 0);
}

TEST_CASE("match writes groups and stats") {
  const auto dir = scratch("match");
  std::string args = "match --reference pytorch --out " + (dir / "groups.jsonl").string();
  for (const char* lib : {"pytorch", "tensorflow", "keras", "chainer", "jax"})
    args += " --corpus " + kData + "/lookalikes/" + lib + ".jsonl";
  REQUIRE(run(args) == 0);
  CHECK(lines(dir / "groups.jsonl") == 1);
  const auto stats = nlohmann::json::parse(slurp(dir / "groups.jsonl.stats.json"));
  CHECK(stats["stage3"] == 4);
  fs::remove_all(dir);
}

TEST_CASE("disjoint corpora give no groups") {
  const auto dir = scratch("disjoint");
  std::ofstream(dir / "a.jsonl") << R"({"source":"a","name":"a.conv2d","description":"2-D convolution.","params":[{"name":"x","type":"Tensor"}]})"
                                 << "\n";
  std::ofstream(dir / "b.jsonl") << R"({"source":"b","name":"b.qr","description":"QR decomposition.","params":[{"name":"m","type":"Tensor"}]})"
                                 << "\n";
  REQUIRE(run("match --corpus " + (dir / "a.jsonl").string() + " --corpus " + (dir / "b.jsonl").string() +
              " --out " + (dir / "g.jsonl").string()) == 0);
  CHECK(lines(dir / "g.jsonl") == 0);

  REQUIRE(run("fuzz --groups " + (dir / "g.jsonl").string() + kBackends + " --out " + (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "findings.jsonl"));
  CHECK(lines(dir / "run" / "findings.jsonl") == 0);
  fs::remove_all(dir);
}

TEST_CASE("fuzz output is reproducible across job counts") {
  const auto dir = scratch("fuzz");
  const std::string common = "fuzz --groups " + kData + "/refops/groups.jsonl" + kBackends + " --config " + kData +
                             "/refops/demo.conf";
  REQUIRE(run(common + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run(common + " --jobs 4 --out " + (dir / "b").string()) == 0);
  for (const char* f : {"findings.jsonl", "summary.jsonl"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  CHECK(lines(dir / "a" / "findings.jsonl") > 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["master_seed"] == 7);
  CHECK(manifest["inputs"].size() >= 1);

  CHECK(run("replay --groups " + kData + "/refops/groups.jsonl" + kBackends + " --finding " +
            (dir / "a" / "findings.jsonl").string()) == 0);
  CHECK(run("verify --groups " + kData + "/refops/groups.jsonl" + kBackends) == 0);
  fs::remove_all(dir);
}
