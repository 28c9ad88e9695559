#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return IBG_CLI_PATH; }

int run(const std::string& args) {
  std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>/tmp/ibg_cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string stderr_text() {
  std::ifstream in("/tmp/ibg_cli_stderr.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::path("/tmp") / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream cfg(dir / "config.json");
    cfg << R"({
      "data": {"size": 70, "seed": 13},
      "model": {"high_dim": 16, "low_dim": 4},
      "train": {"epochs": 2, "batch_size": 8},
      "attribution": {"smoothgrad_samples": 2, "ig_steps": 4},
      "faithfulness": {"k_max": 2},
      "sweep": {"axis": "alpha", "values": [0.0, 0.5, 1.0]},
      "paths": {"out": ")" << (dir / "out").string() << R"("}
    })";
  }
  std::string config() const { return (dir / "config.json").string(); }
  fs::path out() const { return dir / "out"; }
};

std::map<std::string, std::string> payloads(const fs::path& out) {
  std::map<std::string, std::string> got;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (entry.is_regular_file()) got[entry.path().lexically_relative(out).string()] = slurp(entry.path());
  }
  return got;
}

}  // namespace

TEST_CASE("cli pipeline end to end, rerun is byte-identical") {
  Workspace ws("ibg_cli_e2e");
  std::string base_args = "--config " + ws.config();

  REQUIRE(run("gen-data " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "corpus.jsonl"));
  REQUIRE(fs::exists(ws.out() / "audit.json"));
  REQUIRE(fs::exists(ws.out() / "config.lock.json"));

  REQUIRE(run("train --phase base " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "base.ckpt.json"));
  REQUIRE(fs::exists(ws.out() / "curves_base.csv"));

  REQUIRE(run("train --phase ibg " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "ibg.ckpt.json"));

  REQUIRE(run("explain --method ibg " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "explanations.jsonl"));

  REQUIRE(run("eval-faithfulness --method ibg " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "faithfulness_ibg.csv"));

  REQUIRE(run("analyze-dims " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "dim_importance.csv"));
  REQUIRE(fs::exists(ws.out() / "dim_masking.csv"));

  REQUIRE(run("sweep " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "sweep_alpha.csv"));

  REQUIRE(run("report " + base_args) == 0);
  REQUIRE(fs::exists(ws.out() / "curves_base.svg"));
  REQUIRE(fs::exists(ws.out() / "sweep_alpha.svg"));
  REQUIRE(fs::exists(ws.out() / "dim_frequency.svg"));

  // rerun every command from the emitted lock file: outputs must not change
  auto before = payloads(ws.out());
  std::string lock_args = "--config " + (ws.out() / "config.lock.json").string();
  REQUIRE(run("gen-data " + lock_args) == 0);
  REQUIRE(run("train --phase base " + lock_args) == 0);
  REQUIRE(run("train --phase ibg " + lock_args) == 0);
  REQUIRE(run("explain " + lock_args) == 0);
  REQUIRE(run("eval-faithfulness " + lock_args) == 0);
  REQUIRE(run("analyze-dims " + lock_args) == 0);
  REQUIRE(run("sweep " + lock_args) == 0);
  REQUIRE(run("report " + lock_args) == 0);
  auto after = payloads(ws.out());
  REQUIRE(before.size() == after.size());
  for (const auto& [name, text] : before) {
    INFO("payload " << name);
    CHECK(after.at(name) == text);
  }
}

TEST_CASE("cli: alpha endpoint of the sweep equals the simple-gradient report") {
  Workspace ws("ibg_cli_alpha");
  std::string base_args = "--config " + ws.config();
  REQUIRE(run("gen-data " + base_args) == 0);
  REQUIRE(run("train --phase base " + base_args) == 0);
  REQUIRE(run("train --phase ibg " + base_args) == 0);
  REQUIRE(run("sweep " + base_args) == 0);
  REQUIRE(run("eval-faithfulness --method simple " + base_args) == 0);

  // sweep row alpha=0: aopc column must equal the simple-gradient aopc
  std::string sweep = slurp(ws.out() / "sweep_alpha.csv");
  std::string faith = slurp(ws.out() / "faithfulness_simple.csv");
  auto row_field = [](const std::string& csv, const std::string& prefix, int col) {
    std::istringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
      if (line.rfind(prefix, 0) == 0) {
        std::istringstream ls(line);
        std::string field;
        for (int i = 0; i <= col; ++i) std::getline(ls, field, ',');
        return field;
      }
    }
    return std::string();
  };
  std::string sweep_aopc = row_field(sweep, "alpha,0,", 4);
  std::string simple_aopc = row_field(faith, "simple,", 4);
  REQUIRE_FALSE(sweep_aopc.empty());
  CHECK(sweep_aopc == simple_aopc);
}

TEST_CASE("cli: distinct exit codes per error category") {
  Workspace ws("ibg_cli_errors");
  std::string base_args = "--config " + ws.config();

  // missing corpus file
  CHECK(run("train --phase base " + base_args) == 1);
  CHECK(stderr_text().find("category=io") != std::string::npos);

  REQUIRE(run("gen-data " + base_args) == 0);
  REQUIRE(run("train --phase base " + base_args) == 0);

  // config conflict: bottleneck as wide as the embedding
  CHECK(run("train --phase ibg --set model.low_dim=16 " + base_args) == 3);
  CHECK(stderr_text().find("category=config") != std::string::npos);

  // unknown config key
  CHECK(run("gen-data --set nonsense.key=1 " + base_args) == 3);

  // malformed config file
  std::ofstream bad(ws.dir / "bad.json");
  bad << "{nope";
  bad.close();
  CHECK(run("gen-data --config " + (ws.dir / "bad.json").string()) == 2);
  CHECK(stderr_text().find("category=parse") != std::string::npos);

  // corrupt checkpoint file
  std::ofstream ck(ws.out() / "base.ckpt.json", std::ios::trunc);
  ck << "{\"format_version\": 99}";
  ck.close();
  CHECK(run("train --phase ibg " + base_args) == 4);
  CHECK(stderr_text().find("category=format") != std::string::npos);
}

TEST_CASE("cli: IBG_OUT_DIR override is honored, flags beat it") {
  Workspace ws("ibg_cli_env");
  fs::path env_out = ws.dir / "env_out";
  std::string cmd = std::string("IBG_OUT_DIR=") + env_out.string() + " " + cli_path() +
                    " gen-data --config " + ws.config() + " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(env_out / "corpus.jsonl"));

  fs::path flag_out = ws.dir / "flag_out";
  std::string cmd2 = std::string("IBG_OUT_DIR=") + (ws.dir / "ignored").string() + " " +
                     cli_path() + " gen-data --config " + ws.config() + " --out " +
                     flag_out.string() + " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd2.c_str())) == 0);
  CHECK(fs::exists(flag_out / "corpus.jsonl"));
  CHECK_FALSE(fs::exists(ws.dir / "ignored"));
}
