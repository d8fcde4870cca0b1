#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "ramsel/dataset.hpp"
#include "ramsel/synthetic.hpp"

using namespace ramsel;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ramsel_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

const std::string kData = (fs::path(RAMSEL_SOURCE_DIR) / "data" / "example" / "panel.csv").string();
const std::string kMeta = (fs::path(RAMSEL_SOURCE_DIR) / "data" / "example" / "metadata.csv").string();

}  // namespace

TEST_CASE("parse errors and help") {
  CHECK(run({}).code == cli::kExitConfigError);
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({"nowcast", "--bogus"}).code == cli::kExitConfigError);
  CHECK(run({"teleport"}).code == cli::kExitConfigError);
  const Result missing = run({"nowcast", "--data", "/nonexistent/panel.csv", "--metadata", kMeta});
  CHECK(missing.code == cli::kExitConfigError);
  CHECK_FALSE(missing.err.empty());
}

TEST_CASE("simulate") {
  TempDir a("sim_a");
  TempDir b("sim_b");
  const std::vector<std::string> common{"simulate", "--preset", "single", "--n", "20", "--t", "30", "--s", "5",
                                        "--seed", "42", "--alpha-count", "10"};
  auto args_a = common;
  args_a.insert(args_a.end(), {"--reps", "3", "--out", a.path.string()});
  auto args_b = common;
  args_b.insert(args_b.end(), {"--reps", "3", "--out", b.path.string(), "--threads", "2"});
  const Result ra = run(args_a);
  INFO(ra.err);
  REQUIRE(ra.code == cli::kExitOk);
  REQUIRE(run(args_b).code == cli::kExitOk);
  CHECK(fs::exists(a / "mc_report.csv"));
  CHECK(slurp(a / "mc_report.csv") == slurp(b / "mc_report.csv"));
  const std::string manifest = slurp(a / "manifest.txt");
  CHECK(manifest.find("seed=42") != std::string::npos);
  CHECK(manifest.find("simulate.reps=3") != std::string::npos);

  auto one = common;
  one.insert(one.end(), {"--reps", "1", "--out", a.path.string()});
  const Result r1 = run(one);
  CHECK(r1.code == cli::kExitOk);
  CHECK(r1.err.find("warning") != std::string::npos);

  auto bad = common;
  bad.insert(bad.end(), {"--reps", "2", "--s", "50", "--out", a.path.string()});
  CHECK(run(bad).code == cli::kExitConfigError);
}

TEST_CASE("screen and fit on the example panel") {
  TempDir d("fit");
  const Result s = run({"screen", "--data", kData, "--metadata", kMeta, "--week", "9", "--out", d.path.string()});
  INFO(s.err);
  CHECK(s.code == cli::kExitOk);
  CHECK(fs::exists(d / "screen.csv"));
  const Result f = run({"fit", "--data", kData, "--metadata", kMeta, "--week", "13", "--out", d.path.string()});
  CHECK(f.code == cli::kExitOk);
  CHECK(fs::exists(d / "coefficients.csv"));
  CHECK(fs::exists(d / "gcv_path.csv"));
  CHECK(run({"fit", "--data", kData, "--metadata", kMeta, "--week", "14", "--out", d.path.string()}).code ==
        cli::kExitConfigError);
  CHECK(run({"fit", "--data", kData, "--metadata", kMeta, "--alpha-lo", "0", "--out", d.path.string()}).code ==
        cli::kExitConfigError);
}

TEST_CASE("nowcast") {
  TempDir d("nowcast");
  SUBCASE("single week") {
    const Result r = run({"nowcast", "--data", kData, "--metadata", kMeta, "--weeks", "5", "--variants",
                          "ridge_after_selection,officials_only", "--out", d.path.string()});
    INFO(r.err);
    REQUIRE(r.code == cli::kExitOk);
    const std::string csv = slurp(d / "rmsfe.csv");
    CHECK(csv.rfind("variant,M5,best_M5\n", 0) == 0);
    CHECK(fs::exists(d / "nowcasts.csv"));
    CHECK(r.out.find("M5") != std::string::npos);
  }

  SUBCASE("officials_only without official series") {
    SyntheticPanelConfig cfg;
    cfg.first = Quarter(2000, 1);
    cfg.last = Quarter(2009, 4);
    cfg.soft = 0;
    cfg.hard = 0;
    save_panel(make_synthetic_panel(cfg), d / "data.csv", d / "meta.csv");
    const Result r = run({"nowcast", "--data", d / "data.csv", "--metadata", d / "meta.csv", "--variants",
                          "officials_only", "--out", d.path.string()});
    CHECK(r.code == cli::kExitConfigError);
    CHECK(r.err.find("officials_only") != std::string::npos);
  }

  SUBCASE("configuration file with a flag override") {
    {
      std::ofstream cfg(d / "run.toml");
      cfg << "[nowcast]\nweeks = [4, 8]\ntau = 0.2\nvariants = [\"officials_only\"]\n";
    }
    const Result r = run({"--config", d / "run.toml", "nowcast", "--data", kData, "--metadata", kMeta, "--tau",
                          "0.05", "--out", d.path.string()});
    INFO(r.err);
    REQUIRE(r.code == cli::kExitOk);
    CHECK(slurp(d / "rmsfe.csv").rfind("variant,M4,M8,", 0) == 0);
    const std::string manifest = slurp(d / "manifest.txt");
    CHECK(manifest.find("nowcast.tau=0.05") != std::string::npos);
  }

  SUBCASE("too little history") {
    const Result r = run({"nowcast", "--data", kData, "--metadata", kMeta, "--oos-start", "1995Q3", "--out",
                          d.path.string()});
    CHECK(r.code == cli::kExitConfigError);
  }
}

TEST_CASE("verify") {
  TempDir d("verify");
  const Result r = run({"verify", "--only", "sure-screening", "--sure-reps", "30", "--min-sure-frequency", "0.8",
                        "--seed", "3", "--out", d.path.string()});
  INFO(r.err);
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(fs::exists(d / "verify.csv"));
  const Result strict = run({"verify", "--only", "sure-screening", "--sure-reps", "30", "--min-sure-frequency",
                             "1.5", "--seed", "3", "--out", d.path.string()});
  CHECK(strict.code == cli::kExitVerificationFailed);
  CHECK(strict.out.find("FAIL") != std::string::npos);
  CHECK(run({"verify", "--only", "everything", "--out", d.path.string()}).code == cli::kExitConfigError);
}
