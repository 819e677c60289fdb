// End-to-end checks of the command-line surface. Each test drives the built
// binary through std::system and inspects exit codes and output files.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = LADG_CLI_PATH;
const fs::path tmp_root = LADG_TEST_TMP;

struct CommandResult {
  int exit_code;
  std::string stdout_text;
};

CommandResult run(const std::string& args) {
  const fs::path out_file = tmp_root / "cmd_stdout.txt";
  const std::string command = cli + " " + args + " > " + out_file.string() + " 2>/dev/null";
  const int raw = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WEXITSTATUS(raw);
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  result.stdout_text = ss.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TmpDir {
  TmpDir() {
    fs::remove_all(tmp_root);
    fs::create_directories(tmp_root);
  }
} tmp_dir_guard;

}  // namespace

TEST_CASE("synth writes a schema-conformant balanced moons file") {
  const fs::path out = tmp_root / "moons.csv";
  CommandResult r = run("synth --generator moons --out " + out.string() + " --seed 5");
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(out));
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header == "f0,f1,label,domain,split");
  int c0 = 0, c1 = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 5);
    (fields[2] == "0" ? c0 : c1)++;
  }
  CHECK(c0 == c1);
  const json summary = json::parse(r.stdout_text);
  CHECK(summary["classes"] == 2);
  CHECK(summary["features"] == 2);
}

TEST_CASE("synth is byte-deterministic per seed") {
  const fs::path a = tmp_root / "a.csv", b = tmp_root / "b.csv", c = tmp_root / "c.csv";
  CHECK(run("synth --generator gaussians --out " + a.string() + " --seed 9").exit_code == 0);
  CHECK(run("synth --generator gaussians --out " + b.string() + " --seed 9").exit_code == 0);
  CHECK(run("synth --generator gaussians --out " + c.string() + " --seed 10").exit_code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("unknown generator is a usage error with exit code 2") {
  CHECK(run("synth --generator fractal --out /dev/null").exit_code == 2);
}

TEST_CASE("train smoke run writes metrics, manifest, checkpoint and summary") {
  const fs::path data = tmp_root / "train_data.csv";
  REQUIRE(run("synth --generator gaussians --n-per-domain 48 --n-domains 3 --out " + data.string() +
              " --seed 4")
              .exit_code == 0);
  const fs::path cfg_path = tmp_root / "config.json";
  {
    std::ofstream f(cfg_path);
    f << json{{"method", "ladg"},
              {"pretrain_steps", 10},
              {"total_steps", 20},
              {"log_every", 5},
              {"samples_per_domain", 6},
              {"k_nn", 3},
              {"feat_hidden", 12},
              {"feat_dim", 6},
              {"disc_hidden", 12},
              {"disc_dim", 6},
              {"seed", 2}}
             .dump();
  }
  const fs::path out = tmp_root / "run1";
  CommandResult r = run("train --config " + cfg_path.string() + " --data " + data.string() +
                        " --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out / "metrics.jsonl"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "checkpoint/checkpoint.json"));
  CHECK(fs::exists(out / "checkpoint/params.txt"));

  // every metrics line parses and carries the documented fields
  std::ifstream metrics(out / "metrics.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) {
    const json rec = json::parse(line);
    CHECK(rec.contains("step"));
    CHECK(rec.contains("loss_task"));
    CHECK(rec.contains("coding_rate"));
    ++lines;
  }
  CHECK(lines == 4);

  // defaulted keys are recorded in the manifest
  const json manifest = json::parse(slurp(out / "manifest.json"));
  const auto& defaulted = manifest["_meta"]["defaulted"];
  CHECK(std::find(defaulted.begin(), defaulted.end(), "alpha") != defaulted.end());
  CHECK(manifest["pretrain_steps"] == 10);
}

TEST_CASE("flags win over config keys and the override is recorded") {
  const fs::path data = tmp_root / "train_data.csv";  // from the previous case
  const fs::path cfg_path = tmp_root / "config.json";
  const fs::path out = tmp_root / "run2";
  CommandResult r = run("train --config " + cfg_path.string() + " --data " + data.string() +
                        " --out " + out.string() + " --seed 77 --set total_steps=15");
  CHECK(r.exit_code == 0);
  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["seed"] == 77);
  CHECK(manifest["total_steps"] == 15);
  const auto& overrides = manifest["_meta"]["overrides"];
  CHECK(std::find(overrides.begin(), overrides.end(), "seed") != overrides.end());
  CHECK(std::find(overrides.begin(), overrides.end(), "total_steps") != overrides.end());
}

TEST_CASE("a run manifest reproduces the run exactly") {
  const fs::path out1 = tmp_root / "run1";
  const fs::path out3 = tmp_root / "run3";
  CommandResult r = run("train --config " + (out1 / "manifest.json").string() + " --out " + out3.string());
  CHECK(r.exit_code == 0);
  CHECK(slurp(out1 / "metrics.jsonl") == slurp(out3 / "metrics.jsonl"));
  CHECK(slurp(out1 / "checkpoint/params.txt") == slurp(out3 / "checkpoint/params.txt"));
}

TEST_CASE("unknown config keys are rejected exhaustively with exit code 2") {
  const fs::path cfg_path = tmp_root / "bad_config.json";
  {
    std::ofstream f(cfg_path);
    f << R"({"methd": "ladg", "alpha": 2.0})";
  }
  const fs::path data = tmp_root / "train_data.csv";
  CommandResult r = run("train --config " + cfg_path.string() + " --data " + data.string() +
                        " --out " + (tmp_root / "runx").string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("eval reproduces the summary eval record exactly") {
  const fs::path out = tmp_root / "run1";
  const fs::path data = tmp_root / "train_data.csv";
  CommandResult r = run("eval --checkpoint " + (out / "checkpoint").string() + " --data " +
                        data.string() + " --split ood");
  CHECK(r.exit_code == 0);
  const json eval_out = json::parse(r.stdout_text);
  const json summary = json::parse(slurp(out / "summary.json"));
  CHECK(eval_out["metric"] == summary["eval"]["ood"]["metric"]);
  CHECK(eval_out["mixing_entropy"] == summary["eval"]["ood"]["mixing_entropy"]);
  CHECK(eval_out["compactness"]["coding_rate"] == summary["eval"]["ood"]["compactness"]["coding_rate"]);
}

TEST_CASE("eval on an absent split reports an empty-split error") {
  const fs::path data2 = tmp_root / "no_ood.csv";
  REQUIRE(run("synth --generator gaussians --n-per-domain 24 --n-ood 0 --out " + data2.string())
              .exit_code == 0);
  CommandResult r = run("eval --checkpoint " + (tmp_root / "run1/checkpoint").string() +
                        " --data " + data2.string() + " --split ood");
  CHECK(r.exit_code == 1);
}

TEST_CASE("eval rejects a task-kind mismatch") {
  const fs::path reg = tmp_root / "regression.csv";
  {
    std::ofstream f(reg);
    f << "f0,f1,f2,f3,label,domain\n";
    f << "0.1,0.2,0.3,0.4,0.55,0\n";
    f << "0.2,0.1,0.4,0.3,1.25,1\n";
    f << "0.9,0.2,0.1,0.4,-0.75,0\n";
  }
  CommandResult r = run("eval --checkpoint " + (tmp_root / "run1/checkpoint").string() +
                        " --data " + reg.string() + " --split train");
  CHECK(r.exit_code == 2);
}

TEST_CASE("propagate cross-checks the iterative oracle and writes probabilities") {
  const fs::path data = tmp_root / "train_data.csv";
  const fs::path probs = tmp_root / "probs.csv";
  CommandResult r = run("propagate --features " + data.string() + " --alpha 0.8 --tau 2 --k 5 " +
                        "--iterative --out " + probs.string());
  CHECK(r.exit_code == 0);
  const json summary = json::parse(r.stdout_text);
  CHECK(summary["iterative"]["max_abs_gap"].get<double>() <= 1e-6);
  REQUIRE(fs::exists(probs));
  std::ifstream f(probs);
  std::string header;
  std::getline(f, header);
  CHECK(header == "domain,p0,p1,p2,p3");
}

TEST_CASE("propagation with alpha near one still converges, using more steps") {
  // tiny single-cluster file keeps the long iteration affordable
  const fs::path data = tmp_root / "tiny.csv";
  {
    std::ofstream f(data);
    f << "f0,f1,label,domain\n";
    f << "1.0,0.1,0,0\n1.1,0.2,0,1\n0.9,0.15,0,0\n1.05,0.12,0,1\n1.02,0.2,0,0\n0.95,0.05,0,1\n";
  }
  CommandResult fast =
      run("propagate --features " + data.string() + " --alpha 0.8 --k 2 --iterative --tol 1e-10");
  REQUIRE(fast.exit_code == 0);
  const int fast_steps = json::parse(fast.stdout_text)["iterative"]["steps"].get<int>();

  CommandResult slow = run("propagate --features " + data.string() +
                           " --alpha 0.999999 --k 2 --iterative --max-steps 100000000 --tol 1e-10");
  REQUIRE(slow.exit_code == 0);
  const json slow_summary = json::parse(slow.stdout_text);
  const int slow_steps = slow_summary["iterative"]["steps"].get<int>();
  CHECK(slow_steps > 2 * fast_steps);
  CHECK(slow_summary["iterative"]["max_abs_gap"].get<double>() <= 1e-6);
}

TEST_CASE("single-domain input yields identical unit probability rows") {
  const fs::path data = tmp_root / "single_domain.csv";
  {
    std::ofstream f(data);
    f << "f0,f1,label,domain\n";
    f << "1.0,0.1,0,0\n0.5,0.9,1,0\n0.7,0.7,0,0\n0.2,0.8,1,0\n";
  }
  const fs::path probs = tmp_root / "single_probs.csv";
  CommandResult r = run("propagate --features " + data.string() + " --k 2 --out " + probs.string());
  CHECK(r.exit_code == 0);
  std::ifstream f(probs);
  std::string line;
  std::getline(f, line);
  CHECK(line == "domain,p0");
  while (std::getline(f, line)) CHECK(line == "0,1");
}

TEST_CASE("compactness report flags a missing label column and matches known values") {
  const fs::path feats = tmp_root / "identical.csv";
  {
    std::ofstream f(feats);
    f << "f0,f1,f2,f3,domain\n";
    for (int i = 0; i < 5; ++i) f << "0.5,0,0,0," << i % 2 << "\n";
  }
  CommandResult r = run("compactness --features " + feats.string() + " --k 3 --epsilon 0.5");
  CHECK(r.exit_code == 0);
  const json report = json::parse(r.stdout_text);
  CHECK(report["v_k"] == 3.0);
  CHECK(report["classwise_rate"].is_null());
  CHECK(report.contains("note"));
  // rank-1 closed form: 1/2 log(1 + 4 / 0.25)
  CHECK(report["coding_rate"].get<double>() == doctest::Approx(0.5 * std::log(17.0)).epsilon(1e-9));
}

TEST_CASE("duplicated rows score a lower coding rate than a full-rank file") {
  const fs::path full = tmp_root / "full.csv";
  const fs::path dup = tmp_root / "dup.csv";
  {
    std::ofstream f(full);
    f << "f0,f1,f2,label,domain\n";
    f << "1,0.2,0.3,0,0\n0.1,1,0.1,1,0\n0.3,0.2,1,0,0\n0.9,0.8,0.1,1,0\n";
    std::ofstream g(dup);
    g << "f0,f1,f2,label,domain\n";
    g << "1,0.2,0.3,0,0\n1,0.2,0.3,1,0\n1,0.2,0.3,0,0\n1,0.2,0.3,1,0\n";
  }
  const double r_full =
      json::parse(run("compactness --features " + full.string()).stdout_text)["coding_rate"];
  const double r_dup =
      json::parse(run("compactness --features " + dup.string()).stdout_text)["coding_rate"];
  CHECK(r_dup < r_full);
}

TEST_CASE("compactness series over training feature dumps") {
  const fs::path data = tmp_root / "train_data.csv";
  const fs::path out = tmp_root / "run_dumps";
  REQUIRE(run("train --config " + (tmp_root / "config.json").string() + " --data " + data.string() +
              " --out " + out.string() + " --dump-features 5")
              .exit_code == 0);
  const fs::path series = tmp_root / "series.jsonl";
  CommandResult r = run("compactness --series " + (out / "features").string() + " --out " + series.string());
  CHECK(r.exit_code == 0);
  std::ifstream f(series);
  std::string line;
  int prev_step = 0, lines = 0;
  while (std::getline(f, line)) {
    const json rec = json::parse(line);
    CHECK(rec["step"].get<int>() > prev_step);
    prev_step = rec["step"];
    CHECK(rec.contains("coding_rate"));
    ++lines;
  }
  CHECK(lines == 4);
}

TEST_CASE("compactness accepts a custom label column name") {
  const fs::path feats = tmp_root / "custom_label.csv";
  {
    std::ofstream f(feats);
    f << "f0,f1,cls,domain\n1,0.2,0,0\n0.1,1,1,0\n0.3,0.2,0,1\n0.9,0.8,1,1\n";
  }
  CommandResult r = run("compactness --features " + feats.string() + " --labels cls --k 2");
  CHECK(r.exit_code == 0);
  CHECK_FALSE(json::parse(r.stdout_text)["classwise_rate"].is_null());
  CHECK(run("compactness --features " + feats.string() + " --labels nope --k 2").exit_code == 2);
}

TEST_CASE("pca export writes a two-column embedding") {
  const fs::path data = tmp_root / "train_data.csv";
  const fs::path pca = tmp_root / "embed.csv";
  CommandResult r = run("compactness --features " + data.string() + " --pca " + pca.string());
  CHECK(r.exit_code == 0);
  std::ifstream f(pca);
  std::string header;
  std::getline(f, header);
  CHECK(header == "x,y,label,domain");
}

TEST_CASE("missing subcommand or bad flags exit with code 2") {
  CHECK(run("").exit_code == 2);
  CHECK(run("train --no-such-flag").exit_code == 2);
}
