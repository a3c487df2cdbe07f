#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "jsi/image_io.hpp"
#include "jsi/rng.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

// Runs the CLI with stderr folded into the captured output.
Result jsi_cli(const std::string& args) {
  const std::string cmd = std::string(JSI_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Small x4 archive and a one-step pretrain checkpoint shared by several cases.
struct Fixture {
  fs::path root, data, run;
  Fixture() {
    root = testutil::scratch("cli_fixture");
    data = root / "data";
    run = root / "run";
    const auto s = jsi_cli("synth-data --seed 3 --count 4 --scale 4 --lr-size 8 --out " + q(data));
    REQUIRE_MESSAGE(s.code == 0, s.output);
    const auto t = jsi_cli("train --phase pretrain --data " + q(data) + " --out " + q(run) +
                           " --steps 1 --set features=8 --set batch=2 --set guided_radius=2");
    REQUIRE_MESSAGE(t.code == 0, t.output);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

fs::path write_input(const fs::path& dir, int side) {
  jsi::Rng rng(side);
  jsi::Tensor<double> img(jsi::Shape{1, 3, side, side});
  for (auto& v : img.values()) v = rng.uniform(0.0, 1.0);
  const fs::path p = dir / ("in" + std::to_string(side) + ".png");
  jsi::write_png(p, img, 8);
  return p;
}

}  // namespace

TEST_CASE("synth-data writes the requested archive and is reproducible") {
  const fs::path root = testutil::scratch("cli_synth");
  const auto a = jsi_cli("synth-data --seed 7 --count 16 --scale 4 --out " + q(root / "a"));
  REQUIRE_MESSAGE(a.code == 0, a.output);
  CHECK(a.output.find("16 pairs") != std::string::npos);
  CHECK(a.output.find("LR 40x40") != std::string::npos);
  CHECK(a.output.find("HR 160x160") != std::string::npos);
  const auto m = nlohmann::json::parse(slurp(root / "a" / "manifest.json"));
  CHECK(m["pairs"].size() == 16);
  CHECK(m["scale"] == 4);
  CHECK(fs::exists(root / "a" / "run.json"));

  REQUIRE(jsi_cli("synth-data --seed 7 --count 16 --scale 4 --out " + q(root / "b")).code == 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    if (e.path().filename() == "run.json") continue;
    INFO(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(root / "b" / e.path().filename()));
    ++compared;
  }
  CHECK(compared == 33);
}

TEST_CASE("synth-data refuses a non-empty directory without --force") {
  const fs::path root = testutil::scratch("cli_force");
  const std::string base = "synth-data --seed 1 --count 2 --scale 2 --lr-size 8 --out " + q(root);
  REQUIRE(jsi_cli(base).code == 0);
  const auto again = jsi_cli(base);
  CHECK(again.code == 1);
  CHECK(again.output.find("--force") != std::string::npos);
  CHECK(jsi_cli(base + " --force").code == 0);
}

TEST_CASE("bad arguments exit with the usage code") {
  const fs::path root = testutil::scratch("cli_usage");
  CHECK(jsi_cli("synth-data --scale 3 --out " + q(root / "x")).code == 1);
  CHECK(jsi_cli("no-such-command").code == 1);
  CHECK(jsi_cli("train --phase gan --data " + q(fixture().data) + " --out " + q(root / "g")).code ==
        1);
  CHECK(jsi_cli("train --phase sideways --data " + q(fixture().data) + " --out " + q(root / "s"))
            .code == 1);
  CHECK(jsi_cli("--help").code == 0);
}

TEST_CASE("train writes checkpoint, log and run record") {
  const Fixture& f = fixture();
  CHECK(fs::exists(f.run / "checkpoint" / "manifest.json"));
  CHECK(fs::exists(f.run / "run.json"));
  std::istringstream log(slurp(f.run / "log.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    ++lines;
  }
  CHECK(lines == 1);
  const auto run = nlohmann::json::parse(slurp(f.run / "run.json"));
  CHECK(run["command"].get<std::string>().rfind("train", 0) == 0);
}

TEST_CASE("train --resume continues an interrupted run losslessly") {
  const Fixture& f = fixture();
  const fs::path root = testutil::scratch("cli_resume");
  const std::string common = "train --phase pretrain --data " + q(f.data) +
                             " --steps 3 --set features=8 --set batch=2 --set guided_radius=2 --out ";
  // Sequential mode makes the comparison bitwise.
  const std::string env = "JSI_THREADS=0 ";
  auto run = [&](const std::string& args) {
    const std::string cmd = env + JSI_CLI_PATH + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  REQUIRE(run(common + q(root / "full")) == 0);
  REQUIRE(run(common + q(root / "split") + " --stop-at 1") == 0);
  REQUIRE(run(common + q(root / "split") + " --resume " + q(root / "split" / "checkpoint")) == 0);
  CHECK(slurp(root / "split" / "log.jsonl") == slurp(root / "full" / "log.jsonl"));
  for (const char* name : {"ir.conv_out.weight.jsit", "dr.head_v.weight.adam_v.jsit"}) {
    INFO(name);
    CHECK(slurp(root / "split" / "checkpoint" / name) == slurp(root / "full" / "checkpoint" / name));
  }
}

TEST_CASE("infer produces a 4x prediction and optional intermediates") {
  const Fixture& f = fixture();
  const fs::path root = testutil::scratch("cli_infer");
  const fs::path in = write_input(root, 40);
  const auto r = jsi_cli("infer --checkpoint " + q(f.run / "checkpoint") + " --input " + q(in) +
                         " --out " + q(root / "out") + " --dump-intermediates");
  REQUIRE_MESSAGE(r.code == 0, r.output);
  int bits = 0;
  const auto p = jsi::read_png(root / "out" / "prediction.png", &bits);
  CHECK(p.shape() == jsi::Shape{1, 3, 160, 160});
  CHECK(bits == 10);
  for (std::string name : {"I.png", "D.png", "C_l.png"}) {
    INFO(name);
    CHECK(jsi::read_png(root / "out" / name).shape() == jsi::Shape{1, 3, 160, 160});
  }
  // The detail layer lives at input resolution.
  CHECK(jsi::read_png(root / "out" / "X_d.png").shape() == jsi::Shape{1, 3, 40, 40});

  const auto small = jsi_cli("infer --checkpoint " + q(f.run / "checkpoint") + " --input " +
                             q(write_input(root, 16)) + " --out " + q(root / "small"));
  CHECK(small.code == 1);
  CHECK(small.output.find("at least") != std::string::npos);
}

TEST_CASE("a corrupt checkpoint is reported by file name") {
  const Fixture& f = fixture();
  const fs::path root = testutil::scratch("cli_corrupt");
  fs::copy(f.run / "checkpoint", root / "ckpt", fs::copy_options::recursive);
  const fs::path victim = root / "ckpt" / "ir.conv_out.weight.jsit";
  REQUIRE(fs::exists(victim));
  fs::resize_file(victim, fs::file_size(victim) / 2);
  const auto r = jsi_cli("infer --checkpoint " + q(root / "ckpt") + " --input " +
                         q(write_input(root, 24)) + " --out " + q(root / "out"));
  CHECK(r.code != 0);
  CHECK(r.output.find("ir.conv_out.weight.jsit") != std::string::npos);
}

TEST_CASE("eval of the reference against itself") {
  const Fixture& f = fixture();
  const fs::path root = testutil::scratch("cli_eval");
  const auto r = jsi_cli("eval --pred " + q(f.data) + " --data " + q(f.data) + " --out " + q(root));
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const auto m = nlohmann::json::parse(slurp(root / "metrics.json"));
  CHECK(m["images"].size() == 4);
  CHECK(m["mean"]["psnr_db"].is_null());
  CHECK(m["mean"]["psnr_infinite"] == true);
  CHECK(std::abs(m["mean"]["ssim"].get<double>() - 1.0) < 1e-12);

  const auto c = jsi_cli("eval --checkpoint " + q(f.run / "checkpoint") + " --data " + q(f.data) +
                         " --out " + q(root / "ck"));
  REQUIRE_MESSAGE(c.code == 0, c.output);
  CHECK(nlohmann::json::parse(slurp(root / "ck" / "metrics.json"))["mean"]["psnr_db"].is_number());
  CHECK(jsi_cli("eval --data " + q(f.data) + " --out " + q(root / "none")).code == 1);
}

TEST_CASE("param-count reports both scales") {
  const auto r2 = jsi_cli("param-count --scale 2");
  REQUIRE(r2.code == 0);
  CHECK(r2.output.find("1,491,087") != std::string::npos);
  CHECK(r2.output.find("target 1.45M, deviation +2.8%") != std::string::npos);
  const auto r4 = jsi_cli("param-count --scale 4");
  CHECK(r4.output.find("3,062,835") != std::string::npos);
  CHECK(r4.output.find("target 3.03M, deviation +1.1%") != std::string::npos);
}

TEST_CASE("gradcheck lists and runs cases") {
  const auto list = jsi_cli("gradcheck --list");
  REQUIRE(list.code == 0);
  CHECK(list.output.find("dynamic_2d_s2") != std::string::npos);
  CHECK(list.output.find("generator") != std::string::npos);
  const auto one = jsi_cli("gradcheck --op rahinge_d");
  CHECK_MESSAGE(one.code == 0, one.output);
  CHECK(jsi_cli("gradcheck --op no_such_op").code == 1);
}
