#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tas/text_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = TAS_TEST_WORKDIR;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" TAS_CLI_PATH "\" " + args + " >>\"" + (kWork / "log.txt").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return tas::io::read_file(p); }

fs::path fresh(const std::string& name) {
  const fs::path dir = kWork / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("synth then eval of the ground truth against itself scores 100") {
  const fs::path dir = fresh("self");
  REQUIRE(run("synth --out " + q(dir / "data") + " --videos 3 --seed 5") == 0);
  const fs::path data = dir / "data";
  REQUIRE(run("eval --pred " + q(data / "groundTruth") + " --gt " + q(data / "groundTruth") + " --catalog " +
              q(data / "mapping.txt") + " --out " + q(dir / "eval")) == 0);
  CHECK(slurp(dir / "eval" / "aggregate.txt") == "acc=100.00\nedit=100.00\nf1@10=100.00\nf1@25=100.00\nf1@50=100.00\n");
  const auto man = nlohmann::json::parse(slurp(dir / "eval" / "manifest.json"));
  CHECK(man["command"] == "eval");
  CHECK(man["videos"] == 3);
  CHECK(fs::exists(dir / "eval" / "videos" / "video_002.json"));
}

TEST_CASE("exit codes") {
  const fs::path dir = fresh("codes");
  fs::create_directories(dir / "empty");
  tas::io::write_file_atomic(dir / "mapping.txt", "a\nb\n");
  CHECK(run("eval --pred " + q(dir / "empty") + " --gt " + q(dir / "empty") + " --catalog " + q(dir / "mapping.txt")) == 2);
  CHECK(run("eval --pred " + q(dir / "missing") + " --gt " + q(dir) + " --catalog " + q(dir / "mapping.txt")) == 2);
  CHECK(run("train --stage 3 --out " + q(dir / "t")) == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("") == 1);
  CHECK(run("--version") == 0);
  CHECK(run("infer --checkpoint " + q(dir / "mapping.txt") + " --features " + q(dir) + " --out " + q(dir / "o")) == 2);
}

TEST_CASE("pseudolabels on noiseless data evaluate to 100") {
  const fs::path dir = fresh("pseudo");
  tas::io::write_file_atomic(dir / "synth.cfg", "noise_sigma=0\nseed=3\n");
  REQUIRE(run("synth --out " + q(dir / "data") + " --videos 4 --config " + q(dir / "synth.cfg")) == 0);
  REQUIRE(run("pseudolabel --data " + q(dir / "data") + " --out " + q(dir / "pl") + " --jobs 2") == 0);
  REQUIRE(run("eval --pred " + q(dir / "pl") + " --gt " + q(dir / "data" / "groundTruth") + " --catalog " +
              q(dir / "data" / "mapping.txt") + " --out " + q(dir / "eval")) == 0);
  CHECK(slurp(dir / "eval" / "aggregate.txt").rfind("acc=100.00\nedit=100.00\n", 0) == 0);
  CHECK(run("pseudolabel --data " + q(dir / "data") + " --out " + q(dir / "x") + " --dist cheb") == 1);
}

TEST_CASE("train, infer and plot") {
  const fs::path dir = fresh("pipeline");
  tas::io::write_file_atomic(dir / "synth.cfg",
                             "noise_sigma=0.1\nmin_segments=2\nmax_segments=3\nmin_duration=6\nmax_duration=10\nseed=2\n");
  tas::io::write_file_atomic(dir / "model.cfg", "enc_layers=2\nwindow=7\nepochs=3\nlr=0.001\n");
  REQUIRE(run("synth --out " + q(dir / "data") + " --videos 2 --config " + q(dir / "synth.cfg")) == 0);
  const fs::path data = dir / "data";

  REQUIRE(run("train --stage 1 --data " + q(data) + " --supervision timestamp --out " + q(dir / "s1"),
              "TAS_CONFIG=" + q(dir / "model.cfg")) == 0);
  const auto man = nlohmann::json::parse(slurp(dir / "s1" / "manifest.json"));
  CHECK(man["ground_truth_read"] == false);
  CHECK(man["config"]["enc_layers"] == "2");
  CHECK(fs::exists(dir / "s1" / "loss_stage1.csv"));

  REQUIRE(run("train --stage 2 --data " + q(data) + " --init " + q(dir / "s1" / "model.ckpt") + " --config " +
              q(dir / "model.cfg") + " --out " + q(dir / "s2")) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "s2" / "manifest.json"))["ground_truth_read"] == true);

  tas::io::write_file_atomic(dir / "bad.cfg", "learning_rate=1\n");
  CHECK(run("train --stage 1 --data " + q(data) + " --config " + q(dir / "bad.cfg") + " --out " + q(dir / "bad")) == 1);

  const std::string ckpt = q(dir / "s2" / "model.ckpt");
  REQUIRE(run("infer --checkpoint " + ckpt + " --features " + q(data / "features") + " --duration none --out " +
              q(dir / "none")) == 0);
  for (const char* mode : {"alignment", "viterbi", "fifa"}) {
    INFO(mode);
    REQUIRE(run("infer --checkpoint " + ckpt + " --features " + q(data / "features") + " --fifa-epochs 100 --duration " +
                mode + " --out " + q(dir / mode)) == 0);
    for (const char* v : {"video_000", "video_001"}) {
      const tas::ClassCatalog cat = tas::io::read_catalog(data / "mapping.txt");
      const auto seg = tas::io::read_segments(dir / mode / (std::string(v) + ".txt"), cat);
      const auto tr = tas::io::read_transcript(dir / "none" / (std::string(v) + ".txt"), cat);
      CHECK(tas::actions_of(seg) == tr.actions());
      CHECK(seg.total_frames() == static_cast<int>(tas::io::read_features(data / "features" / (std::string(v) + ".bin")).rows()));
    }
  }

  REQUIRE(run("plot " + q(data / "groundTruth" / "video_000.txt") + " " + q(dir / "viterbi" / "video_000.txt") +
              " --catalog " + q(data / "mapping.txt") + " --out " + q(dir / "plot.svg")) == 0);
  const std::string svg = slurp(dir / "plot.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(fs::exists(dir / "plot.svg.manifest.json"));
}
