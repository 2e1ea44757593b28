#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "tas/checkpoint.hpp"
#include "tas/dataset.hpp"
#include "tas/errors.hpp"
#include "tas/text_io.hpp"

using namespace tas;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tas_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const ClassCatalog kCatalog({"pour", "stir", "SIL"}, 2);

}  // namespace

TEST_CASE("catalog, labels, segments, transcripts and timestamps round trip") {
  const fs::path dir = scratch("text");
  io::write_catalog(dir / "mapping.txt", kCatalog);
  const ClassCatalog cat = io::read_catalog(dir / "mapping.txt");
  CHECK(cat.names() == kCatalog.names());
  CHECK(cat.background() == 2);
  CHECK(io::read_file(dir / "mapping.txt") == "pour\nstir\nSIL*\n");

  const FrameLabeling frames({2, 0, 0, 1, 1, 1, 2});
  io::write_frame_labels(dir / "f.txt", frames, cat);
  CHECK(io::read_frame_labels(dir / "f.txt", cat) == frames);

  const Segmentation seg({{2, 1}, {0, 2}, {1, 3}, {2, 1}});
  CHECK(io::format_segments(seg, cat) == "SIL\t1\npour\t2\nstir\t3\nSIL\t1\n");
  io::write_segments(dir / "s.txt", seg, cat);
  CHECK(io::read_segments(dir / "s.txt", cat) == seg);

  io::write_transcript(dir / "t.txt", Transcript({1, 0}), cat);
  CHECK(io::read_transcript(dir / "t.txt", cat) == Transcript({1, 0}));

  const pseudolabel::TimestampAnnotation ts({{0, 2}, {4, 1}});
  io::write_timestamps(dir / "ts.txt", ts, cat);
  CHECK(io::read_timestamps(dir / "ts.txt", cat).entries() == ts.entries());

  CHECK(dataset::read_labeling(dir / "f.txt", cat) == to_segments(frames));
  CHECK(dataset::read_labeling(dir / "s.txt", cat) == seg);
}

TEST_CASE("malformed files name the path and line") {
  const fs::path dir = scratch("bad");
  io::write_file_atomic(dir / "s.txt", "pour\t2\nstir\tx\n");
  try {
    io::read_segments(dir / "s.txt", kCatalog);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("s.txt:2") != std::string::npos);
  }
  io::write_file_atomic(dir / "u.txt", "pour\ncut\n");
  CHECK_THROWS_AS(io::read_frame_labels(dir / "u.txt", kCatalog), IoError);
  CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), IoError);
  io::write_file_atomic(dir / "x.bin", "TASF\x01");
  CHECK_THROWS_AS(io::read_features(dir / "x.bin"), IoError);
}

TEST_CASE("binary and csv features") {
  const fs::path dir = scratch("feat");
  Rng rng(1);
  Matrix m = oracle::random_matrix(rng, 7, 3);
  for (double& v : m.data()) v = static_cast<double>(static_cast<float>(v));
  io::write_features(dir / "a.bin", m);
  CHECK(io::read_features(dir / "a.bin") == m);
  const std::string bytes = io::read_file(dir / "a.bin");
  CHECK(bytes.size() == 4 + 4 + 4 + 7 * 3 * 4);
  CHECK(bytes.substr(0, 4) == "TASF");
  CHECK(static_cast<unsigned char>(bytes[4]) == 7);

  io::write_file_atomic(dir / "b.csv", "1,2.5\n-3,4e-1\n");
  CHECK(io::read_features(dir / "b.csv") == Matrix{{1, 2.5}, {-3, 0.4}});
  io::write_file_atomic(dir / "c.csv", "1,2\n3\n");
  CHECK_THROWS_AS(io::read_features(dir / "c.csv"), IoError);
}

TEST_CASE("key-value files") {
  const fs::path dir = scratch("kv");
  io::write_file_atomic(dir / "c.cfg", "# comment\n\nlr=0.01\nepochs = 5\n");
  const auto kv = io::read_key_values(dir / "c.cfg");
  CHECK(kv.at("lr") == "0.01");
  CHECK(kv.at("epochs") == "5");
  CHECK(io::format_key_values({{"b", "2"}, {"a", "1"}}) == "a=1\nb=2\n");
  io::write_file_atomic(dir / "d.cfg", "novalue\n");
  CHECK_THROWS_AS(io::read_key_values(dir / "d.cfg"), IoError);
}

TEST_CASE("checkpoint round trip is exact") {
  model::ModelConfig cfg;
  cfg.enc_layers = 2;
  cfg.tau_prime = 0.1 / 3.0;
  const model::Model m(cfg, 5);
  const std::string bytes = checkpoint::serialize(m, {"a", "b", "c", "d"});
  CHECK(bytes.substr(0, 8) == std::string("TASCKPT\0", 8));
  const checkpoint::Checkpoint c = checkpoint::deserialize(bytes);
  CHECK(c.class_names == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(c.config.to_map() == cfg.to_map());
  REQUIRE(c.params.all().size() == m.params().all().size());
  for (std::size_t i = 0; i < c.params.all().size(); ++i) {
    CHECK(c.params.all()[i].name == m.params().all()[i].name);
    CHECK(c.params.all()[i].value == m.params().all()[i].value);
  }
  const model::Model back(c.config, c.params);
  CHECK(checkpoint::serialize(back, c.class_names) == bytes);

  CHECK_THROWS_AS(checkpoint::deserialize(bytes.substr(0, bytes.size() - 3)), IoError);
  std::string wrong = bytes;
  wrong[0] = 'X';
  CHECK_THROWS_AS(checkpoint::deserialize(wrong), IoError);
}

TEST_CASE("dataset layout helpers") {
  const fs::path dir = scratch("ds");
  synth::SynthConfig cfg;
  cfg.seed = 8;
  const auto videos = synth::generate(cfg, 3);
  const dataset::Layout layout{dir};
  dataset::write_synth(layout, cfg, videos);
  const auto names = dataset::list_names(layout.features_dir(), {".bin", ".csv"});
  CHECK(names == std::vector<std::string>{"video_000", "video_001", "video_002"});
  const ClassCatalog cat = io::read_catalog(layout.catalog());
  CHECK(cat.size() == 4);
  CHECK(dataset::read_labeling(layout.ground_truth("video_001"), cat) == videos[1].gt);
  CHECK(io::read_timestamps(layout.timestamps("video_002"), cat).entries() == videos[2].timestamps.entries());
  const Matrix feats = io::read_features(dataset::feature_path(layout.features_dir(), "video_000"));
  CHECK(feats.rows() == videos[0].features.rows());
  CHECK(std::abs(feats(3, 2) - videos[0].features(3, 2)) < 1e-6);
  CHECK(synth::SynthConfig::from_map(io::read_key_values(dir / "synth.cfg")).to_map() == cfg.to_map());
  CHECK_THROWS_AS(dataset::list_names(dir / "nope", {".bin"}), IoError);
}
