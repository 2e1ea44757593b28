#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tas/checkpoint.hpp"
#include "tas/dataset.hpp"
#include "tas/errors.hpp"
#include "tas/inference.hpp"
#include "tas/metrics.hpp"
#include "tas/plot.hpp"
#include "tas/pseudolabel.hpp"
#include "tas/synth.hpp"
#include "tas/text_io.hpp"
#include "tas/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace tas;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kConfigEnv = "TAS_CONFIG";

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3 };

class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv) : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    ordered_json args = ordered_json::array();
    for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
    j_["argv"] = args;
    j_["version"] = kVersion;
    j_["compiler"] = __VERSION__;
    j_["inputs"] = ordered_json::array();
    j_["outputs"] = ordered_json::array();
  }

  ordered_json& operator[](const char* key) { return j_[key]; }
  void input(const fs::path& p) { j_["inputs"].push_back(p.lexically_normal().string()); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.lexically_normal().string()); }

  void write(const fs::path& path) {
    j_["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_file_atomic(path, j_.dump(2) + "\n");
  }

 private:
  ordered_json j_;
  std::chrono::steady_clock::time_point start_;
};

ordered_json to_json(const std::map<std::string, std::string>& kv) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- synth ----

struct SynthArgs {
  std::string out;
  std::string config;
  int videos = 5;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& a, Manifest& man) {
  synth::SynthConfig cfg;
  if (!a.config.empty()) {
    cfg = synth::SynthConfig::from_map(io::read_key_values(a.config));
    man.input(a.config);
  }
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  const auto videos = synth::generate(cfg, a.videos);
  dataset::Layout layout{a.out};
  for (const auto& p : dataset::write_synth(layout, cfg, videos)) man.output(p);
  man["config"] = to_json(cfg.to_map());
  man["seed"] = cfg.seed;
  man.write(layout.root / "manifest.json");
  std::printf("wrote %d videos to %s\n", a.videos, a.out.c_str());
  return kOk;
}

// ---- eval ----

struct EvalArgs {
  std::string pred, gt, catalog, out, ignore;
  bool ignore_background = false;
  int jobs = 1;
};

int run_eval(const EvalArgs& a, Manifest& man) {
  const ClassCatalog catalog = io::read_catalog(a.catalog);
  man.input(a.catalog);
  metrics::EvalOptions opt;
  if (!a.ignore.empty()) opt.ignore = catalog.id(a.ignore);
  if (a.ignore_background) {
    if (!catalog.background()) throw InvalidArgument("catalog has no background class");
    opt.ignore = catalog.background();
  }
  const std::vector<std::string> names = dataset::list_names(a.pred, {".txt"});
  std::vector<std::optional<metrics::VideoScores>> scores(names.size());
  for (const auto& n : names) {
    const fs::path g = fs::path(a.gt) / (n + ".txt");
    if (!fs::exists(g)) throw IoError(g.string() + ": missing ground-truth file");
  }
  parallel_for(names.size(), a.jobs, [&](std::size_t i) {
    const Segmentation pred = dataset::read_labeling(fs::path(a.pred) / (names[i] + ".txt"), catalog);
    const Segmentation gt = dataset::read_labeling(fs::path(a.gt) / (names[i] + ".txt"), catalog);
    scores[i] = metrics::score_video(to_frames(pred), to_frames(gt), opt);
  });
  metrics::Aggregate agg;
  ordered_json per_video = ordered_json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    man.input(fs::path(a.pred) / (names[i] + ".txt"));
    man.input(fs::path(a.gt) / (names[i] + ".txt"));
    agg.add(*scores[i]);
    per_video[names[i]] = ordered_json::parse(scores[i]->report().to_json());
  }
  const metrics::MetricReport report = agg.report();
  if (!a.out.empty()) {
    const fs::path out(a.out);
    for (std::size_t i = 0; i < names.size(); ++i) {
      const fs::path p = out / "videos" / (names[i] + ".json");
      io::write_file_atomic(p, scores[i]->report().to_json() + "\n");
      man.output(p);
    }
    io::write_file_atomic(out / "aggregate.json", report.to_json() + "\n");
    io::write_file_atomic(out / "aggregate.txt", report.to_key_value());
    man.output(out / "aggregate.json");
    man.output(out / "aggregate.txt");
    man["videos"] = names.size();
    man.write(out / "manifest.json");
  }
  std::fputs(report.to_key_value().c_str(), stdout);
  return kOk;
}

// ---- pseudolabel ----

struct PseudoArgs {
  std::string data, features, timestamps, catalog, out;
  std::string dist = "euclidean";
  bool unconstrained = false;
  int max_iters = 50;
  int jobs = 1;
};

int run_pseudolabel(const PseudoArgs& a, Manifest& man) {
  dataset::Layout layout{a.data};
  const fs::path features = !a.features.empty() ? fs::path(a.features) : layout.features_dir();
  const fs::path stamps = !a.timestamps.empty() ? fs::path(a.timestamps) : layout.timestamps_dir();
  const fs::path catalog_path = !a.catalog.empty() ? fs::path(a.catalog) : layout.catalog();
  if (a.data.empty() && (a.features.empty() || a.timestamps.empty() || a.catalog.empty())) {
    throw InvalidArgument("pass --data or all of --features, --timestamps and --catalog");
  }
  const ClassCatalog catalog = io::read_catalog(catalog_path);
  man.input(catalog_path);
  pseudolabel::KMedoidsOptions opt;
  opt.dist = pseudolabel::parse_distance(a.dist);
  opt.max_iters = a.max_iters;

  const std::vector<std::string> names = dataset::list_names(features, {".bin", ".csv"});
  std::vector<std::string> outputs(names.size());
  parallel_for(names.size(), a.jobs, [&](std::size_t i) {
    const FeatureSequence x = io::read_features(dataset::feature_path(features, names[i]));
    const auto ts = io::read_timestamps(stamps / (names[i] + ".txt"), catalog);
    ts.check_frames(static_cast<int>(x.rows()));
    const Segmentation seg = a.unconstrained ? to_segments(pseudolabel::unconstrained_kmedoids(x, ts, opt))
                                             : pseudolabel::constrained_kmedoids(x, ts, opt);
    outputs[i] = io::format_segments(seg, catalog);
  });
  const fs::path out(a.out);
  for (std::size_t i = 0; i < names.size(); ++i) {
    man.input(dataset::feature_path(features, names[i]));
    man.input(stamps / (names[i] + ".txt"));
    io::write_file_atomic(out / (names[i] + ".txt"), outputs[i]);
    man.output(out / (names[i] + ".txt"));
  }
  man["config"] = {{"dist", a.dist}, {"constrained", !a.unconstrained}, {"max_iters", a.max_iters}};
  man.write(out / "manifest.json");
  std::printf("wrote %zu segmentations to %s\n", names.size(), a.out.c_str());
  return kOk;
}

// ---- train ----

struct TrainArgs {
  int stage = 1;
  std::string data, synth_config, config, out, init;
  std::string supervision = "full";
  int videos = 5;
  std::optional<std::uint64_t> seed;
};

std::set<std::string> known_config_keys() {
  std::set<std::string> keys;
  for (const auto& [k, v] : model::ModelConfig{}.to_map()) keys.insert(k);
  for (const auto& [k, v] : train::TrainConfig{}.to_map()) keys.insert(k);
  return keys;
}

struct LoadedData {
  std::vector<train::TrainingVideo> videos;
  ClassCatalog catalog;
};

LoadedData load_training_data(const TrainArgs& a, const pseudolabel::KMedoidsOptions& km, dataset::ReadLog& log) {
  const bool timestamps = a.supervision == "timestamp";
  LoadedData d;
  if (!a.synth_config.empty()) {
    log.add(a.synth_config);
    const synth::SynthConfig sc = synth::SynthConfig::from_map(io::read_key_values(a.synth_config));
    d.catalog = dataset::synth_catalog(sc.num_classes);
    for (auto& v : synth::generate(sc, a.videos)) {
      FrameLabeling labels = timestamps ? to_frames(pseudolabel::constrained_kmedoids(v.features, v.timestamps, km))
                                        : to_frames(v.gt);
      d.videos.push_back({v.name, std::move(v.features), std::move(labels)});
    }
    return d;
  }
  const dataset::Layout layout{a.data};
  d.catalog = io::read_catalog(layout.catalog());
  log.add(layout.catalog());
  for (const auto& name : dataset::list_names(layout.features_dir(), {".bin", ".csv"})) {
    const fs::path fp = dataset::feature_path(layout.features_dir(), name);
    log.add(fp);
    FeatureSequence x = io::read_features(fp);
    std::optional<FrameLabeling> labels;
    if (timestamps) {
      log.add(layout.timestamps(name));
      const auto ts = io::read_timestamps(layout.timestamps(name), d.catalog);
      ts.check_frames(static_cast<int>(x.rows()));
      labels = to_frames(pseudolabel::constrained_kmedoids(x, ts, km));
    } else {
      log.add(layout.ground_truth(name));
      labels = io::read_frame_labels(layout.ground_truth(name), d.catalog);
    }
    d.videos.push_back({name, std::move(x), std::move(*labels)});
  }
  return d;
}

std::string csv_log(const std::vector<train::EpochLog>& log) {
  std::string out = "stage,epoch,loss,frame,segment,group_frame,group_segment,cross_attention\n";
  char buf[512];
  for (const auto& l : log) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", l.stage, l.epoch, l.loss,
                  l.parts.frame, l.parts.segment, l.parts.group_frame, l.parts.group_segment,
                  l.parts.cross_attention);
    out += buf;
  }
  return out;
}

int run_train(const TrainArgs& a, Manifest& man) {
  if (a.data.empty() == a.synth_config.empty()) throw InvalidArgument("pass exactly one of --data and --synth");
  if (a.supervision != "full" && a.supervision != "timestamp") {
    throw InvalidArgument("--supervision must be full or timestamp");
  }
  if (a.stage == 2 && a.init.empty()) throw InvalidArgument("stage 2 needs --init <stage-1 checkpoint>");

  std::string config_path = a.config;
  if (config_path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) config_path = env;
  }
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) {
    kv = io::read_key_values(config_path);
    man.input(config_path);
    const auto known = known_config_keys();
    for (const auto& [k, v] : kv) {
      if (!known.count(k)) throw InvalidArgument(config_path + ": unknown config key '" + k + "'");
    }
  }
  train::TrainConfig tc = train::TrainConfig::from_map(kv);
  if (a.seed) tc.seed = *a.seed;

  dataset::ReadLog log;
  const LoadedData data = load_training_data(a, {}, log);
  if (data.videos.empty()) throw IoError("no training videos");
  const int input_dim = static_cast<int>(data.videos.front().features.cols());

  const fs::path out(a.out);
  std::optional<model::Model> m;
  if (a.stage == 1) {
    kv.try_emplace("input_dim", std::to_string(input_dim));
    kv.try_emplace("num_classes", std::to_string(data.catalog.size()));
    const model::ModelConfig mc = model::ModelConfig::from_map(kv);
    if (mc.input_dim != input_dim) throw InvalidArgument("config input_dim does not match the features");
    if (mc.num_classes != static_cast<int>(data.catalog.size())) {
      throw InvalidArgument("config num_classes does not match the catalog");
    }
    m.emplace(mc, splitmix64(tc.seed));
  } else {
    checkpoint::Checkpoint ck = checkpoint::load(a.init);
    man.input(a.init);
    if (ck.class_names != data.catalog.names()) throw InvalidArgument("checkpoint classes do not match the data");
    m.emplace(ck.config, std::move(ck.params));
  }

  auto progress = [](const train::EpochLog& l) {
    if (l.epoch == 1 || l.epoch % 10 == 0) std::fprintf(stderr, "stage %d epoch %d loss %.6f\n", l.stage, l.epoch, l.loss);
  };
  const fs::path ckpt = out / "model.ckpt";
  const fs::path csv = out / ("loss_stage" + std::to_string(a.stage) + ".csv");
  try {
    const train::TrainResult r = a.stage == 1 ? train::train_stage1(*m, data.videos, tc, progress)
                                              : train::train_stage2(*m, data.videos, tc, progress);
    io::write_file_atomic(csv, csv_log(r.log));
  } catch (const NumericError&) {
    // Parameters were rolled back to the last finite epoch.
    checkpoint::save(ckpt, *m, data.catalog.names());
    throw;
  }
  checkpoint::save(ckpt, *m, data.catalog.names());
  man.output(ckpt);
  man.output(csv);

  ordered_json cfg = to_json(m->config().to_map());
  for (const auto& [k, v] : tc.to_map()) cfg[k] = v;
  man["config"] = cfg;
  man["seed"] = tc.seed;
  man["stage"] = a.stage;
  man["supervision"] = a.supervision;
  const auto read = log.sorted();
  man["files_read"] = read;
  bool touched_gt = false;
  for (const auto& p : read) touched_gt |= fs::path(p).parent_path().filename() == "groundTruth";
  man["ground_truth_read"] = touched_gt;
  man.write(out / "manifest.json");
  std::printf("wrote %s\n", ckpt.string().c_str());
  return kOk;
}

// ---- infer ----

struct InferArgs {
  std::string checkpoint, features, out;
  std::string duration = "alignment";
  int stride = 1;
  int fifa_epochs = 3000;
  double fifa_sharpness = 80.0;
  double fifa_step = 0.01;
  int jobs = 1;
};

int run_infer(const InferArgs& a, Manifest& man) {
  checkpoint::Checkpoint ck = checkpoint::load(a.checkpoint);
  man.input(a.checkpoint);
  const ClassCatalog catalog(ck.class_names);
  const model::Model m(ck.config, std::move(ck.params));

  inference::Options opt;
  opt.mode = inference::parse_duration_mode(a.duration);
  opt.viterbi_stride = a.stride;
  opt.fifa.epochs = a.fifa_epochs;
  opt.fifa.sharpness = a.fifa_sharpness;
  opt.fifa.step_size = a.fifa_step;
  opt.fifa.validate();
  if (a.stride < 1) throw InvalidArgument("--stride must be >= 1");

  std::vector<fs::path> inputs;
  if (fs::is_directory(a.features)) {
    for (const auto& n : dataset::list_names(a.features, {".bin", ".csv"})) {
      inputs.push_back(dataset::feature_path(a.features, n));
    }
  } else {
    if (!fs::exists(a.features)) throw IoError(a.features + ": no such file");
    inputs.push_back(a.features);
  }
  std::vector<std::string> outputs(inputs.size());
  parallel_for(inputs.size(), a.jobs, [&](std::size_t i) {
    const inference::Result r = inference::infer_video(m, io::read_features(inputs[i]), opt);
    if (r.segmentation) {
      outputs[i] = io::format_segments(*r.segmentation, catalog);
    } else {
      for (ClassId c : r.transcript.actions()) outputs[i] += catalog.name(c) + "\n";
    }
  });
  const fs::path out(a.out);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path p = out / (inputs[i].stem().string() + ".txt");
    io::write_file_atomic(p, outputs[i]);
    man.input(inputs[i]);
    man.output(p);
  }
  man["config"] = {{"duration", a.duration},
                   {"stride", a.stride},
                   {"fifa_epochs", a.fifa_epochs},
                   {"fifa_sharpness", a.fifa_sharpness},
                   {"fifa_step", a.fifa_step}};
  man.write(out / "manifest.json");
  std::printf("wrote %zu outputs to %s\n", inputs.size(), a.out.c_str());
  return kOk;
}

// ---- plot ----

struct PlotArgs {
  std::vector<std::string> inputs;
  std::string catalog, out;
};

int run_plot(const PlotArgs& a, Manifest& man) {
  const ClassCatalog catalog = io::read_catalog(a.catalog);
  man.input(a.catalog);
  std::vector<plot::Row> rows;
  for (const auto& p : a.inputs) {
    rows.push_back({fs::path(p).filename().string(), dataset::read_labeling(p, catalog)});
    man.input(p);
  }
  io::write_file_atomic(a.out, plot::render_svg(rows, catalog));
  man.output(a.out);
  fs::path mpath = a.out;
  mpath += ".manifest.json";
  man.write(mpath);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal action segmentation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--out", sa.out, "Output dataset directory")->required();
  synth_cmd->add_option("--videos", sa.videos, "Number of videos")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--config", sa.config, "Synth key=value file")->check(CLI::ExistingFile);
  synth_cmd->add_option("--seed", sa.seed, "Seed (overrides the config file)");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--pred", ea.pred, "Directory of predicted segment or frame files")->required();
  eval_cmd->add_option("--gt", ea.gt, "Directory of ground-truth files")->required();
  eval_cmd->add_option("--catalog", ea.catalog, "Class catalog")->required();
  eval_cmd->add_option("--out", ea.out, "Directory for per-video and aggregate reports");
  eval_cmd->add_option("--ignore", ea.ignore, "Class excluded from scoring");
  eval_cmd->add_flag("--ignore-background", ea.ignore_background, "Exclude the catalog's background class");
  eval_cmd->add_option("--jobs", ea.jobs, "Worker threads")->check(CLI::PositiveNumber);

  PseudoArgs pa;
  auto* pseudo_cmd = app.add_subcommand("pseudolabel", "Timestamps to frame labels via k-medoids");
  pseudo_cmd->add_option("--data", pa.data, "Dataset directory");
  pseudo_cmd->add_option("--features", pa.features, "Feature directory");
  pseudo_cmd->add_option("--timestamps", pa.timestamps, "Timestamp directory");
  pseudo_cmd->add_option("--catalog", pa.catalog, "Class catalog");
  pseudo_cmd->add_option("--out", pa.out, "Output directory")->required();
  pseudo_cmd->add_option("--dist", pa.dist, "euclidean | cosine | l1");
  pseudo_cmd->add_flag("--unconstrained", pa.unconstrained, "Plain nearest-medoid clustering");
  pseudo_cmd->add_option("--max-iters", pa.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  pseudo_cmd->add_option("--jobs", pa.jobs, "Worker threads")->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train stage 1 (encoder/decoder) or stage 2 (alignment)");
  train_cmd->add_option("--stage", ta.stage, "1 or 2")->check(CLI::IsMember({1, 2}));
  train_cmd->add_option("--data", ta.data, "Dataset directory");
  train_cmd->add_option("--synth", ta.synth_config, "Synth key=value file; generates data in memory")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--videos", ta.videos, "Videos to generate with --synth")->check(CLI::PositiveNumber);
  train_cmd->add_option("--config", ta.config, std::string("Model/training key=value file (default $") + kConfigEnv + ")");
  train_cmd->add_option("--supervision", ta.supervision, "full | timestamp");
  train_cmd->add_option("--init", ta.init, "Stage-1 checkpoint (stage 2)");
  train_cmd->add_option("--out", ta.out, "Output directory")->required();
  train_cmd->add_option("--seed", ta.seed, "Seed (overrides the config file)");

  InferArgs ia;
  auto* infer_cmd = app.add_subcommand("infer", "Segment videos with a trained checkpoint");
  infer_cmd->add_option("--checkpoint", ia.checkpoint, "Checkpoint file")->required();
  infer_cmd->add_option("--features", ia.features, "Feature file or directory")->required();
  infer_cmd->add_option("--out", ia.out, "Output directory")->required();
  infer_cmd->add_option("--duration", ia.duration, "alignment | viterbi | fifa | none");
  infer_cmd->add_option("--stride", ia.stride, "Viterbi frame sampling");
  infer_cmd->add_option("--fifa-epochs", ia.fifa_epochs, "FIFA iterations");
  infer_cmd->add_option("--fifa-sharpness", ia.fifa_sharpness, "FIFA sigmoid sharpness");
  infer_cmd->add_option("--fifa-step", ia.fifa_step, "FIFA step size");
  infer_cmd->add_option("--jobs", ia.jobs, "Worker threads")->check(CLI::PositiveNumber);

  PlotArgs pla;
  auto* plot_cmd = app.add_subcommand("plot", "Draw segmentations as colour bars (SVG)");
  plot_cmd->add_option("inputs", pla.inputs, "Segment or frame files, one bar each")->required();
  plot_cmd->add_option("--catalog", pla.catalog, "Class catalog")->required();
  plot_cmd->add_option("--out", pla.out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth_cmd) {
      Manifest man("synth", argc, argv);
      return run_synth(sa, man);
    }
    if (*eval_cmd) {
      Manifest man("eval", argc, argv);
      return run_eval(ea, man);
    }
    if (*pseudo_cmd) {
      Manifest man("pseudolabel", argc, argv);
      return run_pseudolabel(pa, man);
    }
    if (*train_cmd) {
      Manifest man("train", argc, argv);
      return run_train(ta, man);
    }
    if (*infer_cmd) {
      Manifest man("infer", argc, argv);
      return run_infer(ia, man);
    }
    if (*plot_cmd) {
      Manifest man("plot", argc, argv);
      return run_plot(pla, man);
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kNumeric;
  } catch (const DecodeOverflow& e) {
    std::fprintf(stderr, "decode overflow: %s\n", e.what());
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kUsage;
}
