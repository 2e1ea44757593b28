#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "tas/segcore.hpp"
#include "tas/synth.hpp"
#include "tas/tensor.hpp"

// On-disk dataset layout shared by the command-line tool:
//   mapping.txt           class catalog
//   features/<name>.bin   (or .csv)
//   groundTruth/<name>.txt  one class name per frame
//   timestamps/<name>.txt   "frame<TAB>name" per segment
namespace tas::dataset {

namespace fs = std::filesystem;

struct Layout {
  fs::path root;

  fs::path catalog() const { return root / "mapping.txt"; }
  fs::path features_dir() const { return root / "features"; }
  fs::path ground_truth_dir() const { return root / "groundTruth"; }
  fs::path timestamps_dir() const { return root / "timestamps"; }
  fs::path ground_truth(const std::string& name) const { return ground_truth_dir() / (name + ".txt"); }
  fs::path timestamps(const std::string& name) const { return timestamps_dir() / (name + ".txt"); }
};

// Sorted names (file stems) of the regular files in `dir` with one of the
// given extensions. Throws IoError if the directory is missing or has none.
std::vector<std::string> list_names(const fs::path& dir, const std::vector<std::string>& extensions);

// features/<name>.bin if present, otherwise features/<name>.csv.
fs::path feature_path(const fs::path& features_dir, const std::string& name);

// Reads either a segment file ("name<TAB>duration" lines) or a frame file.
Segmentation read_labeling(const fs::path& path, const ClassCatalog& catalog);

ClassCatalog synth_catalog(int num_classes);

// Writes mapping.txt, features, groundTruth, timestamps and synth.cfg.
std::vector<fs::path> write_synth(const Layout& layout, const synth::SynthConfig& cfg,
                                  const std::vector<synth::SynthVideo>& videos);

// Thread-safe log of files opened for reading.
class ReadLog {
 public:
  void add(const fs::path& p);
  std::vector<std::string> sorted() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> paths_;
};

}  // namespace tas::dataset
