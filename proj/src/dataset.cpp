#include "tas/dataset.hpp"

#include <algorithm>

#include "tas/errors.hpp"
#include "tas/text_io.hpp"

namespace tas::dataset {

std::vector<std::string> list_names(const fs::path& dir, const std::vector<std::string>& extensions) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + ": not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (std::find(extensions.begin(), extensions.end(), ext) == extensions.end()) continue;
    names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  if (names.empty()) throw IoError(dir.string() + ": no input files");
  return names;
}

fs::path feature_path(const fs::path& features_dir, const std::string& name) {
  const fs::path bin = features_dir / (name + ".bin");
  if (fs::exists(bin)) return bin;
  const fs::path csv = features_dir / (name + ".csv");
  if (fs::exists(csv)) return csv;
  throw IoError(bin.string() + ": missing feature file");
}

Segmentation read_labeling(const fs::path& path, const ClassCatalog& catalog) {
  for (const std::string& line : io::read_lines(path)) {
    if (line.empty()) continue;
    if (line.find('\t') != std::string::npos) return io::read_segments(path, catalog);
    break;
  }
  return to_segments(io::read_frame_labels(path, catalog));
}

ClassCatalog synth_catalog(int num_classes) {
  std::vector<std::string> names;
  for (int c = 0; c < num_classes; ++c) names.push_back("action_" + std::to_string(c));
  return ClassCatalog(std::move(names));
}

std::vector<fs::path> write_synth(const Layout& layout, const synth::SynthConfig& cfg,
                                  const std::vector<synth::SynthVideo>& videos) {
  const ClassCatalog catalog = synth_catalog(cfg.num_classes);
  std::vector<fs::path> written;
  io::write_catalog(layout.catalog(), catalog);
  written.push_back(layout.catalog());
  io::write_file_atomic(layout.root / "synth.cfg", io::format_key_values(cfg.to_map()));
  written.push_back(layout.root / "synth.cfg");
  for (const auto& v : videos) {
    const fs::path f = layout.features_dir() / (v.name + ".bin");
    io::write_features(f, v.features);
    io::write_frame_labels(layout.ground_truth(v.name), to_frames(v.gt), catalog);
    io::write_timestamps(layout.timestamps(v.name), v.timestamps, catalog);
    written.insert(written.end(), {f, layout.ground_truth(v.name), layout.timestamps(v.name)});
  }
  return written;
}

void ReadLog::add(const fs::path& p) {
  std::lock_guard lock(mu_);
  paths_.push_back(p.lexically_normal().string());
}

std::vector<std::string> ReadLog::sorted() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out = paths_;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace tas::dataset
