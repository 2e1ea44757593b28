#include "tas/text_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tas/errors.hpp"

namespace tas::io {

namespace {

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + what);
}

int parse_int(const fs::path& path, std::size_t line, std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(path, line, "expected an integer, got '" + std::string(s) + "'");
  return v;
}

ClassId lookup(const fs::path& path, std::size_t line, const ClassCatalog& catalog, const std::string& name) {
  auto id = catalog.find(name);
  if (!id) fail(path, line, "unknown class '" + name + "'");
  return *id;
}

std::pair<std::string, std::string> split_tab(const fs::path& path, std::size_t line, const std::string& s) {
  const auto tab = s.find('\t');
  if (tab == std::string::npos) fail(path, line, "expected two tab-separated fields");
  return {s.substr(0, tab), s.substr(tab + 1)};
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": rename failed: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = nl + 1;
  }
  return lines;
}

ClassCatalog read_catalog(const fs::path& path) {
  std::vector<std::string> names;
  std::optional<ClassId> background;
  std::size_t n = 0;
  for (std::string line : read_lines(path)) {
    ++n;
    if (line.empty()) continue;
    if (line.back() == '*') {
      line.pop_back();
      if (background) fail(path, n, "more than one background class");
      background = static_cast<ClassId>(names.size());
    }
    names.push_back(line);
  }
  if (names.empty()) throw IoError(path.string() + ": empty class catalog");
  try {
    return ClassCatalog(std::move(names), background);
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_catalog(const fs::path& path, const ClassCatalog& catalog) {
  std::string out;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    out += catalog.names()[i];
    if (catalog.background() && *catalog.background() == static_cast<ClassId>(i)) out += '*';
    out += '\n';
  }
  write_file_atomic(path, out);
}

FrameLabeling read_frame_labels(const fs::path& path, const ClassCatalog& catalog) {
  std::vector<ClassId> labels;
  std::size_t n = 0;
  for (const std::string& line : read_lines(path)) {
    ++n;
    if (line.empty()) continue;
    labels.push_back(lookup(path, n, catalog, line));
  }
  if (labels.empty()) throw IoError(path.string() + ": no frames");
  return FrameLabeling(std::move(labels));
}

void write_frame_labels(const fs::path& path, const FrameLabeling& labels, const ClassCatalog& catalog) {
  std::string out;
  for (ClassId c : labels.labels()) out += catalog.name(c) + "\n";
  write_file_atomic(path, out);
}

Segmentation read_segments(const fs::path& path, const ClassCatalog& catalog) {
  std::vector<Segment> segs;
  std::size_t n = 0;
  for (const std::string& line : read_lines(path)) {
    ++n;
    if (line.empty()) continue;
    auto [name, dur] = split_tab(path, n, line);
    const int d = parse_int(path, n, dur);
    if (d < 1) fail(path, n, "duration must be >= 1");
    segs.push_back({lookup(path, n, catalog, name), d});
  }
  if (segs.empty()) throw IoError(path.string() + ": no segments");
  return Segmentation(std::move(segs));
}

std::string format_segments(const Segmentation& seg, const ClassCatalog& catalog) {
  std::string out;
  for (const Segment& s : seg.segments()) out += catalog.name(s.action) + "\t" + std::to_string(s.duration) + "\n";
  return out;
}

void write_segments(const fs::path& path, const Segmentation& seg, const ClassCatalog& catalog) {
  write_file_atomic(path, format_segments(seg, catalog));
}

Transcript read_transcript(const fs::path& path, const ClassCatalog& catalog) {
  std::vector<ClassId> actions;
  std::size_t n = 0;
  for (const std::string& line : read_lines(path)) {
    ++n;
    if (line.empty()) continue;
    actions.push_back(lookup(path, n, catalog, line));
  }
  if (actions.empty()) throw IoError(path.string() + ": empty transcript");
  return Transcript(std::move(actions));
}

void write_transcript(const fs::path& path, const Transcript& tr, const ClassCatalog& catalog) {
  std::string out;
  for (ClassId c : tr.actions()) out += catalog.name(c) + "\n";
  write_file_atomic(path, out);
}

pseudolabel::TimestampAnnotation read_timestamps(const fs::path& path, const ClassCatalog& catalog) {
  std::vector<pseudolabel::Timestamp> entries;
  std::size_t n = 0;
  for (const std::string& line : read_lines(path)) {
    ++n;
    if (line.empty()) continue;
    auto [frame, name] = split_tab(path, n, line);
    entries.push_back({parse_int(path, n, frame), lookup(path, n, catalog, name)});
  }
  try {
    return pseudolabel::TimestampAnnotation(std::move(entries));
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_timestamps(const fs::path& path, const pseudolabel::TimestampAnnotation& ts, const ClassCatalog& catalog) {
  std::string out;
  for (const auto& e : ts.entries()) out += std::to_string(e.frame) + "\t" + catalog.name(e.action) + "\n";
  write_file_atomic(path, out);
}

FeatureSequence read_features(const fs::path& path) {
  if (path.extension() == ".csv") {
    std::vector<double> data;
    std::size_t cols = 0, rows = 0, n = 0;
    for (const std::string& line : read_lines(path)) {
      ++n;
      if (line.empty()) continue;
      std::size_t count = 0, pos = 0;
      while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        const std::string cell = line.substr(pos, comma - pos);
        double v = 0.0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size()) fail(path, n, "bad number '" + cell + "'");
        data.push_back(v);
        ++count;
        pos = comma + 1;
      }
      if (rows == 0) cols = count;
      if (count != cols) fail(path, n, "expected " + std::to_string(cols) + " columns");
      ++rows;
    }
    if (rows == 0) throw IoError(path.string() + ": no frames");
    return Matrix(rows, cols, std::move(data));
  }

  const std::string bytes = read_file(path);
  if (bytes.size() < 12 || bytes.compare(0, 4, "TASF") != 0) throw IoError(path.string() + ": not a feature file");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t T = get_u32(p + 4), d = get_u32(p + 8);
  if (T == 0 || d == 0) throw IoError(path.string() + ": empty feature matrix");
  const std::size_t want = 12 + static_cast<std::size_t>(T) * d * 4;
  if (bytes.size() != want) {
    throw IoError(path.string() + ": expected " + std::to_string(want) + " bytes, found " + std::to_string(bytes.size()));
  }
  Matrix m(T, d);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(std::bit_cast<float>(get_u32(p + 12 + 4 * i)));
  }
  return m;
}

void write_features(const fs::path& path, const FeatureSequence& feats) {
  std::string out;
  if (path.extension() == ".csv") {
    char buf[64];
    for (std::size_t t = 0; t < feats.rows(); ++t) {
      for (std::size_t j = 0; j < feats.cols(); ++j) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, feats(t, j));
        if (j) out += ',';
        out.append(buf, end);
      }
      out += '\n';
    }
  } else {
    out = "TASF";
    put_u32(out, static_cast<std::uint32_t>(feats.rows()));
    put_u32(out, static_cast<std::uint32_t>(feats.cols()));
    for (double v : feats.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  write_file_atomic(path, out);
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::size_t n = 0;
  for (const std::string& raw : read_lines(path)) {
    ++n;
    const auto first = raw.find_first_not_of(" \t");
    if (first == std::string::npos || raw[first] == '#') continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) fail(path, n, "expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(raw.substr(0, eq))] = trim(raw.substr(eq + 1));
  }
  return kv;
}

std::string format_key_values(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

}  // namespace tas::io
