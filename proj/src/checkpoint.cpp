#include "tas/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include "tas/errors.hpp"
#include "tas/text_io.hpp"

namespace tas::checkpoint {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'S', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw IoError("checkpoint: truncated");
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const model::Model& m, const std::vector<std::string>& class_names) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_str(out, io::format_key_values(m.config().to_map()));
  put_u32(out, static_cast<std::uint32_t>(class_names.size()));
  for (const auto& n : class_names) put_str(out, n);
  const auto& ps = m.params().all();
  put_u32(out, static_cast<std::uint32_t>(ps.size()));
  for (const auto& p : ps) {
    put_str(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    for (double v : p.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw IoError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));

  std::map<std::string, std::string> kv;
  const std::string cfg_text = r.str();
  std::size_t pos = 0;
  while (pos < cfg_text.size()) {
    std::size_t nl = cfg_text.find('\n', pos);
    if (nl == std::string::npos) nl = cfg_text.size();
    const std::string line = cfg_text.substr(pos, nl - pos);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("checkpoint: malformed config line");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
    pos = nl + 1;
  }

  Checkpoint ck;
  try {
    ck.config = model::ModelConfig::from_map(kv);
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  const std::uint32_t n_classes = r.u32();
  for (std::uint32_t i = 0; i < n_classes; ++i) ck.class_names.push_back(r.str());
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rows = r.u32(), cols = r.u32();
    Matrix m(rows, cols);
    for (double& v : m.data()) v = r.f64();
    try {
      ck.params.add(name, std::move(m));
    } catch (const InvalidArgument& e) {
      throw IoError(std::string("checkpoint: ") + e.what());
    }
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  return ck;
}

void save(const std::filesystem::path& path, const model::Model& m, const std::vector<std::string>& class_names) {
  io::write_file_atomic(path, serialize(m, class_names));
}

Checkpoint load(const std::filesystem::path& path) {
  try {
    return deserialize(io::read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace tas::checkpoint
