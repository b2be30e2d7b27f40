#include "lf/core/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "lf/core/errors.hpp"

namespace lf::core {

namespace {

constexpr char kMagic[8] = {'L', 'F', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint: truncated archive at byte " + std::to_string(pos_));
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path, nlohmann::json manifest) {
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, store.size());
  for (const auto& [name, p] : store) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, p.value.rank());
    for (auto d : p.value.shape()) put_u64(out, d);
    for (double v : p.value.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u64(out, bits);
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw IoError("checkpoint: cannot write " + path.string());
  bin.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!bin) throw IoError("checkpoint: write failed for " + path.string());

  manifest["step"] = store.step();
  manifest["entries"] = store.size();
  std::ofstream js(path.string() + ".json");
  if (!js) throw IoError("checkpoint: cannot write manifest for " + path.string());
  js << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError("checkpoint: cannot read " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(bin), {}));
  if (r.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw ParseError("checkpoint: bad magic in " + path.string());
  }
  Checkpoint ck;
  const std::uint64_t count = r.u64();
  for (std::uint64_t e = 0; e < count; ++e) {
    std::string name = r.str(r.u64());
    Shape shape(r.u64());
    for (auto& d : shape) d = r.u64();
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) {
      const std::uint64_t bits = r.u64();
      std::memcpy(&v, &bits, sizeof v);
    }
    ck.store.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes in " + path.string());

  std::ifstream js(path.string() + ".json");
  if (!js) throw IoError("checkpoint: missing manifest for " + path.string());
  try {
    ck.manifest = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint: manifest: " + std::string(e.what()));
  }
  ck.store.set_step(ck.manifest.value("step", std::uint64_t{0}));
  return ck;
}

bool same_parameters(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) return false;
  auto ib = b.begin();
  for (const auto& [name, p] : a) {
    if (ib->first != name || ib->second.value.shape() != p.value.shape()) return false;
    if (std::memcmp(p.value.data(), ib->second.value.data(), p.value.size() * sizeof(double)) != 0) return false;
    ++ib;
  }
  return true;
}

}  // namespace lf::core
