#include "presort/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "presort/error.hpp"

namespace presort {

static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian hosts");

namespace {

constexpr char kMagic[4] = {'P', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  void u32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
  void i32(std::int32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
  void f64(double v) { out_.write(reinterpret_cast<const char*>(&v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void floats(const std::vector<float>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string where) : in_(in), where_(std::move(where)) {}
  std::uint32_t u32() { std::uint32_t v; read(&v, 4); return v; }
  std::int32_t i32() { std::int32_t v; read(&v, 4); return v; }
  double f64() { double v; read(&v, 8); return v; }
  std::string str() {
    const auto n = u32();
    if (n > (1u << 16)) throw Error(where_ + ": corrupt string length");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in_) throw Error(where_ + ": truncated checkpoint");
  }

 private:
  std::ifstream& in_;
  std::string where_;
};

}  // namespace

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  Writer w(out);
  out.write(kMagic, 4);
  w.u32(kVersion);

  const NetConfig& c = net.config();
  w.i32(c.input_height);
  w.i32(c.input_width);
  w.u32(static_cast<std::uint32_t>(c.channels.size()));
  for (int ch : c.channels) w.i32(ch);
  w.i32(c.kernel);
  w.i32(c.stride);
  w.i32(c.pad);
  w.i32(c.pool);
  w.f64(c.dropout);
  w.u32(c.use_batchnorm ? 1 : 0);
  w.u32(c.use_dropout ? 1 : 0);
  w.u32(c.head == HeadKind::sigmoid ? 0 : 1);
  w.i32(c.num_classes);

  w.u32(static_cast<std::uint32_t>(net.tensors().size()));
  for (const auto& t : net.tensors()) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    w.floats(t.value);
  }
  if (!out) throw Error("write failed for " + path.string());
}

Network<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error(path.string() + ": not a checkpoint");
  const auto version = r.u32();
  if (version != kVersion) throw Error(path.string() + ": unsupported checkpoint version " + std::to_string(version));

  NetConfig c;
  c.input_height = r.i32();
  c.input_width = r.i32();
  const auto blocks = r.u32();
  if (blocks == 0 || blocks > 64) throw Error(path.string() + ": corrupt block count");
  c.channels.resize(blocks);
  for (auto& ch : c.channels) ch = r.i32();
  c.kernel = r.i32();
  c.stride = r.i32();
  c.pad = r.i32();
  c.pool = r.i32();
  c.dropout = r.f64();
  c.use_batchnorm = r.u32() != 0;
  c.use_dropout = r.u32() != 0;
  c.head = r.u32() == 0 ? HeadKind::sigmoid : HeadKind::softmax;
  c.num_classes = r.i32();

  Network<float> net(c, 0);
  const auto count = r.u32();
  if (count != net.tensors().size()) throw Error(path.string() + ": tensor count does not match configuration");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.str();
    const auto rank = r.u32();
    if (rank > 8) throw Error(path.string() + ": corrupt tensor rank");
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    auto& t = net.tensor(name);
    if (t.shape != shape) throw Error(path.string() + ": shape mismatch for " + name);
    r.read(t.value.data(), t.value.size() * sizeof(float));
  }
  return net;
}

}  // namespace presort
