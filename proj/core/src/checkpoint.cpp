#include "pinto/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pinto {

namespace {

constexpr char kMagic[8] = {'P', 'I', 'N', 'T', 'O', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagOptimizer = 1u << 0;
constexpr std::uint32_t kFlagTrainer = 1u << 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i64(std::string& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

// row-major, row by row
void put_matrix(std::string& out, const Matrix& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
  Matrix matrix() {
    auto rows = u64(), cols = u64();
    if (rows > (1u << 24) || cols > (1u << 24))
      throw std::runtime_error("checkpoint: implausible matrix shape");
    Matrix m(static_cast<long>(rows), static_cast<long>(cols));
    for (long i = 0; i < m.rows(); ++i)
      for (long j = 0; j < m.cols(); ++j) m(i, j) = f64();
    return m;
  }
};

}  // namespace

void write_checkpoint(const Checkpoint& c, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  std::uint32_t flags = 0;
  if (c.opt) flags |= kFlagOptimizer;
  if (c.trainer) flags |= kFlagTrainer;
  put_u32(out, flags);
  put_u64(out, c.config_echo.size());
  out += c.config_echo;

  auto names = c.params.names();
  put_u64(out, names.size());
  for (const auto& name : names) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_matrix(out, c.params.value(name));
  }

  if (c.opt) {
    const OptimizerState& st = *c.opt;
    if (st.m.size() != names.size() || st.v.size() != names.size())
      throw std::runtime_error("checkpoint: optimizer moments misaligned");
    out.push_back(st.cfg.kind == OptKind::AdamW ? 1 : 0);
    put_f64(out, st.cfg.beta1);
    put_f64(out, st.cfg.beta2);
    put_f64(out, st.cfg.eps);
    put_f64(out, st.cfg.weight_decay);
    put_i64(out, st.step);
    for (const auto& name : names) put_matrix(out, st.m.at(name));
    for (const auto& name : names) put_matrix(out, st.v.at(name));
  }

  if (c.trainer) {
    put_i64(out, c.trainer->next_epoch);
    put_i64(out, c.trainer->global_step);
    for (auto w : c.trainer->shuffle_rng) put_u64(out, w);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  Reader r{buf};

  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw std::runtime_error("checkpoint: bad magic: " + path);
  auto version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version));
  auto flags = r.u32();

  Checkpoint c;
  c.config_echo = r.bytes(r.u64());

  auto count = r.u64();
  std::vector<std::string> names;
  names.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.u32());
    names.push_back(name);
    c.params.add(name, r.matrix());
  }

  if (flags & kFlagOptimizer) {
    OptimizerState st;
    st.cfg.kind = r.bytes(1)[0] ? OptKind::AdamW : OptKind::Adam;
    st.cfg.beta1 = r.f64();
    st.cfg.beta2 = r.f64();
    st.cfg.eps = r.f64();
    st.cfg.weight_decay = r.f64();
    st.step = r.i64();
    for (const auto& name : names) st.m[name] = r.matrix();
    for (const auto& name : names) st.v[name] = r.matrix();
    c.opt = std::move(st);
  }

  if (flags & kFlagTrainer) {
    TrainerState ts;
    ts.next_epoch = r.i64();
    ts.global_step = r.i64();
    for (auto& w : ts.shuffle_rng) w = r.u64();
    c.trainer = ts;
  }

  if (r.pos != buf.size())
    throw std::runtime_error("checkpoint: trailing bytes: " + path);
  return c;
}

}  // namespace pinto
