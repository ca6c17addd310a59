#include "sacpid/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sacpid::ckpt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

[[noreturn]] void corrupt(const std::string& what) {
  throw std::runtime_error("corrupt checkpoint: " + what);
}

struct Writer {
  std::ofstream out;
  explicit Writer(const std::string& path)
      : out(path, std::ios::binary | std::ios::trunc) {
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  }
  void u32(std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
  void u64(std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
  void f64(double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
  void mat(const nn::Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  void vec(const nn::Vec& v) {
    for (int i = 0; i < v.size(); ++i) f64(v(i));
  }
};

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  }
  void raw(void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      corrupt("file ends mid-record");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  void mat(nn::Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) raw(&m(i, j), 8);
  }
  void vec(nn::Vec& v) {
    for (int i = 0; i < v.size(); ++i) raw(&v(i), 8);
  }
};

void write_net(Writer& w, const nn::Mlp& net) {
  w.u32(static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const nn::Mat& m = net.weights()[l];
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    w.mat(m);
    w.vec(net.biases()[l]);
  }
}

void read_net(Reader& r, nn::Mlp& net, const char* name) {
  const std::uint32_t layers = r.u32();
  if (layers != net.layer_count()) {
    std::ostringstream msg;
    msg << "checkpoint shape mismatch: network '" << name << "' stores "
        << layers << " layers, expected " << net.layer_count();
    throw std::runtime_error(msg.str());
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const std::uint32_t rows = r.u32(), cols = r.u32();
    nn::Mat& m = net.weights()[l];
    if (rows != m.rows() || cols != m.cols()) {
      std::ostringstream msg;
      msg << "checkpoint shape mismatch: network '" << name << "' layer " << l
          << " stores " << rows << "x" << cols << ", expected " << m.rows()
          << "x" << m.cols();
      throw std::runtime_error(msg.str());
    }
    r.mat(m);
    r.vec(net.biases()[l]);
  }
}

void write_adam(Writer& w, const nn::Adam& opt) {
  w.u64(opt.steps());
  for (std::size_t l = 0; l < opt.m_w().size(); ++l) {
    w.mat(opt.m_w()[l]);
    w.vec(opt.m_b()[l]);
  }
  for (std::size_t l = 0; l < opt.v_w().size(); ++l) {
    w.mat(opt.v_w()[l]);
    w.vec(opt.v_b()[l]);
  }
}

void read_adam(Reader& r, nn::Adam& opt) {
  opt.set_steps(r.u64());
  for (std::size_t l = 0; l < opt.m_w().size(); ++l) {
    r.mat(opt.m_w()[l]);
    r.vec(opt.m_b()[l]);
  }
  for (std::size_t l = 0; l < opt.v_w().size(); ++l) {
    r.mat(opt.v_w()[l]);
    r.vec(opt.v_b()[l]);
  }
}

}  // namespace

void save(const std::string& path, const sac::Agent& agent) {
  Writer w(path);
  w.out.write(kMagic, sizeof(kMagic));
  write_net(w, agent.actor());
  write_net(w, agent.critic1());
  write_net(w, agent.critic2());
  write_net(w, agent.value());
  write_net(w, agent.target_value());
  write_adam(w, agent.actor_opt());
  write_adam(w, agent.critic1_opt());
  write_adam(w, agent.critic2_opt());
  write_adam(w, agent.value_opt());
  if (!w.out) throw std::runtime_error("short write on checkpoint: " + path);
}

void load(const std::string& path, sac::Agent& agent) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, 6) == 0 &&
      std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error(
        std::string("checkpoint version mismatch: found '") +
        std::string(magic, 8) + "', expected '" + std::string(kMagic, 8) + "'");
  }
  if (std::memcmp(magic, kMagic, 8) != 0) corrupt("bad magic");
  read_net(r, agent.actor(), "actor");
  read_net(r, agent.critic1(), "critic1");
  read_net(r, agent.critic2(), "critic2");
  read_net(r, agent.value(), "value");
  read_net(r, agent.target_value(), "target_value");
  read_adam(r, agent.actor_opt());
  read_adam(r, agent.critic1_opt());
  read_adam(r, agent.critic2_opt());
  read_adam(r, agent.value_opt());
  // anything left over means the writer and reader disagree
  char extra;
  r.in.read(&extra, 1);
  if (r.in.gcount() != 0) corrupt("trailing bytes");
}

}  // namespace sacpid::ckpt
