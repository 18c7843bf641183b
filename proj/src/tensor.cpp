#include "pairlock/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace pairlock {

Param& ParamSet::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("ParamSet::add: duplicate name " + name);
  index_[name] = params_.size();
  names_.push_back(name);
  params_.emplace_back(std::move(value));
  return params_.back();
}

Param& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamSet::at: unknown name " + name);
  return params_[it->second];
}

const Param& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamSet::at: unknown name " + name);
  return params_[it->second];
}

void ParamSet::zero_grads() {
  for (Param& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

void sgd_momentum_step(ParamSet& params, double lr, double momentum) {
  if (lr <= 0.0) throw std::invalid_argument("sgd_momentum_step: lr must be > 0");
  for (const std::string& name : params.names()) {
    Param& p = params.at(name);
    for (size_t i = 0; i < p.value.numel(); ++i) {
      p.vel[i] = momentum * p.vel[i] + p.grad[i];
      p.value[i] -= lr * p.vel[i];
      p.grad[i] = 0.0;
    }
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'A', 'I', 'R', 'L', 'C', 'K', 'P'};
constexpr uint64_t kVersion = 1;

void write_u64(std::ofstream& f, uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); }

uint64_t read_u64(std::ifstream& f) {
  uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 8);
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kMagic, 8);
  write_u64(f, kVersion);
  write_u64(f, params.size());
  for (const std::string& name : params.names()) {
    const Tensor& t = params.at(name).value;
    write_u64(f, name.size());
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(f, static_cast<uint64_t>(t.rank()));
    for (int e : t.shape) write_u64(f, static_cast<uint64_t>(e));
    f.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.numel() * 8));
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("read_checkpoint: bad magic in " + path);
  if (read_u64(f) != kVersion) throw std::runtime_error("read_checkpoint: unsupported version");
  const uint64_t count = read_u64(f);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t name_len = read_u64(f);
    std::string name(name_len, '\0');
    f.read(name.data(), static_cast<std::streamsize>(name_len));
    const uint64_t rank = read_u64(f);
    std::vector<int> shape(rank);
    for (auto& e : shape) e = static_cast<int>(read_u64(f));
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.numel() * 8));
    if (!f) throw std::runtime_error("read_checkpoint: truncated tensor " + name);
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void load_checkpoint(const std::string& path, ParamSet& params) {
  for (auto& [name, tensor] : read_checkpoint(path)) {
    Param& p = params.at(name);
    if (p.value.shape != tensor.shape)
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
    p.value = std::move(tensor);
  }
}

}  // namespace pairlock
