#ifndef PAIRLOCK_TENSOR_HPP
#define PAIRLOCK_TENSOR_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace pairlock {

// Dense row-major N-d array of 64-bit reals.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0) {}
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {}

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int e : s) n *= static_cast<size_t>(e);
    return n;
  }
  size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }

  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }
};

// Named parameter with gradient accumulator and momentum velocity.
struct Param {
  Tensor value;
  Tensor grad;
  Tensor vel;

  explicit Param(Tensor v) : value(std::move(v)), grad(value.shape), vel(value.shape) {}
  Param() = default;
};

// Insertion-ordered set of named parameters.
class ParamSet {
 public:
  Param& add(const std::string& name, Tensor value);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::string>& names() const { return names_; }
  size_t size() const { return names_.size(); }
  void zero_grads();

 private:
  std::vector<std::string> names_;
  std::vector<Param> params_;
  std::unordered_map<std::string, size_t> index_;
};

// v <- momentum * v + g;  w <- w - lr * v;  g <- 0.
void sgd_momentum_step(ParamSet& params, double lr, double momentum);

// Binary checkpoint: magic, version, tensor count, then per tensor
// name length + UTF-8 name, rank, extents (u64 LE), data (f64 LE).
void save_checkpoint(const std::string& path, const ParamSet& params);
void load_checkpoint(const std::string& path, ParamSet& params);  // shapes must match
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);

}  // namespace pairlock

#endif  // PAIRLOCK_TENSOR_HPP
