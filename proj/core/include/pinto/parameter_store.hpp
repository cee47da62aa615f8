#pragma once
// Named parameter matrices with paired gradients. std::map keeps iteration
// in lexicographic name order, which fixes the layout of checkpoints and
// the order of optimizer updates independent of insertion order.

#include <pinto/batch.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinto {

class ParameterStore {
 public:
  void add(const std::string& name, Matrix init) {
    if (values_.count(name))
      throw std::invalid_argument("parameter exists: " + name);
    grads_[name] = Matrix::Zero(init.rows(), init.cols());
    values_[name] = std::move(init);
  }

  bool has(const std::string& name) const { return values_.count(name) != 0; }

  Matrix& value(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end())
      throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }
  const Matrix& value(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end())
      throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }
  Matrix& grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end())
      throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }

  void zero_grad() {
    for (auto& [k, g] : grads_) g.setZero();
  }

  std::size_t size() const { return values_.size(); }

  std::size_t scalar_count() const {
    std::size_t c = 0;
    for (const auto& [k, v] : values_) c += v.size();
    return c;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::map<std::string, Matrix> values_;
  std::map<std::string, Matrix> grads_;
};

}  // namespace pinto
