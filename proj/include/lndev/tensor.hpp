#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lndev/error.hpp"
#include "lndev/jet.hpp"

namespace lndev {

enum class Variance : std::uint8_t { upper, lower };

/// Dense multi-index array with per-slot variance. Every slot has extent n.
/// Row-major: the last slot varies fastest.
template <class S>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, std::vector<Variance> slots, std::string frame = "frame")
      : n_(n), slots_(std::move(slots)), frame_(std::move(frame)) {
    std::size_t sz = 1;
    for (std::size_t r = 0; r < slots_.size(); ++r) sz *= static_cast<std::size_t>(n_);
    data_.assign(sz, S(0.0));
  }

  /// Shorthand for a tensor with p upper slots followed by q lower slots.
  static Tensor valence(int n, int p, int q, std::string frame = "frame") {
    std::vector<Variance> s(static_cast<std::size_t>(p), Variance::upper);
    s.insert(s.end(), static_cast<std::size_t>(q), Variance::lower);
    return Tensor(n, std::move(s), std::move(frame));
  }

  int dim() const { return n_; }
  int rank() const { return static_cast<int>(slots_.size()); }
  const std::vector<Variance>& slots() const { return slots_; }
  Variance slot(int s) const { return slots_[static_cast<std::size_t>(s)]; }
  int contravariant() const {
    return static_cast<int>(std::count(slots_.begin(), slots_.end(), Variance::upper));
  }
  int covariant() const { return rank() - contravariant(); }
  const std::string& frame() const { return frame_; }
  void set_frame(std::string f) { frame_ = std::move(f); }

  std::size_t size() const { return data_.size(); }
  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }
  std::span<S> data() { return data_; }
  std::span<const S> data() const { return data_; }

  template <class... I>
  S& operator()(I... idx) {
    return data_[flat(idx...)];
  }
  template <class... I>
  const S& operator()(I... idx) const {
    return data_[flat(idx...)];
  }

  std::size_t flat_index(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    return f;
  }

  std::vector<int> multi_index(std::size_t f) const {
    std::vector<int> idx(slots_.size());
    for (std::size_t r = slots_.size(); r-- > 0;) {
      idx[r] = static_cast<int>(f % static_cast<std::size_t>(n_));
      f /= static_cast<std::size_t>(n_);
    }
    return idx;
  }

 private:
  template <class... I>
  std::size_t flat(I... idx) const {
    assert(sizeof...(I) == slots_.size());
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }

  int n_ = 0;
  std::vector<Variance> slots_;
  std::vector<S> data_;
  std::string frame_ = "frame";
};

using TensorValue = Tensor<double>;
using JetTensor = Tensor<Jet>;

inline TensorValue values(const JetTensor& t) {
  TensorValue out(t.dim(), t.slots(), t.frame());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].value;
  return out;
}

inline double max_abs(const TensorValue& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const TensorValue& a, const TensorValue& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Sum over one upper slot paired with one lower slot; the remaining slots
/// keep their relative order.
template <class S>
Tensor<S> contract(const Tensor<S>& t, int upper_slot, int lower_slot) {
  if (upper_slot < 0 || lower_slot < 0 || upper_slot >= t.rank() ||
      lower_slot >= t.rank() || upper_slot == lower_slot) {
    throw ContractError("contract: slot index out of range");
  }
  if (t.slot(upper_slot) != Variance::upper || t.slot(lower_slot) != Variance::lower) {
    throw ContractError("contract: slots must pair an upper with a lower index");
  }
  std::vector<Variance> rest;
  for (int s = 0; s < t.rank(); ++s) {
    if (s != upper_slot && s != lower_slot) rest.push_back(t.slot(s));
  }
  Tensor<S> out(t.dim(), rest, t.frame());
  for (std::size_t f = 0; f < t.size(); ++f) {
    const auto idx = t.multi_index(f);
    if (idx[static_cast<std::size_t>(upper_slot)] != idx[static_cast<std::size_t>(lower_slot)]) continue;
    std::vector<int> ridx;
    ridx.reserve(rest.size());
    for (int s = 0; s < t.rank(); ++s) {
      if (s != upper_slot && s != lower_slot) ridx.push_back(idx[static_cast<std::size_t>(s)]);
    }
    out[out.flat_index(ridx)] += t[f];
  }
  return out;
}

/// Outer product; slots of `a` precede slots of `b`.
template <class S>
Tensor<S> outer(const Tensor<S>& a, const Tensor<S>& b) {
  std::vector<Variance> s = a.slots();
  s.insert(s.end(), b.slots().begin(), b.slots().end());
  Tensor<S> out(a.dim(), s, a.frame());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = a[i] * b[j];
  }
  return out;
}

}  // namespace lndev
