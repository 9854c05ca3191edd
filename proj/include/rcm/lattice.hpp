#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcm {

inline constexpr int kMaxDim = 4;

/// A point of Z^d with 1 <= d <= kMaxDim. Unused trailing coordinates are zero.
class LatticePoint {
 public:
  LatticePoint() = default;
  explicit LatticePoint(int dim) : dim_(dim) { check_dim(dim); }
  LatticePoint(std::initializer_list<std::int64_t> coords)
      : dim_(static_cast<int>(coords.size())) {
    check_dim(dim_);
    int i = 0;
    for (auto c : coords) c_[i++] = c;
  }
  static LatticePoint from_vector(const std::vector<std::int64_t>& coords) {
    LatticePoint p(static_cast<int>(coords.size()));
    for (int i = 0; i < p.dim_; ++i) p.c_[i] = coords[i];
    return p;
  }
  static LatticePoint origin(int dim) { return LatticePoint(dim); }
  static LatticePoint unit(int dim, int axis, std::int64_t scale = 1) {
    LatticePoint p(dim);
    p.c_[axis] = scale;
    return p;
  }

  int dim() const { return dim_; }
  std::int64_t operator[](int i) const { return c_[i]; }
  std::int64_t& operator[](int i) { return c_[i]; }
  const std::int64_t* data() const { return c_.data(); }

  LatticePoint& operator+=(const LatticePoint& o) {
    for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  LatticePoint& operator-=(const LatticePoint& o) {
    for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  friend LatticePoint operator+(LatticePoint a, const LatticePoint& b) { return a += b; }
  friend LatticePoint operator-(LatticePoint a, const LatticePoint& b) { return a -= b; }
  friend bool operator==(const LatticePoint& a, const LatticePoint& b) {
    return a.dim_ == b.dim_ && a.c_ == b.c_;
  }
  friend bool operator<(const LatticePoint& a, const LatticePoint& b) {
    if (a.dim_ != b.dim_) return a.dim_ < b.dim_;
    return a.c_ < b.c_;
  }

  std::int64_t norm1() const {
    std::int64_t s = 0;
    for (int i = 0; i < dim_; ++i) s += std::llabs(c_[i]);
    return s;
  }
  std::int64_t norm_inf() const {
    std::int64_t s = 0;
    for (int i = 0; i < dim_; ++i) s = std::max<std::int64_t>(s, std::llabs(c_[i]));
    return s;
  }
  std::int64_t norm2_sq() const {
    std::int64_t s = 0;
    for (int i = 0; i < dim_; ++i) s += c_[i] * c_[i];
    return s;
  }
  std::vector<std::int64_t> to_vector() const {
    return std::vector<std::int64_t>(c_.begin(), c_.begin() + dim_);
  }
  std::string to_string() const;

 private:
  static void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim)
      throw std::invalid_argument("lattice dimension must be in [1, " +
                                  std::to_string(kMaxDim) + "], got " + std::to_string(dim));
  }

  int dim_ = 0;
  std::array<std::int64_t, kMaxDim> c_{};
};

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(p.dim());
    for (int i = 0; i < p.dim(); ++i) {
      h ^= static_cast<std::uint64_t>(p[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// All points of the l^inf ball B_inf(center, n), lexicographic order.
std::vector<LatticePoint> ball_linf(const LatticePoint& center, std::int64_t n);

}  // namespace rcm
