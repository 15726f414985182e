#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gsc {

using Coord = std::int64_t;

/// Ordered list of integer d-tuples in one flat buffer.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(int dimension) : dim_(dimension) {}

  int dimension() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return data_.empty(); }

  std::span<const Coord> operator[](std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  void push_back(std::span<const Coord> p) { data_.insert(data_.end(), p.begin(), p.end()); }
  void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }

  const std::vector<Coord>& raw() const { return data_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  int dim_ = 0;
  std::vector<Coord> data_;
};

}  // namespace gsc
