#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "specband/error.hpp"

namespace specband {

// Ordered disjoint closed intervals [a_1,b_1] u ... u [a_q,b_q].
// Bands are indexed from 0 in code.
class BandSet {
 public:
  BandSet() = default;
  explicit BandSet(std::vector<double> edges) : e_(std::move(edges)) {
    if (e_.empty() || e_.size() % 2 != 0)
      throw Error(ErrorCode::InvalidArgument, "potential", "BandSet", "need an even, nonzero number of edges");
    for (size_t i = 0; i < e_.size(); ++i) {
      if (!std::isfinite(e_[i])) throw Error(ErrorCode::InvalidArgument, "potential", "BandSet", "non-finite edge");
      if (i > 0 && !(e_[i] > e_[i - 1]))
        throw Error(ErrorCode::InvalidArgument, "potential", "BandSet", "edges must be strictly increasing");
    }
  }

  size_t q() const { return e_.size() / 2; }
  const std::vector<double>& edges() const { return e_; }
  double a(size_t l) const { return e_[2 * l]; }
  double b(size_t l) const { return e_[2 * l + 1]; }
  double lower() const { return e_.front(); }
  double upper() const { return e_.back(); }

  std::optional<size_t> band_index(double x) const {
    for (size_t l = 0; l < q(); ++l)
      if (x >= a(l) && x <= b(l)) return l;
    return std::nullopt;
  }
  // Gap l lies between band l and band l+1.
  std::optional<size_t> gap_index(double x) const {
    for (size_t l = 0; l + 1 < q(); ++l)
      if (x > b(l) && x < a(l + 1)) return l;
    return std::nullopt;
  }
  bool contains(double x) const { return band_index(x).has_value(); }
  double total_length() const {
    double s = 0;
    for (size_t l = 0; l < q(); ++l) s += b(l) - a(l);
    return s;
  }

 private:
  std::vector<double> e_;
};

}  // namespace specband
