#pragma once

// On-the-fly evaluation of the 4D matching cost, shared by the min-projection and the
// cross-plane CRF passes so both produce bit-identical cost values.

#include <cstddef>
#include <cstdint>
#include <type_traits>

#include "sflow/costvol.hpp"

namespace sflow::detail {

template <class T, CostMode Mode>
struct CostRows {
  using value_type = std::conditional_t<Mode == CostMode::Q, int, T>;
  static constexpr value_type kOutside = static_cast<value_type>(kOutsideCost);

  const T* full1 = nullptr;
  const T* full2 = nullptr;
  const std::uint64_t* binary1 = nullptr;
  const std::uint64_t* binary2 = nullptr;
  int height = 0;
  int width = 0;

  explicit CostRows(const MatchPair<T>& pair) : height(pair.height()), width(pair.width()) {
    pair.require(Mode);
    if constexpr (Mode == CostMode::Q) {
      binary1 = pair.binary1->words.data();
      binary2 = pair.binary2->words.data();
    } else {
      full1 = pair.full1->data.data();
      full2 = pair.full2->data.data();
    }
  }

  /// Cost between source pixel p (image 1) and target pixel q (image 2).
  value_type at(std::size_t p, std::size_t q) const {
    if constexpr (Mode == CostMode::Q) {
      return hamming_cost(binary1[p], binary2[q]);
    } else {
      return dot_cost(full1 + p * kDescriptorDim, full2 + q * kDescriptorDim);
    }
  }
};

/// Calls visit(u_label, v_label, cost) for all D x D displacements of pixel (r, c),
/// u_label in the outer loop. Out-of-image targets get kOutside.
template <class T, CostMode Mode, class Visit>
inline void for_each_cost(const CostRows<T, Mode>& rows, int r, int c, int D, Visit&& visit) {
  const int half = D / 2;
  const std::size_t p = static_cast<std::size_t>(r) * rows.width + c;
  for (int a = 0; a < D; ++a) {
    const int cc = c + a - half;
    const bool col_inside = cc >= 0 && cc < rows.width;
    for (int b = 0; b < D; ++b) {
      const int rr = r + b - half;
      if (col_inside && rr >= 0 && rr < rows.height) {
        visit(a, b, rows.at(p, static_cast<std::size_t>(rr) * rows.width + cc));
      } else {
        visit(a, b, CostRows<T, Mode>::kOutside);
      }
    }
  }
}

}  // namespace sflow::detail
