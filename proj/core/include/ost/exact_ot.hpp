#pragma once

#include "ost/matrix.hpp"
#include "ost/sinkhorn.hpp"
#include "ost/types.hpp"

namespace ost {

struct ExactOtResult {
  Matrix plan;
  double cost = 0.0;
};

// Largest T*N accepted by exact_ot_oracle.
inline constexpr std::size_t kExactOtMaxCells = 64;

// Unregularized optimal transport, solved exactly as a min-cost flow
// (source -> rows -> columns -> sink) by successive shortest paths.
// Augmentations follow a fixed order, so ties between optimal vertices
// resolve deterministically; only the cost is unique.
//
// Throws SizeError when T*N exceeds kExactOtMaxCells.
ExactOtResult exact_ot_oracle(const CostMatrix& cost, const Marginals& marginals);

}  // namespace ost
