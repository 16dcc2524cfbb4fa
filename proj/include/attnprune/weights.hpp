#pragma once

#include "attnprune/matrix.hpp"

namespace attnprune {

/// Query and key projections. The fused attention weight is wq * wk^T.
struct FactoredWeights {
  DenseMatrix wq;
  DenseMatrix wk;

  DenseMatrix fused() const { return matmul_transb(wq, wk); }
};

}  // namespace attnprune
