#pragma once

#include <span>
#include <vector>

namespace dwell {

/// Thomas algorithm for sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i].
/// No pivoting; callers use it on diagonally dominant or definite systems.
/// Returns false on a zero pivot.
template <class T, class D>
bool solve_tridiagonal(std::span<const D> sub, std::span<const D> diag, std::span<const D> sup,
                       std::span<const T> rhs, std::span<T> x, std::vector<D>& work) {
  const std::size_t n = diag.size();
  work.resize(n);
  D pivot = diag[0];
  if (pivot == D(0)) return false;
  x[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    work[i] = sup[i - 1] / pivot;
    pivot = diag[i] - sub[i] * work[i];
    if (pivot == D(0)) return false;
    x[i] = (rhs[i] - sub[i] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= work[i + 1] * x[i + 1];
  return true;
}

}  // namespace dwell
