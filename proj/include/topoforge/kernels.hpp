#pragma once

#include "topoforge/matrix.hpp"
#include "topoforge/sparse.hpp"

// Data-parallel kernels behind the autodiff primitives. Each kernel exists
// twice: a plain serial loop in `serial::` that serves as the reference in
// tests and benchmarks, and an OpenMP version in `parallel::`. Every output
// row is owned by exactly one thread and accumulates in the same order as
// the serial loop, so both versions are bitwise identical at any thread count.

namespace topoforge::kernels {

namespace serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ · b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a · bᵀ
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
/// Sparse operator times dense matrix.
DenseMatrix spmm(const SparseOperator& s, const DenseMatrix& x);

}  // namespace serial

namespace parallel {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix spmm(const SparseOperator& s, const DenseMatrix& x);

}  // namespace parallel

using parallel::matmul;
using parallel::matmul_nt;
using parallel::matmul_tn;
using parallel::spmm;

/// Thread count used by the parallel kernels (1 unless changed).
void set_num_threads(int threads);
int num_threads();

}  // namespace topoforge::kernels
