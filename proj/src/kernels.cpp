#include "topoforge/kernels.hpp"

#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace topoforge::kernels {

namespace {

int g_threads = 1;

void check_inner(const char* kind, std::size_t lhs, std::size_t rhs, const std::string& a,
                 const std::string& b) {
  if (lhs != rhs)
    throw std::invalid_argument(std::string(kind) + ": shape mismatch " + a + " vs " + b);
}

// Row kernels shared by both variants so accumulation order is identical.
inline void matmul_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out, std::size_t i) {
  double* dst = out.data() + i * out.cols();
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = a(i, k);
    const double* src = b.data() + k * b.cols();
    for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
  }
}

inline void matmul_tn_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out,
                          std::size_t i) {
  double* dst = out.data() + i * out.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double aki = a(k, i);
    const double* src = b.data() + k * b.cols();
    for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aki * src[j];
  }
}

inline void matmul_nt_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out,
                          std::size_t i) {
  for (std::size_t j = 0; j < b.rows(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
    out(i, j) = acc;
  }
}

inline void spmm_row(const SparseOperator& s, const DenseMatrix& x, DenseMatrix& out, std::size_t i) {
  double* dst = out.data() + i * out.cols();
  for (const auto& e : s.row(i)) {
    const double* src = x.data() + e.col * x.cols();
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] += e.value * src[j];
  }
}

}  // namespace

void set_num_threads(int threads) { g_threads = threads < 1 ? 1 : threads; }
int num_threads() { return g_threads; }

namespace serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner("matmul", a.cols(), b.rows(), a.shape_string(), b.shape_string());
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, out, i);
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner("matmul_tn", a.rows(), b.rows(), a.shape_string(), b.shape_string());
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, out, i);
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner("matmul_nt", a.cols(), b.cols(), a.shape_string(), b.shape_string());
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, out, i);
  return out;
}

DenseMatrix spmm(const SparseOperator& s, const DenseMatrix& x) {
  check_inner("sparse_dense_matmul", s.cols(), x.rows(),
              "(" + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) + ")", x.shape_string());
  DenseMatrix out(s.rows(), x.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) spmm_row(s, x, out, i);
  return out;
}

}  // namespace serial

namespace parallel {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner("matmul", a.cols(), b.rows(), a.shape_string(), b.shape_string());
  DenseMatrix out(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) num_threads(g_threads) if (g_threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner("matmul_tn", a.rows(), b.rows(), a.shape_string(), b.shape_string());
  DenseMatrix out(a.cols(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static) num_threads(g_threads) if (g_threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_tn_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner("matmul_nt", a.cols(), b.cols(), a.shape_string(), b.shape_string());
  DenseMatrix out(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) num_threads(g_threads) if (g_threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

DenseMatrix spmm(const SparseOperator& s, const DenseMatrix& x) {
  check_inner("sparse_dense_matmul", s.cols(), x.rows(),
              "(" + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) + ")", x.shape_string());
  DenseMatrix out(s.rows(), x.cols());
  const auto n = static_cast<std::ptrdiff_t>(s.rows());
#pragma omp parallel for schedule(dynamic, 64) num_threads(g_threads) if (g_threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) spmm_row(s, x, out, static_cast<std::size_t>(i));
  return out;
}

}  // namespace parallel

}  // namespace topoforge::kernels
