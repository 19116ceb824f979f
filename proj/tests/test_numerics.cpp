#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "topoforge/autodiff.hpp"
#include "topoforge/error.hpp"
#include "topoforge/kernels.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/operators.hpp"
#include "topoforge/rng.hpp"

using namespace topoforge;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

SparseOperator random_sparse(std::size_t r, std::size_t c, double density, Rng& rng) {
  std::vector<SparseEntry> e;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (rng.uniform() < density) e.push_back({i, j, rng.uniform(-2.0, 2.0)});
  return SparseOperator::from_triplets(r, c, e, {});
}

Graph path3() {
  const std::pair<NodeId, NodeId> e[] = {{0, 1}, {1, 2}};
  return build_graph(3, e).graph;
}

}  // namespace

TEST_CASE("Rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.below(5) < 5);
  }
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("parallel kernels are bitwise equal to the serial references") {
  Rng rng(3);
  kernels::set_num_threads(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_matrix(37, 19, rng);
    const auto b = random_matrix(19, 23, rng);
    const auto c = random_matrix(37, 23, rng);
    const auto s = random_sparse(41, 37, 0.1, rng);
    CHECK(kernels::parallel::matmul(a, b).bitwise_equal(kernels::serial::matmul(a, b)));
    CHECK(kernels::parallel::matmul_tn(a, c).bitwise_equal(kernels::serial::matmul_tn(a, c)));
    CHECK(kernels::parallel::matmul_nt(c, b).bitwise_equal(kernels::serial::matmul_nt(c, b)));
    CHECK(kernels::parallel::spmm(s, a).bitwise_equal(kernels::serial::spmm(s, a)));
  }
  kernels::set_num_threads(1);
}

TEST_CASE("kernels agree with a naive dense product") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_matrix(13, 7, rng);
    const auto b = random_matrix(7, 9, rng);
    CHECK(max_abs_diff(kernels::matmul(a, b), oracle::dense_matmul(a, b)) < 1e-14);
    CHECK(max_abs_diff(kernels::matmul_tn(a.transposed(), b), oracle::dense_matmul(a, b)) < 1e-14);
    CHECK(max_abs_diff(kernels::matmul_nt(a, b.transposed()), oracle::dense_matmul(a, b)) < 1e-14);
    const auto s = random_sparse(60 + static_cast<std::size_t>(trial) * 4, 13, 0.2, rng);
    CHECK(max_abs_diff(kernels::spmm(s, a), oracle::dense_matmul(s.to_dense(), a)) < 1e-14);
  }
}

TEST_CASE("sparse operator construction") {
  const std::vector<SparseEntry> dup = {{0, 0, 1.0}, {0, 0, 2.0}};
  CHECK_THROWS_AS(SparseOperator::from_triplets(1, 1, dup, {}), std::invalid_argument);
  CHECK(SparseOperator::from_triplets(1, 1, dup, {}, true).at(0, 0) == 3.0);
  const std::vector<SparseEntry> cancel = {{0, 0, 1.0}, {0, 0, -1.0}};
  CHECK(SparseOperator::from_triplets(1, 1, cancel, {}, true).is_zero());

  const auto rn = SparseOperator::from_dense(DenseMatrix::from_rows({{1, 1}, {0, 0}}), {}).row_normalized();
  CHECK(rn.at(0, 0) == 0.5);
  CHECK(rn.row(1).empty());
}

TEST_CASE("primitive forward examples") {
  ComputationRecord rec;
  const auto x = rec.constant(DenseMatrix::from_rows({{-1, 2}}));
  CHECK(rec.value(rec.relu(x)) == DenseMatrix::from_rows({{0, 2}}));

  const auto rows = rec.constant(DenseMatrix::from_rows({{1, 1}, {3, 3}}));
  const std::size_t seg[] = {0, 0};
  CHECK(rec.value(rec.segment_mean(rows, seg, 1)) == DenseMatrix::from_rows({{2, 2}}));
  CHECK(rec.value(rec.segment_sum(rows, seg, 1)) == DenseMatrix::from_rows({{4, 4}}));
  const std::size_t seg2[] = {0, 2};
  CHECK(rec.value(rec.segment_mean(rows, seg2, 3)) == DenseMatrix::from_rows({{1, 1}, {0, 0}, {3, 3}}));

  const Complex p3 = lift_clique(path3(), 1);
  auto b = std::make_shared<const SparseOperator>(boundary_matrix(p3, 1, false));
  const auto h1 = rec.constant(DenseMatrix::from_rows({{1}, {1}}));
  CHECK(rec.value(rec.sparse_dense_matmul(b, h1)) == DenseMatrix::from_rows({{1}, {2}, {1}}));
}

TEST_CASE("losses") {
  ComputationRecord rec;
  CHECK(rec.value(rec.mse(rec.constant(DenseMatrix::from_rows({{0}, {2}})), DenseMatrix(2, 1)))(0, 0) == 2.0);
  CHECK(rec.value(rec.mae(rec.constant(DenseMatrix::from_rows({{1}, {-1}})), DenseMatrix(2, 1)))(0, 0) == 1.0);
  const std::int64_t label[] = {0};
  CHECK(rec.value(rec.softmax_cross_entropy(rec.constant(DenseMatrix(1, 2)), label))(0, 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("backward examples") {
  const std::vector<Parameter> params = {{"w", DenseMatrix::from_rows({{1}, {2}}), true}};
  ComputationRecord rec;
  const auto w = rec.parameter(params[0]);
  // wᵀw = n * mse(w, 0)
  const auto sq = rec.scale(rec.mse(w, DenseMatrix(2, 1)), 2.0);
  const auto g = rec.backward(sq, params);
  CHECK(rec.value(sq)(0, 0) == 5.0);
  CHECK(g[0] == DenseMatrix::from_rows({{2}, {4}}));

  ComputationRecord c;
  c.parameter(params[0]);
  const auto k = c.mse(c.constant(DenseMatrix(1, 1, 3.0)), DenseMatrix(1, 1));
  CHECK(c.backward(k, params)[0] == DenseMatrix(2, 1));

  CHECK_THROWS_AS(rec.backward(w, params), std::invalid_argument);
}

TEST_CASE("finite_diff_check is exact on a quadratic") {
  for (const auto& w : {DenseMatrix::from_rows({{1}, {2}}), DenseMatrix::from_rows({{-0.5}, {0.75}}),
                        DenseMatrix::from_rows({{3}, {-1.25}})}) {
    const std::vector<Parameter> params = {{"w", w, true}};
    const ScalarFunction f = [&](const std::vector<Parameter>& p) {
      ComputationRecord rec;
      const auto loss = rec.scale(rec.mse(rec.parameter(p[0]), DenseMatrix(2, 1)), 2.0);
      return Evaluation{rec.value(loss)(0, 0), rec.backward(loss, p)};
    };
    const auto r = finite_diff_check(f, params);
    CHECK(r.max_relative_error <= 1e-9);
    CHECK(r.coordinates == 2);
  }
}

TEST_CASE("composites of every primitive match finite differences") {
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(100 + trial);
    const std::size_t n = 6, d = 3;
    auto s = std::make_shared<const SparseOperator>(random_sparse(n, n, 0.4, rng));
    const DenseMatrix x = random_matrix(n, d, rng);
    const std::vector<Parameter> params = {
        {"w1", random_matrix(d, d, rng), true},
        {"w2", random_matrix(2 * d, 2, rng), true},
        {"frozen", random_matrix(d, d, rng), false},
    };
    std::vector<std::size_t> segments(n);
    for (std::size_t i = 0; i < n; ++i) segments[i] = i % 3;
    const std::vector<std::int64_t> labels = {0, 1, 1};
    const DenseMatrix targets = random_matrix(3, 2, rng);
    const int loss_kind = static_cast<int>(trial % 3);
    const ScalarFunction f = [&](const std::vector<Parameter>& p) {
      ComputationRecord rec;
      const auto w1 = rec.parameter(p[0]);
      const auto w2 = rec.parameter(p[1]);
      const auto fr = rec.parameter(p[2]);
      const auto h = rec.relu(rec.matmul(rec.constant(x), w1));
      const auto m = rec.sparse_dense_matmul(s, rec.matmul(h, fr));
      const auto drop = rec.dropout(rec.add(h, rec.scale(m, 0.5)), 0.3, 99);
      const ValueId parts[] = {drop, m};
      const auto z = rec.matmul(rec.concat_cols(parts), w2);
      const auto pooled = trial % 2 ? rec.segment_mean(z, segments, 3) : rec.segment_sum(z, segments, 3);
      const auto sel = rec.row_slice(pooled, std::vector<std::size_t>{0, 1, 2});
      ValueId loss;
      if (loss_kind == 0) loss = rec.softmax_cross_entropy(sel, labels);
      else if (loss_kind == 1) loss = rec.mse(sel, targets);
      else loss = rec.mae(sel, targets);
      return Evaluation{rec.value(loss)(0, 0), rec.backward(loss, p)};
    };
    const auto r = finite_diff_check(f, params);
    CHECK_MESSAGE(r.max_relative_error <= 1e-4, "trial " << trial << " worst " << r.worst_parameter);
  }
}

TEST_CASE("dropout") {
  Rng rng(2);
  const auto x = random_matrix(10, 10, rng);
  ComputationRecord rec;
  const auto v = rec.constant(x);
  CHECK(rec.value(rec.dropout(v, 0.0, 1)).bitwise_equal(x));
  const DenseMatrix a = rec.value(rec.dropout(v, 0.5, 9));
  const DenseMatrix b = rec.value(rec.dropout(v, 0.5, 9));
  const DenseMatrix c = rec.value(rec.dropout(v, 0.5, 10));
  CHECK(a.bitwise_equal(b));
  CHECK_FALSE(a.bitwise_equal(c));
}

TEST_CASE("segment reduce over one segment equals a whole reduce") {
  Rng rng(8);
  const auto x = random_matrix(7, 3, rng);
  ComputationRecord rec;
  const std::vector<std::size_t> seg(7, 0);
  const auto s = rec.value(rec.segment_sum(rec.constant(x), seg, 1));
  for (std::size_t c = 0; c < 3; ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < 7; ++r) total += x(r, c);
    CHECK(s(0, c) == total);
  }
}

TEST_CASE("shape errors name the primitive") {
  ComputationRecord rec;
  const auto a = rec.constant(DenseMatrix(2, 3));
  try {
    rec.matmul(a, a);
    FAIL("expected a shape error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("matmul") != std::string::npos);
  }
}
