#include <catch2/catch_amalgamated.hpp>

#include "diagens/tensor.hpp"
#include "test_helpers.hpp"

using namespace diagens;
using testutil::contract_ref;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

template <typename T>
DenseTensor<T> reconstruct(const TruncatedFactorization<T>& f) {
  DenseTensor<T> l = f.left;
  const index_t r = f.rank();
  const index_t rows = l.size() / r;
  for (index_t i = 0; i < rows; ++i)
    for (index_t j = 0; j < r; ++j)
      l[i * r + j] *= T(f.singular_values[(size_t)j]);
  std::vector<std::pair<index_t, index_t>> pair{{l.rank() - 1, 0}};
  return contract(l, f.right,
                  std::span<const std::pair<index_t, index_t>>(pair));
}

}  // namespace

TEMPLATE_TEST_CASE("contract matches reference", "[tensor]", double, cplx) {
  std::mt19937 rng(7);
  using T = TestType;

  auto a = random_tensor<T>({3, 4, 5}, rng);
  auto b = random_tensor<T>({5, 4, 2}, rng);

  SECTION("single axis") {
    auto got = contract(a, b, {{2, 0}});
    auto want = contract_ref<T>(a, b, {{2, 0}});
    REQUIRE(got.shape() == std::vector<index_t>{3, 4, 4, 2});
    REQUIRE(max_abs_diff(got, want) < 1e-13);
  }
  SECTION("two axes, permuted") {
    auto got = contract(a, b, {{1, 1}, {2, 0}});
    auto want = contract_ref<T>(a, b, {{1, 1}, {2, 0}});
    REQUIRE(got.shape() == std::vector<index_t>{3, 2});
    REQUIRE(max_abs_diff(got, want) < 1e-13);
  }
  SECTION("outer product") {
    auto u = random_tensor<T>({2, 3}, rng);
    auto v = random_tensor<T>({4}, rng);
    auto got = contract(u, v, {});
    auto want = contract_ref<T>(u, v, {});
    REQUIRE(got.shape() == std::vector<index_t>{2, 3, 4});
    REQUIRE(max_abs_diff(got, want) < 1e-13);
  }
  SECTION("full contraction to scalar") {
    auto u = random_tensor<T>({3, 4}, rng);
    auto v = random_tensor<T>({4, 3}, rng);
    auto got = contract(u, v, {{0, 1}, {1, 0}});
    auto want = contract_ref<T>(u, v, {{0, 1}, {1, 0}});
    REQUIRE(got.rank() == 0);
    REQUIRE(std::abs(got[0] - want[0]) < 1e-13);
  }
}

TEMPLATE_TEST_CASE("contract is bilinear", "[tensor]", double, cplx) {
  std::mt19937 rng(11);
  using T = TestType;
  auto a = random_tensor<T>({4, 3}, rng);
  auto b1 = random_tensor<T>({3, 5}, rng);
  auto b2 = random_tensor<T>({3, 5}, rng);
  const T beta = testutil::random_value<T>(rng);

  auto combined = b1;
  axpy(beta, b2, combined);
  auto lhs = contract(a, combined, {{1, 0}});
  auto rhs = contract(a, b1, {{1, 0}});
  auto rhs2 = contract(a, b2, {{1, 0}});
  axpy(beta, rhs2, rhs);
  REQUIRE(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("permute moves entries where they belong", "[tensor]") {
  std::mt19937 rng(3);
  auto t = random_tensor<double>({2, 3, 4}, rng);
  auto p = permute(t, {2, 0, 1});
  REQUIRE(p.shape() == std::vector<index_t>{4, 2, 3});
  for (index_t i = 0; i < 2; ++i)
    for (index_t j = 0; j < 3; ++j)
      for (index_t k = 0; k < 4; ++k)
        REQUIRE(p.at({k, i, j}) == t.at({i, j, k}));

  auto back = permute(p, {1, 2, 0});
  REQUIRE(max_abs_diff(back, t) == 0.0);
}

TEMPLATE_TEST_CASE("svd_truncate reconstructs losslessly at zero tolerance",
                   "[tensor]", double, cplx) {
  std::mt19937 rng(17);
  using T = TestType;
  auto t = random_tensor<T>({4, 3, 5}, rng);
  auto f = svd_truncate(t, 1, 0, 0.0);
  REQUIRE(f.rank() == 4);
  REQUIRE(f.discarded_weight == 0.0);
  REQUIRE(max_abs_diff(reconstruct(f), t) < 1e-13);

  // left factor has orthonormal columns, right factor orthonormal rows
  auto gtl = contract(conj(f.left), f.left, {{0, 0}});
  auto gtr = contract(f.right, conj(f.right), {{1, 1}, {2, 2}});
  REQUIRE(max_abs_diff(gtl, testutil::eye<T>(f.rank())) < 1e-13);
  REQUIRE(max_abs_diff(gtr, testutil::eye<T>(f.rank())) < 1e-13);
}

TEST_CASE("svd_truncate drops the right singular values", "[tensor]") {
  // diag(1, 0.1, 0.01): with rel_tol 1e-3 exactly the smallest value goes.
  DenseTensor<double> t({3, 3});
  t.at({0, 0}) = 1.0;
  t.at({1, 1}) = 0.1;
  t.at({2, 2}) = 0.01;

  auto f = svd_truncate(t, 1, 0, 1e-3);
  REQUIRE(f.rank() == 2);
  REQUIRE(f.singular_values[0] == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(f.singular_values[1] == Catch::Approx(0.1).margin(1e-14));
  // 0.01^2 / (1 + 0.01 + 0.0001):
  REQUIRE(f.discarded_weight ==
          Catch::Approx(0.0001 / 1.0101).epsilon(1e-12));

  SECTION("max_rank caps harder than rel_tol") {
    auto g = svd_truncate(t, 1, 1, 1e-3);
    REQUIRE(g.rank() == 1);
    REQUIRE(g.discarded_weight ==
            Catch::Approx((0.01 + 0.0001) / 1.0101).epsilon(1e-12));
  }
  SECTION("at least one value survives any tolerance") {
    auto g = svd_truncate(t, 1, 0, 1.0);
    REQUIRE(g.rank() == 1);
  }
}

TEMPLATE_TEST_CASE("truncated svd error equals reported discarded weight",
                   "[tensor]", double, cplx) {
  std::mt19937 rng(23);
  using T = TestType;
  auto t = random_tensor<T>({6, 2, 7}, rng);
  const double n2 = norm(t) * norm(t);

  auto f = svd_truncate(t, 2, 4, 0.0);
  auto err = reconstruct(f);
  scale(err, T(-1));
  axpy(T(1), t, err);
  const double e2 = norm(err) * norm(err);
  REQUIRE(e2 / n2 == Catch::Approx(f.discarded_weight).margin(1e-12));
}

TEMPLATE_TEST_CASE("gram-path svd agrees with the direct driver", "[tensor]",
                   double, cplx) {
  std::mt19937 rng(29);
  using T = TestType;

  SECTION("wide") {
    auto t = random_tensor<T>({70, 150}, rng);
    auto a = svd_truncate(t, 1, 20, 1e-6);
    auto b = svd_truncate_gram(t, 1, 20, 1e-6);
    REQUIRE(a.rank() == b.rank());
    for (index_t i = 0; i < a.rank(); ++i)
      REQUIRE(a.singular_values[(size_t)i] ==
              Catch::Approx(b.singular_values[(size_t)i]).margin(1e-8));
    REQUIRE(max_abs_diff(reconstruct(a), reconstruct(b)) < 1e-7);
  }
  SECTION("tall") {
    auto t = random_tensor<T>({150, 70}, rng);
    auto a = svd_truncate(t, 1, 20, 1e-6);
    auto b = svd_truncate_gram(t, 1, 20, 1e-6);
    REQUIRE(a.rank() == b.rank());
    REQUIRE(max_abs_diff(reconstruct(a), reconstruct(b)) < 1e-7);
    // orthonormality survives the gram construction
    auto gt = contract(conj(b.left), b.left, {{0, 0}});
    REQUIRE(max_abs_diff(gt, testutil::eye<T>(b.rank())) < 1e-8);
  }
  SECTION("small fallback") {
    auto t = random_tensor<T>({8, 12}, rng);
    auto a = svd_truncate(t, 1, 0, 1e-4);
    auto b = svd_truncate_gram(t, 1, 0, 1e-4);
    REQUIRE(a.rank() == b.rank());
    REQUIRE(max_abs_diff(reconstruct(a), reconstruct(b)) < 1e-10);
  }
}

TEMPLATE_TEST_CASE("qr and lq factorize with orthonormal factors", "[tensor]",
                   double, cplx) {
  std::mt19937 rng(31);
  using T = TestType;
  auto t = random_tensor<T>({3, 4, 5}, rng);

  SECTION("qr") {
    auto [q, r] = qr_orthogonalize(t, 2);
    auto qtq = contract(conj(q), q, {{0, 0}, {1, 1}});
    REQUIRE(max_abs_diff(qtq, testutil::eye<T>(q.dim(2))) < 1e-13);
    auto back = contract(q, r, {{2, 0}});
    REQUIRE(max_abs_diff(back, t) < 1e-13);
  }
  SECTION("lq") {
    auto [l, q] = lq_orthogonalize(t, 1);
    auto qqt = contract(q, conj(q), {{1, 1}, {2, 2}});
    REQUIRE(max_abs_diff(qqt, testutil::eye<T>(q.dim(0))) < 1e-13);
    auto back = contract(l, q, {{1, 0}});
    REQUIRE(max_abs_diff(back, t) < 1e-13);
  }
  SECTION("wide qr has rank-limited inner bond") {
    auto w = random_tensor<T>({2, 3, 17}, rng);
    auto [q, r] = qr_orthogonalize(w, 2);
    REQUIRE(q.dim(2) == 6);
    REQUIRE(r.dim(0) == 6);
    auto back = contract(q, r, {{2, 0}});
    REQUIRE(max_abs_diff(back, w) < 1e-13);
  }
}

TEST_CASE("tensor argument validation", "[tensor]") {
  std::mt19937 rng(37);
  auto a = random_tensor<double>({2, 3}, rng);
  auto b = random_tensor<double>({4, 2}, rng);

  REQUIRE_THROWS_AS(contract(a, b, {{1, 0}}), dimension_error);   // 3 vs 4
  REQUIRE_THROWS_AS(contract(a, b, {{5, 0}}), dimension_error);
  REQUIRE_THROWS_AS(permute(a, {0, 0}), dimension_error);
  REQUIRE_THROWS_AS(permute(a, {0}), dimension_error);
  REQUIRE_THROWS_AS(svd_truncate(a, 0, 0, 0.0), dimension_error);
  REQUIRE_THROWS_AS(svd_truncate(a, 2, 0, 0.0), dimension_error);
  REQUIRE_THROWS_AS((DenseTensor<double>({2, 2}, {1.0})), dimension_error);

  DenseTensor<double> nan_t({2, 2});
  nan_t[0] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(svd_truncate(nan_t, 1, 0, 0.0), numerical_error);

  auto c = random_tensor<double>({2, 3}, rng);
  REQUIRE_THROWS_AS(axpy(1.0, a, b), dimension_error);
  REQUIRE_NOTHROW(axpy(1.0, a, c));
}

TEST_CASE("scale, axpy and norm behave like the dense formulas", "[tensor]") {
  std::mt19937 rng(41);
  auto t = random_tensor<cplx>({3, 3}, rng);
  double n2 = 0.0;
  for (index_t i = 0; i < t.size(); ++i) n2 += std::norm(t[i]);
  REQUIRE(norm(t) == Catch::Approx(std::sqrt(n2)).epsilon(1e-13));

  auto s = t;
  scale(s, cplx(0, 2));
  REQUIRE(norm(s) == Catch::Approx(2.0 * norm(t)).epsilon(1e-13));

  auto c = conj(t);
  for (index_t i = 0; i < t.size(); ++i)
    REQUIRE(c[i] == std::conj(t[i]));
}
