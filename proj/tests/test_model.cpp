#include <catch2/catch_amalgamated.hpp>

#include "diagens/linalg.hpp"
#include "diagens/model.hpp"
#include "test_helpers.hpp"

using namespace diagens;
using testutil::dense_commutator;
using testutil::dense_ising;
using testutil::interleaved_index;
using testutil::max_abs_diff;

TEST_CASE("pauli matrices obey the algebra", "[model]") {
  auto sq = [](const Mat2<cplx>& a, const Mat2<cplx>& b) {
    Mat2<cplx> r{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          r[(size_t)(2 * i + j)] +=
              a[(size_t)(2 * i + k)] * b[(size_t)(2 * k + j)];
    return r;
  };
  const auto x = pauli_x<cplx>(), z = pauli_z<cplx>(), id = pauli_id<cplx>();
  const auto y = pauli_y();
  REQUIRE(sq(x, x) == id);
  REQUIRE(sq(y, y) == id);
  REQUIRE(sq(z, z) == id);
  // XY = iZ
  const auto xy = sq(x, y);
  for (int i = 0; i < 4; ++i)
    REQUIRE(xy[(size_t)i] == cplx(0, 1) * z[(size_t)i]);
}

TEST_CASE("hamiltonian mpo equals the kronecker-built matrix", "[model]") {
  SECTION("two sites, pure coupling") {
    SpinChainModel m{2, 1.0, 0.0, 0.0};
    auto dense = mpo_to_dense(ising_mpo(m));
    // Z(x)Z = diag(1,-1,-1,1)
    for (index_t i = 0; i < 4; ++i)
      for (index_t j = 0; j < 4; ++j)
        REQUIRE(dense.at({i, j}) ==
                Catch::Approx(i == j ? (i == 0 || i == 3 ? 1.0 : -1.0) : 0.0)
                    .margin(1e-15));
  }
  SECTION("general parameters up to six sites") {
    for (index_t n : {2, 3, 6}) {
      SpinChainModel m{n, 1.0, -1.05, 0.5};
      auto got = mpo_to_dense(ising_mpo(m));
      auto want = dense_ising(n, m.j, m.g, m.h);
      REQUIRE(max_abs_diff(got, want) < 1e-13);
      // symmetric
      for (index_t i = 0; i < got.dim(0); ++i)
        for (index_t j = 0; j < i; ++j)
          REQUIRE(got.at({i, j}) == Catch::Approx(got.at({j, i})).margin(1e-14));
    }
  }
}

TEST_CASE("commutator mpo equals the dense superoperator", "[model]") {
  for (index_t n : {2, 3}) {
    SpinChainModel m{n, 0.8, -1.05, 0.5};
    const double alpha = 0.37;
    auto got = mpo_to_dense(commutator_mpo(m, alpha));
    auto h = dense_ising(n, m.j, m.g, m.h);
    auto want = dense_commutator(h, n);
    scale(want, alpha);
    REQUIRE(max_abs_diff(got, want) < 1e-13);
  }
}

TEST_CASE("commutator annihilates the identity and preserves traces",
          "[model]") {
  SpinChainModel m{5, 1.0, -1.05, 0.5};
  auto hc = commutator_mpo(m, rescale_alpha(m));
  auto one = trace_vector<double>(5);

  auto out = apply_mpo(hc, one);
  REQUIRE(norm(out) < 1e-12);

  // tr [H, rho] = 0 for any rho
  std::mt19937 rng(61);
  auto rho = testutil::random_mps<double>(5, 4, 3, rng);
  auto hrho = apply_mpo(hc, rho);
  REQUIRE(std::abs(inner(one, hrho)) < 1e-10 * norm(hrho));
}

TEST_CASE("commutator spectrum consists of eigenvalue differences",
          "[model]") {
  const index_t n = 3;
  SpinChainModel m{n, 1.0, -1.05, 0.5};
  auto h = dense_ising(n, m.j, m.g, m.h);

  const index_t d = h.dim(0);
  std::vector<double> evals((size_t)d);
  auto hv = h;
  la::eigh<double>(d, hv.data(), evals.data());

  std::vector<double> diffs;
  for (index_t a = 0; a < d; ++a)
    for (index_t b = 0; b < d; ++b)
      diffs.push_back(evals[(size_t)a] - evals[(size_t)b]);
  std::sort(diffs.begin(), diffs.end());

  auto hc = mpo_to_dense(commutator_mpo(m, 1.0));
  std::vector<double> cvals((size_t)(d * d));
  la::eigh<double>(d * d, hc.data(), cvals.data());

  for (size_t i = 0; i < cvals.size(); ++i)
    REQUIRE(cvals[i] == Catch::Approx(diffs[i]).margin(1e-9));
}

TEST_CASE("rescaling keeps the commutator spectrum inside the unit interval",
          "[model]") {
  SECTION("frozen examples") {
    // Z(x)Z spectrum is {-1, 1}: differences span [-2, 2]
    REQUIRE(rescale_alpha({2, 1.0, 0.0, 0.0}, 0.0) ==
            Catch::Approx(0.5).epsilon(1e-14));
    // N=20 at the standard couplings: 2*(19 + 21 + 10) = 100
    REQUIRE(rescale_alpha({20, 1.0, -1.05, 0.5}, 0.01) ==
            Catch::Approx(0.0099).epsilon(1e-14));
  }
  SECTION("dense spectrum check") {
    SpinChainModel m{4, 1.0, -1.05, 0.5};
    const double alpha = rescale_alpha(m, 0.01);
    auto h = dense_ising(m.length, m.j, m.g, m.h);
    std::vector<double> evals(16);
    la::eigh<double>(16, h.data(), evals.data());
    const double spread = alpha * (evals.back() - evals.front());
    REQUIRE(spread < 0.99);
    REQUIRE(spread > 0.0);
  }
  SECTION("bad margins throw") {
    REQUIRE_THROWS_AS(rescale_alpha({4, 1.0, 0.0, 0.0}, 1.0), dimension_error);
    REQUIRE_THROWS_AS(rescale_alpha({4, 1.0, 0.0, 0.0}, -0.1),
                      dimension_error);
  }
}

TEST_CASE("named kets are the pauli eigenstates", "[model]") {
  auto check = [](const Mat2<cplx>& op, const std::string& name, double sign) {
    const auto v = local_ket<cplx>(name);
    // op * v == sign * v
    for (int i = 0; i < 2; ++i) {
      const cplx got = op[(size_t)(2 * i)] * v[0] + op[(size_t)(2 * i + 1)] * v[1];
      REQUIRE(std::abs(got - sign * v[(size_t)i]) < 1e-14);
    }
    const double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    REQUIRE(n == Catch::Approx(1.0).epsilon(1e-14));
  };
  check(pauli_x<cplx>(), "X+", 1.0);
  check(pauli_x<cplx>(), "X-", -1.0);
  check(pauli_y(), "Y+", 1.0);
  check(pauli_y(), "Y-", -1.0);
  check(pauli_z<cplx>(), "Z+", 1.0);
  check(pauli_z<cplx>(), "Z-", -1.0);

  REQUIRE(is_real_state("X+"));
  REQUIRE(is_real_state("Z-"));
  REQUIRE(!is_real_state("Y+"));
  REQUIRE_THROWS_AS(local_ket<double>("Y-"), dimension_error);
  REQUIRE_THROWS_AS(local_ket<double>("W+"), dimension_error);
}

TEMPLATE_TEST_CASE("vectorized densities are unit-trace pure states",
                   "[model]", double, cplx) {
  using T = TestType;
  const index_t n = 3;
  for (const char* name : {"X+", "X-", "Z+", "Z-"}) {
    auto rho = vectorized_density<T>(name, n);
    rho.validate();
    auto one = trace_vector<T>(n);
    REQUIRE(std::abs(inner(one, rho) - T(1)) < 1e-13);   // tr rho = 1
    REQUIRE(std::abs(inner(rho, rho) - T(1)) < 1e-13);   // tr rho^2 = 1
    REQUIRE(hermiticity_defect(rho) < 1e-13);
  }
}

TEST_CASE("vectorized density matches the outer product entrywise",
          "[model]") {
  const index_t n = 2;
  auto rho = vectorized_density<cplx>("Y+", n);
  auto d = to_dense(rho);

  const auto v = local_ket<cplx>("Y+");
  // psi = v (x) v over two sites
  std::vector<cplx> psi(4);
  for (index_t a = 0; a < 2; ++a)
    for (index_t b = 0; b < 2; ++b)
      psi[(size_t)(2 * a + b)] = v[(size_t)a] * v[(size_t)b];
  for (index_t s = 0; s < 4; ++s)
    for (index_t sp = 0; sp < 4; ++sp)
      REQUIRE(std::abs(d[interleaved_index(s, sp, n)] -
                       psi[(size_t)s] * std::conj(psi[(size_t)sp])) < 1e-14);
}

TEST_CASE("initial states are stationary in expectation", "[model]") {
  // <rho0 | [H, rho0]> = tr(rho0 [H, rho0]) = 0
  SpinChainModel m{4, 1.0, -1.05, 0.5};
  auto hc = to_complex(commutator_mpo(m, rescale_alpha(m)));
  for (const char* name : {"X+", "X-", "Y+", "Y-", "Z+", "Z-"}) {
    auto rho = vectorized_density<cplx>(name, m.length);
    auto hrho = apply_mpo(hc, rho);
    REQUIRE(std::abs(inner(rho, hrho)) < 1e-12);
  }
}

TEST_CASE("observable vectors contract to single-site expectations",
          "[model]") {
  const index_t n = 4;

  auto expect = [&](const std::string& state, MpsVector<cplx> obs) {
    auto rho = vectorized_density<cplx>(state, n);
    return inner(obs, rho);
  };

  auto z1 = observable_vector<cplx>(n, {{1, pauli_z<cplx>()}});
  REQUIRE(std::abs(expect("Z+", z1) - cplx(1)) < 1e-13);
  REQUIRE(std::abs(expect("Z-", z1) + cplx(1)) < 1e-13);
  REQUIRE(std::abs(expect("X+", z1)) < 1e-13);

  auto x0 = observable_vector<cplx>(n, {{0, pauli_x<cplx>()}});
  REQUIRE(std::abs(expect("X-", x0) + cplx(1)) < 1e-13);
  REQUIRE(std::abs(expect("Y+", x0)) < 1e-13);

  // two-point function on a product state factorizes
  auto zz = observable_vector<cplx>(
      n, {{0, pauli_z<cplx>()}, {3, pauli_z<cplx>()}});
  REQUIRE(std::abs(expect("Z-", zz) - cplx(1)) < 1e-13);

  REQUIRE_THROWS_AS(observable_vector<cplx>(n, {{4, pauli_z<cplx>()}}),
                    dimension_error);
}

TEST_CASE("swap_ketbra is the vectorized adjoint", "[model]") {
  std::mt19937 rng(67);
  auto rho = testutil::random_mps<cplx>(3, 4, 3, rng);

  auto dag = swap_ketbra(rho);
  auto back = swap_ketbra(dag);
  REQUIRE(max_abs_diff(to_dense(back), to_dense(rho)) < 1e-13);

  // densify both and compare entrywise as matrices
  auto d = to_dense(rho), dd = to_dense(dag);
  for (index_t s = 0; s < 8; ++s)
    for (index_t sp = 0; sp < 8; ++sp)
      REQUIRE(std::abs(dd[interleaved_index(s, sp, 3)] -
                       std::conj(d[interleaved_index(sp, s, 3)])) < 1e-13);

  REQUIRE(hermiticity_defect(rho) > 0.01);  // random states are not hermitian
}
