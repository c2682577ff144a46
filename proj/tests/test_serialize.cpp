#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "diagens/model.hpp"
#include "diagens/serialize.hpp"
#include "test_helpers.hpp"

using namespace diagens;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("serialize_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), (std::streamsize)bytes.size());
  REQUIRE(os.good());
}

template <typename Chain>
void require_bitwise_equal(const Chain& a, const Chain& b) {
  REQUIRE(a.length() == b.length());
  for (index_t k = 0; k < a.length(); ++k) {
    REQUIRE(a.sites[(size_t)k].shape() == b.sites[(size_t)k].shape());
    for (index_t i = 0; i < a.sites[(size_t)k].size(); ++i)
      REQUIRE(a.sites[(size_t)k][i] == b.sites[(size_t)k][i]);
  }
}

}  // namespace

TEST_CASE("mps round trip is bitwise exact", "[serialize]") {
  std::mt19937 rng(7171);

  SECTION("real") {
    const auto psi = testutil::random_mps<double>(5, 4, 7, rng);
    TempFile f("mps_real.bin");
    save_mps(psi, f.path);
    require_bitwise_equal(psi, load_mps<double>(f.path));
  }

  SECTION("complex") {
    const auto psi = testutil::random_mps<cplx>(4, 2, 5, rng);
    TempFile f("mps_cplx.bin");
    save_mps(psi, f.path);
    require_bitwise_equal(psi, load_mps<cplx>(f.path));
  }
}

TEST_CASE("mpo round trip is bitwise exact", "[serialize]") {
  const SpinChainModel m{6, 1.0, -1.05, 0.5};
  const auto op = commutator_mpo(m, rescale_alpha(m));
  TempFile f("mpo.bin");
  save_mpo(op, f.path);
  require_bitwise_equal(op, load_mpo<double>(f.path));
}

TEST_CASE("a resumed filter run equals an uninterrupted one", "[serialize]") {
  const SpinChainModel m{5, 1.0, -1.05, 0.5};
  const double alpha = rescale_alpha(m);
  const auto hc = commutator_mpo(m, alpha);
  const auto rho0 = vectorized_density<double>("X+", 5);

  FilterConfig cfg;
  cfg.order = 16;
  cfg.max_bond = 48;
  cfg.rel_tol = 1e-10;
  cfg.alpha = alpha;
  cfg.checkpoint_orders = {8, 16};

  auto straight = run_filter(rho0, hc, cfg);
  REQUIRE_FALSE(straight.aborted);

  auto partial = init_filter(rho0, hc, cfg);
  while (partial.order_done < 7) advance(partial);
  REQUIRE(partial.order_done == 7);
  REQUIRE(partial.checkpoints.empty());

  TempFile f("filter_state.bin");
  save_filter_state(partial, f.path);
  auto resumed = load_filter_state<double>(f.path, hc, cfg);
  REQUIRE(resumed.order_done == 7);
  REQUIRE(resumed.cumulative_discarded_weight ==
          partial.cumulative_discarded_weight);
  resume_filter(resumed);

  REQUIRE_FALSE(resumed.aborted);
  REQUIRE(resumed.order_done == 16);
  require_bitwise_equal(straight.accumulator, resumed.accumulator);
  REQUIRE(resumed.cumulative_discarded_weight ==
          straight.cumulative_discarded_weight);

  REQUIRE(resumed.checkpoints.size() == straight.checkpoints.size());
  for (size_t i = 0; i < straight.checkpoints.size(); ++i) {
    const auto& a = straight.checkpoints[i];
    const auto& b = resumed.checkpoints[i];
    REQUIRE(a.order == b.order);
    REQUIRE(a.delta_sq == b.delta_sq);
    REQUIRE(a.frobenius_sq == b.frobenius_sq);
    REQUIRE(a.trace == b.trace);
    REQUIRE(a.osee_half == b.osee_half);
    REQUIRE(a.max_bond_used == b.max_bond_used);
    REQUIRE(a.cumulative_discarded_weight == b.cumulative_discarded_weight);
  }
}

TEST_CASE("loading rejects mismatched or damaged files", "[serialize]") {
  std::mt19937 rng(42);
  const auto psi = testutil::random_mps<double>(4, 4, 3, rng);
  TempFile f("guard.bin");
  save_mps(psi, f.path);

  SECTION("wrong kind") {
    REQUIRE_THROWS_AS(load_mpo<double>(f.path), dimension_error);
  }

  SECTION("wrong scalar type") {
    REQUIRE_THROWS_AS(load_mps<cplx>(f.path), dimension_error);
  }

  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_mps<double>("no_such_container.bin"),
                      dimension_error);
  }

  SECTION("corrupt magic") {
    auto bytes = slurp(f.path);
    bytes[0] ^= 0x5a;
    spit(f.path, bytes);
    REQUIRE_THROWS_AS(load_mps<double>(f.path), dimension_error);
  }

  SECTION("truncated payload") {
    auto bytes = slurp(f.path);
    bytes.resize(bytes.size() / 2);
    spit(f.path, bytes);
    REQUIRE_THROWS_AS(load_mps<double>(f.path), dimension_error);
  }

  SECTION("snapshot order outside the config") {
    const SpinChainModel m{4, 1.0, -1.05, 0.5};
    const auto hc = commutator_mpo(m, rescale_alpha(m));
    const auto rho0 = vectorized_density<double>("X+", 4);
    FilterConfig cfg;
    cfg.order = 12;
    auto run = init_filter(rho0, hc, cfg);
    while (run.order_done < 5) advance(run);
    TempFile g("state_guard.bin");
    save_filter_state(run, g.path);
    FilterConfig small;
    small.order = 2;
    REQUIRE_THROWS_AS(load_filter_state<double>(g.path, hc, small),
                      dimension_error);
  }
}
