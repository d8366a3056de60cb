#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "maskshare/sharing/strategy.hpp"
#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"

using namespace maskshare;

namespace {

sharing::NetArchitecture small_arch() {
  sharing::NetArchitecture arch;
  arch.obs_dim = 6;
  arch.action_dim = 4;
  arch.hidden = {16, 16};
  return arch;
}

// Well-separated synthetic identities: type = agent % groups.
std::vector<vae::IdentityVector> fake_identities(int n, int groups) {
  std::vector<vae::IdentityVector> ids;
  for (int i = 0; i < n; ++i) {
    const int g = i % groups;
    ids.push_back({i, {5.0 * g + 0.01 * i, -3.0 * g}});
  }
  return ids;
}

sharing::SharingStrategy strat(std::string_view name, int k = 0) {
  auto s = sharing::SharingStrategy::parse(name);
  s.clusters = k;
  return s;
}

}  // namespace

TEST_CASE("strategy names parse and print round-trip") {
  for (const char* name : {"NoPS", "FuPS", "FuPSId", "SePS", "SNPPS", "AdaPS"}) {
    CHECK(sharing::SharingStrategy::parse(name).name() == name);
  }
  CHECK(sharing::SharingStrategy::parse("FuPS+id").name() == "FuPSId");
  CHECK(sharing::SharingStrategy::parse("SNP-PS").name() == "SNPPS");
  CHECK_THROWS_AS(sharing::SharingStrategy::parse("naps"), ConfigError);
}

TEST_CASE("parameter-set counts match the per-strategy contract") {
  const auto arch = small_arch();
  const int n = 6;
  const auto ids = fake_identities(n, 2);

  auto sets = [&](std::string_view name, int k) {
    return sharing::build_bindings(strat(name, k), n, 2, arch, 1, &ids)
        .store.sets.size();
  };
  CHECK(sets("NoPS", 0) == 6);
  CHECK(sets("FuPS", 0) == 1);
  CHECK(sets("FuPSId", 0) == 1);
  CHECK(sets("SePS", 2) == 2);
  CHECK(sets("SNPPS", 0) == 1);
  CHECK(sets("AdaPS", 2) == 1);

  // Mask counts: SNPPS one per agent, AdaPS one per cluster.
  const auto snpps = sharing::build_bindings(strat("SNPPS"), n, 2, arch, 1, nullptr);
  CHECK(snpps.masks.masks.size() == 6);
  const auto adaps = sharing::build_bindings(strat("AdaPS", 2), n, 2, arch, 1, &ids);
  CHECK(adaps.masks.masks.size() == 2);
}

TEST_CASE("built stores agree with the closed-form parameter counts") {
  const auto arch = small_arch();
  const int n = 5;
  const auto ids = fake_identities(n, 2);
  for (const char* name : {"NoPS", "FuPS", "FuPSId", "SePS", "SNPPS", "AdaPS"}) {
    auto s = strat(name, 2);
    const auto b = sharing::build_bindings(
        s, n, 2, arch, 7, s.needs_identities() ? &ids : nullptr);
    CHECK(sharing::total_trainable_params(b.store) ==
          sharing::expected_total_params(s, arch, n, 2));
  }
}

TEST_CASE("relative model sizes reproduce the reference ratios") {
  sharing::NetArchitecture arch;
  arch.obs_dim = 2 * 3 + 2 * 29;  // bps 10-10-10
  arch.action_dim = 5;
  arch.hidden = {64, 64};
  const int n = 30, k = 3;

  CHECK(sharing::relative_model_size(strat("NoPS"), arch, n, k) == 30.0);
  CHECK(sharing::relative_model_size(strat("SePS", 3), arch, n, k) == 3.0);
  CHECK(sharing::relative_model_size(strat("AdaPS", 3), arch, n, k) == 1.0);
  CHECK(sharing::relative_model_size(strat("FuPS"), arch, n, k) == 1.0);
  CHECK(sharing::relative_model_size(strat("SNPPS"), arch, n, k) == 1.0);

  // FuPSId: the widened input adds N x h1 weights to each of the two nets.
  const long long actor = 64LL * 64 + 64 + 64LL * 64 + 64 + 5LL * 64 + 5;
  const long long critic = 64LL * 64 + 64 + 64LL * 64 + 64 + 1LL * 64 + 1;
  const long long widened = actor + critic + 2LL * n * 64;
  CHECK(sharing::relative_model_size(strat("FuPSId"), arch, n, k) ==
        doctest::Approx(static_cast<double>(widened) / (actor + critic))
            .epsilon(1e-15));
}

TEST_CASE("FuPS routes two agents with one observation to identical outputs") {
  const auto arch = small_arch();
  const auto b = sharing::build_bindings(strat("FuPS"), 4, 2, arch, 3, nullptr);
  util::Rng rng(1);
  std::vector<double> obs(arch.obs_dim);
  for (auto& x : obs) x = rng.uniform(-1, 1);
  const auto p0 = sharing::policy_forward(b.handles[0], b.store, b.masks, obs);
  const auto p3 = sharing::policy_forward(b.handles[3], b.store, b.masks, obs);
  CHECK(p0 == p3);
}

TEST_CASE("FuPSId appends distinct one-hot blocks per agent") {
  const auto arch = small_arch();
  const auto b = sharing::build_bindings(strat("FuPSId"), 4, 2, arch, 3, nullptr);
  std::vector<double> obs(arch.obs_dim, 0.25);
  const auto x0 = sharing::augment_observation(b.handles[0], obs);
  const auto x2 = sharing::augment_observation(b.handles[2], obs);
  CHECK(x0.size() == obs.size() + 4);
  CHECK(x0 != x2);
  CHECK(x0[obs.size() + 0] == 1.0);
  CHECK(x2[obs.size() + 2] == 1.0);
}

TEST_CASE("AdaPS: same cluster same distribution, different masks differ") {
  const auto arch = small_arch();
  const int n = 6;
  const auto ids = fake_identities(n, 2);  // types alternate 0,1,0,1,...
  const auto b = sharing::build_bindings(strat("AdaPS", 2), n, 2, arch, 5, &ids);

  util::Rng rng(2);
  std::vector<double> obs(arch.obs_dim);
  for (auto& x : obs) x = rng.uniform(-1, 1);

  // Agents 0 and 2 share a cluster; 0 and 1 do not.
  REQUIRE(b.clusters.assignment[0] == b.clusters.assignment[2]);
  REQUIRE(b.clusters.assignment[0] != b.clusters.assignment[1]);
  const auto p0 = sharing::policy_forward(b.handles[0], b.store, b.masks, obs);
  const auto p2 = sharing::policy_forward(b.handles[2], b.store, b.masks, obs);
  CHECK(p0 == p2);

  const auto& m0 = b.masks.masks[b.handles[0].mask_id];
  const auto& m1 = b.masks.masks[b.handles[1].mask_id];
  REQUIRE(m0.layers != m1.layers);
  // A single observation can miss the difference when the differing neurons
  // happen to be relu-inactive on it; probe several.
  bool any_difference = false;
  for (int trial = 0; trial < 16 && !any_difference; ++trial) {
    for (auto& x : obs) x = rng.uniform(-1, 1);
    const auto q0 = sharing::policy_forward(b.handles[0], b.store, b.masks, obs);
    const auto q1 = sharing::policy_forward(b.handles[1], b.store, b.masks, obs);
    any_difference = q0 != q1;
  }
  CHECK(any_difference);
}

TEST_CASE("SNPPS masks are reproducible from the seed and distinct per agent") {
  const auto arch = small_arch();
  const auto a = sharing::build_bindings(strat("SNPPS"), 5, 2, arch, 9, nullptr);
  const auto b = sharing::build_bindings(strat("SNPPS"), 5, 2, arch, 9, nullptr);
  REQUIRE(a.masks.masks.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a.masks.masks[i].layers == b.masks.masks[i].layers);
  }
  const auto c = sharing::build_bindings(strat("SNPPS"), 5, 2, arch, 10, nullptr);
  bool any_differs = false;
  for (std::size_t i = 0; i < 5; ++i) {
    any_differs |= a.masks.masks[i].layers != c.masks.masks[i].layers;
  }
  CHECK(any_differs);
}

TEST_CASE("SNPPS default drop rate tracks the AdaPS drop fraction") {
  const auto arch = small_arch();
  const int n = 6;
  const auto ids = fake_identities(n, 2);
  const auto adaps = sharing::build_bindings(strat("AdaPS", 2), n, 2, arch, 4, &ids);
  long long zeros = 0, total = 0;
  for (const auto& m : adaps.masks.masks) {
    total += static_cast<long long>(m.total_entries());
    zeros += static_cast<long long>(m.total_entries()) - m.active_count();
  }
  auto s = strat("SNPPS", 2);
  const auto snpps = sharing::build_bindings(s, n, 2, arch, 4, &ids);
  CHECK(snpps.snpps_drop_rate ==
        doctest::Approx(static_cast<double>(zeros) / total).epsilon(1e-12));
}

TEST_CASE("missing identity artifacts and bad K are rejected") {
  const auto arch = small_arch();
  CHECK_THROWS_AS(sharing::build_bindings(strat("AdaPS", 2), 6, 2, arch, 0, nullptr),
                  ContractError);
  CHECK_THROWS_AS(sharing::build_bindings(strat("SePS", 2), 6, 2, arch, 0, nullptr),
                  ContractError);
  const auto ids = fake_identities(6, 2);
  CHECK_THROWS_AS(sharing::build_bindings(strat("AdaPS", 6), 6, 2, arch, 0, &ids),
                  ConfigError);
  CHECK_THROWS_AS(sharing::build_bindings(strat("SePS", 7), 6, 2, arch, 0, &ids),
                  ConfigError);
}

TEST_CASE("dangling mask ids are contract errors") {
  const auto arch = small_arch();
  auto b = sharing::build_bindings(strat("FuPS"), 3, 1, arch, 0, nullptr);
  b.handles[0].mask_id = 4;  // no masks exist
  std::vector<double> obs(arch.obs_dim, 0.0);
  CHECK_THROWS_AS(sharing::policy_forward(b.handles[0], b.store, b.masks, obs),
                  ContractError);
}

TEST_CASE("binding manifest round-trips handles and architecture") {
  const auto arch = small_arch();
  const auto ids = fake_identities(6, 2);
  const auto b = sharing::build_bindings(strat("AdaPS", 2), 6, 2, arch, 5, &ids);
  const auto path =
      std::filesystem::temp_directory_path() / "maskshare_manifest_test.txt";
  sharing::write_binding_manifest(path.string(), b);
  const auto loaded = sharing::read_binding_manifest(path.string());
  CHECK(loaded.strategy.kind == b.strategy.kind);
  CHECK(loaded.num_agents == b.num_agents);
  CHECK(loaded.arch.obs_dim == b.arch.obs_dim);
  CHECK(loaded.arch.hidden == b.arch.hidden);
  CHECK(loaded.store.sets.size() == b.store.sets.size());
  REQUIRE(loaded.handles.size() == b.handles.size());
  for (std::size_t i = 0; i < b.handles.size(); ++i) {
    CHECK(loaded.handles[i].actor_set == b.handles[i].actor_set);
    CHECK(loaded.handles[i].mask_id == b.handles[i].mask_id);
    CHECK(loaded.handles[i].augmentation == b.handles[i].augmentation);
  }
  std::filesystem::remove(path);
}
