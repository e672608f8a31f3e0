#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "topocf/characteristics.hpp"

using namespace topocf;
using namespace topocf::testing;

namespace {

// (U, I, E) shaped matrix built cheaply: round-robin edges. Distinct as long
// as gcd(U, I) = 1 and E <= U * I; the callers assert the edge count.
InteractionMatrix shaped_matrix(Index users, Index items, EdgeId edges) {
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(edges);
  for (EdgeId e = 0; e < edges; ++e) {
    pairs.emplace_back(static_cast<Index>(e % users), static_cast<Index>(e % items));
  }
  return InteractionMatrix::from_edges(users, items, std::move(pairs));
}

}  // namespace

TEST_CASE("classical stats reproduce the reference dataset shapes") {
  SUBCASE("983705 interactions over 5611 x 2932") {
    const InteractionMatrix m = shaped_matrix(5611, 2932, 983705);
    REQUIRE(m.num_edges() == 983705);
    const ClassicalStats s = classical_stats(m);
    CHECK(s.space_size == 16451452ULL);
    CHECK(s.shape == doctest::Approx(1.914).epsilon(0.001));
    CHECK(s.density == doctest::Approx(0.060).epsilon(0.01));
    CHECK(s.sparsity == doctest::Approx(1.0 - s.density).epsilon(1e-12));
    CHECK(avg_degree(m, Side::kUser) == doctest::Approx(175.317).epsilon(0.001));
    CHECK(avg_degree(m, Side::kItem) == doctest::Approx(335.506).epsilon(0.001));
  }
  SUBCASE("53491 interactions over 1601 x 951") {
    const InteractionMatrix m = shaped_matrix(1601, 951, 53491);
    REQUIRE(m.num_edges() == 53491);
    const ClassicalStats s = classical_stats(m);
    CHECK(s.shape == doctest::Approx(1.683).epsilon(0.001));
    CHECK(s.density == doctest::Approx(0.035).epsilon(0.02));
  }
  SUBCASE("complete bipartite graph is fully dense") {
    std::vector<std::pair<Index, Index>> pairs;
    for (Index u = 0; u < 2; ++u) {
      for (Index i = 0; i < 2; ++i) pairs.emplace_back(u, i);
    }
    const ClassicalStats s = classical_stats(from_pairs(2, 2, pairs));
    CHECK(s.density == doctest::Approx(1.0));
    CHECK(s.sparsity == doctest::Approx(0.0));
  }
}

TEST_CASE("gini coefficient") {
  CHECK(gini({1, 1, 1, 1}) == doctest::Approx(0.0));
  CHECK(gini({1, 3}) == doctest::Approx(0.25));
  CHECK(gini({0, 0, 0, 1}) == doctest::Approx(0.75));
  SUBCASE("matches the brute-force pairwise oracle") {
    RngStream rng(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> values;
      const std::size_t n = 2 + rng.below(30);
      for (std::size_t k = 0; k < n; ++k) values.push_back(1.0 + rng.below(50));
      CHECK(gini(values) == doctest::Approx(gini_oracle(values)).epsilon(1e-12));
    }
  }
  SUBCASE("scale invariance") {
    RngStream rng(4, 0);
    std::vector<double> values;
    for (int k = 0; k < 12; ++k) values.push_back(1.0 + rng.below(9));
    std::vector<double> scaled = values;
    for (double& v : scaled) v *= 37.5;
    CHECK(gini(values) == doctest::Approx(gini(scaled)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gini({1.0}), Error);
}

TEST_CASE("pair clustering is intersection over union") {
  // N(u0) = {0,1,2}, N(u1) = {0,1}: IoU = 2/3.
  const InteractionMatrix m =
      from_pairs(2, 3, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}});
  CHECK(pair_clustering(m, Side::kUser, 0, 1) == doctest::Approx(2.0 / 3.0));
  SUBCASE("identical neighborhoods give 1") {
    const InteractionMatrix eq = from_pairs(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK(pair_clustering(eq, Side::kUser, 0, 1) == doctest::Approx(1.0));
  }
  SUBCASE("disjoint neighborhoods give 0") {
    const InteractionMatrix dj = from_pairs(2, 2, {{0, 0}, {1, 1}});
    CHECK(pair_clustering(dj, Side::kUser, 0, 1) == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(pair_clustering(m, Side::kUser, 0, 0), Error);
}

TEST_CASE("node and average clustering match the exhaustive oracle") {
  RngStream rng(7, 0);
  for (int trial = 0; trial < 15; ++trial) {
    const InteractionMatrix m = random_bipartite(10, 10, 0.25, rng);
    for (Side side : {Side::kUser, Side::kItem}) {
      for (Index v = 0; v < m.side_count(side); ++v) {
        CHECK(node_clustering(m, side, v) ==
              doctest::Approx(node_clustering_oracle(m, side, v)).epsilon(1e-12));
      }
      CHECK(avg_clustering(m, side) ==
            doctest::Approx(avg_clustering_oracle(m, side)).epsilon(1e-12));
    }
  }
}

TEST_CASE("clustering of the complete bipartite graph is 1") {
  std::vector<std::pair<Index, Index>> pairs;
  for (Index u = 0; u < 4; ++u) {
    for (Index i = 0; i < 5; ++i) pairs.emplace_back(u, i);
  }
  const InteractionMatrix m = from_pairs(4, 5, pairs);
  CHECK(avg_clustering(m, Side::kUser) == doctest::Approx(1.0));
  CHECK(avg_clustering(m, Side::kItem) == doctest::Approx(1.0));
  CHECK(node_clustering(m, Side::kUser, 0) == doctest::Approx(1.0));
}

TEST_CASE("clustering of all-disjoint users is 0") {
  const InteractionMatrix m = from_pairs(3, 3, {{0, 0}, {1, 1}, {2, 2}});
  CHECK(avg_clustering(m, Side::kUser) == doctest::Approx(0.0));
}

TEST_CASE("avg clustering is identical across worker counts") {
  RngStream rng(8, 0);
  const InteractionMatrix m = random_bipartite(40, 40, 0.1, rng);
  const double serial = avg_clustering(m, Side::kUser, 1);
  const double parallel = avg_clustering(m, Side::kUser, 4);
  CHECK(serial == parallel);  // bit-stable by indexed summation
}

TEST_CASE("degree assortativity") {
  SUBCASE("star projection gives -1") {
    // A projected star: center 0 linked to 1..4.
    ProjectedGraph star;
    star.side = Side::kUser;
    star.num_nodes = 5;
    star.row_ptr = {0, 4, 5, 6, 7, 8};
    star.neighbors = {1, 2, 3, 4, 0, 0, 0, 0};
    star.counts = {1, 1, 1, 1, 1, 1, 1, 1};
    star.self_counts = {4, 1, 1, 1, 1};
    const auto rho = degree_assortativity(star);
    REQUIRE(rho.has_value());
    CHECK(*rho == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("cycle is degenerate (zero endpoint variance)") {
    ProjectedGraph cycle;
    cycle.side = Side::kUser;
    cycle.num_nodes = 4;
    cycle.row_ptr = {0, 2, 4, 6, 8};
    cycle.neighbors = {1, 3, 0, 2, 1, 3, 0, 2};
    cycle.counts.assign(8, 1);
    cycle.self_counts.assign(4, 1);
    CHECK_FALSE(degree_assortativity(cycle).has_value());
  }
  SUBCASE("empty projection throws") {
    ProjectedGraph empty;
    empty.num_nodes = 3;
    empty.row_ptr = {0, 0, 0, 0};
    empty.self_counts = {0, 0, 0};
    CHECK_THROWS_AS(degree_assortativity(empty), Error);
  }
  SUBCASE("matches the edge-list Pearson oracle on random graphs") {
    RngStream rng(12, 0);
    for (int trial = 0; trial < 20; ++trial) {
      const InteractionMatrix m = random_bipartite(12, 12, 0.22, rng);
      for (Side side : {Side::kUser, Side::kItem}) {
        const auto expected = assortativity_oracle(m, side);
        const ProjectedGraph p = project(m, side);
        std::optional<double> got;
        bool threw = false;
        try {
          got = degree_assortativity(p);
        } catch (const Error&) {
          threw = true;  // empty projection
        }
        const auto streamed = threw ? std::nullopt : degree_assortativity(m, side);
        if (!expected.has_value()) {
          if (!threw) CHECK_FALSE(got.has_value());
        } else {
          REQUIRE_FALSE(threw);
          REQUIRE(got.has_value());
          CHECK(*got == doctest::Approx(*expected).epsilon(1e-9));
          REQUIRE(streamed.has_value());
          CHECK(*streamed == doctest::Approx(*expected).epsilon(1e-9));
          CHECK(*got >= -1.0 - 1e-12);
          CHECK(*got <= 1.0 + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("assortativity is invariant under node relabeling") {
  RngStream rng(14, 0);
  const InteractionMatrix m = random_bipartite_connected(10, 10, 0.3, rng);
  const auto before = degree_assortativity(m, Side::kUser);

  // Relabel users by reversing indices.
  std::vector<std::pair<Index, Index>> pairs;
  for (Index u = 0; u < m.num_users(); ++u) {
    for (EdgeId e = m.row_ptr()[u]; e < m.row_ptr()[u + 1]; ++e) {
      pairs.emplace_back(m.num_users() - 1 - u, m.items()[e]);
    }
  }
  const InteractionMatrix relabeled = from_pairs(m.num_users(), m.num_items(), pairs);
  const auto after = degree_assortativity(relabeled, Side::kUser);
  REQUIRE(before.has_value() == after.has_value());
  if (before) CHECK(*before == doctest::Approx(*after).epsilon(1e-12));
}

TEST_CASE("degree distribution") {
  SUBCASE("simple counting") {
    const InteractionMatrix m = from_pairs(2, 1, {{0, 0}, {1, 0}});
    const auto dist = degree_distribution(m);
    CHECK(dist.at(1) == doctest::Approx(2.0 / 3.0));
    CHECK(dist.at(2) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("regular graph is a single spike") {
    std::vector<std::pair<Index, Index>> pairs;
    for (Index u = 0; u < 4; ++u) {
      for (Index i = 0; i < 4; ++i) pairs.emplace_back(u, i);
    }
    const auto dist = degree_distribution(from_pairs(4, 4, pairs));
    REQUIRE(dist.size() == 1);
    CHECK(dist.at(4) == doctest::Approx(1.0));
  }
  SUBCASE("matches the counting oracle and sums to 1") {
    RngStream rng(15, 0);
    for (int trial = 0; trial < 10; ++trial) {
      const InteractionMatrix m = random_bipartite(14, 11, 0.3, rng);
      const auto dist = degree_distribution(m);
      const auto expected = degree_distribution_oracle(m);
      REQUIRE(dist.size() == expected.size());
      double total = 0.0;
      for (const auto& [d, p] : dist) {
        CHECK(p == doctest::Approx(expected.at(d)).epsilon(1e-12));
        total += p;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("power-law fit recovers planted exponents") {
  RngStream rng(16, 0);
  for (double theta : {2.1, 2.5, 2.9}) {
    const std::vector<Index> sample = power_law_degrees(theta, 5, 10000, rng);
    const PowerLawFit fit = fit_power_law(sample, 5);
    CHECK_FALSE(fit.unfit);
    CHECK(fit.theta == doctest::Approx(theta).epsilon(0.02));
    CHECK(std::abs(fit.theta - theta) < 0.05);
  }
}

TEST_CASE("power-law fit flags degenerate tails") {
  const std::vector<Index> flat(100, 5);
  const PowerLawFit fit = fit_power_law(flat, 5);
  CHECK(fit.unfit);
  CHECK(std::isinf(fit.theta));
}

TEST_CASE("power-law fit needs enough tail samples") {
  const std::vector<Index> tiny(10, 7);
  CHECK_THROWS_AS(fit_power_law(tiny, 5), Error);
}

TEST_CASE("scale-free graph degrees land in the sanity band") {
  RngStream rng(17, 0);
  const InteractionMatrix m = scale_free_bipartite(400, 300, 4000, rng);
  std::vector<Index> degrees;
  for (Index u = 0; u < m.num_users(); ++u) degrees.push_back(m.user_degree(u));
  for (Index i = 0; i < m.num_items(); ++i) degrees.push_back(m.item_degree(i));
  const PowerLawFit fit = fit_power_law(degrees, 2);
  CHECK_FALSE(fit.unfit);
  CHECK(fit.theta > 1.5);
  CHECK(fit.theta < 3.5);
}

TEST_CASE("feature vector ordering and transforms") {
  RngStream rng(18, 0);
  const InteractionMatrix m = random_bipartite_connected(12, 10, 0.3, rng);
  const ClassicalStats cs = classical_stats(m);
  const TopologyStats ts = compute_topology(m);

  SUBCASE("identity transform passes raw values through") {
    const CharacteristicsRecord rec = feature_vector(cs, ts, TransformSpec::none());
    for (int f = 0; f < CharacteristicsRecord::kNumFeatures; ++f) {
      CHECK(rec.values[static_cast<std::size_t>(f)] ==
            rec.raw[static_cast<std::size_t>(f)]);
    }
  }
  SUBCASE("standard transform applies log10 to the skewed counts") {
    const CharacteristicsRecord rec = feature_vector(cs, ts, TransformSpec::standard());
    CHECK(rec.log10_applied[0]);
    CHECK(rec.values[0] ==
          doctest::Approx(std::log10(static_cast<double>(cs.space_size))));
    CHECK(rec.values[5] == doctest::Approx(std::log10(ts.avg_degree_user)));
    CHECK_FALSE(rec.log10_applied[2]);
  }
  SUBCASE("axis order matches the documented convention") {
    const auto& names = CharacteristicsRecord::feature_names();
    CHECK(names[0] == "space_size");
    CHECK(names[1] == "shape");
    CHECK(names[2] == "density");
    CHECK(names[3] == "gini_user");
    CHECK(names[4] == "gini_item");
    CHECK(names[5] == "avg_degree_user");
    CHECK(names[6] == "avg_degree_item");
    CHECK(names[7] == "avg_clustering_user");
    CHECK(names[8] == "avg_clustering_item");
    CHECK(names[9] == "assortativity_user");
    CHECK(names[10] == "assortativity_item");
  }
  SUBCASE("log10 of the reference space size") {
    CHECK(std::log10(16451452.0) == doctest::Approx(7.2162).epsilon(1e-4));
  }
}

TEST_CASE("histogram totals equal U + I and sigma identities hold") {
  RngStream rng(19, 0);
  const InteractionMatrix m = random_bipartite_connected(18, 14, 0.25, rng);
  const TopologyStats ts = compute_topology(m);
  std::size_t total = 0;
  for (const auto& [d, n] : ts.degree_histogram) total += n;
  CHECK(total == m.num_users() + m.num_items());
  CHECK(ts.avg_degree_user * m.num_users() ==
        doctest::Approx(static_cast<double>(m.num_edges())).epsilon(1e-9));
  CHECK(ts.avg_degree_item * m.num_items() ==
        doctest::Approx(static_cast<double>(m.num_edges())).epsilon(1e-9));
}
