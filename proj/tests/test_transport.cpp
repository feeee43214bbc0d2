#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vpdheat/transport.hpp"

using namespace vpdheat;

namespace {

VpdElement random_element(std::size_t rank, int spread, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-spread, spread);
  VpdElement g(rank);
  for (auto& x : g) x = c(rng);
  return g;
}

}  // namespace

TEST(Assignment, SmallKnownMatrix) {
  const Matrix c{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  EXPECT_DOUBLE_EQ(solve_assignment(c).cost, 5.0);
  EXPECT_DOUBLE_EQ(solve_assignment({}).cost, 0.0);
}

TEST(W1, SinglePointToEmpty) {
  const GroundSpace s = birth_death_space({{0, 4}});
  EXPECT_DOUBLE_EQ(w1(s, Diagram{{1}}, Diagram{{0}}), 2.0);
  EXPECT_DOUBLE_EQ(w1(s, Diagram{{1}}, Diagram{{1}}), 0.0);
}

TEST(W1, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(0, 3);
  int checked = 0;
  while (checked < 200) {
    const GroundSpace s = oracle::random_space(4, rng);
    Diagram a{std::vector<int>(4, 0)}, b{std::vector<int>(4, 0)};
    std::uniform_int_distribution<std::size_t> pick(0, 3);
    const int na = count(rng), nb = count(rng);
    for (int i = 0; i < na; ++i) ++a.counts[pick(rng)];
    for (int i = 0; i < nb; ++i) ++b.counts[pick(rng)];
    if (na + nb > 6) continue;
    EXPECT_NEAR(w1(s, a, b), oracle::brute_w1(s, expand(a), expand(b)), 1e-12);
    // Without cancelling common mass the exhaustive value is the same.
    EXPECT_NEAR(solve_assignment(sink_augmented_costs(s, expand(a), expand(b))).cost,
                oracle::brute_w1(s, expand(a), expand(b)), 1e-12);
    ++checked;
  }
}

TEST(Rho, MetricAxiomsAndTranslationInvariance) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = 2 + trial % 4;
    const GroundSpace s = oracle::random_space(r, rng);
    const auto g = random_element(r, 2, rng), h = random_element(r, 2, rng),
               k = random_element(r, 2, rng), w = random_element(r, 3, rng);
    const double gh = rho(s, g, h);
    EXPECT_GE(gh, 0.0);
    EXPECT_NEAR(gh, rho(s, h, g), 1e-12);
    EXPECT_LE(gh, rho(s, g, k) + rho(s, k, h) + 1e-9);
    EXPECT_NEAR(rho(s, g + w, h + w), gh, 1e-12);
    EXPECT_EQ(rho(s, g, g), 0.0);
    if (g != h) {
      EXPECT_GT(gh, 0.0);
    }
  }
}

TEST(Rho, BoundedByMass) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = 1 + trial % 5;
    const GroundSpace s = oracle::random_space(r, rng);
    const auto g = random_element(r, 3, rng);
    EXPECT_LE(rho_to_zero(s, g), mass(s, g) + 1e-12);
  }
}

TEST(Rho, PairJumpUsesStrengthenedDistance) {
  const GroundSpace s = strengthen(MetricPair{{"x", "y"}, {{0, 4}, {4, 0}}, {2, 0.5}});
  EXPECT_DOUBLE_EQ(rho_to_zero(s, {1, -1}), 2.5);
  EXPECT_DOUBLE_EQ(rho_to_zero(s, {1, 1}), 2.5);
  EXPECT_DOUBLE_EQ(rho_to_zero(s, {2, 0}), 4.0);
}

TEST(Rho, CayleyGraphOfS3) {
  const auto [space, cycle] = oracle::s3_word_metric();
  ASSERT_EQ(space.rank(), 5u);
  VpdElement g(5, 0);
  g[cycle] = 1;
  EXPECT_DOUBLE_EQ(rho_to_zero(space, g), 2.0);
}

TEST(Rho, RejectsRankMismatch) {
  const GroundSpace s = birth_death_space({{0, 1}});
  EXPECT_THROW(rho(s, {1, 0}, {0}), Error);
}
