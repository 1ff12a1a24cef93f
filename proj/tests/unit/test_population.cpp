#include <gtest/gtest.h>

#include "spectral_edge/errors.hpp"
#include "spectral_edge/population.hpp"

using namespace spectral_edge;

TEST(Population, JohnstoneSpikedReplacesLeadingEntries) {
  const auto sp = johnstone_spiked(200, {25, 20});
  const auto s = sp.spectrum().sigmas;
  ASSERT_EQ(s.size(), 200u);
  EXPECT_EQ(s[0], 25);
  EXPECT_EQ(s[1], 20);
  for (std::size_t i = 2; i < s.size(); ++i) EXPECT_EQ(s[i], 1);
  EXPECT_EQ(sp.r(), 2u);

  const auto three = johnstone_spiked(100, {25, 20, 5});
  EXPECT_EQ(three.r(), 3u);
  EXPECT_EQ(three.spectrum().sigmas[2], 5);
}

TEST(Population, NoSpikesIsIdentity) {
  EXPECT_EQ(johnstone_spiked(10, {}).spectrum(), PopulationSpec::identity(10));
}

TEST(Population, JohnstoneRejectsInvalidSpikes) {
  EXPECT_THROW(johnstone_spiked(10, {20, 25}), ParameterError);
  EXPECT_THROW(johnstone_spiked(10, {0.5}), ParameterError);
  EXPECT_THROW(johnstone_spiked(10, {1.0}), ParameterError);
  EXPECT_THROW(johnstone_spiked(2, {5, 4}), ParameterError);
}

TEST(Population, SigmaBar) {
  EXPECT_DOUBLE_EQ(sigma_bar(PopulationSpec::identity(50)), 1.0);
  EXPECT_DOUBLE_EQ(sigma_bar(PopulationSpec{{2, 1, 1}}), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(sigma_bar(PopulationSpec{{0.3, 0.3, 0.3, 0.3}}), 0.3);
}

TEST(Population, SpikedSigmaBarTendsToBaseMean) {
  double prev_gap = 1e9;
  for (std::size_t p : {100u, 1000u, 10000u}) {
    const double gap = std::abs(sigma_bar(johnstone_spiked(p, {25, 20}).spectrum()) - 1.0);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 0.005);
}

TEST(Population, ValidateExamples) {
  EXPECT_TRUE(validate(PopulationSpec::identity(5), 0.5).empty());

  const auto band = validate(PopulationSpec{{3, 1}}, 0.5);
  ASSERT_EQ(band.size(), 1u);
  EXPECT_EQ(band[0].index, 0u);

  const auto order = validate(PopulationSpec{{1, 2}}, 0.4);
  ASSERT_FALSE(order.empty());
  EXPECT_EQ(order[0].index, 1u);
}

TEST(Population, SpikesAreExemptFromTheBand) {
  EXPECT_TRUE(validate(johnstone_spiked(50, {25, 20}), 0.5).empty());
}
