// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "gender_table.hpp"
#include "sgf/errors.hpp"
#include "sgf/io.hpp"
#include "sgf/metrics.hpp"

namespace sgf {
namespace {

using testing::curve_of;
using testing::kInterfaceGanRows;
using testing::kSgfRows;

SampleOutcome outcome(std::size_t target, Vector before, Vector after, double goal = 1.0) {
  SampleOutcome o;
  o.target_attr = target;
  o.scores_before = std::move(before);
  o.scores_after = std::move(after);
  o.target_score = goal;
  return o;
}

// Sample with `changed` non-target attributes flipped out of M.
SampleOutcome with_side_effects(std::size_t m, std::size_t changed) {
  Vector before(m, 0.1);
  Vector after(m, 0.1);
  for (std::size_t k = 1; k <= changed; ++k) after[k] = 0.9;
  return outcome(0, before, after);
}

TEST(AttributeChanged, StrictThreshold) {
  EXPECT_TRUE(attribute_changed(0.1, 0.7));
  EXPECT_FALSE(attribute_changed(0.3, 0.6));
  EXPECT_FALSE(attribute_changed(0.9, 0.4));
  EXPECT_TRUE(attribute_changed(0.9, 0.3));
  EXPECT_FALSE(attribute_changed(0.0, 0.5));
}

TEST(SampleOutcome, SuccessNeedsDirection) {
  EXPECT_TRUE(outcome(0, {0.1, 0.5}, {0.7, 0.5}, 1.0).succeeded());
  EXPECT_FALSE(outcome(0, {0.1, 0.5}, {0.7, 0.5}, 0.0).succeeded());
  EXPECT_TRUE(outcome(1, {0.5, 0.9}, {0.5, 0.2}, 0.0).succeeded());
  EXPECT_FALSE(outcome(1, {0.5, 0.9}, {0.5, 0.5}, 0.0).succeeded());
  EXPECT_EQ(outcome(0, {0.1, 0.1, 0.9}, {0.7, 0.8, 0.3}).side_effects(), 2u);
  EXPECT_THROW(outcome(2, {0.1, 0.2}, {0.1, 0.2}).validate(), InvalidArgument);
  EXPECT_THROW(outcome(0, {0.1, 0.2}, {0.1}).validate(), InvalidArgument);
}

TEST(Accuracy, Counts) {
  std::vector<SampleOutcome> s;
  for (int i = 0; i < 100; ++i) s.push_back(i < 93 ? outcome(0, {0.2}, {0.8}) : outcome(0, {0.2}, {0.3}));
  EXPECT_DOUBLE_EQ(accuracy(s), 0.93);
  std::vector<SampleOutcome> still(5, outcome(0, {0.4, 0.2}, {0.4, 0.2}));
  EXPECT_EQ(accuracy(still), 0.0);
  std::vector<SampleOutcome> moved{outcome(0, {0.3}, {0.9}), outcome(0, {0.8}, {0.2}, 0.0)};
  EXPECT_EQ(accuracy(moved), 1.0);
  EXPECT_THROW(accuracy({}), InvalidArgument);
}

TEST(Disentanglement, Formula) {
  EXPECT_EQ(disentanglement({with_side_effects(48, 0)}, 48), 1.0);
  EXPECT_DOUBLE_EQ(disentanglement({with_side_effects(48, 0), with_side_effects(48, 47)}, 48), 0.5);
  EXPECT_EQ(disentanglement({with_side_effects(48, 47)}, 48), 0.0);
  EXPECT_DOUBLE_EQ(disentanglement({with_side_effects(5, 1)}, 5), 0.75);
  EXPECT_THROW(disentanglement({with_side_effects(2, 0)}, 1), InvalidArgument);
  EXPECT_THROW(disentanglement({}, 4), InvalidArgument);
}

TEST(Disentanglement, PermutationInvariant) {
  std::vector<SampleOutcome> s{with_side_effects(6, 0), with_side_effects(6, 3), with_side_effects(6, 5),
                               outcome(0, Vector(6, 0.1), Vector(6, 0.9))};
  const double a = disentanglement(s, 6);
  const double acc = accuracy(s);
  std::reverse(s.begin(), s.end());
  EXPECT_DOUBLE_EQ(disentanglement(s, 6), a);
  EXPECT_DOUBLE_EQ(accuracy(s), acc);
}

TEST(Mds, FirstRows) {
  EXPECT_NEAR(mds(curve_of({kSgfRows[0]})), 0.179, 1e-3);
  EXPECT_NEAR(accumulated_mds(curve_of({kSgfRows[0], kSgfRows[1]})).back(), 0.464, 1e-3);
}

TEST(Mds, ReproducesPublishedTable) {
  for (const auto* rows : {&kSgfRows, &kInterfaceGanRows}) {
    const MdcCurve curve = curve_of(*rows);
    const auto acc = accumulated_mds(curve);
    ASSERT_EQ(acc.size(), rows->size());
    for (std::size_t i = 0; i < rows->size(); ++i) {
      EXPECT_NEAR(acc[i], (*rows)[i].accumulated, 0.002) << i;
      EXPECT_NEAR(harmonic_mean((*rows)[i].accuracy, (*rows)[i].disentanglement), (*rows)[i].harmonic, 0.002) << i;
    }
  }
  EXPECT_NEAR(mds(curve_of(kSgfRows)), testing::kSgfFinalMds, 0.002);
  EXPECT_NEAR(mds(curve_of(kInterfaceGanRows)), testing::kInterfaceGanFinalMds, 0.002);
}

TEST(Mds, TrapezoidsByHand) {
  // (0,1) -> (0.5, 0.8): 0.5 * 0.9 = 0.45; -> (0.4, 0.9): -0.1 * 0.85 = -0.085.
  MdcCurve c{{{1, 0.5, 0.8}, {2, 0.4, 0.9}}};
  const auto acc = accumulated_mds(c);
  EXPECT_NEAR(acc[0], 0.45, 1e-15);
  EXPECT_NEAR(acc[1], 0.365, 1e-15);
  EXPECT_NEAR(mds(c), 0.45, 1e-15);
}

TEST(Mds, PerfectDisentanglementIsFinalAccuracy) {
  MdcCurve c{{{1, 0.2, 1.0}, {2, 0.55, 1.0}, {3, 0.9, 1.0}}};
  EXPECT_NEAR(mds(c), 0.9, 1e-15);
}

TEST(Mds, CollinearInsertionInvariant) {
  const MdcCurve base = curve_of(kSgfRows);
  MdcCurve more = base;
  const auto& a = base.points[1];
  const auto& b = base.points[2];
  more.points.insert(more.points.begin() + 2, MdcPoint{12.5, (a.accuracy + b.accuracy) / 2,
                                                       (a.disentanglement + b.disentanglement) / 2});
  EXPECT_NEAR(mds(more), mds(base), 1e-12);
}

TEST(Mds, EmptyCurve) {
  EXPECT_THROW(mds(MdcCurve{}), InvalidArgument);
  EXPECT_THROW(accumulated_mds(MdcCurve{}), InvalidArgument);
  EXPECT_THROW(select_best_strength(MdcCurve{}), InvalidArgument);
}

TEST(MdcCurve, Validation) {
  EXPECT_NO_THROW(curve_of(kSgfRows).validate());
  EXPECT_THROW((MdcCurve{{{2, 0.1, 0.9}, {2, 0.2, 0.9}}}).validate(), InvalidArgument);
  EXPECT_THROW((MdcCurve{{{2, 0.1, 0.9}, {1, 0.2, 0.9}}}).validate(), InvalidArgument);
  EXPECT_THROW((MdcCurve{{{1, 1.2, 0.9}}}).validate(), InvalidArgument);
  EXPECT_THROW((MdcCurve{{{1, 0.2, -0.1}}}).validate(), InvalidArgument);
}

TEST(HarmonicMean, Values) {
  EXPECT_NEAR(harmonic_mean(0.18, 0.986), 0.304, 1e-3);
  EXPECT_NEAR(harmonic_mean(0.48, 0.915), 0.630, 1e-3);
  EXPECT_DOUBLE_EQ(harmonic_mean(0.37, 0.37), 0.37);
  EXPECT_EQ(harmonic_mean(0.0, 0.0), 0.0);
  EXPECT_THROW(harmonic_mean(-0.1, 0.5), InvalidArgument);
}

TEST(SelectBestStrength, PublishedColumns) {
  const auto sgf_best = select_best_strength(curve_of(kSgfRows));
  EXPECT_EQ(kSgfRows[sgf_best].strength, 25.0);
  const auto igan_best = select_best_strength(curve_of(kInterfaceGanRows));
  EXPECT_EQ(kInterfaceGanRows[igan_best].strength, 2.0);
  EXPECT_EQ(select_best_strength(MdcCurve{{{7, 0.3, 0.4}}}), 0u);
}

TEST(SelectBestStrength, TiesGoLow) {
  EXPECT_EQ(select_best_strength(MdcCurve{{{1, 0.5, 0.5}, {2, 0.9, 0.1}, {3, 0.5, 0.5}}}), 0u);
}

TEST(InvertTarget, Rule) {
  EXPECT_EQ(invert_target(0.8, 1.0), 0.0);
  EXPECT_EQ(invert_target(0.2, 1.0), 1.0);
  EXPECT_EQ(invert_target(0.2, 0.0), 1.0);
  EXPECT_EQ(invert_target(0.8, 0.0), 0.0);
  EXPECT_EQ(invert_target(0.5, 1.0), 1.0);
}

TEST(InvertTarget, AllMatchingCohort) {
  std::vector<SampleOutcome> s;
  for (double start : {0.7, 0.8, 0.95}) {
    const double goal = invert_target(start, 1.0);
    EXPECT_EQ(goal, 0.0);
    s.push_back(outcome(0, {start}, {start - 0.6}, goal));
  }
  EXPECT_EQ(accuracy(s), 1.0);
}

TEST(Csv, RoundTrip) {
  const MdcCurve c = curve_of(kSgfRows);
  const std::string text = to_csv(c);
  EXPECT_EQ(text.substr(0, text.find('\n')), "strength,accuracy,disentanglement");
  const MdcCurve back = mdc_from_csv(text);
  ASSERT_EQ(back.points.size(), c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    EXPECT_EQ(back.points[i].strength, c.points[i].strength);
    EXPECT_EQ(back.points[i].accuracy, c.points[i].accuracy);
    EXPECT_EQ(back.points[i].disentanglement, c.points[i].disentanglement);
  }
  const auto path = std::filesystem::temp_directory_path() / "sgf_metrics_round.csv";
  write_mdc_csv(c, path);
  EXPECT_EQ(read_file(path), text);
  EXPECT_EQ(read_mdc_csv(path).points.size(), 6u);
}

TEST(Csv, Malformed) {
  EXPECT_THROW(mdc_from_csv(""), InvalidArgument);
  EXPECT_THROW(mdc_from_csv("strength,acc,dis\n1,0.1,0.9\n"), InvalidArgument);
  EXPECT_THROW(mdc_from_csv("strength,accuracy,disentanglement\n1,0.1\n"), InvalidArgument);
  EXPECT_THROW(mdc_from_csv("strength,accuracy,disentanglement\n1,abc,0.9\n"), InvalidArgument);
  EXPECT_THROW(mdc_from_csv("strength,accuracy,disentanglement\n1,0.1,0.9x\n"), InvalidArgument);
  EXPECT_THROW(mdc_from_csv("strength,accuracy,disentanglement\n2,0.1,0.9\n1,0.2,0.9\n"), InvalidArgument);
  EXPECT_NO_THROW(mdc_from_csv("strength,accuracy,disentanglement\r\n1,0.1,0.9\r\n"));
}

}  // namespace
}  // namespace sgf
