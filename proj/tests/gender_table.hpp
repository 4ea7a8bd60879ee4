// SPDX-License-Identifier: Apache-2.0
//
// Published accuracy / disentanglement rows for the "gender" attribute on
// FFHQ-Attributes, with the accumulated MDS and harmonic-mean columns as
// printed (three decimals).
#pragma once

#include <array>
#include <vector>

#include "sgf/metrics.hpp"

namespace sgf::testing {

struct TableRow {
  double strength;
  double accuracy;
  double disentanglement;
  double accumulated;
  double harmonic;
};

inline const std::vector<TableRow> kSgfRows{
    {5, 0.18, 0.986, 0.179, 0.304},  {10, 0.48, 0.915, 0.464, 0.630}, {15, 0.79, 0.890, 0.744, 0.837},
    {20, 0.93, 0.872, 0.867, 0.900}, {25, 0.99, 0.859, 0.919, 0.920}, {30, 0.98, 0.842, 0.910, 0.906},
};

inline const std::vector<TableRow> kInterfaceGanRows{
    {0.25, 0.13, 0.993, 0.129, 0.230}, {0.5, 0.32, 0.942, 0.312, 0.478}, {0.75, 0.41, 0.883, 0.394, 0.560},
    {1.0, 0.55, 0.822, 0.513, 0.659},  {2.0, 0.85, 0.612, 0.728, 0.712}, {3.0, 0.99, 0.469, 0.804, 0.636},
    {4.0, 1.00, 0.398, 0.808, 0.569},
};

inline constexpr double kSgfFinalMds = 0.919;
inline constexpr double kInterfaceGanFinalMds = 0.808;
inline constexpr double kSgfBestHarmonic = 0.920;
inline constexpr double kInterfaceGanBestHarmonic = 0.712;

inline MdcCurve curve_of(const std::vector<TableRow>& rows) {
  MdcCurve curve;
  for (const auto& r : rows) curve.points.push_back({r.strength, r.accuracy, r.disentanglement});
  return curve;
}

}  // namespace sgf::testing
