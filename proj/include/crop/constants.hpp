#ifndef CROP_CONSTANTS_HPP
#define CROP_CONSTANTS_HPP

#include <cstddef>

namespace crop {

inline constexpr std::size_t kNumLidar = 21;
// 21 lidar beams followed by goal distance and goal heading.
inline constexpr std::size_t kObsDim = kNumLidar + 2;
inline constexpr std::size_t kGoalDistanceIndex = kNumLidar;
inline constexpr std::size_t kGoalHeadingIndex = kNumLidar + 1;
inline constexpr int kNumActions = 6;

}  // namespace crop

#endif  // CROP_CONSTANTS_HPP
