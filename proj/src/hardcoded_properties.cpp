#include <array>

#include "crop/constants.hpp"
#include "crop/trainer.hpp"

namespace crop {

namespace {

// Beam i looks at heading + i * 360/21 degrees (counter-clockwise).
struct SectorRule {
    const char* name;
    std::vector<std::size_t> beams;
    int forbidden_action;
};

const std::array<SectorRule, 7>& sector_rules()
{
    static const std::array<SectorRule, 7> rules{{
        {"front", {20, 0, 1}, 0},             // forward
        {"right", {15, 16, 17}, 2},           // forward + right turn
        {"left", {4, 5, 6}, 1},               // forward + left turn
        {"front_right", {18, 19}, 2},
        {"front_left", {2, 3}, 1},
        {"back_rotate_left", {9, 10, 11, 12}, 3},
        {"back_rotate_right", {9, 10, 11, 12}, 4},
    }};
    return rules;
}

constexpr double kNearObstacle = 0.05;

}  // namespace

std::vector<SafetyProperty> hardcoded_property_set()
{
    std::vector<SafetyProperty> out;
    for (const auto& rule : sector_rules()) {
        std::vector<Interval> dims(kObsDim, Interval(0.0, 1.0));
        for (std::size_t b : rule.beams) {
            dims[b] = Interval(0.0, kNearObstacle);
        }
        dims[kGoalDistanceIndex] = Interval(-1.0, 1.0);
        dims[kGoalHeadingIndex] = Interval(-1.0, 1.0);
        out.push_back(SafetyProperty{IntervalBox(std::move(dims)), rule.forbidden_action,
                                     PropertyOrigin::hardcoded, 1});
    }
    return out;
}

std::vector<std::string> hardcoded_property_names()
{
    std::vector<std::string> names;
    for (const auto& rule : sector_rules()) {
        names.emplace_back(rule.name);
    }
    return names;
}

}  // namespace crop
