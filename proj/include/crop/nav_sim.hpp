#ifndef CROP_NAV_SIM_HPP
#define CROP_NAV_SIM_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crop/constants.hpp"
#include "crop/policy_net.hpp"

namespace crop {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

// Axis-aligned bounds, used for the arena and spawn regions.
struct Rect {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    bool contains(Vec2 p) const noexcept { return xmin <= p.x && p.x <= xmax && ymin <= p.y && p.y <= ymax; }
};

enum class ObstacleShape { rectangle, circle };

struct Obstacle {
    ObstacleShape shape = ObstacleShape::rectangle;
    Vec2 center;
    double width = 0.0;   // rectangle only
    double height = 0.0;  // rectangle only
    double radius = 0.0;  // circle only
    double speed = 0.0;   // circle only; > 0 means moving
    Vec2 velocity;
    Vec2 waypoint;

    static Obstacle rect(double cx, double cy, double w, double h);
    static Obstacle circle(double cx, double cy, double r, double speed = 0.0);
    bool moving() const noexcept { return speed > 0.0; }
};

using Observation = std::array<double, kObsDim>;
using LidarScan = std::array<double, kNumLidar>;

struct StepInfo {
    bool goal_reached = false;
    bool collided = false;
    bool truncated = false;  // horizon reached without the goal
};

struct StepResult {
    Observation observation{};
    double reward = 0.0;
    int cost = 0;
    bool done = false;
    StepInfo info;
};

struct WorldState {
    Pose agent;
    Vec2 goal;
    std::vector<Obstacle> obstacles;
    int step_count = 0;
    Rect arena{0.0, 0.0, 10.0, 10.0};
};

// Declarative layout: arena, obstacles and spawn regions.
struct Scenario {
    Rect arena{0.0, 0.0, 10.0, 10.0};
    std::vector<Obstacle> obstacles;
    Rect agent_spawn{0.0, 0.0, 10.0, 10.0};
    Rect goal_spawn{0.0, 0.0, 10.0, 10.0};
    // Moving obstacles are scattered anew at every reset.
    bool scatter_moving_on_reset = false;
};

struct EnvConfig {
    double arena_size = 10.0;
    double agent_radius = 0.15;
    double v_max = 0.25;
    double w_max = 1.5;
    double dt = 0.2;
    double lidar_range = 3.5;
    double goal_threshold = 0.3;
    int horizon = 500;
    double reward_scale = 1.0;
    double goal_bonus = 1.0;
    int fixed_obstacles = 5;
    int dynamic_obstacles = 4;
    double dynamic_speed = 0.15;
    double dynamic_radius = 0.25;
    double min_goal_distance = 1.0;

    void validate() const;
};

enum class EnvKind { fixed, dynamic, evaluation };

std::string to_string(EnvKind kind);
// Throws std::invalid_argument for an unknown name.
EnvKind parse_env_kind(const std::string& name);

// (v, w) for each of the six discrete actions.
struct Velocity {
    double linear = 0.0;
    double angular = 0.0;
};
Velocity action_velocity(int action, const EnvConfig& cfg);

// Distance along a unit ray to the first hit, if any.
namespace geometry {
std::optional<double> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius);
std::optional<double> ray_segment(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b);
// Distance from a point to an obstacle's boundary; 0 inside it.
double distance_to(const Obstacle& o, Vec2 p);
double wrap_angle(double a);
}  // namespace geometry

// Beam i points at heading + i * 2*pi/21; readings are min(hit, range)/range.
LidarScan lidar_scan(const WorldState& world, double lidar_range);

class NavEnv {
public:
    NavEnv(Scenario scenario, std::uint64_t seed, EnvConfig cfg = {});

    // Re-samples agent and goal (and scatters moving obstacles when the
    // scenario asks for it). Throws std::runtime_error after 1000 failed
    // placement attempts.
    Observation reset();
    StepResult step(int action);

    Observation observe() const;
    const WorldState& world() const noexcept { return world_; }
    // Replaces the world wholesale; used by scripted scenes and tests.
    void set_world(WorldState world);
    const Scenario& scenario() const noexcept { return scenario_; }
    const EnvConfig& config() const noexcept { return cfg_; }

    double goal_distance() const;

private:
    bool agent_free(Vec2 p) const;
    // Fraction of the motion from `from` to `to` before contact; 1 if free.
    double contact_fraction(Vec2 from, Vec2 to) const;
    // Unit normal of the nearest wall or obstacle surface, pointing at p.
    Vec2 contact_normal(Vec2 p) const;
    bool move_obstacles();
    Vec2 sample_point(const Rect& region, double clearance, int& tries);

    Scenario scenario_;
    EnvConfig cfg_;
    WorldState world_;
    Rng rng_;
};

NavEnv make_env(EnvKind kind, std::uint64_t seed, const EnvConfig& cfg = {});
Scenario generate_scenario(EnvKind kind, std::uint64_t seed, const EnvConfig& cfg);

// Scenario text format, one directive per line:
//   arena xmin ymin xmax ymax
//   agent_spawn xmin ymin xmax ymax
//   goal_spawn xmin ymin xmax ymax
//   scatter_moving 0|1
//   rect cx cy w h
//   circle cx cy r speed [wx wy]   (optional first waypoint for a moving circle)
// '#' starts a comment.
void write_scenario(std::ostream& os, const Scenario& s);
Scenario read_scenario(std::istream& is);
Scenario load_scenario(const std::string& path);

struct TraceRow {
    int t = 0;
    Pose pose;
    int action = 0;
    double reward = 0.0;
    int cost = 0;
};

// CSV columns t,x,y,theta,action,reward,cost.
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);

}  // namespace crop

#endif  // CROP_NAV_SIM_HPP
