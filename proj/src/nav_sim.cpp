#include "crop/nav_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crop {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxPlacementTries = 1000;
constexpr int kContactSubsteps = 16;
constexpr int kBisectionIters = 50;

Vec2 lerp(Vec2 a, Vec2 b, double t)
{
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

double norm(Vec2 v)
{
    return std::hypot(v.x, v.y);
}

// Closest point of an obstacle to p (p itself when inside).
Vec2 closest_point(const Obstacle& o, Vec2 p)
{
    if (o.shape == ObstacleShape::circle) {
        const Vec2 d{p.x - o.center.x, p.y - o.center.y};
        const double n = norm(d);
        if (n <= o.radius) {
            return p;
        }
        return {o.center.x + o.radius * d.x / n, o.center.y + o.radius * d.y / n};
    }
    return {std::clamp(p.x, o.center.x - 0.5 * o.width, o.center.x + 0.5 * o.width),
            std::clamp(p.y, o.center.y - 0.5 * o.height, o.center.y + 0.5 * o.height)};
}

}  // namespace

Obstacle Obstacle::rect(double cx, double cy, double w, double h)
{
    if (!(w > 0.0) || !(h > 0.0)) {
        throw std::invalid_argument("rectangle obstacle needs positive width and height");
    }
    Obstacle o;
    o.shape = ObstacleShape::rectangle;
    o.center = {cx, cy};
    o.width = w;
    o.height = h;
    o.waypoint = o.center;
    return o;
}

Obstacle Obstacle::circle(double cx, double cy, double r, double speed)
{
    if (!(r > 0.0) || speed < 0.0) {
        throw std::invalid_argument("circle obstacle needs positive radius and non-negative speed");
    }
    Obstacle o;
    o.shape = ObstacleShape::circle;
    o.center = {cx, cy};
    o.radius = r;
    o.speed = speed;
    o.waypoint = o.center;
    return o;
}

void EnvConfig::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("env.") + name + " must be > 0");
        }
    };
    positive(arena_size, "arena_size");
    positive(agent_radius, "agent_radius");
    positive(v_max, "v_max");
    positive(w_max, "w_max");
    positive(dt, "dt");
    positive(lidar_range, "lidar_range");
    positive(goal_threshold, "goal_threshold");
    positive(dynamic_radius, "dynamic_radius");
    if (horizon < 1) {
        throw std::invalid_argument("env.horizon must be >= 1");
    }
    if (fixed_obstacles < 0 || dynamic_obstacles < 0) {
        throw std::invalid_argument("obstacle counts must be >= 0");
    }
    if (dynamic_speed < 0.0 || min_goal_distance < 0.0 || goal_bonus < 0.0) {
        throw std::invalid_argument("env speeds, distances and bonus must be >= 0");
    }
}

std::string to_string(EnvKind kind)
{
    switch (kind) {
    case EnvKind::fixed: return "fixed";
    case EnvKind::dynamic: return "dynamic";
    case EnvKind::evaluation: return "evaluation";
    }
    return "?";
}

EnvKind parse_env_kind(const std::string& name)
{
    if (name == "fixed") return EnvKind::fixed;
    if (name == "dynamic") return EnvKind::dynamic;
    if (name == "evaluation") return EnvKind::evaluation;
    throw std::invalid_argument("unknown environment kind '" + name + "'");
}

Velocity action_velocity(int action, const EnvConfig& cfg)
{
    switch (action) {
    case 0: return {cfg.v_max, 0.0};
    case 1: return {cfg.v_max, cfg.w_max};
    case 2: return {cfg.v_max, -cfg.w_max};
    case 3: return {0.0, cfg.w_max};
    case 4: return {0.0, -cfg.w_max};
    case 5: return {0.0, 0.0};
    default: throw std::invalid_argument("invalid action index " + std::to_string(action));
    }
}

namespace geometry {

std::optional<double> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius)
{
    const double fx = origin.x - center.x;
    const double fy = origin.y - center.y;
    const double b = fx * dir.x + fy * dir.y;
    const double c = fx * fx + fy * fy - radius * radius;
    if (c <= 0.0) {
        return 0.0;  // origin inside or on the circle
    }
    const double disc = b * b - c;
    if (disc < 0.0) {
        return std::nullopt;
    }
    const double t = -b - std::sqrt(disc);
    if (t < 0.0) {
        return std::nullopt;
    }
    return t;
}

std::optional<double> ray_segment(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b)
{
    const double ex = b.x - a.x;
    const double ey = b.y - a.y;
    const double denom = dir.x * ey - dir.y * ex;
    if (std::abs(denom) < 1e-15) {
        return std::nullopt;  // parallel; grazing hits are caught by the adjacent edge
    }
    const double wx = a.x - origin.x;
    const double wy = a.y - origin.y;
    const double t = (wx * ey - wy * ex) / denom;
    const double u = (wx * dir.y - wy * dir.x) / denom;
    if (t < 0.0 || u < 0.0 || u > 1.0) {
        return std::nullopt;
    }
    return t;
}

double distance_to(const Obstacle& o, Vec2 p)
{
    if (o.shape == ObstacleShape::circle) {
        return std::max(0.0, std::hypot(p.x - o.center.x, p.y - o.center.y) - o.radius);
    }
    const double dx = std::max(std::abs(p.x - o.center.x) - 0.5 * o.width, 0.0);
    const double dy = std::max(std::abs(p.y - o.center.y) - 0.5 * o.height, 0.0);
    return std::hypot(dx, dy);
}

double wrap_angle(double a)
{
    a = std::fmod(a + std::numbers::pi, kTwoPi);
    if (a < 0.0) {
        a += kTwoPi;
    }
    return a - std::numbers::pi;
}

}  // namespace geometry

LidarScan lidar_scan(const WorldState& world, double lidar_range)
{
    const Vec2 origin{world.agent.x, world.agent.y};
    const Rect& ar = world.arena;
    const std::array<std::pair<Vec2, Vec2>, 4> walls{{
        {{ar.xmin, ar.ymin}, {ar.xmax, ar.ymin}},
        {{ar.xmax, ar.ymin}, {ar.xmax, ar.ymax}},
        {{ar.xmax, ar.ymax}, {ar.xmin, ar.ymax}},
        {{ar.xmin, ar.ymax}, {ar.xmin, ar.ymin}},
    }};

    LidarScan scan{};
    for (std::size_t i = 0; i < kNumLidar; ++i) {
        const double angle = world.agent.theta + static_cast<double>(i) * kTwoPi / static_cast<double>(kNumLidar);
        const Vec2 dir{std::cos(angle), std::sin(angle)};
        double best = lidar_range;
        auto consider = [&best](std::optional<double> t) {
            if (t && *t < best) {
                best = *t;
            }
        };
        for (const auto& [a, b] : walls) {
            consider(geometry::ray_segment(origin, dir, a, b));
        }
        for (const auto& o : world.obstacles) {
            if (o.shape == ObstacleShape::circle) {
                consider(geometry::ray_circle(origin, dir, o.center, o.radius));
                continue;
            }
            const double hx = 0.5 * o.width;
            const double hy = 0.5 * o.height;
            const Vec2 c00{o.center.x - hx, o.center.y - hy};
            const Vec2 c10{o.center.x + hx, o.center.y - hy};
            const Vec2 c11{o.center.x + hx, o.center.y + hy};
            const Vec2 c01{o.center.x - hx, o.center.y + hy};
            consider(geometry::ray_segment(origin, dir, c00, c10));
            consider(geometry::ray_segment(origin, dir, c10, c11));
            consider(geometry::ray_segment(origin, dir, c11, c01));
            consider(geometry::ray_segment(origin, dir, c01, c00));
        }
        scan[i] = std::clamp(best / lidar_range, 0.0, 1.0);
    }
    return scan;
}

NavEnv::NavEnv(Scenario scenario, std::uint64_t seed, EnvConfig cfg)
    : scenario_(std::move(scenario)), cfg_(cfg), rng_(mix_seed(seed, 1))
{
    cfg_.validate();
    if (!(scenario_.arena.xmax > scenario_.arena.xmin) || !(scenario_.arena.ymax > scenario_.arena.ymin)) {
        throw std::invalid_argument("scenario arena is empty");
    }
    world_.arena = scenario_.arena;
    world_.obstacles = scenario_.obstacles;
    reset();
}

void NavEnv::set_world(WorldState world)
{
    world_ = std::move(world);
}

double NavEnv::goal_distance() const
{
    return std::hypot(world_.goal.x - world_.agent.x, world_.goal.y - world_.agent.y);
}

Observation NavEnv::observe() const
{
    Observation obs{};
    const LidarScan scan = lidar_scan(world_, cfg_.lidar_range);
    std::copy(scan.begin(), scan.end(), obs.begin());
    const Rect& ar = world_.arena;
    const double diag = std::hypot(ar.xmax - ar.xmin, ar.ymax - ar.ymin);
    obs[kGoalDistanceIndex] = std::clamp(goal_distance() / diag, 0.0, 1.0);
    const double bearing = std::atan2(world_.goal.y - world_.agent.y, world_.goal.x - world_.agent.x);
    obs[kGoalHeadingIndex] =
        std::clamp(geometry::wrap_angle(bearing - world_.agent.theta) / std::numbers::pi, -1.0, 1.0);
    return obs;
}

bool NavEnv::agent_free(Vec2 p) const
{
    const double r = cfg_.agent_radius;
    const Rect& ar = world_.arena;
    if (p.x - ar.xmin < r || ar.xmax - p.x < r || p.y - ar.ymin < r || ar.ymax - p.y < r) {
        return false;
    }
    return std::all_of(world_.obstacles.begin(), world_.obstacles.end(),
                       [&](const Obstacle& o) { return geometry::distance_to(o, p) >= r; });
}

double NavEnv::contact_fraction(Vec2 from, Vec2 to) const
{
    if (!agent_free(from)) {
        return 0.0;
    }
    double free_t = 0.0;
    for (int k = 1; k <= kContactSubsteps; ++k) {
        const double t = static_cast<double>(k) / kContactSubsteps;
        if (agent_free(lerp(from, to, t))) {
            free_t = t;
            continue;
        }
        double lo = free_t;
        double hi = t;
        for (int it = 0; it < kBisectionIters; ++it) {
            const double mid = 0.5 * (lo + hi);
            (agent_free(lerp(from, to, mid)) ? lo : hi) = mid;
        }
        return lo;
    }
    return 1.0;
}

Vec2 NavEnv::contact_normal(Vec2 p) const
{
    const Rect& ar = world_.arena;
    double best = p.x - ar.xmin;
    Vec2 n{1.0, 0.0};
    auto consider = [&](double gap, Vec2 dir) {
        if (gap < best) {
            best = gap;
            n = dir;
        }
    };
    consider(ar.xmax - p.x, {-1.0, 0.0});
    consider(p.y - ar.ymin, {0.0, 1.0});
    consider(ar.ymax - p.y, {0.0, -1.0});
    for (const auto& o : world_.obstacles) {
        const Vec2 c = closest_point(o, p);
        const Vec2 d{p.x - c.x, p.y - c.y};
        const double gap = norm(d);
        if (gap > 0.0) {
            consider(gap, {d.x / gap, d.y / gap});
        }
    }
    return n;
}

Vec2 NavEnv::sample_point(const Rect& region, double clearance, int& tries)
{
    const Rect& ar = world_.arena;
    const double xmin = std::max(region.xmin, ar.xmin + clearance);
    const double xmax = std::min(region.xmax, ar.xmax - clearance);
    const double ymin = std::max(region.ymin, ar.ymin + clearance);
    const double ymax = std::min(region.ymax, ar.ymax - clearance);
    if (xmin > xmax || ymin > ymax) {
        throw std::runtime_error("spawn region too small for the requested clearance");
    }
    std::uniform_real_distribution<double> ux(xmin, xmax);
    std::uniform_real_distribution<double> uy(ymin, ymax);
    for (; tries < kMaxPlacementTries; ++tries) {
        const Vec2 p{ux(rng_), uy(rng_)};
        const bool clear = std::all_of(world_.obstacles.begin(), world_.obstacles.end(),
                                       [&](const Obstacle& o) { return geometry::distance_to(o, p) >= clearance; });
        if (clear) {
            return p;
        }
    }
    throw std::runtime_error("placement failed after " + std::to_string(kMaxPlacementTries) + " tries");
}

Observation NavEnv::reset()
{
    world_.step_count = 0;
    world_.obstacles = scenario_.obstacles;
    const Rect& ar = world_.arena;

    if (scenario_.scatter_moving_on_reset) {
        for (auto& o : world_.obstacles) {
            if (!o.moving()) {
                continue;
            }
            const double m = o.radius + 0.1;
            std::uniform_real_distribution<double> ux(ar.xmin + m, ar.xmax - m);
            std::uniform_real_distribution<double> uy(ar.ymin + m, ar.ymax - m);
            o.center = {ux(rng_), uy(rng_)};
            o.waypoint = {ux(rng_), uy(rng_)};
        }
    }

    int tries = 0;
    const Vec2 agent = sample_point(scenario_.agent_spawn, cfg_.agent_radius + 0.1, tries);
    tries = 0;
    Vec2 goal{};
    for (;;) {
        goal = sample_point(scenario_.goal_spawn, cfg_.agent_radius + 0.05, tries);
        if (std::hypot(goal.x - agent.x, goal.y - agent.y) >= cfg_.min_goal_distance) {
            break;
        }
        if (++tries >= kMaxPlacementTries) {
            throw std::runtime_error("goal placement failed after " + std::to_string(kMaxPlacementTries) + " tries");
        }
    }
    std::uniform_real_distribution<double> uth(-std::numbers::pi, std::numbers::pi);
    world_.agent = {agent.x, agent.y, uth(rng_)};
    world_.goal = goal;
    for (auto& o : world_.obstacles) {
        if (o.moving()) {
            const Vec2 d{o.waypoint.x - o.center.x, o.waypoint.y - o.center.y};
            const double n = norm(d);
            o.velocity = n > 0.0 ? Vec2{o.speed * d.x / n, o.speed * d.y / n} : Vec2{};
        }
    }
    return observe();
}

bool NavEnv::move_obstacles()
{
    bool contact = false;
    const Rect& ar = world_.arena;
    const Vec2 agent{world_.agent.x, world_.agent.y};
    for (auto& o : world_.obstacles) {
        if (!o.moving()) {
            continue;
        }
        const double m = o.radius + 0.1;
        std::uniform_real_distribution<double> ux(ar.xmin + m, ar.xmax - m);
        std::uniform_real_distribution<double> uy(ar.ymin + m, ar.ymax - m);

        const Vec2 start = o.center;
        Vec2 pos = o.center;
        double remaining = o.speed * cfg_.dt;
        while (remaining > 0.0) {
            const Vec2 d{o.waypoint.x - pos.x, o.waypoint.y - pos.y};
            const double dist = norm(d);
            if (dist <= remaining) {
                pos = o.waypoint;
                remaining -= dist;
                o.waypoint = {ux(rng_), uy(rng_)};
            } else {
                pos = {pos.x + d.x / dist * remaining, pos.y + d.y / dist * remaining};
                remaining = 0.0;
            }
        }

        const double reach = o.radius + cfg_.agent_radius;
        auto clear_of_agent = [&](Vec2 p) { return std::hypot(p.x - agent.x, p.y - agent.y) >= reach; };
        if (!clear_of_agent(pos)) {
            // Stop at contact along the chord.
            contact = true;
            double lo = 0.0;
            double hi = 1.0;
            if (!clear_of_agent(start)) {
                hi = 0.0;
            }
            for (int it = 0; it < kBisectionIters && hi > 0.0; ++it) {
                const double mid = 0.5 * (lo + hi);
                (clear_of_agent(lerp(start, pos, mid)) ? lo : hi) = mid;
            }
            pos = lerp(start, pos, lo);
        }
        o.center = pos;
        const Vec2 d{o.waypoint.x - pos.x, o.waypoint.y - pos.y};
        const double n = norm(d);
        o.velocity = n > 0.0 ? Vec2{o.speed * d.x / n, o.speed * d.y / n} : Vec2{};
    }
    return contact;
}

StepResult NavEnv::step(int action)
{
    const Velocity vel = action_velocity(action, cfg_);
    const double d_prev = goal_distance();

    const Pose& p = world_.agent;
    const double mid_heading = p.theta + 0.5 * vel.angular * cfg_.dt;
    const Vec2 from{p.x, p.y};
    const Vec2 to{p.x + vel.linear * cfg_.dt * std::cos(mid_heading),
                  p.y + vel.linear * cfg_.dt * std::sin(mid_heading)};
    const double frac = vel.linear > 0.0 ? contact_fraction(from, to) : 1.0;
    Vec2 reached = lerp(from, to, frac);
    if (frac < 1.0) {
        // Slide: keep the part of the blocked motion tangent to the contact surface.
        const Vec2 n = contact_normal(reached);
        Vec2 rest{to.x - reached.x, to.y - reached.y};
        const double into = rest.x * n.x + rest.y * n.y;
        if (into < 0.0) {
            rest = {rest.x - into * n.x, rest.y - into * n.y};
        }
        const Vec2 slide_to{reached.x + rest.x, reached.y + rest.y};
        reached = lerp(reached, slide_to, contact_fraction(reached, slide_to));
    }

    StepResult res;
    res.info.collided = frac < 1.0;
    world_.agent = {reached.x, reached.y, geometry::wrap_angle(p.theta + vel.angular * cfg_.dt)};
    if (move_obstacles()) {
        res.info.collided = true;
    }
    ++world_.step_count;

    const double d_now = goal_distance();
    res.reward = cfg_.reward_scale * (d_prev - d_now);
    res.info.goal_reached = d_now <= cfg_.goal_threshold;
    if (res.info.goal_reached) {
        res.reward += cfg_.goal_bonus;
    }
    res.info.truncated = !res.info.goal_reached && world_.step_count >= cfg_.horizon;
    res.done = res.info.goal_reached || res.info.truncated;
    res.cost = res.info.collided ? 1 : 0;
    res.observation = observe();
    return res;
}

Scenario generate_scenario(EnvKind kind, std::uint64_t seed, const EnvConfig& cfg)
{
    cfg.validate();
    const double s = cfg.arena_size;
    Scenario sc;
    sc.arena = {0.0, 0.0, s, s};
    sc.agent_spawn = sc.arena;
    sc.goal_spawn = sc.arena;
    Rng rng(mix_seed(seed, 0));

    switch (kind) {
    case EnvKind::fixed: {
        std::uniform_real_distribution<double> size(0.05 * s, 0.15 * s);
        std::uniform_real_distribution<double> pos(0.15 * s, 0.85 * s);
        const double gap = 0.08 * s;
        int tries = 0;
        while (static_cast<int>(sc.obstacles.size()) < cfg.fixed_obstacles) {
            if (++tries > kMaxPlacementTries) {
                throw std::runtime_error("could not place fixed obstacles");
            }
            const double w = size(rng);
            const double h = size(rng);
            const Obstacle cand = Obstacle::rect(pos(rng), pos(rng), w, h);
            const bool ok = std::none_of(sc.obstacles.begin(), sc.obstacles.end(), [&](const Obstacle& o) {
                return std::abs(o.center.x - cand.center.x) < 0.5 * (o.width + cand.width) + gap &&
                       std::abs(o.center.y - cand.center.y) < 0.5 * (o.height + cand.height) + gap;
            });
            if (ok) {
                sc.obstacles.push_back(cand);
            }
        }
        break;
    }
    case EnvKind::dynamic: {
        std::uniform_real_distribution<double> pos(0.1 * s, 0.9 * s);
        for (int i = 0; i < cfg.dynamic_obstacles; ++i) {
            Obstacle o = Obstacle::circle(pos(rng), pos(rng), cfg.dynamic_radius, cfg.dynamic_speed);
            o.waypoint = {pos(rng), pos(rng)};
            sc.obstacles.push_back(o);
        }
        sc.scatter_moving_on_reset = true;
        break;
    }
    case EnvKind::evaluation: {
        // Hand-authored map: two offset walls, a central divider, two blocks
        // and two pillars. Only spawns depend on the seed.
        const double u = s / 10.0;
        sc.obstacles = {
            Obstacle::rect(3.0 * u, 7.5 * u, 4.0 * u, 0.4 * u),
            Obstacle::rect(7.0 * u, 2.5 * u, 4.0 * u, 0.4 * u),
            Obstacle::rect(5.0 * u, 5.0 * u, 0.4 * u, 3.0 * u),
            Obstacle::rect(1.5 * u, 3.0 * u, 1.0 * u, 1.0 * u),
            Obstacle::rect(8.5 * u, 7.0 * u, 1.0 * u, 1.0 * u),
            Obstacle::circle(3.0 * u, 2.0 * u, 0.3 * u),
            Obstacle::circle(7.0 * u, 8.5 * u, 0.3 * u),
        };
        break;
    }
    }
    return sc;
}

NavEnv make_env(EnvKind kind, std::uint64_t seed, const EnvConfig& cfg)
{
    return NavEnv(generate_scenario(kind, seed, cfg), seed, cfg);
}

}  // namespace crop
