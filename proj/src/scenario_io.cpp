#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "crop/nav_sim.hpp"

namespace crop {

namespace {

void write_rect(std::ostream& os, const char* key, const Rect& r)
{
    os << key << ' ' << r.xmin << ' ' << r.ymin << ' ' << r.xmax << ' ' << r.ymax << '\n';
}

Rect read_rect(std::istringstream& ls, std::size_t lineno)
{
    Rect r;
    if (!(ls >> r.xmin >> r.ymin >> r.xmax >> r.ymax) || r.xmin > r.xmax || r.ymin > r.ymax) {
        throw std::runtime_error("scenario line " + std::to_string(lineno) + ": expected xmin ymin xmax ymax");
    }
    return r;
}

}  // namespace

void write_scenario(std::ostream& os, const Scenario& s)
{
    const auto old = os.precision(17);
    os << "# crop scenario v1\n";
    write_rect(os, "arena", s.arena);
    write_rect(os, "agent_spawn", s.agent_spawn);
    write_rect(os, "goal_spawn", s.goal_spawn);
    os << "scatter_moving " << (s.scatter_moving_on_reset ? 1 : 0) << '\n';
    for (const auto& o : s.obstacles) {
        if (o.shape == ObstacleShape::rectangle) {
            os << "rect " << o.center.x << ' ' << o.center.y << ' ' << o.width << ' ' << o.height << '\n';
        } else {
            os << "circle " << o.center.x << ' ' << o.center.y << ' ' << o.radius << ' ' << o.speed;
            if (o.moving()) {
                os << ' ' << o.waypoint.x << ' ' << o.waypoint.y;
            }
            os << '\n';
        }
    }
    os.precision(old);
}

Scenario read_scenario(std::istream& is)
{
    Scenario s;
    bool have_arena = false;
    bool have_agent_spawn = false;
    bool have_goal_spawn = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) {
            continue;
        }
        const std::string where = "scenario line " + std::to_string(lineno);
        if (key == "arena") {
            s.arena = read_rect(ls, lineno);
            have_arena = true;
        } else if (key == "agent_spawn") {
            s.agent_spawn = read_rect(ls, lineno);
            have_agent_spawn = true;
        } else if (key == "goal_spawn") {
            s.goal_spawn = read_rect(ls, lineno);
            have_goal_spawn = true;
        } else if (key == "scatter_moving") {
            int flag = 0;
            if (!(ls >> flag) || (flag != 0 && flag != 1)) {
                throw std::runtime_error(where + ": scatter_moving takes 0 or 1");
            }
            s.scatter_moving_on_reset = flag == 1;
        } else if (key == "rect") {
            double cx, cy, w, h;
            if (!(ls >> cx >> cy >> w >> h)) {
                throw std::runtime_error(where + ": rect takes cx cy w h");
            }
            try {
                s.obstacles.push_back(Obstacle::rect(cx, cy, w, h));
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error(where + ": " + e.what());
            }
        } else if (key == "circle") {
            double cx, cy, r, speed;
            if (!(ls >> cx >> cy >> r >> speed)) {
                throw std::runtime_error(where + ": circle takes cx cy r speed [wx wy]");
            }
            try {
                Obstacle o = Obstacle::circle(cx, cy, r, speed);
                double wx, wy;
                if (ls >> wx >> wy) {
                    o.waypoint = {wx, wy};
                }
                s.obstacles.push_back(o);
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error(where + ": " + e.what());
            }
        } else {
            throw std::runtime_error(where + ": unknown directive '" + key + "'");
        }
        std::string extra;
        if (ls >> extra) {
            throw std::runtime_error(where + ": trailing token '" + extra + "'");
        }
    }
    if (!have_arena) {
        throw std::runtime_error("scenario lacks an arena directive");
    }
    if (!have_agent_spawn) {
        s.agent_spawn = s.arena;
    }
    if (!have_goal_spawn) {
        s.goal_spawn = s.arena;
    }
    return s;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open scenario " + path);
    }
    return read_scenario(in);
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows)
{
    const auto old = os.precision(17);
    os << "t,x,y,theta,action,reward,cost\n";
    for (const auto& r : rows) {
        os << r.t << ',' << r.pose.x << ',' << r.pose.y << ',' << r.pose.theta << ',' << r.action << ','
           << r.reward << ',' << r.cost << '\n';
    }
    os.precision(old);
}

}  // namespace crop
