#include "crop/property.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "crop/constants.hpp"

namespace crop {

std::string to_string(PropertyOrigin origin)
{
    return origin == PropertyOrigin::online ? "online" : "hardcoded";
}

PropertyOrigin parse_origin(const std::string& s)
{
    if (s == "online") {
        return PropertyOrigin::online;
    }
    if (s == "hardcoded") {
        return PropertyOrigin::hardcoded;
    }
    throw std::invalid_argument("unknown property origin '" + s + "'");
}

void SafetyProperty::validate() const
{
    if (forbidden_action < 0 || forbidden_action >= kNumActions) {
        throw std::invalid_argument("forbidden action " + std::to_string(forbidden_action) +
                                    " outside [0, " + std::to_string(kNumActions - 1) + "]");
    }
    if (merge_count < 1) {
        throw std::invalid_argument("merge_count must be >= 1");
    }
    if (domain.size() == 0) {
        throw std::invalid_argument("property domain is empty");
    }
}

CropConfig CropConfig::navigation_defaults()
{
    CropConfig cfg;
    cfg.epsilon = 0.05;
    cfg.beta = 0.1;
    cfg.psi.assign(kObsDim, std::nullopt);
    for (std::size_t i = 0; i < kNumLidar; ++i) {
        cfg.psi[i] = Interval(0.0, 0.09);
    }
    std::vector<Interval> dom(kObsDim, Interval(0.0, 1.0));
    dom[kGoalDistanceIndex] = Interval(-1.0, 1.0);
    dom[kGoalHeadingIndex] = Interval(-1.0, 1.0);
    cfg.obs_domain = IntervalBox(std::move(dom));
    return cfg;
}

void CropConfig::validate() const
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("crop epsilon must be > 0");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("crop beta must be > 0");
    }
    if (obs_domain.size() == 0) {
        throw std::invalid_argument("crop observation domain is empty");
    }
    if (psi.size() != obs_domain.size()) {
        throw std::invalid_argument("crop psi has " + std::to_string(psi.size()) +
                                    " entries, observation domain has " +
                                    std::to_string(obs_domain.size()));
    }
    for (std::size_t i = 0; i < psi.size(); ++i) {
        if (psi[i] && !is_subset(*psi[i], obs_domain[i])) {
            throw std::invalid_argument("psi on dimension " + std::to_string(i) +
                                        " is not inside the observation domain");
        }
    }
}

SafetyProperty generate_property(std::span<const double> prev_state, int prev_action,
                                 const CropConfig& cfg)
{
    cfg.validate();
    if (prev_state.size() != cfg.dims()) {
        throw std::invalid_argument("generate_property: state has " +
                                    std::to_string(prev_state.size()) + " dims, expected " +
                                    std::to_string(cfg.dims()));
    }
    if (!cfg.obs_domain.contains(prev_state)) {
        throw std::invalid_argument("generate_property: state outside the observation domain");
    }
    std::vector<Interval> dims;
    dims.reserve(prev_state.size());
    for (std::size_t i = 0; i < prev_state.size(); ++i) {
        const double x = prev_state[i];
        dims.emplace_back(std::max(x - cfg.epsilon, cfg.obs_domain[i].lo()), x);
    }
    SafetyProperty p{IntervalBox(std::move(dims)), prev_action, PropertyOrigin::online, 1};
    p.validate();
    return p;
}

bool is_not_similar(const SafetyProperty& p, const SafetyProperty& q, const CropConfig& cfg)
{
    if (p.forbidden_action != q.forbidden_action) {
        throw std::invalid_argument("is_not_similar: properties forbid different actions");
    }
    if (p.domain.size() != q.domain.size() || p.domain.size() != cfg.psi.size()) {
        throw std::invalid_argument("is_not_similar: dimension mismatch");
    }
    for (std::size_t i = 0; i < cfg.psi.size(); ++i) {
        const auto& psi = cfg.psi[i];
        if (!psi) {
            continue;
        }
        const bool gated = is_subset(p.domain[i], *psi) || is_subset(q.domain[i], *psi);
        if (gated && mig_abs_diff(p.domain[i], q.domain[i]) > cfg.beta) {
            return true;
        }
    }
    return false;
}

SafetyProperty refine(const SafetyProperty& p, const SafetyProperty& q, const CropConfig& cfg)
{
    if (is_not_similar(p, q, cfg)) {
        throw std::invalid_argument("refine: properties are not similar");
    }
    return SafetyProperty{hull(p.domain, q.domain), p.forbidden_action, PropertyOrigin::online,
                          p.merge_count + q.merge_count};
}

std::vector<const SafetyProperty*> PropertyBuffer::find_matching(std::span<const double> prev_state,
                                                                 int prev_action) const
{
    std::vector<const SafetyProperty*> out;
    for (const auto& p : properties_) {
        if (p.forbidden_action == prev_action && p.domain.contains(prev_state)) {
            out.push_back(&p);
        }
    }
    return out;
}

std::size_t PropertyBuffer::record_unsafe(std::span<const double> prev_state, int prev_action,
                                          const CropConfig& cfg)
{
    SafetyProperty merged = generate_property(prev_state, prev_action, cfg);
    std::optional<std::size_t> slot;

    // Absorb similar same-action properties until none is left. Widening a
    // box never turns a similar pair into a non-similar one, so this reaches
    // the fixpoint the buffer invariant asks for.
    for (;;) {
        auto it = std::find_if(properties_.begin(), properties_.end(), [&](const SafetyProperty& q) {
            return q.forbidden_action == prev_action && !is_not_similar(q, merged, cfg);
        });
        if (it == properties_.end()) {
            break;
        }
        const auto idx = static_cast<std::size_t>(it - properties_.begin());
        merged = refine(*it, merged, cfg);
        properties_.erase(it);
        slot = slot ? std::min(*slot, idx) : idx;
    }

    if (!slot) {
        properties_.push_back(std::move(merged));
        return properties_.size() - 1;
    }
    properties_.insert(properties_.begin() + static_cast<std::ptrdiff_t>(*slot), std::move(merged));
    return *slot;
}

void PropertyBuffer::reset()
{
    properties_.clear();
    ++episode_id_;
}

std::string to_jsonl_line(const SafetyProperty& p, std::int64_t episode)
{
    nlohmann::ordered_json j;
    j["episode"] = episode;
    j["forbidden_action"] = p.forbidden_action;
    j["merge_count"] = p.merge_count;
    j["origin"] = to_string(p.origin);
    nlohmann::json dom = p.domain;
    j["domain"] = dom;
    return j.dump();
}

SafetyProperty parse_property_line(const std::string& line)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("malformed property line: ") + e.what());
    }
    try {
        SafetyProperty p;
        p.domain = j.at("domain").get<IntervalBox>();
        p.forbidden_action = j.at("forbidden_action").get<int>();
        p.merge_count = j.contains("merge_count") ? j.at("merge_count").get<int>() : 1;
        p.origin = j.contains("origin") ? parse_origin(j.at("origin").get<std::string>())
                                        : PropertyOrigin::online;
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed property line: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("invalid property: ") + e.what());
    }
}

void write_properties_jsonl(std::ostream& os, std::span<const SafetyProperty> props,
                            std::int64_t episode)
{
    for (const auto& p : props) {
        os << to_jsonl_line(p, episode) << '\n';
    }
}

std::vector<SafetyProperty> read_properties_jsonl(std::istream& is)
{
    std::vector<SafetyProperty> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(parse_property_line(line));
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<SafetyProperty> load_properties_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open property file " + path);
    }
    return read_properties_jsonl(in);
}

}  // namespace crop
