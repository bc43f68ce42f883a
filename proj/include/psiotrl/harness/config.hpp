#pragma once

// Scenario configuration files.
//
// A scenario is one JSON object. Only "name" is required; every other key has
// a default. Unknown keys are rejected.
//
//   name                 string. "AL,BL,BL" style names also define the
//                        preload when initial_occupancies is absent
//                        (AL = 80, BL = 20, +AL = 120).
//   initial_occupancies  [o1,o2,o3], percent of buffer, >= 0
//   initial_rates        [t1,t2,t3], percent of link, default [35,25,15]
//   threshold            percent in (0,100), default 50
//   step_fraction        (0,1), default 0.10
//   seeds                non-empty list of unsigned integers, default 1..10
//   allocator            {"type": "sarsa", "alpha": 0.2, "gamma": 0.8,
//                         "epsilon": 0.02, "episodes": 1, "max_attempts": 400}
//                     or {"type": "fixed", "factor": 1.15, "horizon_steps": 2}
//   traffic              {"inflow": [0,0,0], "drain_coeff": 0.1, "ticks_per_step": 5}
//   reward               {"priority": [3,2,1], "violation_penalty": 10,
//                         "loss_penalty": 1, "success_bonus": 10}
//   subscribers          [n1,n2,n3] consumers per topic, default [1,1,1]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "psiotrl/aggregator_env.hpp"
#include "psiotrl/errors.hpp"
#include "psiotrl/orchestrator.hpp"
#include "psiotrl/rl_core.hpp"

namespace psiotrl::harness {

using env::PerQueue;

struct FixedRule {
    double factor = 1.15;
    int horizon_steps = 2;  // allocation held for this many steps' worth of ticks
};

struct SarsaAllocator {
    rl::RlParams rl{};
    int episodes = 1;
    int max_attempts = 400;
};

using Allocator = std::variant<FixedRule, SarsaAllocator>;

struct ScenarioConfig {
    std::string name;
    PerQueue initial_occupancies{};
    PerQueue initial_rates{35.0, 25.0, 15.0};
    Allocator allocator = SarsaAllocator{};
    env::TrafficProfile traffic{};
    double threshold = 50.0;
    double step_fraction = 0.10;
    env::RewardWeights reward{};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::array<int, env::kQueueCount> subscribers{1, 1, 1};

    orch::EpisodeConfig episode_config() const {
        orch::EpisodeConfig c;
        c.threshold = threshold;
        c.step_fraction = step_fraction;
        c.reward = reward;
        if (const auto* s = std::get_if<SarsaAllocator>(&allocator)) {
            c.rl = s->rl;
            c.max_attempts = s->max_attempts;
        }
        return c;
    }

    env::AggregatorState initial_state() const {
        return env::AggregatorState::preloaded(initial_occupancies, initial_rates);
    }
};

inline std::string allocator_label(const Allocator& a) {
    if (const auto* f = std::get_if<FixedRule>(&a)) {
        std::ostringstream os;
        os << "fixed_" << f->factor;
        return os.str();
    }
    return "sarsa";
}

/// "AL,BL,+AL" -> (80, 20, 120). Empty when the name is not such a label.
inline std::optional<PerQueue> preload_from_label(const std::string& name) {
    std::string s;
    for (char c : name) {
        if (c != '(' && c != ')' && c != ' ') s += c;
    }
    PerQueue out{};
    std::size_t i = 0;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (i >= env::kQueueCount) return std::nullopt;
        if (tok == "AL") out[i] = 80.0;
        else if (tok == "BL") out[i] = 20.0;
        else if (tok == "+AL") out[i] = 120.0;
        else return std::nullopt;
        ++i;
    }
    if (i != env::kQueueCount) return std::nullopt;
    return out;
}

/// Table label for a preload: +AL above buffer capacity, AL above threshold.
inline std::string occupancy_label(const PerQueue& occ, double threshold) {
    std::string out;
    for (std::size_t i = 0; i < env::kQueueCount; ++i) {
        if (i) out += ',';
        if (occ[i] > env::kBufferCapacity) out += "+AL";
        else out += occ[i] > threshold ? "AL" : "BL";
    }
    return out;
}

namespace detail {

/// Walks a JSON object, collecting one diagnostic per bad field instead of
/// stopping at the first.
class FieldReader {
public:
    FieldReader(const nlohmann::json& obj, std::string prefix, std::vector<std::string>& diags)
        : obj_(obj), prefix_(std::move(prefix)), diags_(diags) {}

    void check_keys(std::initializer_list<const char*> known) {
        if (!obj_.is_object()) return;
        for (const auto& [key, _] : obj_.items()) {
            bool ok = false;
            for (const char* k : known) ok = ok || key == k;
            if (!ok) fail(key, "unknown field");
        }
    }

    bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }

    template <typename Pred>
    void number(const char* key, double& out, Pred valid, const char* rule) {
        if (!has(key)) return;
        const auto& v = obj_.at(key);
        if (!v.is_number()) return fail(key, "expected a number");
        const double d = v.get<double>();
        if (!valid(d)) return fail(key, std::string(rule) + ", got " + v.dump());
        out = d;
    }

    template <typename Pred>
    void integer(const char* key, int& out, Pred valid, const char* rule) {
        if (!has(key)) return;
        const auto& v = obj_.at(key);
        if (!v.is_number_integer()) return fail(key, "expected an integer");
        const auto i = v.get<long long>();
        if (!valid(i)) return fail(key, std::string(rule) + ", got " + v.dump());
        out = static_cast<int>(i);
    }

    template <typename T, typename Pred>
    void triple(const char* key, std::array<T, 3>& out, Pred valid, const char* rule) {
        if (!has(key)) return;
        const auto& v = obj_.at(key);
        if (!v.is_array() || v.size() != 3) return fail(key, "expected an array of 3 numbers");
        std::array<T, 3> tmp{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!v[i].is_number()) return fail(key, "expected an array of 3 numbers");
            if constexpr (std::is_integral_v<T>) {
                if (!v[i].is_number_integer()) return fail(key, "expected an array of 3 integers");
            }
            tmp[i] = v[i].get<T>();
            if (!valid(static_cast<double>(tmp[i]))) {
                return fail(key, std::string(rule) + ", got " + v.dump());
            }
        }
        out = tmp;
    }

    void fail(const std::string& key, const std::string& what) {
        diags_.push_back("field '" + prefix_ + key + "': " + what);
    }

private:
    const nlohmann::json& obj_;
    std::string prefix_;
    std::vector<std::string>& diags_;
};

inline bool unit(double v) { return v >= 0.0 && v <= 1.0 && std::isfinite(v); }
inline bool non_negative(double v) { return v >= 0.0 && std::isfinite(v); }
inline bool finite(double v) { return std::isfinite(v); }

}  // namespace detail

/// Parses and validates one scenario. `source` names the origin in diagnostics.
inline ScenarioConfig parse_config(const nlohmann::json& j, const std::string& source = "<config>") {
    std::vector<std::string> diags;
    ScenarioConfig cfg;
    if (!j.is_object()) throw ConfigError(source, {"top level must be a JSON object"});

    detail::FieldReader top(j, "", diags);
    top.check_keys({"name", "initial_occupancies", "initial_rates", "threshold", "step_fraction",
                    "seeds", "allocator", "traffic", "reward", "subscribers"});

    if (!j.contains("name")) {
        diags.push_back("field 'name': required");
    } else if (!j["name"].is_string() || j["name"].get<std::string>().empty()) {
        diags.push_back("field 'name': expected a non-empty string");
    } else {
        cfg.name = j["name"].get<std::string>();
    }

    top.number("threshold", cfg.threshold, [](double v) { return v > 0.0 && v < 100.0; },
               "must be in (0,100)");
    top.number("step_fraction", cfg.step_fraction, [](double v) { return v > 0.0 && v < 1.0; },
               "must be in (0,1)");
    top.triple("initial_rates", cfg.initial_rates, detail::non_negative, "rates must be >= 0");
    if (cfg.initial_rates[0] + cfg.initial_rates[1] + cfg.initial_rates[2] >
        env::kLinkCapacity + env::kCapacityTolerance) {
        diags.push_back("field 'initial_rates': sum exceeds link capacity 100");
    }
    top.triple("subscribers", cfg.subscribers, detail::non_negative, "counts must be >= 0");

    if (top.has("initial_occupancies")) {
        top.triple("initial_occupancies", cfg.initial_occupancies, detail::non_negative,
                   "occupancies must be >= 0");
    } else if (auto preload = preload_from_label(cfg.name)) {
        cfg.initial_occupancies = *preload;
    } else if (!cfg.name.empty()) {
        diags.push_back("field 'initial_occupancies': required when 'name' is not a queue-state "
                        "label such as \"AL,BL,BL\"");
    }

    if (top.has("seeds")) {
        const auto& s = j["seeds"];
        bool ok = s.is_array() && !s.empty();
        std::vector<std::uint64_t> seeds;
        if (ok) {
            for (const auto& v : s) {
                if (!v.is_number_unsigned()) {
                    ok = false;
                    break;
                }
                seeds.push_back(v.get<std::uint64_t>());
            }
        }
        if (ok) cfg.seeds = std::move(seeds);
        else diags.push_back("field 'seeds': expected a non-empty array of unsigned integers");
    }

    if (top.has("allocator")) {
        const auto& a = j["allocator"];
        detail::FieldReader r(a, "allocator.", diags);
        const std::string type = a.is_object() && a.contains("type") && a["type"].is_string()
                                     ? a["type"].get<std::string>()
                                     : "";
        if (!a.is_object()) {
            diags.push_back("field 'allocator': expected an object");
        } else if (type == "fixed") {
            FixedRule f;
            r.check_keys({"type", "factor", "horizon_steps"});
            r.number("factor", f.factor, [](double v) { return v > 0.0 && std::isfinite(v); },
                     "must be > 0");
            r.integer("horizon_steps", f.horizon_steps, [](long long v) { return v >= 1; },
                      "must be >= 1");
            cfg.allocator = f;
        } else if (type == "sarsa" || type.empty()) {
            SarsaAllocator s;
            r.check_keys({"type", "alpha", "gamma", "epsilon", "episodes", "max_attempts"});
            r.number("alpha", s.rl.alpha, detail::unit, "must be in [0,1]");
            r.number("gamma", s.rl.gamma, detail::unit, "must be in [0,1]");
            r.number("epsilon", s.rl.epsilon, detail::unit, "must be in [0,1]");
            r.integer("episodes", s.episodes, [](long long v) { return v >= 1; }, "must be >= 1");
            r.integer("max_attempts", s.max_attempts, [](long long v) { return v >= 1; },
                      "must be >= 1");
            cfg.allocator = s;
        } else {
            diags.push_back("field 'allocator.type': expected \"sarsa\" or \"fixed\"");
        }
    }

    if (top.has("traffic")) {
        detail::FieldReader r(j["traffic"], "traffic.", diags);
        if (!j["traffic"].is_object()) diags.push_back("field 'traffic': expected an object");
        r.check_keys({"inflow", "drain_coeff", "ticks_per_step"});
        r.triple("inflow", cfg.traffic.inflow, detail::non_negative, "must be >= 0");
        r.number("drain_coeff", cfg.traffic.drain_coeff, detail::non_negative, "must be >= 0");
        r.integer("ticks_per_step", cfg.traffic.ticks_per_step, [](long long v) { return v >= 1; },
                  "must be >= 1");
    }

    if (top.has("reward")) {
        detail::FieldReader r(j["reward"], "reward.", diags);
        if (!j["reward"].is_object()) diags.push_back("field 'reward': expected an object");
        r.check_keys({"priority", "violation_penalty", "loss_penalty", "success_bonus"});
        r.triple("priority", cfg.reward.priority, detail::finite, "must be finite");
        r.number("violation_penalty", cfg.reward.violation_penalty, detail::finite, "must be finite");
        r.number("loss_penalty", cfg.reward.loss_penalty, detail::finite, "must be finite");
        r.number("success_bonus", cfg.reward.success_bonus, detail::finite, "must be finite");
    }

    if (!diags.empty()) throw ConfigError(source, std::move(diags));
    return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), {"cannot open file"});
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string(), {std::string("not valid JSON: ") + e.what()});
    }
    return parse_config(j, path.string());
}

/// Fully resolved config, every default spelled out. Parsing this back
/// yields the same config.
inline nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json alloc;
    if (const auto* f = std::get_if<FixedRule>(&c.allocator)) {
        alloc = {{"type", "fixed"}, {"factor", f->factor}, {"horizon_steps", f->horizon_steps}};
    } else {
        const auto& s = std::get<SarsaAllocator>(c.allocator);
        alloc = {{"type", "sarsa"},          {"alpha", s.rl.alpha},       {"gamma", s.rl.gamma},
                 {"epsilon", s.rl.epsilon},  {"episodes", s.episodes},    {"max_attempts", s.max_attempts}};
    }
    return {
        {"name", c.name},
        {"initial_occupancies", c.initial_occupancies},
        {"initial_rates", c.initial_rates},
        {"threshold", c.threshold},
        {"step_fraction", c.step_fraction},
        {"seeds", c.seeds},
        {"allocator", alloc},
        {"traffic",
         {{"inflow", c.traffic.inflow},
          {"drain_coeff", c.traffic.drain_coeff},
          {"ticks_per_step", c.traffic.ticks_per_step}}},
        {"reward",
         {{"priority", c.reward.priority},
          {"violation_penalty", c.reward.violation_penalty},
          {"loss_penalty", c.reward.loss_penalty},
          {"success_bonus", c.reward.success_bonus}}},
        {"subscribers", c.subscribers},
    };
}

/// 64-bit FNV-1a of the canonical (resolved, key-sorted) config JSON.
inline std::uint64_t config_hash(const ScenarioConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace psiotrl::harness
