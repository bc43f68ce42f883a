#pragma once

// Control messages between consumers, the aggregator and the orchestrator,
// and the append-only run trace they are recorded in.
//
// Trace file format: one JSON object per line, UTF-8,
//   {"kind": <string>, "timestamp": <tick>, "payload": {...}}
// kinds and payloads:
//   Subscribe        {"topic": 1|2|3, "qos": "b0"|"b1"|"b2"}
//   Metadata         {"subscribers": [n1,n2,n3], "qos": ["b0","b1","b2"], "occupancy": [o1,o2,o3]}
//   BandwidthNotify  {"rates": [t1,t2,t3]}
//   Publish          {"topic": 1|2|3, "volume": v}
//   Alarm            {"queue": 1|2|3, "occupancy": o, "threshold": th}
//   EpisodeStart     {"episode": n, "state": "AL,BL,BL"}
//   Step             {"episode", "step", "state", "action", "reward", "rates", "occupancy", "rejected"}
//   EpisodeEnd       {"episode": n, "steps": n, "reason": "PrioritySatisfied"|...}

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "psiotrl/aggregator_env.hpp"
#include "psiotrl/errors.hpp"

namespace psiotrl::msg {

using env::PerQueue;
using env::QosClass;
using env::QueueId;
using Tick = std::uint64_t;

struct Subscribe {
    QueueId topic = QueueId::B1;
    QosClass qos = QosClass::b0;
    friend bool operator==(const Subscribe&, const Subscribe&) = default;
};

struct Metadata {
    std::array<int, env::kQueueCount> subscribers{};
    std::array<QosClass, env::kQueueCount> qos{QosClass::b0, QosClass::b1, QosClass::b2};
    PerQueue occupancy{};
    friend bool operator==(const Metadata&, const Metadata&) = default;
};

struct BandwidthNotify {
    PerQueue rates{};
    friend bool operator==(const BandwidthNotify&, const BandwidthNotify&) = default;
};

struct Publish {
    QueueId topic = QueueId::B1;
    double volume = 0.0;  // percent-points of buffer
    friend bool operator==(const Publish&, const Publish&) = default;
};

enum class Kind { Subscribe, Metadata, BandwidthNotify, Publish };

struct Message {
    Tick timestamp = 0;
    std::variant<msg::Subscribe, msg::Metadata, msg::BandwidthNotify, msg::Publish> payload;

    Kind kind() const { return static_cast<Kind>(payload.index()); }
    friend bool operator==(const Message&, const Message&) = default;
};

struct AlarmEvent {
    QueueId queue = QueueId::B1;
    double occupancy = 0.0;
    double threshold = 0.0;
    friend bool operator==(const AlarmEvent&, const AlarmEvent&) = default;
};

/// One event per queue strictly above threshold, in queue order.
inline std::vector<AlarmEvent> emit_alarm(const env::AggregatorState& s, double threshold) {
    std::vector<AlarmEvent> out;
    for (QueueId q : env::kQueues) {
        const double occ = s.occupancy[env::slot(q)];
        if (occ > threshold) out.push_back({q, occ, threshold});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace records

struct AlarmRecord {
    Tick timestamp = 0;
    AlarmEvent event;
    friend bool operator==(const AlarmRecord&, const AlarmRecord&) = default;
};

struct EpisodeStart {
    Tick timestamp = 0;
    int episode = 0;
    std::string state;
    friend bool operator==(const EpisodeStart&, const EpisodeStart&) = default;
};

struct StepEntry {
    Tick timestamp = 0;
    int episode = 0;
    int step = 0;
    std::string state;
    std::optional<int> action;  // action index, absent for the fixed rule
    double reward = 0.0;
    PerQueue rates{};
    PerQueue occupancy{};
    bool rejected = false;
    friend bool operator==(const StepEntry&, const StepEntry&) = default;
};

struct EpisodeEnd {
    Tick timestamp = 0;
    int episode = 0;
    int steps = 0;
    std::string reason;
    friend bool operator==(const EpisodeEnd&, const EpisodeEnd&) = default;
};

using TraceRecord = std::variant<Message, AlarmRecord, EpisodeStart, StepEntry, EpisodeEnd>;

inline Tick timestamp_of(const TraceRecord& r) {
    return std::visit([](const auto& v) { return v.timestamp; }, r);
}

inline std::string kind_name(const TraceRecord& r) {
    if (const auto* m = std::get_if<Message>(&r)) {
        switch (m->kind()) {
            case Kind::Subscribe: return "Subscribe";
            case Kind::Metadata: return "Metadata";
            case Kind::BandwidthNotify: return "BandwidthNotify";
            case Kind::Publish: return "Publish";
        }
    }
    if (std::holds_alternative<AlarmRecord>(r)) return "Alarm";
    if (std::holds_alternative<EpisodeStart>(r)) return "EpisodeStart";
    if (std::holds_alternative<StepEntry>(r)) return "Step";
    return "EpisodeEnd";
}

/// Append-only record of a run, ordered by (timestamp, emission order).
class Trace {
public:
    void append(TraceRecord r) {
        const Tick t = timestamp_of(r);
        if (!records_.empty() && t < timestamp_of(records_.back())) {
            throw ValidationError("trace records must be appended in timestamp order");
        }
        records_.push_back(std::move(r));
    }

    const std::vector<TraceRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

private:
    std::vector<TraceRecord> records_;
};

// ---------------------------------------------------------------------------
// The aggregator-side endpoint: tracks subscriptions and the allocation in
// force, and records every message it sends or receives.

class Broker {
public:
    Subscribe subscribe_payload(QueueId topic, QosClass qos) const {
        if (qos != env::qos_class(topic)) {
            throw ValidationError("topic B" + std::to_string(static_cast<int>(topic)) +
                                  " carries QoS " + std::string(env::to_string(env::qos_class(topic))) +
                                  ", not " + std::string(env::to_string(qos)));
        }
        return {topic, qos};
    }

    Message subscribe(QueueId topic, QosClass qos, Tick now = 0) {
        Message m{now, subscribe_payload(topic, qos)};
        ++subscribers_[env::slot(topic)];
        trace_.append(m);
        return m;
    }

    int subscriber_count(QueueId topic) const { return subscribers_[env::slot(topic)]; }

    Message metadata(const env::AggregatorState& s, Tick now) {
        Metadata md;
        md.subscribers = subscribers_;
        md.occupancy = s.occupancy;
        Message m{now, md};
        trace_.append(m);
        return m;
    }

    std::vector<AlarmEvent> raise_alarms(const env::AggregatorState& s, double threshold, Tick now) {
        auto alarms = emit_alarm(s, threshold);
        for (const auto& a : alarms) trace_.append(AlarmRecord{now, a});
        return alarms;
    }

    /// Accepts a new allocation from the orchestrator; rejects anything above
    /// link capacity. The aggregator's rates are updated on success.
    Message notify_bandwidth(env::AggregatorState& s, const PerQueue& rates, Tick now) {
        env::AggregatorState candidate = s;
        candidate.rates = rates;
        for (double r : rates) {
            if (!(r >= 0.0)) throw ValidationError("bandwidth rates must be >= 0");
        }
        if (!env::constraint_check(candidate)) {
            throw ValidationError("allocation exceeds link capacity: sum " +
                                  std::to_string(candidate.link_occupation()) + " > " +
                                  std::to_string(candidate.link_capacity));
        }
        s.rates = rates;
        Message m{now, BandwidthNotify{rates}};
        trace_.append(m);
        return m;
    }

    Message publish(QueueId topic, double volume, Tick now) {
        Message m{now, Publish{topic, volume}};
        trace_.append(m);
        return m;
    }

    void record(TraceRecord r) { trace_.append(std::move(r)); }

    const Trace& trace() const noexcept { return trace_; }

private:
    std::array<int, env::kQueueCount> subscribers_{};
    Trace trace_;
};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const TraceRecord& r) {
    using nlohmann::json;
    json payload = json::object();
    Tick ts = timestamp_of(r);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Message>) {
                std::visit(
                    [&](const auto& p) {
                        using P = std::decay_t<decltype(p)>;
                        if constexpr (std::is_same_v<P, Subscribe>) {
                            payload = {{"topic", static_cast<int>(p.topic)},
                                       {"qos", std::string(env::to_string(p.qos))}};
                        } else if constexpr (std::is_same_v<P, Metadata>) {
                            json q = json::array();
                            for (auto c : p.qos) q.push_back(std::string(env::to_string(c)));
                            payload = {{"subscribers", p.subscribers}, {"qos", q}, {"occupancy", p.occupancy}};
                        } else if constexpr (std::is_same_v<P, BandwidthNotify>) {
                            payload = {{"rates", p.rates}};
                        } else {
                            payload = {{"topic", static_cast<int>(p.topic)}, {"volume", p.volume}};
                        }
                    },
                    v.payload);
            } else if constexpr (std::is_same_v<T, AlarmRecord>) {
                payload = {{"queue", static_cast<int>(v.event.queue)},
                           {"occupancy", v.event.occupancy},
                           {"threshold", v.event.threshold}};
            } else if constexpr (std::is_same_v<T, EpisodeStart>) {
                payload = {{"episode", v.episode}, {"state", v.state}};
            } else if constexpr (std::is_same_v<T, StepEntry>) {
                payload = {{"episode", v.episode},   {"step", v.step},
                           {"state", v.state},       {"reward", v.reward},
                           {"rates", v.rates},       {"occupancy", v.occupancy},
                           {"rejected", v.rejected}, {"action", nullptr}};
                if (v.action) payload["action"] = *v.action;
            } else {
                payload = {{"episode", v.episode}, {"steps", v.steps}, {"reason", v.reason}};
            }
        },
        r);
    return {{"kind", kind_name(r)}, {"timestamp", ts}, {"payload", payload}};
}

inline TraceRecord from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        const Tick ts = j.at("timestamp").get<Tick>();
        const auto& p = j.at("payload");
        if (kind == "Subscribe") {
            return Message{ts, Subscribe{env::queue_from_number(p.at("topic").get<int>()),
                                         env::qos_from_string(p.at("qos").get<std::string>())}};
        }
        if (kind == "Metadata") {
            Metadata md;
            md.subscribers = p.at("subscribers").get<std::array<int, 3>>();
            const auto q = p.at("qos").get<std::array<std::string, 3>>();
            for (std::size_t i = 0; i < 3; ++i) md.qos[i] = env::qos_from_string(q[i]);
            md.occupancy = p.at("occupancy").get<PerQueue>();
            return Message{ts, md};
        }
        if (kind == "BandwidthNotify") return Message{ts, BandwidthNotify{p.at("rates").get<PerQueue>()}};
        if (kind == "Publish") {
            return Message{ts, Publish{env::queue_from_number(p.at("topic").get<int>()),
                                       p.at("volume").get<double>()}};
        }
        if (kind == "Alarm") {
            return AlarmRecord{ts, AlarmEvent{env::queue_from_number(p.at("queue").get<int>()),
                                              p.at("occupancy").get<double>(),
                                              p.at("threshold").get<double>()}};
        }
        if (kind == "EpisodeStart") {
            return EpisodeStart{ts, p.at("episode").get<int>(), p.at("state").get<std::string>()};
        }
        if (kind == "Step") {
            StepEntry s;
            s.timestamp = ts;
            s.episode = p.at("episode").get<int>();
            s.step = p.at("step").get<int>();
            s.state = p.at("state").get<std::string>();
            if (!p.at("action").is_null()) s.action = p.at("action").get<int>();
            s.reward = p.at("reward").get<double>();
            s.rates = p.at("rates").get<PerQueue>();
            s.occupancy = p.at("occupancy").get<PerQueue>();
            s.rejected = p.at("rejected").get<bool>();
            return s;
        }
        if (kind == "EpisodeEnd") {
            return EpisodeEnd{ts, p.at("episode").get<int>(), p.at("steps").get<int>(),
                              p.at("reason").get<std::string>()};
        }
        throw ValidationError("unknown trace record kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed trace record: ") + e.what());
    }
}

inline void write_trace(std::ostream& os, const Trace& trace) {
    for (const auto& r : trace.records()) os << to_json(r).dump() << '\n';
}

inline Trace read_trace(std::istream& is) {
    Trace trace;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("trace line " + std::to_string(lineno) + ": " + e.what());
        }
        trace.append(from_json(j));
    }
    return trace;
}

}  // namespace psiotrl::msg
