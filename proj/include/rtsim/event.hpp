#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtsim {

enum class EventKind : std::uint8_t {
    Publish,
    QueueRelease,
    TxStart,
    TxEnd,
    RepairTimer,
    EnergyCheck,
    TrafficToggle,
    SimEnd,
};

inline const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::Publish: return "Publish";
    case EventKind::QueueRelease: return "QueueRelease";
    case EventKind::TxStart: return "TxStart";
    case EventKind::TxEnd: return "TxEnd";
    case EventKind::RepairTimer: return "RepairTimer";
    case EventKind::EnergyCheck: return "EnergyCheck";
    case EventKind::TrafficToggle: return "TrafficToggle";
    case EventKind::SimEnd: return "SimEnd";
    }
    return "?";
}

// Timestamped simulator event. `a` and `b` are kind-specific handles
// (node id, frame id, repair id); -1 means unused.
struct Event {
    double time = 0.0;
    std::uint64_t seq = 0; // insertion order, breaks timestamp ties
    EventKind kind = EventKind::SimEnd;
    std::int32_t a = -1;
    std::int32_t b = -1;
};

struct SimClock {
    double now = 0.0;
    double end = 120.0; // effective simulation time, seconds
};

// Min-heap over (time, seq). Events at equal timestamps dispatch in the
// order they were scheduled, which makes runs reproducible regardless of
// heap internals.
class EventQueue {
public:
    void schedule(double time, EventKind kind, std::int32_t a = -1, std::int32_t b = -1) {
        if (time < clock_.now) {
            throw std::logic_error("event scheduled into the past: t=" + std::to_string(time) +
                                   " now=" + std::to_string(clock_.now) + " kind=" +
                                   to_string(kind));
        }
        heap_.push(Event{time, next_seq_++, kind, a, b});
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

    const Event& peek() const { return heap_.top(); }

    // Pops the next event and advances the clock to it.
    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        clock_.now = e.time;
        return e;
    }

    SimClock& clock() { return clock_; }
    const SimClock& clock() const { return clock_; }
    double now() const { return clock_.now; }

private:
    struct Later {
        bool operator()(const Event& x, const Event& y) const {
            if (x.time != y.time) return x.time > y.time;
            return x.seq > y.seq;
        }
    };

    SimClock clock_;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

} // namespace rtsim
