#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencumul {

/// Thrown (by value) when a domain wipes out. Caught by the fixpoint loop
/// and by the search; never escapes Engine::propagate or Engine::solve.
struct Inconsistency {};

struct IntVarId {
    std::uint32_t raw = 0;
    friend bool operator==(IntVarId a, IntVarId b) { return a.raw == b.raw; }
    friend bool operator!=(IntVarId a, IntVarId b) { return a.raw != b.raw; }
};

struct BoolVarId {
    std::uint32_t raw = 0;
    friend bool operator==(BoolVarId a, BoolVarId b) { return a.raw == b.raw; }
    friend bool operator!=(BoolVarId a, BoolVarId b) { return a.raw != b.raw; }
};

using PropagatorId = std::uint32_t;

/// Inclusive integer range; lo > hi is never an observable variable state.
struct Range {
    int lo;
    int hi;
};

enum class TriState : std::uint8_t { Unknown, True, False };

class Engine;

class Propagator {
public:
    virtual ~Propagator() = default;
    virtual void propagate(Engine& engine) = 0;

private:
    bool queued_ = false;
    friend class Engine;
};

enum class Sense : std::uint8_t { Minimize, Maximize };

struct Objective {
    IntVarId var;
    Sense sense = Sense::Minimize;
};

enum class SearchStatus : std::uint8_t { Optimal, Feasible, Infeasible, Timeout };

inline const char* to_string(SearchStatus s) {
    switch (s) {
    case SearchStatus::Optimal: return "optimal";
    case SearchStatus::Feasible: return "feasible";
    case SearchStatus::Infeasible: return "infeasible";
    case SearchStatus::Timeout: return "timeout";
    }
    return "unknown";
}

struct SearchStats {
    std::uint64_t nodes = 0;
    std::uint64_t backtracks = 0;
    std::uint64_t solutions = 0;
    std::optional<long long> best_objective;
    SearchStatus status = SearchStatus::Infeasible;
    std::chrono::milliseconds elapsed{0};
};

struct SearchOptions {
    std::optional<std::chrono::milliseconds> time_limit;
    bool first_solution = false;
    std::function<void()> on_solution;
};

/// One search decision; a branching returns the ordered alternatives of a
/// node. An empty alternative list means the node is a solution.
using Decision = std::function<void()>;
using Branching = std::function<std::vector<Decision>()>;

/// Minimal backtracking solver core: integer variables with range domains,
/// tri-state booleans, a trail, a FIFO propagation queue and depth-first
/// branch-and-bound search. Strictly single-threaded.
class Engine {
public:
    // ---- variables -------------------------------------------------------

    IntVarId new_int_var(int lo, int hi) {
        if (lo > hi)
            throw std::invalid_argument("new_int_var: empty range [" + std::to_string(lo) +
                                        "," + std::to_string(hi) + "]");
        int_doms_.push_back({lo, hi});
        int_watchers_.emplace_back();
        return IntVarId{static_cast<std::uint32_t>(int_doms_.size() - 1)};
    }

    BoolVarId new_bool_var() {
        bool_states_.push_back(TriState::Unknown);
        bool_watchers_.emplace_back();
        return BoolVarId{static_cast<std::uint32_t>(bool_states_.size() - 1)};
    }

    int min(IntVarId v) const { return int_doms_[v.raw].lo; }
    int max(IntVarId v) const { return int_doms_[v.raw].hi; }
    bool is_fixed(IntVarId v) const { return int_doms_[v.raw].lo == int_doms_[v.raw].hi; }

    int value(IntVarId v) const {
        const Range& d = int_doms_[v.raw];
        if (d.lo != d.hi) throw std::logic_error("value() on unfixed variable");
        return d.lo;
    }

    TriState state(BoolVarId b) const { return bool_states_[b.raw]; }
    bool is_true(BoolVarId b) const { return bool_states_[b.raw] == TriState::True; }
    bool is_false(BoolVarId b) const { return bool_states_[b.raw] == TriState::False; }
    bool is_unknown(BoolVarId b) const { return bool_states_[b.raw] == TriState::Unknown; }

    /// lo <- max(lo, b). Returns whether the bound moved; throws Inconsistency
    /// on wipe-out. Any change wakes the subscribed propagators.
    bool set_min(IntVarId v, int b) {
        Range& d = int_doms_[v.raw];
        if (b <= d.lo) return false;
        if (b > d.hi) throw Inconsistency{};
        trail_.push_back({TrailKind::IntLo, v.raw, d.lo});
        d.lo = b;
        wake(int_watchers_[v.raw]);
        return true;
    }

    bool set_max(IntVarId v, int b) {
        Range& d = int_doms_[v.raw];
        if (b >= d.hi) return false;
        if (b < d.lo) throw Inconsistency{};
        trail_.push_back({TrailKind::IntHi, v.raw, d.hi});
        d.hi = b;
        wake(int_watchers_[v.raw]);
        return true;
    }

    bool assign(IntVarId v, int value) {
        bool a = set_min(v, value);
        bool b = set_max(v, value);
        return a || b;
    }

    bool set_true(BoolVarId b) {
        TriState& s = bool_states_[b.raw];
        if (s == TriState::True) return false;
        if (s == TriState::False) throw Inconsistency{};
        trail_.push_back({TrailKind::Bool, b.raw, 0});
        s = TriState::True;
        wake(bool_watchers_[b.raw]);
        return true;
    }

    bool set_false(BoolVarId b) {
        TriState& s = bool_states_[b.raw];
        if (s == TriState::False) return false;
        if (s == TriState::True) throw Inconsistency{};
        trail_.push_back({TrailKind::Bool, b.raw, 0});
        s = TriState::False;
        wake(bool_watchers_[b.raw]);
        return true;
    }

    // ---- propagators -----------------------------------------------------

    PropagatorId post(std::unique_ptr<Propagator> p) {
        propagators_.push_back(std::move(p));
        PropagatorId id = static_cast<PropagatorId>(propagators_.size() - 1);
        schedule(id);
        return id;
    }

    template <typename F>
    PropagatorId post(F fn) {
        struct Fn final : Propagator {
            F f;
            explicit Fn(F g) : f(std::move(g)) {}
            void propagate(Engine& e) override { f(e); }
        };
        return post(std::make_unique<Fn>(std::move(fn)));
    }

    void subscribe(IntVarId v, PropagatorId p) { int_watchers_[v.raw].push_back(p); }
    void subscribe(BoolVarId b, PropagatorId p) { bool_watchers_[b.raw].push_back(p); }

    void schedule(PropagatorId id) {
        Propagator& p = *propagators_[id];
        if (p.queued_) return;
        p.queued_ = true;
        queue_.push_back(id);
    }

    /// Runs enqueued propagators to fixpoint. Returns false when one of them
    /// raised Inconsistency (the queue is drained either way).
    bool propagate() {
        while (!queue_.empty()) {
            PropagatorId id = queue_.front();
            queue_.pop_front();
            propagators_[id]->queued_ = false;
            try {
                propagators_[id]->propagate(*this);
            } catch (const Inconsistency&) {
                for (PropagatorId q : queue_) propagators_[q]->queued_ = false;
                queue_.clear();
                return false;
            }
        }
        return true;
    }

    // ---- trail -----------------------------------------------------------

    std::size_t save() {
        marks_.push_back(trail_.size());
        return marks_.size() - 1;
    }

    /// Restores every domain to its exact state at save() number `mark`.
    void restore(std::size_t mark) {
        std::size_t target = marks_[mark];
        while (trail_.size() > target) {
            const TrailRec& r = trail_.back();
            switch (r.kind) {
            case TrailKind::IntLo: int_doms_[r.index].lo = r.old_value; break;
            case TrailKind::IntHi: int_doms_[r.index].hi = r.old_value; break;
            case TrailKind::Bool: bool_states_[r.index] = TriState::Unknown; break;
            }
            trail_.pop_back();
        }
        marks_.resize(mark);
    }

    // ---- search ----------------------------------------------------------

    /// Depth-first search. `branching` yields the ordered alternatives of the
    /// current node; an empty list marks a solution. With an objective the
    /// search runs branch-and-bound with a strict-improvement bound applied
    /// at every node entry. A backtrack is counted for each node whose
    /// subtree is exhausted by failure.
    SearchStats solve(const Branching& branching,
                      std::optional<Objective> objective = std::nullopt,
                      const SearchOptions& options = {}) {
        using Clock = std::chrono::steady_clock;
        const auto start = Clock::now();
        SearchStats stats;
        std::optional<long long> best;
        bool timed_out = false;
        bool stopped_early = false;

        auto out_of_time = [&]() {
            return options.time_limit && Clock::now() - start >= *options.time_limit;
        };

        // Applies the strict-improvement bound from the incumbent, if any.
        auto apply_bound = [&]() {
            if (!objective || !best) return;
            long long limit = *best + (objective->sense == Sense::Minimize ? -1 : 1);
            if (limit < std::numeric_limits<int>::min() || limit > std::numeric_limits<int>::max())
                throw Inconsistency{};
            if (objective->sense == Sense::Minimize)
                set_max(objective->var, static_cast<int>(limit));
            else
                set_min(objective->var, static_cast<int>(limit));
        };

        struct Frame {
            std::size_t mark;              // trail mark before this node's decision
            std::vector<Decision> alts;
            std::size_t next = 0;
            bool subtree_failed = true;    // stays true while every child failed
        };
        std::vector<Frame> path;

        auto record_solution = [&]() {
            stats.solutions += 1;
            if (objective) {
                long long v = value(objective->var);
                if (!best || (objective->sense == Sense::Minimize ? v < *best : v > *best))
                    best = v;
            }
            if (options.on_solution) options.on_solution();
        };

        // Enters a node whose decision has already been applied. Returns true
        // if the node survives propagation; pushes its frame unless it is a
        // solution leaf (reported through `solution_leaf`).
        auto enter = [&](std::size_t mark, bool* solution_leaf) -> bool {
            stats.nodes += 1;
            *solution_leaf = false;
            try {
                apply_bound();
            } catch (const Inconsistency&) {
                stats.backtracks += 1;
                return false;
            }
            if (!propagate()) {
                stats.backtracks += 1;
                return false;
            }
            std::vector<Decision> alts = branching();
            if (alts.empty()) {
                record_solution();
                *solution_leaf = true;
                return true;
            }
            path.push_back(Frame{mark, std::move(alts), 0, true});
            return true;
        };

        // Root node.
        std::size_t root_mark = save();
        bool root_solution = false;
        if (!enter(root_mark, &root_solution)) {
            restore(root_mark);
            stats.status = SearchStatus::Infeasible;
            stats.elapsed =
                std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
            return stats;
        }
        if (root_solution) {
            restore(root_mark);
        } else {
            while (!path.empty()) {
                if (options.first_solution && stats.solutions > 0) {
                    stopped_early = true;
                    break;
                }
                if (out_of_time()) {
                    timed_out = true;
                    break;
                }
                Frame& top = path.back();
                if (top.next == top.alts.size()) {
                    bool failed = top.subtree_failed;
                    std::size_t mark = top.mark;
                    path.pop_back();
                    restore(mark);
                    if (failed) stats.backtracks += 1;
                    if (!path.empty() && !failed) path.back().subtree_failed = false;
                    continue;
                }
                Decision decision = top.alts[top.next++];
                std::size_t mark = save();
                bool failed_entry = false;
                try {
                    decision();
                } catch (const Inconsistency&) {
                    stats.nodes += 1;
                    stats.backtracks += 1;
                    failed_entry = true;
                }
                if (failed_entry) {
                    restore(mark);
                    continue;
                }
                bool solution_leaf = false;
                if (enter(mark, &solution_leaf)) {
                    if (solution_leaf) {
                        path.back().subtree_failed = false;
                        restore(mark);
                    }
                } else {
                    restore(mark);
                }
            }
            // Unwind anything left open (timeout / early stop).
            if (!path.empty()) restore(path.front().mark);
            path.clear();
            if (marks_.size() > root_mark) restore(root_mark);
        }

        stats.best_objective = best;
        if (timed_out)
            stats.status = SearchStatus::Timeout;
        else if (stats.solutions == 0)
            stats.status = SearchStatus::Infeasible;
        else if (stopped_early || !objective)
            stats.status = SearchStatus::Feasible;
        else
            stats.status = SearchStatus::Optimal;
        stats.elapsed =
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
        return stats;
    }

    std::size_t num_int_vars() const { return int_doms_.size(); }
    std::size_t num_bool_vars() const { return bool_states_.size(); }

private:
    enum class TrailKind : std::uint8_t { IntLo, IntHi, Bool };
    struct TrailRec {
        TrailKind kind;
        std::uint32_t index;
        int old_value;
    };

    void wake(const std::vector<PropagatorId>& watchers) {
        for (PropagatorId id : watchers) schedule(id);
    }

    std::vector<Range> int_doms_;
    std::vector<TriState> bool_states_;
    std::vector<std::vector<PropagatorId>> int_watchers_;
    std::vector<std::vector<PropagatorId>> bool_watchers_;
    std::vector<std::unique_ptr<Propagator>> propagators_;
    std::deque<PropagatorId> queue_;
    std::vector<TrailRec> trail_;
    std::vector<std::size_t> marks_;
};

// ---- small arithmetic propagators used across the models ------------------

/// x <= y (bounds propagation both ways).
inline PropagatorId post_less_equal(Engine& e, IntVarId x, IntVarId y) {
    PropagatorId id = e.post([x, y](Engine& en) {
        en.set_max(x, en.max(y));
        en.set_min(y, en.min(x));
    });
    e.subscribe(x, id);
    e.subscribe(y, id);
    return id;
}

/// y = -x.
inline PropagatorId post_negation(Engine& e, IntVarId x, IntVarId y) {
    PropagatorId id = e.post([x, y](Engine& en) {
        en.set_min(y, -en.max(x));
        en.set_max(y, -en.min(x));
        en.set_min(x, -en.max(y));
        en.set_max(x, -en.min(y));
    });
    e.subscribe(x, id);
    e.subscribe(y, id);
    return id;
}

} // namespace gencumul
