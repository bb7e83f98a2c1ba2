#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gencumul/engine.hpp"

namespace gencumul {

/// Conditional time-interval variable <s, d, e, p>. The interval either
/// executes over the half-open span [s, e) with e = s + d, or is absent
/// (p = false) in which case it imposes no constraint at all.
struct IntervalVar {
    IntVarId start;
    IntVarId duration;
    IntVarId end;
    BoolVarId presence;
};

/// Tightens a variable's lower bound under conditional-interval semantics:
/// if the range would empty, an unknown presence flips to false and the
/// tightening is discarded; a true presence raises Inconsistency; calls on
/// absent intervals are ignored. Returns whether anything changed.
inline bool conditional_set_min(Engine& e, BoolVarId presence, IntVarId var, long long bound) {
    if (e.is_false(presence)) return false;
    if (bound <= e.min(var)) return false;
    if (bound > e.max(var)) {
        if (e.is_true(presence)) throw Inconsistency{};
        e.set_false(presence);
        return true;
    }
    return e.set_min(var, static_cast<int>(bound));
}

inline bool conditional_set_max(Engine& e, BoolVarId presence, IntVarId var, long long bound) {
    if (e.is_false(presence)) return false;
    if (bound >= e.max(var)) return false;
    if (bound < e.min(var)) {
        if (e.is_true(presence)) throw Inconsistency{};
        e.set_false(presence);
        return true;
    }
    return e.set_max(var, static_cast<int>(bound));
}

/// Local fixpoint of the six s + d = e bound-consistency inequalities.
/// Maintained atomically: every public tightening entry point reruns this
/// before returning, so callers always observe a consistent tuple.
inline bool propagate_interval_bounds(Engine& e, const IntervalVar& iv) {
    bool changed_any = false;
    bool changed = true;
    while (changed && !e.is_false(iv.presence)) {
        changed = false;
        const long long s_lo = e.min(iv.start), s_hi = e.max(iv.start);
        const long long d_lo = e.min(iv.duration), d_hi = e.max(iv.duration);
        const long long e_lo = e.min(iv.end), e_hi = e.max(iv.end);
        changed |= conditional_set_min(e, iv.presence, iv.end, s_lo + d_lo);
        changed |= conditional_set_max(e, iv.presence, iv.end, s_hi + d_hi);
        changed |= conditional_set_min(e, iv.presence, iv.start, e_lo - d_hi);
        changed |= conditional_set_max(e, iv.presence, iv.start, e_hi - d_lo);
        changed |= conditional_set_min(e, iv.presence, iv.duration, e_lo - s_hi);
        changed |= conditional_set_max(e, iv.presence, iv.duration, e_hi - s_lo);
        changed_any |= changed;
    }
    return changed_any;
}

enum class Attr : std::uint8_t { Start, Duration, End };

inline IntVarId attr_var(const IntervalVar& iv, Attr a) {
    switch (a) {
    case Attr::Start: return iv.start;
    case Attr::Duration: return iv.duration;
    case Attr::End: return iv.end;
    }
    return iv.start;
}

/// Raises the lower bound of one attribute and restores s + d = e.
inline bool tighten_min(Engine& e, const IntervalVar& iv, Attr a, long long bound) {
    bool changed = conditional_set_min(e, iv.presence, attr_var(iv, a), bound);
    if (changed) propagate_interval_bounds(e, iv);
    return changed;
}

inline bool tighten_max(Engine& e, const IntervalVar& iv, Attr a, long long bound) {
    bool changed = conditional_set_max(e, iv.presence, attr_var(iv, a), bound);
    if (changed) propagate_interval_bounds(e, iv);
    return changed;
}

/// Fixes the execution status to present. Raises Inconsistency when the
/// interval is already absent or internally inconsistent.
inline void set_present(Engine& e, const IntervalVar& iv) {
    if (e.set_true(iv.presence)) propagate_interval_bounds(e, iv);
}

inline void set_absent(Engine& e, const IntervalVar& iv) { e.set_false(iv.presence); }

/// A present task surely executes over [max s, min e) when that span is
/// nonempty.
inline bool has_fixed_part(const Engine& e, const IntervalVar& iv) {
    return e.max(iv.start) < e.min(iv.end);
}

namespace detail {

class IntervalConsistency final : public Propagator {
public:
    explicit IntervalConsistency(IntervalVar iv) : iv_(iv) {}
    void propagate(Engine& e) override { propagate_interval_bounds(e, iv_); }

private:
    IntervalVar iv_;
};

} // namespace detail

/// Builds a conditional interval variable and attaches its internal
/// s + d = e propagator. Incompatible initial ranges surface at the first
/// fixpoint (absence for optional intervals, Inconsistency for required
/// ones).
inline IntervalVar make_interval(Engine& e, Range start, Range duration, Range end,
                                 bool optional = false) {
    if (duration.lo < 0)
        throw std::invalid_argument("make_interval: duration must be non-negative");
    IntervalVar iv;
    iv.start = e.new_int_var(start.lo, start.hi);
    iv.duration = e.new_int_var(duration.lo, duration.hi);
    iv.end = e.new_int_var(end.lo, end.hi);
    iv.presence = e.new_bool_var();
    if (!optional) e.set_true(iv.presence);
    PropagatorId pid = e.post(std::make_unique<detail::IntervalConsistency>(iv));
    e.subscribe(iv.start, pid);
    e.subscribe(iv.duration, pid);
    e.subscribe(iv.end, pid);
    e.subscribe(iv.presence, pid);
    return iv;
}

/// Task partition by execution status: optional (undecided), required
/// (present) and excluded (absent). The three sets are disjoint and cover
/// the input.
struct StatusPartition {
    std::vector<std::size_t> optional_tasks;
    std::vector<std::size_t> required_tasks;
    std::vector<std::size_t> excluded_tasks;
};

inline StatusPartition partition_by_status(const Engine& e, std::span<const IntervalVar> tasks) {
    StatusPartition part;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        switch (e.state(tasks[i].presence)) {
        case TriState::Unknown: part.optional_tasks.push_back(i); break;
        case TriState::True: part.required_tasks.push_back(i); break;
        case TriState::False: part.excluded_tasks.push_back(i); break;
        }
    }
    return part;
}

} // namespace gencumul
