#include "homewatch/scheduler.hpp"

#include <algorithm>
#include <limits>

namespace homewatch {

MonitoringSchedule baseline_schedule(int reports_per_day, const SchedulerConfig& config) {
    MonitoringSchedule s;
    s.reports_per_day = std::max(1, reports_per_day);
    s.baseline_per_day = s.reports_per_day;
    s.escalated = false;
    s.overdue_after = config.overdue_after;
    return s;
}

Timestamp next_dispatch(const MonitoringSchedule& schedule, Timestamp now,
                        const SchedulerConfig& config) {
    constexpr std::int64_t kDay = 86400;
    const std::int64_t per_day = std::max(1, schedule.reports_per_day);
    const std::int64_t spacing = kDay / per_day;
    const std::int64_t anchor = static_cast<std::int64_t>(config.anchor_hour) * 3600;
    const std::int64_t t = to_epoch_seconds(now);
    std::int64_t day_start = t / kDay * kDay;
    if (day_start > t) day_start -= kDay;

    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t d = -1; d <= 1; ++d) {
        for (std::int64_t k = 0; k < per_day; ++k) {
            const std::int64_t slot = day_start + d * kDay + anchor + k * spacing;
            if (slot > t && slot < best) best = slot;
        }
    }
    return from_epoch_seconds(best);
}

bool is_overdue(Timestamp last_dispatch_at, bool responded, Timestamp now, Duration overdue_after) {
    return !responded && now - last_dispatch_at > overdue_after;
}

MonitoringSchedule escalate(MonitoringSchedule schedule, TriageCategory category,
                            const SchedulerConfig& config) {
    if (!needs_clinician(category) || schedule.escalated) return schedule;
    schedule.reports_per_day = schedule.baseline_per_day * std::max(2, config.escalation_factor);
    schedule.escalated = true;
    return schedule;
}

MonitoringSchedule maybe_deescalate(MonitoringSchedule schedule,
                                    std::span<const TriageCategory> recent_categories,
                                    const SchedulerConfig& config) {
    const auto streak = static_cast<std::size_t>(std::max(1, config.calm_streak));
    if (!schedule.escalated || recent_categories.size() < streak) return schedule;
    const auto tail = recent_categories.last(streak);
    const bool calm = std::all_of(tail.begin(), tail.end(),
                                  [](TriageCategory c) { return c <= TriageCategory::Yellow; });
    if (!calm) return schedule;
    schedule.reports_per_day = schedule.baseline_per_day;
    schedule.escalated = false;
    return schedule;
}

TickOutput tick(Timestamp now, std::span<const PatientScheduleState> patients) {
    TickOutput out;
    for (const auto& p : patients) {
        if (p.status != LifecycleStatus::Monitoring) continue;
        if (p.schedule.next_dispatch_at <= now) {
            out.dispatches.push_back({p.patient_id, p.schedule.next_dispatch_at});
        }
        for (const auto& d : p.pending) {
            if (!d.overdue_flagged &&
                is_overdue(d.dispatched_at, false, now, p.schedule.overdue_after)) {
                out.overdue.push_back({p.patient_id, d.dispatch_id, d.dispatched_at});
            }
        }
    }
    return out;
}

}  // namespace homewatch
