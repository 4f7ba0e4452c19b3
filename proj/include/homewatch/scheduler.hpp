#pragma once

#include "homewatch/domain.hpp"

#include <span>
#include <string>
#include <vector>

namespace homewatch {

struct SchedulerConfig {
    int anchor_hour = 8;         // UTC hour of the first dispatch of the day
    int escalation_factor = 2;   // reports_per_day multiplier on Orange/Red
    int calm_streak = 4;         // consecutive <= Yellow reports before de-escalating
    Duration overdue_after = 8h;
};

MonitoringSchedule baseline_schedule(int reports_per_day, const SchedulerConfig& config = {});

/// Next send time strictly after `now`. Dispatches are spaced evenly over the UTC day starting
/// at the anchor hour (2/day: 08:00, 20:00; 4/day: 08:00, 14:00, 20:00, 02:00).
Timestamp next_dispatch(const MonitoringSchedule& schedule, Timestamp now,
                        const SchedulerConfig& config = {});

/// Boundary is exclusive: exactly `overdue_after` after dispatch is not yet overdue.
bool is_overdue(Timestamp last_dispatch_at, bool responded, Timestamp now,
                Duration overdue_after = 8h);

/// Orange/Red multiply the frequency once; everything else (and re-escalation) is a no-op.
MonitoringSchedule escalate(MonitoringSchedule schedule, TriageCategory category,
                            const SchedulerConfig& config = {});

/// Back to baseline once the newest `calm_streak` categories are all <= Yellow.
/// `recent_categories` is ordered oldest first.
MonitoringSchedule maybe_deescalate(MonitoringSchedule schedule,
                                    std::span<const TriageCategory> recent_categories,
                                    const SchedulerConfig& config = {});

struct PendingDispatch {
    std::string dispatch_id;
    Timestamp dispatched_at{};
    bool overdue_flagged = false;

    friend bool operator==(const PendingDispatch&, const PendingDispatch&) = default;
};

/// What the tick needs to know about one patient. `pending` holds unanswered dispatches.
struct PatientScheduleState {
    std::string patient_id;
    LifecycleStatus status = LifecycleStatus::Monitoring;
    MonitoringSchedule schedule;
    std::vector<PendingDispatch> pending;
};

struct DispatchCommand {
    std::string patient_id;
    Timestamp scheduled_for{};

    friend bool operator==(const DispatchCommand&, const DispatchCommand&) = default;
};

struct OverdueDetection {
    std::string patient_id;
    std::string dispatch_id;
    Timestamp dispatched_at{};

    friend bool operator==(const OverdueDetection&, const OverdueDetection&) = default;
};

struct TickOutput {
    std::vector<DispatchCommand> dispatches;
    std::vector<OverdueDetection> overdue;
};

/// Pure: one DispatchCommand per Monitoring patient whose next dispatch is due, one
/// OverdueDetection per pending dispatch that is overdue and not yet flagged. Output order
/// follows input order.
TickOutput tick(Timestamp now, std::span<const PatientScheduleState> patients);

}  // namespace homewatch
