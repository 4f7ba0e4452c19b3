#include "homewatch/scheduler.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace homewatch;

namespace {

Timestamp at(int day, int hour, int minute = 0) { return make_utc(2020, 3, day, hour, minute); }

MonitoringSchedule per_day(int n) { return baseline_schedule(n); }

}  // namespace

TEST(NextDispatch, EvenSpacingFromAnchor) {
    EXPECT_EQ(next_dispatch(per_day(2), at(16, 9)), at(16, 20));
    EXPECT_EQ(next_dispatch(per_day(1), at(16, 7, 59)), at(16, 8));
    EXPECT_EQ(next_dispatch(per_day(4), at(16, 21)), at(17, 2));
    EXPECT_EQ(next_dispatch(per_day(4), at(16, 3)), at(16, 8));
    EXPECT_EQ(next_dispatch(per_day(4), at(16, 9)), at(16, 14));
    EXPECT_EQ(next_dispatch(per_day(1), at(16, 8)), at(17, 8));
    EXPECT_EQ(next_dispatch(per_day(2), at(16, 20)), at(17, 8));
    EXPECT_EQ(next_dispatch(per_day(2), at(16, 0)), at(16, 8));
}

TEST(NextDispatch, ConfigurableAnchorAndStrictlyLater) {
    SchedulerConfig cfg;
    cfg.anchor_hour = 6;
    EXPECT_EQ(next_dispatch(per_day(2), at(16, 6), cfg), at(16, 18));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 5000; ++i) {
        const int n = 1 << (rng() % 4);
        const Timestamp now = at(16, 0) + Duration{static_cast<long>(rng() % (5 * 86400))};
        const Timestamp next = next_dispatch(per_day(n), now);
        EXPECT_GT(next, now);
        EXPECT_LE(next - now, Duration{86400 / n});
        const auto secs = to_epoch_seconds(next) % 86400;
        EXPECT_EQ((secs - 8 * 3600 + 86400) % (86400 / n), 0);
    }
}

TEST(Overdue, BoundaryIsExclusive) {
    const Timestamp t = at(16, 8);
    EXPECT_FALSE(is_overdue(t, false, at(16, 15, 59)));
    EXPECT_FALSE(is_overdue(t, false, at(16, 16)));
    EXPECT_TRUE(is_overdue(t, false, at(16, 16, 1)));
    EXPECT_TRUE(is_overdue(t, false, t + 8h + 1s));
    EXPECT_FALSE(is_overdue(t, true, at(16, 23)));
}

TEST(Overdue, MonotoneInNow) {
    const Timestamp t = at(16, 8);
    bool seen = false;
    for (int m = 0; m < 24 * 60; ++m) {
        const bool o = is_overdue(t, false, t + std::chrono::minutes(m));
        if (seen) EXPECT_TRUE(o);
        seen = seen || o;
    }
    EXPECT_TRUE(seen);
}

TEST(Escalation, DoublesOnceOnOrangeOrRed) {
    const MonitoringSchedule base = per_day(2);
    const MonitoringSchedule up = escalate(base, TriageCategory::Orange);
    EXPECT_EQ(up.reports_per_day, 4);
    EXPECT_TRUE(up.escalated);
    EXPECT_EQ(escalate(base, TriageCategory::Green), base);
    EXPECT_EQ(escalate(base, TriageCategory::Yellow), base);
    EXPECT_EQ(escalate(up, TriageCategory::Red), up);
    EXPECT_EQ(escalate(per_day(1), TriageCategory::Red).reports_per_day, 2);
}

TEST(Escalation, DeescalatesAfterFourCalmReports) {
    const MonitoringSchedule up = escalate(per_day(2), TriageCategory::Orange);
    using C = TriageCategory;
    const std::vector<C> calm = {C::Yellow, C::Green, C::Green, C::Yellow};
    EXPECT_EQ(maybe_deescalate(up, calm), per_day(2));
    const std::vector<C> mixed = {C::Yellow, C::Orange, C::Green, C::Green};
    EXPECT_EQ(maybe_deescalate(up, mixed), up);
    const std::vector<C> short_run = {C::Green, C::Green, C::Green};
    EXPECT_EQ(maybe_deescalate(up, short_run), up);
    EXPECT_EQ(maybe_deescalate(per_day(2), calm), per_day(2));
}

TEST(Escalation, RoundTripOverRandomSequences) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        const int base_n = 1 + static_cast<int>(rng() % 2);
        const MonitoringSchedule base = per_day(base_n);
        MonitoringSchedule s = base;
        std::vector<TriageCategory> since;
        for (int step = 0; step < 30; ++step) {
            const auto c = static_cast<TriageCategory>(rng() % 4);
            if (c >= TriageCategory::Orange) {
                if (!s.escalated) since.clear();
                s = escalate(s, c);
                since.push_back(c);
            } else if (s.escalated) {
                since.push_back(c);
                s = maybe_deescalate(s, since);
            }
            EXPECT_EQ(s.reports_per_day, s.escalated ? base_n * 2 : base_n);
            if (s.escalated) EXPECT_GT(s.reports_per_day, s.baseline_per_day);
        }
        const std::vector<TriageCategory> calm(4, TriageCategory::Green);
        EXPECT_EQ(maybe_deescalate(escalate(base, TriageCategory::Red), calm), base);
    }
}

TEST(Tick, OneCommandPerDueMonitoringPatient) {
    const Timestamp now = at(16, 8);
    std::vector<PatientScheduleState> ps;
    for (int i = 0; i < 3; ++i) {
        PatientScheduleState p;
        p.patient_id = "p" + std::to_string(i);
        p.schedule = per_day(2);
        p.schedule.next_dispatch_at = now;
        ps.push_back(p);
    }
    auto out = tick(now, ps);
    EXPECT_EQ(out.dispatches.size(), 3u);
    ps[1].status = LifecycleStatus::Hospitalized;
    ps[2].status = LifecycleStatus::Discharged;
    out = tick(now, ps);
    ASSERT_EQ(out.dispatches.size(), 1u);
    EXPECT_EQ(out.dispatches[0].patient_id, "p0");
    ps[0].schedule.next_dispatch_at = now + 1s;
    EXPECT_TRUE(tick(now, ps).dispatches.empty());
}

TEST(Tick, OverdueDetectedOncePerDispatch) {
    PatientScheduleState p;
    p.patient_id = "p";
    p.schedule = per_day(2);
    p.schedule.next_dispatch_at = at(17, 8);
    p.pending.push_back({"d-1", at(16, 8), false});
    std::vector<PatientScheduleState> ps{p};
    EXPECT_TRUE(tick(at(16, 16), ps).overdue.empty());
    auto out = tick(at(16, 16, 1), ps);
    ASSERT_EQ(out.overdue.size(), 1u);
    EXPECT_EQ(out.overdue[0].dispatch_id, "d-1");
    ps[0].pending[0].overdue_flagged = true;
    EXPECT_TRUE(tick(at(16, 16, 2), ps).overdue.empty());
}

TEST(Tick, PureAndReproducible) {
    std::mt19937_64 rng(9);
    std::vector<PatientScheduleState> ps;
    for (int i = 0; i < 200; ++i) {
        PatientScheduleState p;
        p.patient_id = "p" + std::to_string(i);
        p.status = static_cast<LifecycleStatus>(rng() % 4);
        p.schedule = per_day(1 + static_cast<int>(rng() % 2));
        p.schedule.next_dispatch_at = at(16, 0) + Duration{static_cast<long>(rng() % 86400)};
        if (rng() % 2) p.pending.push_back({"d" + std::to_string(i), at(15, 0) + Duration{static_cast<long>(rng() % 86400)}, false});
        ps.push_back(p);
    }
    for (int h = 0; h < 24; ++h) {
        const auto a = tick(at(16, h), ps);
        const auto b = tick(at(16, h), ps);
        EXPECT_EQ(a.dispatches, b.dispatches);
        EXPECT_EQ(a.overdue, b.overdue);
        for (const auto& d : a.dispatches) {
            const auto it = std::find_if(ps.begin(), ps.end(), [&](const auto& p) { return p.patient_id == d.patient_id; });
            EXPECT_EQ(it->status, LifecycleStatus::Monitoring);
        }
    }
}
