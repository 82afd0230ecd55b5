#pragma once

// Adaptive-assistance state machine.
//
//   Idle --lock--> Locked --classification--> Locked (+command)
//   Idle|Locked|Cooldown --onset--> Lifting (command latched)
//   Lifting --end--> Cooldown --dwell elapsed--> Idle
//
// Commands are issued when a class becomes known before onset; a later
// pre-onset classification that changes the class re-issues the command.
// Nothing is issued while Lifting. A lift without a timely classification
// runs on the fallback class, issued at onset.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "exo/error.hpp"
#include "exo/payload.hpp"
#include "exo/selection.hpp"

namespace exo::control {

using payload::PayloadClass;

struct KpylRange {
    double k_min = 0.2;
    double k_max = 1.0;
    double medium_fraction = 0.65;
};

inline void validate(const KpylRange& r)
{
    require(r.k_min > 0.0 && r.k_min <= r.k_max, ErrorKind::InvalidParameter, "need 0 < k_min <= k_max");
    require(r.medium_fraction >= 0.0 && r.medium_fraction <= 1.0, ErrorKind::InvalidParameter,
            "medium fraction must lie in [0,1]");
}

/// Torque scale for a payload class: light -> k_min, heavy -> k_max,
/// medium -> the configured fraction of the way between them.
inline double k_for_class(const KpylRange& r, PayloadClass c)
{
    switch (c) {
    case PayloadClass::Light: return r.k_min;
    case PayloadClass::Heavy: return r.k_max;
    case PayloadClass::Medium: return r.k_min + r.medium_fraction * (r.k_max - r.k_min);
    }
    return r.k_min;
}

struct AssistanceCommand {
    double time_s = 0.0;
    double k_pyl = 0.0;
    PayloadClass source = PayloadClass::Light;
    bool fallback = false;
    /// State the machine is in once the command is issued.
    std::string state;

    bool operator==(const AssistanceCommand&) const = default;
};

// ---------------------------------------------------------------------------
// States and events

struct Idle {};
struct Locked {
    selection::LockedCandidate candidate;
    std::optional<PayloadClass> label;
    std::optional<AssistanceCommand> command;
};
struct Lifting {
    AssistanceCommand command;
    double onset_s = 0.0;
};
struct Cooldown {
    double since_s = 0.0;
};

using Phase = std::variant<Idle, Locked, Lifting, Cooldown>;

struct ControlState {
    Phase phase = Idle{};
    double clock_s = -std::numeric_limits<double>::infinity();
};

constexpr std::string_view phase_name(const Phase& p)
{
    constexpr std::string_view names[] = {"idle", "locked", "lifting", "cooldown"};
    return names[p.index()];
}

struct LockEvent {
    double t = 0.0;
    selection::LockedCandidate candidate;
};
struct ClassificationEvent {
    double t = 0.0;
    PayloadClass label = PayloadClass::Light;
};
/// The backend failed to answer for the current lock.
struct BackendFailureEvent {
    double t = 0.0;
};
struct LiftOnsetEvent {
    double t = 0.0;
};
struct LiftEndEvent {
    double t = 0.0;
};

using Event = std::variant<LockEvent, ClassificationEvent, BackendFailureEvent, LiftOnsetEvent, LiftEndEvent>;

inline double time_of(const Event& e)
{
    return std::visit([](const auto& ev) { return ev.t; }, e);
}

struct ControlConfig {
    KpylRange range{};
    payload::FallbackPolicy fallback{};
    double dwell_s = 1.0;
};

enum class Disposition {
    Applied,
    Ignored, ///< not meaningful in the current state
    Late,    ///< classification arrived after onset
};

struct StepResult {
    ControlState state;
    std::optional<AssistanceCommand> command;
    Disposition disposition = Disposition::Applied;
};

namespace detail {

inline AssistanceCommand make_command(const ControlConfig& cfg, double t, PayloadClass c, bool fallback,
                                      std::string_view state)
{
    return {t, k_for_class(cfg.range, c), c, fallback, std::string(state)};
}

} // namespace detail

/// Pure transition function. Throws a sequencing error for events that go
/// back in time or that cannot happen in the current state.
inline StepResult step(const ControlState& state, const Event& event, const ControlConfig& cfg = {})
{
    const double t = time_of(event);
    require(std::isfinite(t), ErrorKind::Sequencing, "event time must be finite");
    require(t >= state.clock_s, ErrorKind::Sequencing,
            "event at t=" + std::to_string(t) + " precedes t=" + std::to_string(state.clock_s));

    Phase phase = state.phase;
    if (const auto* cd = std::get_if<Cooldown>(&phase); cd && t >= cd->since_s + cfg.dwell_s) phase = Idle{};

    StepResult out{{phase, t}, std::nullopt, Disposition::Applied};
    auto enter = [&](Phase next) { out.state.phase = std::move(next); };
    auto ignore = [&](Disposition d = Disposition::Ignored) { out.disposition = d; };
    auto fallback_lift = [&] {
        const auto label = payload::fallback_policy(payload::FallbackEvent::LockExpired, true, cfg.fallback);
        auto cmd = detail::make_command(cfg, t, *label, true, "lifting");
        out.command = cmd;
        enter(Lifting{cmd, t});
    };

    std::visit(
        [&](const auto& ev) {
            using E = std::decay_t<decltype(ev)>;
            if (std::holds_alternative<Idle>(phase)) {
                if constexpr (std::is_same_v<E, LockEvent>) {
                    enter(Locked{ev.candidate, std::nullopt, std::nullopt});
                } else if constexpr (std::is_same_v<E, LiftOnsetEvent>) {
                    fallback_lift();
                } else if constexpr (std::is_same_v<E, LiftEndEvent>) {
                    fail(ErrorKind::Sequencing, "lift end without lift onset at t=" + std::to_string(t));
                } else {
                    ignore();
                }
            } else if (const auto* lk = std::get_if<Locked>(&phase)) {
                if constexpr (std::is_same_v<E, ClassificationEvent>) {
                    Locked next = *lk;
                    next.label = ev.label;
                    if (!lk->command || lk->command->source != ev.label) {
                        next.command = detail::make_command(cfg, t, ev.label, false, "locked");
                        out.command = next.command;
                    }
                    enter(next);
                } else if constexpr (std::is_same_v<E, BackendFailureEvent>) {
                    if (lk->command) {
                        ignore();
                    } else {
                        const auto label =
                            payload::fallback_policy(payload::FallbackEvent::BackendError, true, cfg.fallback);
                        Locked next = *lk;
                        next.command = detail::make_command(cfg, t, *label, true, "locked");
                        out.command = next.command;
                        enter(next);
                    }
                } else if constexpr (std::is_same_v<E, LiftOnsetEvent>) {
                    if (lk->command)
                        enter(Lifting{*lk->command, t});
                    else
                        fallback_lift();
                } else if constexpr (std::is_same_v<E, LiftEndEvent>) {
                    fail(ErrorKind::Sequencing, "lift end without lift onset at t=" + std::to_string(t));
                } else {
                    ignore();
                }
            } else if (std::holds_alternative<Lifting>(phase)) {
                if constexpr (std::is_same_v<E, LiftEndEvent>) {
                    enter(Cooldown{t});
                } else if constexpr (std::is_same_v<E, LiftOnsetEvent>) {
                    fail(ErrorKind::Sequencing, "lift onset while already lifting at t=" + std::to_string(t));
                } else if constexpr (std::is_same_v<E, ClassificationEvent>) {
                    ignore(Disposition::Late);
                } else {
                    ignore();
                }
            } else { // Cooldown, dwell not yet elapsed
                if constexpr (std::is_same_v<E, LiftOnsetEvent>) {
                    fallback_lift();
                } else if constexpr (std::is_same_v<E, LiftEndEvent>) {
                    fail(ErrorKind::Sequencing, "lift end without lift onset at t=" + std::to_string(t));
                } else {
                    ignore();
                }
            }
        },
        event);
    return out;
}

/// Single-writer driver: feeds events through `step` and keeps the command
/// history.
class Controller {
public:
    explicit Controller(ControlConfig cfg = {}) : cfg_(cfg) { validate(cfg_.range); }

    StepResult handle(const Event& e)
    {
        StepResult r = step(state_, e, cfg_);
        state_ = r.state;
        if (r.command) commands_.push_back(*r.command);
        return r;
    }

    const ControlState& state() const { return state_; }
    const std::vector<AssistanceCommand>& commands() const { return commands_; }
    const ControlConfig& config() const { return cfg_; }

private:
    ControlConfig cfg_;
    ControlState state_{};
    std::vector<AssistanceCommand> commands_;
};

// ---------------------------------------------------------------------------
// Torque profile

inline constexpr double kNominalTorqueNm = 30.0;

struct TorqueProfile {
    std::vector<double> time_s;
    std::vector<double> torque_nm;

    double peak() const
    {
        double p = 0.0;
        for (double v : torque_nm) p = std::max(p, std::fabs(v));
        return p;
    }
};

/// Base profile within the hardware nominal torque and k_max <= 1.
inline void check_hardware_limits(const TorqueProfile& base, const KpylRange& r,
                                  double nominal_nm = kNominalTorqueNm)
{
    validate(r);
    require(base.time_s.size() == base.torque_nm.size() && !base.time_s.empty(), ErrorKind::Shape,
            "torque profile needs matching, nonempty time and torque columns");
    require(r.k_max <= 1.0, ErrorKind::InvalidParameter, "k_max above 1 would exceed nominal torque");
    require(base.peak() <= nominal_nm, ErrorKind::InvalidParameter,
            "base profile peak exceeds nominal " + std::to_string(nominal_nm) + " Nm");
}

inline TorqueProfile scaled_profile(const TorqueProfile& base, double k)
{
    require(k >= 0.0 && std::isfinite(k), ErrorKind::InvalidParameter, "torque scale must be nonnegative");
    TorqueProfile out = base;
    for (double& v : out.torque_nm) v *= k;
    return out;
}

inline TorqueProfile scaled_profile(const TorqueProfile& base, double k, const KpylRange& r)
{
    require(k >= r.k_min && k <= r.k_max, ErrorKind::InvalidParameter, "torque scale outside [k_min, k_max]");
    return scaled_profile(base, k);
}

} // namespace exo::control
