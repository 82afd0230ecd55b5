#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exo/error.hpp"

namespace exo::orf {

enum class MetricKind { Emg, Discomfort, Preference, Total };

constexpr std::string_view to_string(MetricKind k) noexcept
{
    switch (k) {
    case MetricKind::Emg: return "emg";
    case MetricKind::Discomfort: return "discomfort";
    case MetricKind::Preference: return "preference";
    case MetricKind::Total: return "total";
    }
    return "?";
}

inline std::optional<MetricKind> parse_metric_kind(std::string_view s)
{
    if (s == "emg") return MetricKind::Emg;
    if (s == "discomfort") return MetricKind::Discomfort;
    if (s == "preference") return MetricKind::Preference;
    if (s == "total") return MetricKind::Total;
    return std::nullopt;
}

/// One observation of a performance metric at (assistance, payload).
struct PerfSample {
    double assistance = 0.0; ///< normalized: light 0, medium 0.5, strong 1
    double payload_kg = 0.0;
    double value = 0.0;
};

inline void validate(const PerfSample& s)
{
    require(s.assistance >= 0.0 && s.assistance <= 1.0, ErrorKind::Validation,
            "assistance " + std::to_string(s.assistance) + " outside [0,1]");
    require(s.payload_kg >= 0.0, ErrorKind::Validation, "payload must be nonnegative");
}

inline constexpr double kLightAssistance = 0.0;
inline constexpr double kMediumAssistance = 0.5;
inline constexpr double kStrongAssistance = 1.0;

enum class AssistanceChoice { Light, Strong };

/// A subject's preferred assistance at one payload.
struct PreferenceVote {
    std::string subject;
    double payload_kg = 0.0;
    AssistanceChoice choice = AssistanceChoice::Light;
};

/// Encodes votes as preference samples: at every voted payload, the value
/// at each assistance corner is the fraction of subjects choosing it.
inline std::vector<PerfSample> preference_samples(const std::vector<PreferenceVote>& votes)
{
    require(!votes.empty(), ErrorKind::InsufficientData, "no preference votes");
    struct Tally {
        int light = 0;
        int strong = 0;
    };
    std::map<double, Tally> by_payload;
    for (const auto& v : votes) {
        require(v.payload_kg >= 0.0, ErrorKind::Validation, "payload must be nonnegative");
        auto& t = by_payload[v.payload_kg];
        (v.choice == AssistanceChoice::Light ? t.light : t.strong) += 1;
    }
    std::vector<PerfSample> out;
    for (const auto& [payload, t] : by_payload) {
        const double total = t.light + t.strong;
        out.push_back({kLightAssistance, payload, t.light / total});
        out.push_back({kStrongAssistance, payload, t.strong / total});
    }
    return out;
}

} // namespace exo::orf
