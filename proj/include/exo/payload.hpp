#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exo/error.hpp"
#include "exo/selection.hpp"

namespace exo::payload {

enum class PayloadClass { Light = 0, Medium = 1, Heavy = 2 };

inline constexpr std::array<PayloadClass, 3> kAllClasses{PayloadClass::Light, PayloadClass::Medium,
                                                         PayloadClass::Heavy};

constexpr std::size_t index_of(PayloadClass c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(PayloadClass c) noexcept
{
    switch (c) {
    case PayloadClass::Light: return "light";
    case PayloadClass::Medium: return "medium";
    case PayloadClass::Heavy: return "heavy";
    }
    return "?";
}

inline std::optional<PayloadClass> parse_class(std::string_view s)
{
    if (s == "light") return PayloadClass::Light;
    if (s == "medium") return PayloadClass::Medium;
    if (s == "heavy") return PayloadClass::Heavy;
    return std::nullopt;
}

/// Reference weight of each class in kg.
constexpr double reference_kg(PayloadClass c) noexcept
{
    switch (c) {
    case PayloadClass::Light: return 5.0;
    case PayloadClass::Medium: return 10.0;
    case PayloadClass::Heavy: return 15.0;
    }
    return 0.0;
}

using ProbabilityTriple = std::array<double, 3>;

/// Extra inputs concatenated with the image features by the classifiers.
struct PhysicalFeatures {
    double bbox_w = 0.0;
    double bbox_h = 0.0;
    double distance_m = 0.0;
};

/// What a backend sees of the locked candidate.
struct CropRef {
    double time_s = 0.0;
    selection::BBox region;
    std::string png_bytes; ///< encoded crop, may be empty for offline backends
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& what) : Error(ErrorKind::Backend, what) {}
};

class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;
    virtual ProbabilityTriple classify(const CropRef& crop, const PhysicalFeatures& features) = 0;
    virtual std::string name() const = 0;
};

/// Always answers the ground truth it was given for the current lift.
class OracleBackend final : public ClassifierBackend {
public:
    void set_truth(PayloadClass c) { truth_ = c; }

    ProbabilityTriple classify(const CropRef&, const PhysicalFeatures&) override
    {
        if (!truth_) throw BackendError("oracle backend has no ground truth for this lift");
        ProbabilityTriple p{0.0, 0.0, 0.0};
        p[index_of(*truth_)] = 1.0;
        return p;
    }
    std::string name() const override { return "oracle"; }

private:
    std::optional<PayloadClass> truth_;
};

/// One stored classifier output.
struct RecordedOutput {
    double time_s = 0.0;
    ProbabilityTriple p{};
    std::optional<PayloadClass> truth;
};

/// Replays stored outputs in order, one per call.
class RecordedBackend final : public ClassifierBackend {
public:
    explicit RecordedBackend(std::vector<RecordedOutput> outputs) : outputs_(std::move(outputs)) {}

    ProbabilityTriple classify(const CropRef&, const PhysicalFeatures&) override
    {
        if (next_ >= outputs_.size()) throw BackendError("recorded backend exhausted");
        return outputs_[next_++].p;
    }
    std::string name() const override { return "recorded"; }
    std::size_t remaining() const { return outputs_.size() - next_; }

private:
    std::vector<RecordedOutput> outputs_;
    std::size_t next_ = 0;
};

inline void validate_triple(const ProbabilityTriple& p)
{
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw BackendError("backend returned a negative or non-finite probability");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6) throw BackendError("backend probabilities do not sum to 1");
}

/// Argmax with ties resolved toward the heavier class.
inline PayloadClass argmax_class(const ProbabilityTriple& p)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] >= p[best]) best = i;
    return kAllClasses[best];
}

struct Classification {
    PayloadClass label = PayloadClass::Light;
    ProbabilityTriple p{};
};

/// Runs the backend and validates its distribution. Backend failures
/// surface as BackendError; callers route them to the fallback policy.
inline Classification classify(ClassifierBackend& backend, const CropRef& crop, const PhysicalFeatures& features)
{
    const ProbabilityTriple p = backend.classify(crop, features);
    validate_triple(p);
    return {argmax_class(p), p};
}

// ---------------------------------------------------------------------------
// Fallback

enum class FallbackEvent { BackendError, LockExpired };

struct FallbackPolicy {
    PayloadClass default_class = PayloadClass::Light;
};

/// Class to assume when no classification is available for a lock;
/// nullopt (no-op) when no lock is active.
inline std::optional<PayloadClass> fallback_policy(FallbackEvent, bool lock_active, const FallbackPolicy& policy = {})
{
    if (!lock_active) return std::nullopt;
    return policy.default_class;
}

// ---------------------------------------------------------------------------
// Validation metrics

struct ClassificationRecord {
    double timestamp = 0.0; ///< time of the prediction that counts for the lift
    PayloadClass predicted = PayloadClass::Light;
    PayloadClass truth = PayloadClass::Light;
    double lift_onset = 0.0;
    std::string subject;

    bool timely() const { return timestamp < lift_onset; }
    bool correct() const { return predicted == truth; }
};

using ConfusionMatrix = std::array<std::array<int, 3>, 3>; ///< [truth][predicted]

struct MetricsReport {
    bool timeliness_required = true;
    ConfusionMatrix confusion{};
    /// Per truth row, records that were not classified before onset; only
    /// populated when timeliness is required.
    std::array<int, 3> late{};
    int total = 0;
    int correct = 0;
    double accuracy = 0.0;
    /// Per predicted class; nullopt where the column is empty.
    std::array<std::optional<double>, 3> precision{};
    bool precision_undefined = false;
    std::map<std::string, double> per_subject_accuracy;
};

inline MetricsReport evaluate(std::span<const ClassificationRecord> records, bool timeliness_required = true)
{
    require(!records.empty(), ErrorKind::InsufficientData, "no classification records");
    MetricsReport m;
    m.timeliness_required = timeliness_required;
    std::map<std::string, std::pair<int, int>> subjects; // correct, total
    for (const auto& r : records) {
        const std::size_t t = index_of(r.truth);
        const bool counted = !timeliness_required || r.timely();
        if (counted)
            ++m.confusion[t][index_of(r.predicted)];
        else
            ++m.late[t];
        const bool ok = counted && r.correct();
        m.correct += ok ? 1 : 0;
        ++m.total;
        if (!r.subject.empty()) {
            auto& s = subjects[r.subject];
            s.first += ok ? 1 : 0;
            ++s.second;
        }
    }
    m.accuracy = static_cast<double>(m.correct) / m.total;
    for (std::size_t c = 0; c < 3; ++c) {
        int col = 0;
        for (std::size_t t = 0; t < 3; ++t) col += m.confusion[t][c];
        if (col == 0) {
            m.precision_undefined = true;
        } else {
            m.precision[c] = static_cast<double>(m.confusion[c][c]) / col;
        }
    }
    for (const auto& [id, s] : subjects) m.per_subject_accuracy[id] = static_cast<double>(s.first) / s.second;
    return m;
}

} // namespace exo::payload
