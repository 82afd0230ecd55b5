#pragma once

// Pick-up candidate scoring: each detection gets
//     alpha_i = scale * exp(-lambda_theta * |theta_i|) * exp(-lambda_d * d_i)
// and the factors are softmax-normalized into pick-up probabilities. The
// most probable detection locks the pipeline once it is within reach.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exo/error.hpp"

namespace exo::selection {

struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool operator==(const BBox&) const = default;
};

struct Detection {
    BBox bbox;
    double theta_deg = 0.0; ///< signed angle from the camera center
    double distance_m = 0.0;
    std::string label = "box";
};

inline void validate(const Detection& d)
{
    require(d.bbox.w > 0.0 && d.bbox.h > 0.0, ErrorKind::Validation, "detection bbox must have positive size");
    require(d.distance_m >= 0.0 && std::isfinite(d.distance_m), ErrorKind::Validation,
            "detection distance must be nonnegative");
    require(std::isfinite(d.theta_deg), ErrorKind::Validation, "detection angle must be finite");
}

struct CandidateScore {
    std::size_t index = 0;
    double alpha = 0.0;
    double probability = 0.0;
};

enum class AngleUnit { Degrees, Radians };

struct ScoringParams {
    double lambda_theta = 0.1;
    double lambda_d = 0.5;
    double scale = 10.0;
    /// Softmax is taken over alpha / temperature.
    double temperature = 1.0;
    /// Unit in which lambda_theta is applied to the detection angle.
    AngleUnit angle_unit = AngleUnit::Degrees;
};

inline double pickup_factor(const Detection& d, const ScoringParams& p = {})
{
    const double theta = p.angle_unit == AngleUnit::Degrees ? d.theta_deg : d.theta_deg * std::numbers::pi / 180.0;
    return p.scale * std::exp(-p.lambda_theta * std::fabs(theta)) * std::exp(-p.lambda_d * d.distance_m);
}

/// Numerically stable softmax.
inline std::vector<double> softmax(std::span<const double> logits)
{
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += out[i] = std::exp(logits[i] - mx);
    for (double& v : out) v /= sum;
    return out;
}

/// Scores every detection; an empty list has no candidates (empty result).
inline std::vector<CandidateScore> pickup_scores(std::span<const Detection> dets, const ScoringParams& p = {})
{
    require(p.lambda_theta >= 0.0 && p.lambda_d >= 0.0 && p.scale > 0.0 && p.temperature > 0.0,
            ErrorKind::InvalidParameter, "invalid scoring parameters");
    std::vector<CandidateScore> scores;
    if (dets.empty()) return scores;
    std::vector<double> logits;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        validate(dets[i]);
        const double alpha = pickup_factor(dets[i], p);
        scores.push_back({i, alpha, 0.0});
        logits.push_back(alpha / p.temperature);
    }
    const auto probs = softmax(logits);
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i].probability = probs[i];
    return scores;
}

/// Index of the most probable detection. Ties go to the smaller distance,
/// then the smaller |theta|, then the lower index.
inline std::optional<std::size_t> best_candidate(std::span<const CandidateScore> scores,
                                                 std::span<const Detection> dets)
{
    require(scores.size() == dets.size(), ErrorKind::Shape, "scores and detections differ in length");
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!best) {
            best = i;
            continue;
        }
        const auto& a = scores[i];
        const auto& b = scores[*best];
        const auto& da = dets[a.index];
        const auto& db = dets[b.index];
        const bool better =
            a.probability > b.probability ||
            (a.probability == b.probability &&
             (da.distance_m < db.distance_m ||
              (da.distance_m == db.distance_m &&
               (std::fabs(da.theta_deg) < std::fabs(db.theta_deg) ||
                (std::fabs(da.theta_deg) == std::fabs(db.theta_deg) && a.index < b.index)))));
        if (better) best = i;
    }
    if (!best) return std::nullopt;
    return scores[*best].index;
}

struct LockedCandidate {
    std::size_t index = 0;
    Detection detection;
    double lock_time_s = 0.0;
    BBox crop; ///< crop region in frame pixels (the detection bbox)
};

/// Locks the most probable detection when it is within the threshold
/// (inclusive); a more distant best candidate yields no lock even when
/// another detection is closer.
inline std::optional<LockedCandidate> select_candidate(std::span<const CandidateScore> scores,
                                                       std::span<const Detection> dets, double time_s,
                                                       double lock_threshold_m = 2.0)
{
    const auto best = best_candidate(scores, dets);
    if (!best) return std::nullopt;
    const Detection& d = dets[*best];
    if (d.distance_m > lock_threshold_m) return std::nullopt;
    return LockedCandidate{*best, d, time_s, d.bbox};
}

struct FrameSize {
    int width = 0;
    int height = 0;
};

/// Intersection of a bbox with the frame.
inline BBox crop_region(FrameSize frame, const BBox& b)
{
    require(frame.width > 0 && frame.height > 0, ErrorKind::InvalidParameter, "frame dimensions must be positive");
    const double x0 = std::max(b.x, 0.0);
    const double y0 = std::max(b.y, 0.0);
    const double x1 = std::min(b.x + b.w, static_cast<double>(frame.width));
    const double y1 = std::min(b.y + b.h, static_cast<double>(frame.height));
    require(x1 > x0 && y1 > y0, ErrorKind::InvalidCrop, "bounding box does not intersect the frame");
    return {x0, y0, x1 - x0, y1 - y0};
}

/// Row-major per-pixel distance image (meters); nonpositive or non-finite
/// pixels are treated as invalid returns.
struct DistanceMap {
    int width = 0;
    int height = 0;
    std::vector<double> meters;

    double at(int x, int y) const { return meters[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
};

/// Median of the valid distance pixels inside the bbox footprint, with the
/// bbox given in the distance map's pixel coordinates.
inline std::optional<double> median_distance(const DistanceMap& map, const BBox& bbox)
{
    require(map.meters.size() == static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height),
            ErrorKind::Shape, "distance map size mismatch");
    const BBox c = crop_region({map.width, map.height}, bbox);
    const int x0 = static_cast<int>(std::floor(c.x));
    const int y0 = static_cast<int>(std::floor(c.y));
    const int x1 = static_cast<int>(std::ceil(c.x + c.w));
    const int y1 = static_cast<int>(std::ceil(c.y + c.h));
    std::vector<double> v;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double d = map.at(x, y);
            if (std::isfinite(d) && d > 0.0) v.push_back(d);
        }
    if (v.empty()) return std::nullopt;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double upper = v[mid];
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

} // namespace exo::selection
