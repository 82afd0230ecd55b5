#pragma once

#include <array>
#include <string>

#include "exo/error.hpp"

namespace exo::orf {

/// Nine-item discomfort questionnaire, ratings 1 (strongly disagree) .. 5.
struct QuestionnaireResponse {
    std::array<int, 9> ratings{};
    double assistance = 0.0;
    double payload_kg = 0.0;
};

inline constexpr std::array<double, 9> kDiscomfortWeights{2.0, 2.0, 1.5, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0};

/// Questions 2, 7, 8 and 9 are positively framed and scored reversed.
inline constexpr std::array<bool, 9> kPositivelyFramed{false, true,  false, false, false,
                                                       false, true,  true,  true};

inline constexpr double kDiscomfortMin = 12.5;
inline constexpr double kDiscomfortMax = 62.5;

inline void validate(const QuestionnaireResponse& r)
{
    for (std::size_t i = 0; i < r.ratings.size(); ++i) {
        require(r.ratings[i] >= 1 && r.ratings[i] <= 5, ErrorKind::Validation,
                "question " + std::to_string(i + 1) + " rating " + std::to_string(r.ratings[i]) +
                    " outside 1..5");
    }
}

/// Weighted discomfort score in [12.5, 62.5]; higher means worse.
inline double score_discomfort(const QuestionnaireResponse& r)
{
    validate(r);
    double score = 0.0;
    for (std::size_t i = 0; i < r.ratings.size(); ++i) {
        const int q = kPositivelyFramed[i] ? 6 - r.ratings[i] : r.ratings[i];
        score += kDiscomfortWeights[i] * q;
    }
    return score;
}

} // namespace exo::orf
