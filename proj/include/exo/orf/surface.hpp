#pragma once

// Gaussian-process representation surfaces over (assistance, payload).
//
// Inputs are mapped to the unit square using a fixed domain, targets are
// standardized to zero mean / unit variance, and an anisotropic RBF kernel
//
//     k(x, x') = s2 * exp(-sum_d (x_d - x'_d)^2 / (2 l_d^2))
//
// is fitted by maximizing the log marginal likelihood (projected gradient
// ascent in log-parameter space, several seeded restarts).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "exo/error.hpp"
#include "exo/orf/samples.hpp"
#include "exo/rng.hpp"

namespace exo::orf {

/// Physical extent of the optimization space; used to scale inputs.
struct InputDomain {
    double assistance_lo = 0.0;
    double assistance_hi = 1.0;
    double payload_lo_kg = 5.0;
    double payload_hi_kg = 15.0;

    double norm_assistance(double a) const { return (a - assistance_lo) / (assistance_hi - assistance_lo); }
    double norm_payload(double p) const { return (p - payload_lo_kg) / (payload_hi_kg - payload_lo_kg); }
};

/// Kernel hyperparameters, in normalized input units and standardized
/// target units.
struct KernelParams {
    double signal_variance = 1.0;
    double length_assistance = 0.3;
    double length_payload = 0.3;
    double noise_variance = 1e-8;
};

struct ParamBounds {
    double length_lo = 0.05, length_hi = 10.0;
    double signal_lo = 1e-4, signal_hi = 1e4;
    double noise_lo = 1e-8, noise_hi = 1.0;
};

struct FitOptions {
    InputDomain domain{};
    ParamBounds bounds{};
    int restarts = 5;
    std::uint64_t seed = 0;
    int max_iterations = 200;
    /// When unset the noise variance is optimized within bounds; when set it
    /// is held at this value (0 = interpolate, jitter only).
    std::optional<double> fixed_noise{};
    double jitter = 1e-8;
};

namespace detail {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// log-parameter vector: [log s2, log l_a, log l_p, log sn2]
using LogParams = std::array<double, 4>;

inline KernelParams from_log(const LogParams& t)
{
    return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2]), std::exp(t[3])};
}

inline LogParams to_log(const KernelParams& p)
{
    return {std::log(p.signal_variance), std::log(p.length_assistance), std::log(p.length_payload),
            std::log(std::max(p.noise_variance, 1e-300))};
}

struct LmlResult {
    double value = -std::numeric_limits<double>::infinity();
    LogParams gradient{};
    bool ok = false;
};

// Log marginal likelihood and its gradient with respect to log parameters.
inline LmlResult log_marginal_likelihood(const Mat& x, const Vec& y, const KernelParams& p, double jitter,
                                         bool want_gradient)
{
    const Eigen::Index n = x.rows();
    Mat kf(n, n), da(n, n), dp(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double sa = (x(i, 0) - x(j, 0)) * (x(i, 0) - x(j, 0)) / (p.length_assistance * p.length_assistance);
            const double sp = (x(i, 1) - x(j, 1)) * (x(i, 1) - x(j, 1)) / (p.length_payload * p.length_payload);
            const double k = p.signal_variance * std::exp(-0.5 * (sa + sp));
            kf(i, j) = kf(j, i) = k;
            da(i, j) = da(j, i) = sa;
            dp(i, j) = dp(j, i) = sp;
        }
    }
    Mat k = kf;
    k.diagonal().array() += p.noise_variance + jitter;

    Eigen::LLT<Mat> llt(k);
    LmlResult r;
    if (llt.info() != Eigen::Success) return r;
    const Vec alpha = llt.solve(y);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    r.value = -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(r.value)) return r;
    r.ok = true;
    if (!want_gradient) return r;

    const Mat w = alpha * alpha.transpose() - llt.solve(Mat::Identity(n, n));
    // dK/dlog s2 = Kf ; dK/dlog l_d = Kf .* D_d / l_d^2 ; dK/dlog sn2 = sn2 * I
    r.gradient[0] = 0.5 * (w.array() * kf.array()).sum();
    r.gradient[1] = 0.5 * (w.array() * kf.array() * da.array()).sum();
    r.gradient[2] = 0.5 * (w.array() * kf.array() * dp.array()).sum();
    r.gradient[3] = 0.5 * p.noise_variance * w.trace();
    return r;
}

} // namespace detail

/// A fitted GP posterior mean with closed-form value and assistance slope.
class RepresentationSurface {
public:
    RepresentationSurface() = default;

    /// Builds the posterior for fixed hyperparameters.
    RepresentationSurface(MetricKind kind, std::vector<PerfSample> samples, KernelParams params,
                          InputDomain domain = {}, double jitter = 1e-8)
        : kind_(kind), samples_(std::move(samples)), params_(params), domain_(domain), jitter_(jitter)
    {
        require(samples_.size() >= 1, ErrorKind::InsufficientData, "surface needs training samples");
        require(params_.signal_variance > 0 && params_.length_assistance > 0 && params_.length_payload > 0 &&
                    params_.noise_variance >= 0,
                ErrorKind::InvalidParameter, "kernel parameters out of range");
        const auto n = static_cast<Eigen::Index>(samples_.size());
        x_.resize(n, 2);
        y_raw_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& s = samples_[static_cast<std::size_t>(i)];
            x_(i, 0) = domain_.norm_assistance(s.assistance);
            x_(i, 1) = domain_.norm_payload(s.payload_kg);
            y_raw_(i) = s.value;
        }
        standardize();
        factorize();
    }

    double value(double assistance, double payload_kg) const
    {
        const double a = domain_.norm_assistance(assistance);
        const double p = domain_.norm_payload(payload_kg);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x_.rows(); ++i) acc += alpha_(i) * kernel(a, p, i);
        return mean_ + scale_ * acc;
    }

    /// Partial derivative of the posterior mean with respect to assistance.
    double d_assistance(double assistance, double payload_kg) const
    {
        const double a = domain_.norm_assistance(assistance);
        const double p = domain_.norm_payload(payload_kg);
        const double la2 = params_.length_assistance * params_.length_assistance;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x_.rows(); ++i)
            acc += alpha_(i) * kernel(a, p, i) * (-(a - x_(i, 0)) / la2);
        return scale_ * acc / (domain_.assistance_hi - domain_.assistance_lo);
    }

    double log_marginal_likelihood() const
    {
        return detail::log_marginal_likelihood(x_, y_std_, params_, jitter_, false).value;
    }

    MetricKind kind() const { return kind_; }
    const std::vector<PerfSample>& samples() const { return samples_; }
    const KernelParams& params() const { return params_; }
    const InputDomain& domain() const { return domain_; }
    double jitter() const { return jitter_; }
    double target_mean() const { return mean_; }
    double target_scale() const { return scale_; }

private:
    double kernel(double a, double p, Eigen::Index i) const
    {
        const double da = (a - x_(i, 0)) / params_.length_assistance;
        const double dp = (p - x_(i, 1)) / params_.length_payload;
        return params_.signal_variance * std::exp(-0.5 * (da * da + dp * dp));
    }

    void standardize();

    void factorize()
    {
        const Eigen::Index n = x_.rows();
        detail::Mat k(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) k(i, j) = kernel(x_(j, 0), x_(j, 1), i);
        k.diagonal().array() += params_.noise_variance + jitter_;
        Eigen::LLT<detail::Mat> llt(k);
        require(llt.info() == Eigen::Success, ErrorKind::Conditioning,
                "kernel matrix is singular after jitter");
        alpha_ = llt.solve(y_std_);
        require(alpha_.allFinite(), ErrorKind::Conditioning, "kernel solve produced non-finite weights");
    }

    MetricKind kind_ = MetricKind::Emg;
    std::vector<PerfSample> samples_;
    KernelParams params_{};
    InputDomain domain_{};
    double jitter_ = 1e-8;

    detail::Mat x_;
    detail::Vec y_raw_, y_std_, alpha_;
    double mean_ = 0.0;
    double scale_ = 1.0;
};

namespace detail {

inline void check_distinct_inputs(const Mat& x)
{
    bool distinct = false;
    for (Eigen::Index i = 1; i < x.rows() && !distinct; ++i) distinct = (x.row(i) - x.row(0)).norm() > 1e-12;
    require(distinct, ErrorKind::InsufficientData, "surface needs at least two distinct inputs");
}

struct Standardization {
    double mean = 0.0;
    double scale = 1.0;
};

inline Standardization standardization_of(const Vec& y)
{
    const double mean = y.mean();
    const double var = (y.array() - mean).square().mean();
    return {mean, var > 0.0 ? std::sqrt(var) : 1.0};
}

inline LogParams clamp_log(LogParams t, const std::array<std::pair<double, double>, 4>& lb)
{
    for (std::size_t i = 0; i < 4; ++i) t[i] = std::clamp(t[i], lb[i].first, lb[i].second);
    return t;
}

} // namespace detail

inline void RepresentationSurface::standardize()
{
    const auto st = detail::standardization_of(y_raw_);
    mean_ = st.mean;
    scale_ = st.scale;
    y_std_ = (y_raw_.array() - mean_) / scale_;
}

/// Maximum-likelihood GP fit of one metric's samples.
inline RepresentationSurface fit_surface(MetricKind kind, const std::vector<PerfSample>& samples,
                                         const FitOptions& opt = {})
{
    require(samples.size() >= 2, ErrorKind::InsufficientData, "surface needs at least two samples");
    for (const auto& s : samples) validate(s);
    const auto& b = opt.bounds;
    require(b.length_lo > 0 && b.length_lo <= b.length_hi && b.signal_lo > 0 && b.signal_lo <= b.signal_hi &&
                b.noise_lo > 0 && b.noise_lo <= b.noise_hi,
            ErrorKind::InvalidParameter, "invalid hyperparameter bounds");
    require(opt.restarts >= 1, ErrorKind::InvalidParameter, "need at least one restart");

    const auto n = static_cast<Eigen::Index>(samples.size());
    detail::Mat x(n, 2);
    detail::Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        x(i, 0) = opt.domain.norm_assistance(s.assistance);
        x(i, 1) = opt.domain.norm_payload(s.payload_kg);
        y(i) = s.value;
    }
    detail::check_distinct_inputs(x);
    const auto st = detail::standardization_of(y);
    y = (y.array() - st.mean) / st.scale;

    const bool fit_noise = !opt.fixed_noise.has_value();
    const double fixed_log_noise = fit_noise ? 0.0 : std::log(std::max(*opt.fixed_noise, 1e-300));
    const std::array<std::pair<double, double>, 4> log_bounds{{
        {std::log(b.signal_lo), std::log(b.signal_hi)},
        {std::log(b.length_lo), std::log(b.length_hi)},
        {std::log(b.length_lo), std::log(b.length_hi)},
        fit_noise ? std::pair{std::log(b.noise_lo), std::log(b.noise_hi)} : std::pair{fixed_log_noise, fixed_log_noise},
    }};

    auto params_of = [&](const detail::LogParams& t) {
        KernelParams p = detail::from_log(t);
        if (!fit_noise) p.noise_variance = *opt.fixed_noise;
        return p;
    };

    Rng rng(opt.seed);
    detail::LogParams best{};
    double best_value = -std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < opt.restarts; ++restart) {
        detail::LogParams t;
        for (std::size_t i = 0; i < 4; ++i) t[i] = rng.uniform(log_bounds[i].first, log_bounds[i].second);

        auto cur = detail::log_marginal_likelihood(x, y, params_of(t), opt.jitter, true);
        double step = 0.1;
        for (int it = 0; it < opt.max_iterations && cur.ok; ++it) {
            if (!fit_noise) cur.gradient[3] = 0.0;
            double gnorm = 0.0;
            for (double g : cur.gradient) gnorm += g * g;
            gnorm = std::sqrt(gnorm);
            if (gnorm < 1e-9) break;

            bool accepted = false;
            while (step > 1e-12) {
                detail::LogParams cand;
                for (std::size_t i = 0; i < 4; ++i) cand[i] = t[i] + step * cur.gradient[i] / gnorm;
                cand = detail::clamp_log(cand, log_bounds);
                auto next = detail::log_marginal_likelihood(x, y, params_of(cand), opt.jitter, true);
                if (next.ok && next.value > cur.value) {
                    double moved = 0.0;
                    for (std::size_t i = 0; i < 4; ++i) moved = std::max(moved, std::fabs(cand[i] - t[i]));
                    const double gain = next.value - cur.value;
                    t = cand;
                    cur = next;
                    step = std::min(step * 2.0, 2.0);
                    accepted = true;
                    if (moved < 1e-9 || gain < 1e-12) it = opt.max_iterations;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
        }
        if (cur.ok && cur.value > best_value) {
            best_value = cur.value;
            best = t;
        }
    }
    require(std::isfinite(best_value), ErrorKind::Conditioning,
            "kernel matrix singular for every hyperparameter restart");
    return RepresentationSurface(kind, samples, params_of(best), opt.domain, opt.jitter);
}

} // namespace exo::orf
