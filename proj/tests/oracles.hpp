#pragma once

// Reference computations written independently of the library code.
// Nothing here includes Eigen or reuses library internals.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

/// |X(f)| of a real sequence by direct DFT sum at one frequency.
inline double dft_magnitude(const std::vector<double>& x, double f_hz, double fs)
{
    std::complex<double> acc{0.0, 0.0};
    const double w = -2.0 * std::numbers::pi * f_hz / fs;
    for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, w * static_cast<double>(n));
    return std::abs(acc);
}

inline double db(double mag) { return 20.0 * std::log10(mag); }

/// Magnitude of the digital (bilinear) Butterworth band-pass applied
/// forward and backward, from the closed-form response in the warped
/// frequency tan(pi f / fs). Each pass uses the cutoff shifted so that the
/// two passes together sit at -3 dB on the nominal edges.
inline double butterworth_filtfilt_magnitude(double f, double fs, double lo, double hi, int order)
{
    const double c = std::pow(std::sqrt(2.0) - 1.0, 1.0 / (2.0 * order));
    const double om = std::tan(std::numbers::pi * f / fs);
    const double om_lo = std::tan(std::numbers::pi * lo / fs) * c;
    const double om_hi = std::tan(std::numbers::pi * hi / fs) / c;
    const double hp2 = 1.0 / (1.0 + std::pow(om_lo / om, 2.0 * order));
    const double lp2 = 1.0 / (1.0 + std::pow(om / om_hi, 2.0 * order));
    return hp2 * lp2; // |H|^2 per pass == |H| of the two passes
}

/// Dense solve by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a[i][k]) > std::fabs(a[piv][k])) piv = i;
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
            b[i] -= m * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

struct GpPoint {
    double a, p, y;
};

/// Posterior mean of an RBF GP on inputs already scaled to [0,1]^2, with
/// population-standardized targets.
inline double gp_mean(const std::vector<GpPoint>& pts, double sig2, double la, double lp, double noise, double a,
                      double p)
{
    const std::size_t n = pts.size();
    double mean = 0.0;
    for (const auto& q : pts) mean += q.y;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& q : pts) var += (q.y - mean) * (q.y - mean);
    var /= static_cast<double>(n);
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    auto k = [&](double a1, double p1, double a2, double p2) {
        const double da = (a1 - a2) / la, dp = (p1 - p2) / lp;
        return sig2 * std::exp(-0.5 * (da * da + dp * dp));
    };
    std::vector<std::vector<double>> K(n, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = (pts[i].y - mean) / sd;
        for (std::size_t j = 0; j < n; ++j) K[i][j] = k(pts[i].a, pts[i].p, pts[j].a, pts[j].p);
        K[i][i] += noise;
    }
    const auto alpha = solve(K, y);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += alpha[i] * k(a, p, pts[i].a, pts[i].p);
    return mean + sd * s;
}

/// Softmax computed in long double without max-shift.
inline std::vector<double> softmax_ld(const std::vector<double>& z)
{
    long double sum = 0.0L;
    for (double v : z) sum += std::exp(static_cast<long double>(v));
    std::vector<double> out;
    for (double v : z) out.push_back(static_cast<double>(std::exp(static_cast<long double>(v)) / sum));
    return out;
}

/// Discomfort score by explicit per-question arithmetic.
inline double discomfort(const std::array<int, 9>& q)
{
    const double r2 = 6 - q[1], r7 = 6 - q[6], r8 = 6 - q[7], r9 = 6 - q[8];
    return 2.0 * q[0] + 2.0 * r2 + 1.5 * q[2] + 2.0 * q[3] + q[4] + q[5] + r7 + r8 + r9;
}

} // namespace oracle
