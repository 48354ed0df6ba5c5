#pragma once

// Reference methods: the quadratic-time optimal partitioning recursion used as
// an oracle for R-FPOP, and binary segmentation driven by a Huber-residual
// cusum statistic.

#include <cstddef>
#include <span>
#include <vector>

#include "rfpop/engine.hpp"
#include "rfpop/loss.hpp"

namespace rfpop::baseline {

inline constexpr std::size_t kExactDpMaxN = 10000;

/// min over theta of the summed loss on the slice, with the leftmost argmin.
loss::SegmentFit segment_cost(std::span<const double> slice, const loss::LossSpec& spec);

/// F(t) = min_{s<t} F(s) + C(y_{s+1..t}) + beta, F(0) = 0. Throws
/// std::invalid_argument when n exceeds kExactDpMaxN.
Segmentation exact_dp(std::span<const double> data, const loss::LossSpec& spec, double beta);

/// Root of theta -> sum clamp(y_i - theta, -K, K); the midpoint of the zero
/// set when it is an interval.
double huber_m_estimate(std::span<const double> data, double k);

struct CusumResult {
    double t_n = 0.0;
    std::size_t m_star = 1;
    double theta_hat = 0.0;
};

/// Wald-type statistic max_m n / (m (n - m)) S_m^2 over Huber residuals
/// divided by scale.
CusumResult robust_cusum(std::span<const double> data, double k, double scale = 1.0);

/// Recursive splitting while the statistic exceeds threshold. Segments
/// shorter than two points are not tested. Returns sorted changepoints.
std::vector<std::size_t> binseg_robust(std::span<const double> data, double k, double threshold,
                                       double scale = 1.0);

}  // namespace rfpop::baseline
