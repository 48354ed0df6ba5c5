#pragma once

// R-FPOP: exact minimisation of the penalised cost
//
//   sum over segments of ( min_theta sum_i loss(y_i; theta) + beta )
//
// by functional pruning. Q_t(theta), the optimal cost of y_1..y_t given the
// last segment has parameter theta, is carried as a piecewise quadratic and
// updated per point by
//
//   Q_t(theta) = min{ Q_{t-1}(theta), Q_{t-1} + beta } + loss(y_t; theta).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rfpop/loss.hpp"
#include "rfpop/pwq.hpp"

namespace rfpop {

struct Segmentation {
    std::vector<std::size_t> changepoints;  // 0 < tau_1 < ... < tau_k < n
    std::vector<double> segment_means;
    double total_cost = 0.0;

    std::size_t k() const { return changepoints.size(); }
};

struct IntervalStats {
    std::size_t max_pieces = 0;
    double mean_pieces = 0.0;
    std::vector<std::uint32_t> history;  // pieces of Q_t, t = 1..n, when requested
};

struct CpRecord {
    double cost = 0.0;     // Q_t
    std::size_t tau = 0;   // most recent changepoint before t
};

struct Best {
    double cost = 0.0;
    std::size_t most_recent_cp = 0;
};

class OnlineState {
public:
    /// beta == 0 is accepted (zero_penalty() reports it) to allow penalty
    /// sweeps; negative or non-finite beta throws std::invalid_argument.
    OnlineState(loss::LossSpec spec, double beta, bool keep_history = false);

    void step(double y);

    std::size_t t() const { return record_.size(); }
    Best current_best() const;
    Segmentation backtrack() const;

    const pwq::PiecewiseQuadFn& cost_function() const { return q_; }
    std::span<const CpRecord> cp_record() const { return record_; }
    const IntervalStats& interval_stats() const { return stats_; }
    std::span<const double> data() const { return data_; }
    const loss::LossSpec& spec() const { return spec_; }
    double beta() const { return beta_; }
    std::optional<std::size_t> min_segment_length() const { return min_len_; }
    bool zero_penalty() const { return beta_ == 0.0; }

    void reserve(std::size_t n);

private:
    loss::LossSpec spec_;
    double beta_;
    bool keep_history_;
    std::optional<std::size_t> min_len_;
    pwq::PiecewiseQuadFn q_;
    pwq::PiecewiseQuadFn scratch_;
    std::vector<CpRecord> record_;
    std::vector<double> data_;
    IntervalStats stats_;
    double piece_sum_ = 0.0;
};

struct RunResult {
    Segmentation segmentation;
    IntervalStats stats;
};

/// Batch driver. Throws std::invalid_argument on empty or non-finite data.
RunResult run(std::span<const double> data, const loss::LossSpec& spec, double beta, bool keep_history = false);

/// Fits every segment of the given changepoints and returns the penalised
/// cost, filling the per-segment estimates when requested.
double segmentation_cost(std::span<const double> data, std::span<const std::size_t> changepoints,
                         const loss::LossSpec& spec, double beta, std::vector<double>* means = nullptr);

/// Piecewise-constant fitted mean function of length n.
std::vector<double> fitted_signal(const Segmentation& seg, std::size_t n);

}  // namespace rfpop
