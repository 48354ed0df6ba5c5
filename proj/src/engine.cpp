#include "rfpop/engine.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace rfpop {

OnlineState::OnlineState(loss::LossSpec spec, double beta, bool keep_history)
    : spec_(spec), beta_(beta), keep_history_(keep_history) {
    spec_.validate();
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("penalty must be finite and non-negative");
    }
    min_len_ = loss::min_segment_length(spec_, beta_);
    q_ = pwq::make_initial(beta_);
}

void OnlineState::reserve(std::size_t n) {
    record_.reserve(n);
    data_.reserve(n);
    if (keep_history_) {
        stats_.history.reserve(n);
    }
}

void OnlineState::step(double y) {
    std::array<pwq::LossPiece, 3> pieces;
    const std::size_t npieces = loss::loss_pieces_into(y, spec_, pieces);
    const std::span<const pwq::LossPiece> loss{pieces.data(), npieces};

    const std::size_t t_prev = record_.size();
    if (t_prev == 0) {
        // Q_1(theta) = loss(y_1; theta) + beta
        scratch_ = q_;
    } else {
        // A changepoint at t_prev starts the new segment at t_prev + 1.
        pwq::min_with_constant_into(q_, record_.back().cost + beta_, t_prev, scratch_);
    }
    pwq::add_loss_into(scratch_, loss, q_);

    const auto best = pwq::global_min(q_);
    assert(best.tau <= t_prev);
    record_.push_back({best.value, best.tau});
    data_.push_back(y);

    const std::size_t pieces_now = q_.size();
    stats_.max_pieces = std::max(stats_.max_pieces, pieces_now);
    piece_sum_ += static_cast<double>(pieces_now);
    stats_.mean_pieces = piece_sum_ / static_cast<double>(record_.size());
    if (keep_history_) {
        stats_.history.push_back(static_cast<std::uint32_t>(pieces_now));
    }
}

Best OnlineState::current_best() const {
    if (record_.empty()) {
        throw std::logic_error("no data consumed yet");
    }
    return {record_.back().cost, record_.back().tau};
}

Segmentation OnlineState::backtrack() const {
    if (record_.empty()) {
        throw std::logic_error("no data consumed yet");
    }
    Segmentation seg;
    for (std::size_t cp = record_.back().tau; cp > 0; cp = record_[cp - 1].tau) {
        seg.changepoints.push_back(cp);
    }
    std::reverse(seg.changepoints.begin(), seg.changepoints.end());
    seg.total_cost = segmentation_cost(data_, seg.changepoints, spec_, beta_, &seg.segment_means);
    return seg;
}

RunResult run(std::span<const double> data, const loss::LossSpec& spec, double beta, bool keep_history) {
    if (data.empty()) {
        throw std::invalid_argument("cannot segment an empty series");
    }
    OnlineState state(spec, beta, keep_history);
    state.reserve(data.size());
    for (double y : data) {
        state.step(y);
    }
    return {state.backtrack(), state.interval_stats()};
}

double segmentation_cost(std::span<const double> data, std::span<const std::size_t> changepoints,
                         const loss::LossSpec& spec, double beta, std::vector<double>* means) {
    if (means != nullptr) {
        means->clear();
    }
    double total = 0.0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= changepoints.size(); ++i) {
        const std::size_t end = i < changepoints.size() ? changepoints[i] : data.size();
        if (end <= start || end > data.size()) {
            throw std::invalid_argument("changepoints must be strictly increasing inside (0, n)");
        }
        const auto fit = loss::fit_segment(data.subspan(start, end - start), spec);
        total += fit.cost + beta;
        if (means != nullptr) {
            means->push_back(fit.theta);
        }
        start = end;
    }
    return total;
}

std::vector<double> fitted_signal(const Segmentation& seg, std::size_t n) {
    if (seg.segment_means.size() != seg.changepoints.size() + 1) {
        throw std::invalid_argument("segmentation has inconsistent segment means");
    }
    std::vector<double> out(n);
    std::size_t start = 0;
    for (std::size_t i = 0; i < seg.segment_means.size(); ++i) {
        const std::size_t end = i < seg.changepoints.size() ? seg.changepoints[i] : n;
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(start), out.begin() + static_cast<std::ptrdiff_t>(end),
                  seg.segment_means[i]);
        start = end;
    }
    return out;
}

}  // namespace rfpop
