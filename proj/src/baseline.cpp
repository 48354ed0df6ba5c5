#include "rfpop/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace rfpop::baseline {

loss::SegmentFit segment_cost(std::span<const double> slice, const loss::LossSpec& spec) {
    return loss::fit_segment(slice, spec);
}

Segmentation exact_dp(std::span<const double> data, const loss::LossSpec& spec, double beta) {
    const std::size_t n = data.size();
    if (n == 0) {
        throw std::invalid_argument("cannot segment an empty series");
    }
    if (n > kExactDpMaxN) {
        throw std::invalid_argument("exact_dp is quadratic; series too long");
    }
    spec.validate();

    std::vector<double> best(n + 1, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> last(n + 1, 0);
    best[0] = 0.0;

    pwq::PiecewiseQuadFn running;
    pwq::PiecewiseQuadFn next;
    std::array<pwq::LossPiece, 3> pieces;
    for (std::size_t t = 1; t <= n; ++t) {
        // Grow the last segment leftwards: y_{s+1..t} for s = t-1, ..., 0.
        running = pwq::PiecewiseQuadFn::constant(0.0);
        for (std::size_t s = t; s-- > 0;) {
            const std::size_t np = loss::loss_pieces_into(data[s], spec, pieces);
            pwq::add_loss_into(running, {pieces.data(), np}, next);
            std::swap(running, next);
            const double cand = best[s] + pwq::global_min(running).value + beta;
            if (cand < best[t]) {
                best[t] = cand;
                last[t] = s;
            }
        }
    }

    Segmentation seg;
    for (std::size_t cp = last[n]; cp > 0; cp = last[cp]) {
        seg.changepoints.push_back(cp);
    }
    std::reverse(seg.changepoints.begin(), seg.changepoints.end());
    std::size_t start = 0;
    for (std::size_t i = 0; i <= seg.changepoints.size(); ++i) {
        const std::size_t end = i < seg.changepoints.size() ? seg.changepoints[i] : n;
        seg.segment_means.push_back(segment_cost(data.subspan(start, end - start), spec).theta);
        start = end;
    }
    seg.total_cost = best[n];
    return seg;
}

namespace {

double psi_sum(std::span<const double> data, double k, double theta) {
    double s = 0.0;
    for (double y : data) {
        s += std::clamp(y - theta, -k, k);
    }
    return s;
}

}  // namespace

double huber_m_estimate(std::span<const double> data, double k) {
    if (data.empty()) {
        throw std::invalid_argument("M-estimate of an empty sample");
    }
    if (!(k > 0.0)) {
        throw std::invalid_argument("K must be positive");
    }
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    const double lo0 = *mn - k;
    const double hi0 = *mx + k;
    const double tol = 1e-10 * std::max(1.0, hi0 - lo0);

    // psi is non-increasing; find the left and right edges of its zero set.
    double lo = lo0;
    double hi = hi0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (psi_sum(data, k, mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double left = 0.5 * (lo + hi);
    lo = lo0;
    hi = hi0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (psi_sum(data, k, mid) >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double right = 0.5 * (lo + hi);
    return 0.5 * (left + right);
}

CusumResult robust_cusum(std::span<const double> data, double k, double scale) {
    const std::size_t n = data.size();
    if (n < 2) {
        throw std::invalid_argument("cusum needs at least two points");
    }
    if (!(scale > 0.0)) {
        throw std::invalid_argument("scale must be positive");
    }
    CusumResult out;
    out.theta_hat = huber_m_estimate(data, k);
    const double nn = static_cast<double>(n);
    double s = 0.0;
    out.t_n = -1.0;
    for (std::size_t m = 1; m < n; ++m) {
        s += std::clamp(data[m - 1] - out.theta_hat, -k, k) / scale;
        const double md = static_cast<double>(m);
        const double stat = nn / (md * (nn - md)) * s * s;
        if (stat > out.t_n) {
            out.t_n = stat;
            out.m_star = m;
        }
    }
    return out;
}

std::vector<std::size_t> binseg_robust(std::span<const double> data, double k, double threshold, double scale) {
    if (!(threshold > 0.0)) {
        throw std::invalid_argument("threshold must be positive");
    }
    std::vector<std::size_t> cps;
    std::vector<std::pair<std::size_t, std::size_t>> todo{{0, data.size()}};
    while (!todo.empty()) {
        const auto [start, end] = todo.back();
        todo.pop_back();
        if (end - start < 2) {
            continue;
        }
        const auto res = robust_cusum(data.subspan(start, end - start), k, scale);
        if (!(res.t_n > threshold)) {
            continue;
        }
        const std::size_t cp = start + res.m_star;
        cps.push_back(cp);
        todo.emplace_back(start, cp);
        todo.emplace_back(cp, end);
    }
    std::sort(cps.begin(), cps.end());
    return cps;
}

}  // namespace rfpop::baseline
