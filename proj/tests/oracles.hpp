#pragma once

// Slow, independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "rfpop/loss.hpp"

namespace oracle {

// Minimum over theta of sum loss(y_i; theta). Every loss here is a sum of
// pieces whose active set, as theta moves, is a contiguous window of the
// sorted data; the minimiser is either a kink or the stationary point of one
// such window, so trying all of them is exhaustive.
inline double segment_cost(std::span<const double> ys, const rfpop::loss::LossSpec& spec) {
    std::vector<double> s(ys.begin(), ys.end());
    std::sort(s.begin(), s.end());
    const std::size_t m = s.size();
    const double k = spec.k;
    std::vector<double> cand = s;
    if (spec.uses_k()) {
        for (double y : s) {
            cand.push_back(y - k);
            cand.push_back(y + k);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t j = i; j < m; ++j) {
            sum += s[j];
            const double len = static_cast<double>(j - i + 1);
            cand.push_back(sum / len);
            if (spec.kind == rfpop::loss::LossKind::Huber) {
                const double above = static_cast<double>(m - 1 - j);
                const double below = static_cast<double>(i);
                cand.push_back((sum + k * (above - below)) / len);
            }
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (double th : cand) {
        double c = 0.0;
        for (double y : s) {
            c += rfpop::loss::loss_value(y, th, spec);
        }
        best = std::min(best, c);
    }
    return best;
}

struct Enumerated {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> changepoints;
};

// All 2^(n-1) segmentations; segment costs are cached by (start, end).
inline Enumerated enumerate(std::span<const double> data, const rfpop::loss::LossSpec& spec, double beta,
                            std::vector<double>* all_costs = nullptr) {
    const std::size_t n = data.size();
    std::map<std::pair<std::size_t, std::size_t>, double> cache;
    auto cost = [&](std::size_t a, std::size_t b) {
        auto [it, fresh] = cache.try_emplace({a, b}, 0.0);
        if (fresh) {
            it->second = segment_cost(data.subspan(a, b - a), spec);
        }
        return it->second;
    };
    Enumerated best;
    const std::uint64_t masks = std::uint64_t{1} << (n - 1);
    for (std::uint64_t mask = 0; mask < masks; ++mask) {
        std::vector<std::size_t> cps;
        for (std::size_t i = 1; i < n; ++i) {
            if (mask & (std::uint64_t{1} << (i - 1))) {
                cps.push_back(i);
            }
        }
        double total = 0.0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= cps.size(); ++i) {
            const std::size_t end = i < cps.size() ? cps[i] : n;
            total += cost(start, end) + beta;
            start = end;
        }
        if (all_costs) {
            all_costs->push_back(total);
        }
        if (total < best.cost) {
            best = {total, cps};
        }
    }
    return best;
}

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
inline double norm_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// E(phi(Z)^2) in closed form.
inline double phi_sq_closed(const rfpop::loss::LossSpec& spec) {
    using rfpop::loss::LossKind;
    const double k = spec.k;
    const double inner = 1.0 - 2.0 * norm_sf(k) - 2.0 * k * norm_pdf(k);  // E(Z^2; |Z| <= K)
    switch (spec.kind) {
        case LossKind::SquareError:
            return 1.0;
        case LossKind::AbsoluteError:
            return 1.0;
        case LossKind::Huber:
            return inner + 2.0 * k * k * norm_sf(k);
        case LossKind::Biweight:
            return inner;
        case LossKind::Quantile:
            return 2.0 * (spec.u * spec.u + (1.0 - spec.u) * (1.0 - spec.u));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double phi_sq_monte_carlo(const rfpop::loss::LossSpec& spec, std::size_t samples, std::uint64_t seed) {
    using rfpop::loss::LossKind;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    double sum = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = z(rng);
        double p = 0.0;
        switch (spec.kind) {
            case LossKind::SquareError:
                p = x;
                break;
            case LossKind::AbsoluteError:
                p = x > 0 ? 1.0 : -1.0;
                break;
            case LossKind::Huber:
                p = std::clamp(x, -spec.k, spec.k);
                break;
            case LossKind::Biweight:
                p = std::abs(x) <= spec.k ? x : 0.0;
                break;
            case LossKind::Quantile:
                p = x > 0 ? 2.0 * spec.u : -2.0 * (1.0 - spec.u);
                break;
        }
        sum += p * p;
    }
    return sum / static_cast<double>(samples);
}

// Random piecewise-constant series with Gaussian or t(3) noise.
struct Instance {
    std::vector<double> data;
    std::vector<std::size_t> truth;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t n, bool heavy, double jitter = 1e-9) {
    Instance inst;
    std::uniform_int_distribution<std::size_t> ncp(0, std::max<std::size_t>(1, n / 25));
    const std::size_t k = ncp(rng);
    std::uniform_int_distribution<std::size_t> pos(1, n - 1);
    for (std::size_t i = 0; i < k; ++i) {
        inst.truth.push_back(pos(rng));
    }
    std::sort(inst.truth.begin(), inst.truth.end());
    inst.truth.erase(std::unique(inst.truth.begin(), inst.truth.end()), inst.truth.end());
    std::normal_distribution<double> level(0.0, 4.0);
    std::normal_distribution<double> gauss;
    std::student_t_distribution<double> t3(3.0);
    std::uniform_real_distribution<double> tiny(-jitter, jitter);
    double mu = level(rng);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (next < inst.truth.size() && i == inst.truth[next]) {
            mu = level(rng);
            ++next;
        }
        inst.data.push_back(mu + (heavy ? t3(rng) : gauss(rng)) + tiny(rng));
    }
    return inst;
}

}  // namespace oracle
