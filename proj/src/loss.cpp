#include "rfpop/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace rfpop::loss {

using pwq::kInf;
using pwq::LossPiece;
using pwq::Quadratic;

namespace {

constexpr double kMadConsistency = 1.4826;

// (theta - y)^2 = theta^2 - 2 y theta + y^2
Quadratic squared_about(double y) { return {1.0, -2.0 * y, y * y}; }

std::size_t fill_pieces(double y, const LossSpec& spec, std::array<LossPiece, 3>& out) {
    const double k = spec.k;
    switch (spec.kind) {
        case LossKind::SquareError:
            out[0] = {{-kInf, kInf}, squared_about(y)};
            return 1;
        case LossKind::AbsoluteError:
            out[0] = {{-kInf, y}, {0.0, -1.0, y}};
            out[1] = {{y, kInf}, {0.0, 1.0, -y}};
            return 2;
        case LossKind::Huber:
            out[0] = {{-kInf, y - k}, {0.0, -2.0 * k, 2.0 * k * y - k * k}};
            out[1] = {{y - k, y + k}, squared_about(y)};
            out[2] = {{y + k, kInf}, {0.0, 2.0 * k, -2.0 * k * y - k * k}};
            return 3;
        case LossKind::Biweight:
            out[0] = {{-kInf, y - k}, Quadratic::constant(k * k)};
            out[1] = {{y - k, y + k}, squared_about(y)};
            out[2] = {{y + k, kInf}, Quadratic::constant(k * k)};
            return 3;
        case LossKind::Quantile: {
            const double u = spec.u;
            out[0] = {{-kInf, y}, {0.0, -2.0 * u, 2.0 * u * y}};
            out[1] = {{y, kInf}, {0.0, 2.0 * (1.0 - u), -2.0 * (1.0 - u) * y}};
            return 2;
        }
    }
    throw std::logic_error("unknown loss kind");
}

double gaussian_expectation(const auto& g, double split) {
    using boost::math::quadrature::gauss_kronrod;
    const auto weighted = [&](double x) {
        return g(x) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    };
    double total = 0.0;
    if (split > 0.0) {
        total += gauss_kronrod<double, 61>::integrate(weighted, -kInf, -split, 15, 1e-12);
        total += gauss_kronrod<double, 61>::integrate(weighted, -split, split, 15, 1e-12);
        total += gauss_kronrod<double, 61>::integrate(weighted, split, kInf, 15, 1e-12);
    } else {
        total += gauss_kronrod<double, 61>::integrate(weighted, -kInf, 0.0, 15, 1e-12);
        total += gauss_kronrod<double, 61>::integrate(weighted, 0.0, kInf, 15, 1e-12);
    }
    return total;
}

}  // namespace

void LossSpec::validate() const {
    if (uses_k() && !(k > 0.0 && std::isfinite(k))) {
        throw std::invalid_argument("loss threshold K must be positive and finite");
    }
    if (kind == LossKind::Quantile && !(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("quantile level must lie in (0, 1)");
    }
}

std::size_t LossSpec::piece_count() const {
    switch (kind) {
        case LossKind::SquareError:
            return 1;
        case LossKind::AbsoluteError:
        case LossKind::Quantile:
            return 2;
        case LossKind::Huber:
        case LossKind::Biweight:
            return 3;
    }
    return 0;
}

std::string_view name(LossKind kind) {
    switch (kind) {
        case LossKind::SquareError:
            return "l2";
        case LossKind::AbsoluteError:
            return "l1";
        case LossKind::Huber:
            return "huber";
        case LossKind::Biweight:
            return "biweight";
        case LossKind::Quantile:
            return "quantile";
    }
    return "unknown";
}

LossKind parse_kind(std::string_view text) {
    for (auto kind : {LossKind::SquareError, LossKind::AbsoluteError, LossKind::Huber, LossKind::Biweight,
                      LossKind::Quantile}) {
        if (text == name(kind)) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown loss '" + std::string(text) + "'");
}

std::vector<LossPiece> loss_pieces(double y, const LossSpec& spec) {
    if (!std::isfinite(y)) {
        throw std::invalid_argument("loss of a non-finite datum");
    }
    std::array<LossPiece, 3> buf;
    const std::size_t n = fill_pieces(y, spec, buf);
    return {buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::size_t loss_pieces_into(double y, const LossSpec& spec, std::array<LossPiece, 3>& out) {
    if (!std::isfinite(y)) {
        throw std::invalid_argument("loss of a non-finite datum");
    }
    return fill_pieces(y, spec, out);
}

double loss_value(double y, double theta, const LossSpec& spec) {
    const double r = y - theta;
    const double ar = std::abs(r);
    switch (spec.kind) {
        case LossKind::SquareError:
            return r * r;
        case LossKind::AbsoluteError:
            return ar;
        case LossKind::Huber:
            return ar < spec.k ? r * r : 2.0 * spec.k * ar - spec.k * spec.k;
        case LossKind::Biweight:
            return ar < spec.k ? r * r : spec.k * spec.k;
        case LossKind::Quantile:
            return r > 0.0 ? 2.0 * spec.u * r : 2.0 * (1.0 - spec.u) * (-r);
    }
    throw std::logic_error("unknown loss kind");
}

pwq::PiecewiseQuadFn segment_function(std::span<const double> ys, const LossSpec& spec) {
    Quadratic leftmost;
    Quadratic rightmost;
    std::vector<pwq::Breakpoint> breaks;
    breaks.reserve(ys.size() * (spec.piece_count() - 1));
    std::array<LossPiece, 3> buf;
    for (double y : ys) {
        if (!std::isfinite(y)) {
            throw std::invalid_argument("loss of a non-finite datum");
        }
        const std::size_t n = fill_pieces(y, spec, buf);
        leftmost += buf[0].quad;
        rightmost += buf[n - 1].quad;
        for (std::size_t j = 1; j < n; ++j) {
            breaks.push_back({buf[j - 1].interval.hi, buf[j].quad - buf[j - 1].quad});
        }
    }
    return pwq::PiecewiseQuadFn::from_breakpoints(leftmost, std::move(breaks), rightmost);
}

SegmentFit fit_segment(std::span<const double> ys, const LossSpec& spec) {
    if (ys.empty()) {
        throw std::invalid_argument("cannot fit an empty segment");
    }
    const auto m = pwq::global_min(segment_function(ys, spec));
    return {m.value, m.argmin};
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median of an empty sample");
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

ScaleEstimate mad_sigma(std::span<const double> data) {
    if (data.size() < 2) {
        throw std::invalid_argument("scale estimate needs at least two points");
    }
    std::vector<double> d(data.size() - 1);
    for (std::size_t i = 0; i + 1 < data.size(); ++i) {
        d[i] = data[i + 1] - data[i];
    }
    const double centre = median(d);
    for (double& x : d) {
        x = std::abs(x - centre);
    }
    const double sigma = median(std::move(d)) * kMadConsistency / std::sqrt(2.0);
    return {sigma, !(sigma > 0.0)};
}

double phi_sq_expectation(const LossSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case LossKind::SquareError:
            return 1.0;
        case LossKind::AbsoluteError:
            return gaussian_expectation([](double) { return 1.0; }, 0.0);
        case LossKind::Huber: {
            const double k = spec.k;
            return gaussian_expectation(
                [k](double x) {
                    const double v = std::clamp(x, -k, k);
                    return v * v;
                },
                k);
        }
        case LossKind::Biweight: {
            const double k = spec.k;
            return gaussian_expectation([k](double x) { return std::abs(x) <= k ? x * x : 0.0; }, k);
        }
        case LossKind::Quantile: {
            // Normalised by the median case, where phi = sign(x).
            const double u = spec.u;
            return gaussian_expectation(
                [u](double x) {
                    const double v = x > 0.0 ? 2.0 * u : -2.0 * (1.0 - u);
                    return v * v;
                },
                0.0);
        }
    }
    throw std::logic_error("unknown loss kind");
}

DefaultConfig default_config(LossKind kind, double sigma_hat, std::size_t n, std::optional<double> k_sigma,
                             double u) {
    if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat)) {
        throw std::invalid_argument(
            "noise scale estimate is degenerate; supply K and beta explicitly");
    }
    if (n < 1) {
        throw std::invalid_argument("series length must be at least 1");
    }
    double ks = 0.0;
    if (kind == LossKind::Biweight) {
        ks = k_sigma.value_or(kBiweightKSigma);
    } else if (kind == LossKind::Huber) {
        ks = k_sigma.value_or(kHuberKSigma);
    }
    const LossSpec unit{kind, ks, u};
    unit.validate();
    DefaultConfig out;
    out.spec = {kind, ks * sigma_hat, u};
    out.penalty.sigma_hat = sigma_hat;
    out.penalty.n = n;
    out.penalty.beta = 2.0 * sigma_hat * sigma_hat * std::log(static_cast<double>(n)) * phi_sq_expectation(unit);
    return out;
}

DefaultConfig default_config(LossKind kind, std::span<const double> data, std::optional<double> k_sigma,
                             double u) {
    const auto est = mad_sigma(data);
    if (est.degenerate) {
        throw std::invalid_argument(
            "noise scale estimate is zero (constant differences); supply K and beta explicitly");
    }
    return default_config(kind, est.sigma, data.size(), k_sigma, u);
}

std::optional<std::size_t> min_segment_length(const LossSpec& spec, double beta) {
    if (!(beta >= 0.0)) {
        throw std::invalid_argument("penalty must be non-negative");
    }
    if (!spec.bounded()) {
        return std::nullopt;
    }
    const double bound = beta / (spec.k * spec.k);
    return static_cast<std::size_t>(std::floor(bound)) + 1;
}

std::vector<double> running_median(std::span<const double> data, std::size_t window) {
    if (window == 0) {
        throw std::invalid_argument("window must be positive");
    }
    const std::size_t half = window / 2;
    std::vector<double> out(data.size());
    std::vector<double> buf;
    buf.reserve(window);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(data.size(), i + half + 1);
        buf.assign(data.begin() + static_cast<std::ptrdiff_t>(lo), data.begin() + static_cast<std::ptrdiff_t>(hi));
        out[i] = median(buf);
    }
    return out;
}

KDiagnostic biweight_k_diagnostic(std::span<const double> data, double k) {
    if (data.size() < kDiagnosticWindow) {
        throw std::invalid_argument("series shorter than the running-median window");
    }
    if (!(k > 0.0)) {
        throw std::invalid_argument("K must be positive");
    }
    const auto centre = running_median(data, kDiagnosticWindow);
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = data[i] - centre[i];
        acc += std::min(r * r, k * k);
    }
    const double stat = std::sqrt(3.0 * acc / static_cast<double>(data.size()));
    return {k > stat, stat};
}

}  // namespace rfpop::loss
