#pragma once

// Loss functions as piecewise quadratics in theta, and the data-driven
// defaults for the threshold K and the changepoint penalty beta.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfpop/pwq.hpp"

namespace rfpop::loss {

enum class LossKind { SquareError, AbsoluteError, Huber, Biweight, Quantile };

struct LossSpec {
    LossKind kind = LossKind::SquareError;
    double k = 0.0;  // Huber/Biweight threshold, data units
    double u = 0.5;  // Quantile level

    static LossSpec square_error() { return {LossKind::SquareError, 0.0, 0.5}; }
    static LossSpec absolute_error() { return {LossKind::AbsoluteError, 0.0, 0.5}; }
    static LossSpec huber(double k) { return {LossKind::Huber, k, 0.5}; }
    static LossSpec biweight(double k) { return {LossKind::Biweight, k, 0.5}; }
    static LossSpec quantile(double u) { return {LossKind::Quantile, 0.0, u}; }

    /// Throws std::invalid_argument on K <= 0 or u outside (0,1).
    void validate() const;

    bool uses_k() const { return kind == LossKind::Huber || kind == LossKind::Biweight; }
    bool convex() const { return kind != LossKind::Biweight; }
    bool bounded() const { return kind == LossKind::Biweight; }
    /// Number of quadratic pieces per datum.
    std::size_t piece_count() const;
};

std::string_view name(LossKind kind);
/// Accepts l2|l1|huber|biweight|quantile; throws std::invalid_argument.
LossKind parse_kind(std::string_view text);

/// Line-tiling pieces of theta -> loss(y; theta).
std::vector<pwq::LossPiece> loss_pieces(double y, const LossSpec& spec);

/// Allocation-free variant of loss_pieces; returns the piece count.
std::size_t loss_pieces_into(double y, const LossSpec& spec, std::array<pwq::LossPiece, 3>& out);

/// Direct evaluation of the loss, without the piecewise representation.
double loss_value(double y, double theta, const LossSpec& spec);

/// Sum over ys of the losses, built by a breakpoint sweep in O(m log m).
pwq::PiecewiseQuadFn segment_function(std::span<const double> ys, const LossSpec& spec);

struct SegmentFit {
    double cost = 0.0;
    double theta = 0.0;
};

/// Exact minimum over theta of the summed segment loss; leftmost minimiser.
SegmentFit fit_segment(std::span<const double> ys, const LossSpec& spec);

struct ScaleEstimate {
    double sigma = 0.0;
    bool degenerate = false;
};

/// Gaussian-consistent MAD of the first differences, divided by sqrt(2).
ScaleEstimate mad_sigma(std::span<const double> data);

/// E(phi(Z)^2) for standard Gaussian Z, with phi the influence function
/// normalised so the square-error case gives 1. K is read in sigma units.
double phi_sq_expectation(const LossSpec& spec_in_sigma_units);

struct PenaltyConfig {
    double sigma_hat = 0.0;
    double beta = 0.0;
    std::size_t n = 0;
};

struct DefaultConfig {
    LossSpec spec;
    PenaltyConfig penalty;
};

inline constexpr double kBiweightKSigma = 3.0;
inline constexpr double kHuberKSigma = 1.345;

/// K = 3 sigma (biweight) or 1.345 sigma (Huber) unless k_sigma overrides it,
/// beta = 2 sigma^2 log(n) E(phi(Z)^2). Throws std::invalid_argument when
/// sigma is degenerate.
DefaultConfig default_config(LossKind kind, std::span<const double> data,
                             std::optional<double> k_sigma = std::nullopt, double u = 0.5);

/// Same, with a caller-supplied scale estimate and series length.
DefaultConfig default_config(LossKind kind, double sigma_hat, std::size_t n,
                             std::optional<double> k_sigma = std::nullopt, double u = 0.5);

/// Smallest segment length an optimal segmentation can contain, or nullopt
/// for unbounded losses. For the biweight the loss bound is K^2, and segments
/// are strictly longer than beta / K^2.
std::optional<std::size_t> min_segment_length(const LossSpec& spec, double beta);

struct KDiagnostic {
    bool sufficient = false;
    double stat = 0.0;
};

inline constexpr std::size_t kDiagnosticWindow = 21;

/// Advisory check that K exceeds sqrt(3 mean(min(r^2, K^2))), with residuals
/// r taken against a centred running median.
KDiagnostic biweight_k_diagnostic(std::span<const double> data, double k);

/// Centred running median with the window truncated at the ends.
std::vector<double> running_median(std::span<const double> data, std::size_t window);

double median(std::vector<double> values);

}  // namespace rfpop::loss
