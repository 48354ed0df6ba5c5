#pragma once

// Synthetic piecewise-constant data, accuracy metrics and the drivers for the
// simulation and runtime studies.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfpop/engine.hpp"
#include "rfpop/loss.hpp"

namespace rfpop::simbench {

/// Named in every table so that results can be regenerated bit-exactly.
inline constexpr std::string_view kRngAlgorithm = "std::mt19937_64+boost::random";

enum class NoiseKind { Gaussian, StudentT };

struct Noise {
    NoiseKind kind = NoiseKind::Gaussian;
    double scale = 1.0;  // sigma for Gaussian, multiplier of the raw t-variate otherwise
    double df = 5.0;

    static Noise gaussian(double sigma) { return {NoiseKind::Gaussian, sigma, 0.0}; }
    static Noise student_t(double df, double scale) { return {NoiseKind::StudentT, scale, df}; }
};

struct ScenarioConfig {
    std::string name = "custom";
    std::size_t n = 0;
    std::vector<std::size_t> true_changepoints;
    std::vector<double> segment_levels;
    Noise noise;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

/// "bundled-150" (ten-point stairs) or "bundled-2048" (blocks).
ScenarioConfig bundled_scenario(std::string_view name);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

std::vector<double> step_signal(const ScenarioConfig& config);
std::vector<double> generate(const ScenarioConfig& config);

double mse(std::span<const double> fitted, std::span<const double> truth);

/// Hubert-Arabie adjusted Rand index of the interval partitions of 1..n
/// induced by two changepoint lists.
double rand_index_normalized(std::span<const std::size_t> a, std::span<const std::size_t> b, std::size_t n);

struct TpFp {
    std::size_t tp = 0;
    std::size_t fp = 0;
};

inline constexpr std::size_t kDefaultWindow = 15;

/// A true changepoint counts once if any prediction lies within +-window;
/// fp = max(0, |pred| - tp).
TpFp tp_fp(std::span<const std::size_t> truth, std::span<const std::size_t> pred,
           std::size_t window = kDefaultWindow);

enum class Method { L2, L1, Huber, Biweight, Quantile, Cusum };

std::string_view method_name(Method m);
Method parse_method(std::string_view text);

struct MethodResult {
    std::vector<std::size_t> changepoints;
    std::vector<double> fitted;
    double penalty = 0.0;
    double runtime_s = 0.0;
};

/// Default penalty (or cusum threshold) for the method on this data:
/// 2 sigma^2 log(n) E(phi(Z)^2), or 2 log(n) E(phi(Z)^2) for the cusum whose
/// residuals are already divided by sigma.
double default_penalty(Method m, std::span<const double> data);

/// Runs a method with MAD-based K, and either the given absolute penalty or
/// multiplier times the default one.
MethodResult run_method(Method m, std::span<const double> data, std::optional<double> penalty = std::nullopt,
                        double multiplier = 1.0);

struct RocPoint {
    double penalty = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
};

std::vector<RocPoint> roc_sweep(std::span<const double> data, std::span<const std::size_t> truth, Method m,
                                std::span<const double> grid, std::size_t window = kDefaultWindow);

struct EvalRow {
    std::string scenario;
    std::string method;
    double penalty = 0.0;
    std::size_t rep = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    double mse = 0.0;
    double rand = 0.0;
    double runtime_s = 0.0;
};

/// Runs every (replicate, method) cell on a pool of threads. Replicate r uses
/// seed config.seed + r; rows come back ordered by (rep, method).
std::vector<EvalRow> simulate(const ScenarioConfig& config, std::span<const Method> methods, std::size_t reps,
                              std::size_t threads = 1, double multiplier = 1.0);

enum class ChangeRegime { None, Every100 };

struct ScalingRow {
    std::size_t n = 0;
    double seconds = 0.0;
    std::size_t max_pieces = 0;
    double mean_pieces = 0.0;
    std::size_t changepoints = 0;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    double slope = 0.0;  // least-squares slope of log(seconds) on log(n)
};

/// Gaussian noise (sigma = 1); with Every100 the level alternates between 0
/// and 3 every 100 points. Default K and beta from the data.
ScalingReport runtime_scaling(loss::LossKind kind, std::span<const std::size_t> n_grid, ChangeRegime regime,
                              std::uint64_t seed = 1);

double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Calls body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

std::string to_tsv(std::span<const EvalRow> rows);
nlohmann::json to_json(std::span<const EvalRow> rows);

}  // namespace rfpop::simbench
