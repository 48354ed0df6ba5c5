#pragma once

// Command-line drivers: series ingestion, batch and online detection, and
// the simulate/bench tables. Each driver writes to caller-supplied streams
// and returns a process exit code.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfpop/loss.hpp"
#include "rfpop/simbench.hpp"

namespace rfpop::cli {

enum ExitCode : int { kOk = 0, kMalformedInput = 1, kInvalidConfig = 2 };

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { Batch, Online };
enum class Format { Json, Tsv };

Format parse_format(const std::string& text);

struct RunConfig {
    loss::LossKind loss = loss::LossKind::Biweight;
    std::optional<double> k;
    std::optional<double> k_sigma;
    std::optional<double> beta;
    std::optional<double> beta_multiplier;
    std::optional<double> quantile;
    std::optional<double> sigma;  // overrides the MAD estimate
    Mode mode = Mode::Batch;
    std::string input;  // empty: standard input
    Format format = Format::Json;
    std::optional<std::string> column;  // index (0-based) or header name
};

/// Reads one value per line. A non-numeric first line is taken as a header.
/// Blank lines, NaN and infinities are rejected with InputError.
class SeriesReader {
public:
    SeriesReader(std::istream& in, std::optional<std::string> column);
    bool next(double& value);
    std::size_t line() const { return line_; }

private:
    double parse_field(const std::string& text) const;

    std::istream& in_;
    std::optional<std::string> column_;
    std::optional<std::size_t> column_index_;
    std::size_t line_ = 0;
};

std::vector<double> read_series(std::istream& in, const std::optional<std::string>& column);

struct Resolved {
    loss::LossSpec spec;
    double beta = 0.0;
    std::optional<double> sigma_hat;
    std::size_t n = 0;
};

/// Resolves K, u and beta. data may be empty when everything is explicit.
/// Throws ConfigError.
Resolved resolve(const RunConfig& config, std::span<const double> data);

/// True when K or beta depend on a scale estimate or on the series length.
bool needs_whole_series(const RunConfig& config);

int detect(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err);

struct SimulateConfig {
    std::string scenario = "bundled-2048";
    std::optional<double> df;
    std::size_t reps = 20;
    std::vector<simbench::Method> methods{simbench::Method::Biweight, simbench::Method::L2};
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    double beta_multiplier = 1.0;
    Format format = Format::Tsv;
};

int simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err);

struct BenchConfig {
    loss::LossKind loss = loss::LossKind::Biweight;
    std::vector<std::size_t> n_grid{2000, 4000, 8000, 16000, 32000, 64000, 128000};
    simbench::ChangeRegime changes = simbench::ChangeRegime::Every100;
    std::uint64_t seed = 1;
    Format format = Format::Tsv;
};

int bench(const BenchConfig& config, std::ostream& out, std::ostream& err);

/// "2000..128000" (doubling) or "1000,5000,20000".
std::vector<std::size_t> parse_n_grid(const std::string& text);
std::vector<simbench::Method> parse_methods(const std::string& text);

}  // namespace rfpop::cli
