#include "rfpop/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>

#include "rfpop/baseline.hpp"

namespace rfpop::simbench {

using loss::LossKind;
using loss::LossSpec;

void ScenarioConfig::validate() const {
    if (n == 0) {
        throw std::invalid_argument("scenario length must be positive");
    }
    if (segment_levels.size() != true_changepoints.size() + 1) {
        throw std::invalid_argument("need one level per segment");
    }
    std::size_t prev = 0;
    for (std::size_t cp : true_changepoints) {
        if (cp <= prev || cp >= n) {
            throw std::invalid_argument("changepoints must be strictly increasing inside (0, n)");
        }
        prev = cp;
    }
    for (std::size_t i = 1; i < segment_levels.size(); ++i) {
        if (segment_levels[i] == segment_levels[i - 1]) {
            throw std::invalid_argument("adjacent segment levels must differ");
        }
    }
    if (noise.kind == NoiseKind::StudentT && !(noise.df > 0.0)) {
        throw std::invalid_argument("t degrees of freedom must be positive");
    }
    if (!(noise.scale >= 0.0)) {
        throw std::invalid_argument("noise scale must be non-negative");
    }
}

ScenarioConfig bundled_scenario(std::string_view name) {
    ScenarioConfig c;
    c.name = std::string(name);
    if (name == "bundled-150") {
        // Fifteen stairs of length ten.
        c.n = 150;
        for (std::size_t i = 1; i < 15; ++i) {
            c.true_changepoints.push_back(10 * i);
        }
        for (int i = 1; i <= 15; ++i) {
            c.segment_levels.push_back(i);
        }
        c.noise = Noise::gaussian(0.3);
        return c;
    }
    if (name == "bundled-2048") {
        // Blocks signal.
        c.n = 2048;
        c.true_changepoints = {205, 267, 308, 472, 512, 820, 902, 1332, 1557, 1598, 1659};
        const double jumps[] = {4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2};
        double level = 0.0;
        c.segment_levels.push_back(0.0);
        for (double j : jumps) {
            level += j;
            c.segment_levels.push_back(std::round(level * 3.66 * 100.0) / 100.0);
        }
        c.noise = Noise::gaussian(10.0);
        return c;
    }
    throw std::invalid_argument("unknown bundled scenario '" + std::string(name) + "'");
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    c.name = j.value("name", std::string("custom"));
    c.n = j.at("n").get<std::size_t>();
    c.true_changepoints = j.at("true_changepoints").get<std::vector<std::size_t>>();
    c.segment_levels = j.at("segment_levels").get<std::vector<double>>();
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("noise")) {
        const auto& nj = j.at("noise");
        const std::string kind = nj.value("kind", std::string("gaussian"));
        if (kind == "gaussian") {
            c.noise = Noise::gaussian(nj.value("sigma", 1.0));
        } else if (kind == "student_t") {
            c.noise = Noise::student_t(nj.value("df", 5.0), nj.value("scale", 1.0));
        } else {
            throw std::invalid_argument("unknown noise kind '" + kind + "'");
        }
    }
    c.validate();
    return c;
}

std::vector<double> step_signal(const ScenarioConfig& config) {
    config.validate();
    std::vector<double> out(config.n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < config.n; ++i) {
        if (seg < config.true_changepoints.size() && i >= config.true_changepoints[seg]) {
            ++seg;
        }
        out[i] = config.segment_levels[seg];
    }
    return out;
}

std::vector<double> generate(const ScenarioConfig& config) {
    auto out = step_signal(config);
    std::mt19937_64 rng(config.seed);
    if (config.noise.kind == NoiseKind::Gaussian) {
        boost::random::normal_distribution<double> dist(0.0, 1.0);
        for (double& y : out) {
            y += config.noise.scale * dist(rng);
        }
    } else {
        boost::random::student_t_distribution<double> dist(config.noise.df);
        for (double& y : out) {
            y += config.noise.scale * dist(rng);
        }
    }
    return out;
}

double mse(std::span<const double> fitted, std::span<const double> truth) {
    if (fitted.size() != truth.size()) {
        throw std::invalid_argument("mse of series with different lengths");
    }
    if (fitted.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < fitted.size(); ++i) {
        const double d = fitted[i] - truth[i];
        acc += d * d;
    }
    return acc / static_cast<double>(fitted.size());
}

namespace {

void check_partition(std::span<const std::size_t> cps, std::size_t n) {
    std::size_t prev = 0;
    for (std::size_t cp : cps) {
        if (cp <= prev || cp >= n) {
            throw std::invalid_argument("changepoints must be strictly increasing inside (0, n)");
        }
        prev = cp;
    }
}

double pairs(double m) { return 0.5 * m * (m - 1.0); }

}  // namespace

double rand_index_normalized(std::span<const std::size_t> a, std::span<const std::size_t> b, std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("partition of an empty index set");
    }
    check_partition(a, n);
    check_partition(b, n);

    // Interval partitions: the contingency cells are the overlaps found by
    // walking both boundary lists together.
    double sum_cells = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t pos = 0;
    while (pos < n) {
        const std::size_t ea = i < a.size() ? a[i] : n;
        const std::size_t eb = j < b.size() ? b[j] : n;
        const std::size_t end = std::min(ea, eb);
        sum_cells += pairs(static_cast<double>(end - pos));
        pos = end;
        if (end == ea) {
            ++i;
        }
        if (end == eb) {
            ++j;
        }
    }
    const auto marginal = [n](std::span<const std::size_t> cps) {
        double s = 0.0;
        std::size_t start = 0;
        for (std::size_t k = 0; k <= cps.size(); ++k) {
            const std::size_t end = k < cps.size() ? cps[k] : n;
            s += pairs(static_cast<double>(end - start));
            start = end;
        }
        return s;
    };
    const double sa = marginal(a);
    const double sb = marginal(b);
    const double total = pairs(static_cast<double>(n));
    const double expected = total > 0.0 ? sa * sb / total : 0.0;
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) {
        return std::equal(a.begin(), a.end(), b.begin(), b.end()) ? 1.0 : 0.0;
    }
    return (sum_cells - expected) / (max_index - expected);
}

TpFp tp_fp(std::span<const std::size_t> truth, std::span<const std::size_t> pred, std::size_t window) {
    TpFp out;
    for (std::size_t t : truth) {
        const auto it = std::lower_bound(pred.begin(), pred.end(), t >= window ? t - window : 0);
        if (it != pred.end() && *it <= t + window) {
            ++out.tp;
        }
    }
    out.fp = pred.size() > out.tp ? pred.size() - out.tp : 0;
    return out;
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::L2:
            return "l2";
        case Method::L1:
            return "l1";
        case Method::Huber:
            return "huber";
        case Method::Biweight:
            return "biweight";
        case Method::Quantile:
            return "quantile";
        case Method::Cusum:
            return "cusum";
    }
    return "unknown";
}

Method parse_method(std::string_view text) {
    for (auto m : {Method::L2, Method::L1, Method::Huber, Method::Biweight, Method::Quantile, Method::Cusum}) {
        if (text == method_name(m)) {
            return m;
        }
    }
    throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

namespace {

LossKind loss_kind(Method m) {
    switch (m) {
        case Method::L2:
            return LossKind::SquareError;
        case Method::L1:
            return LossKind::AbsoluteError;
        case Method::Huber:
        case Method::Cusum:
            return LossKind::Huber;
        case Method::Biweight:
            return LossKind::Biweight;
        case Method::Quantile:
            return LossKind::Quantile;
    }
    throw std::logic_error("unknown method");
}

double cusum_threshold(std::size_t n) {
    return 2.0 * std::log(static_cast<double>(n)) * loss::phi_sq_expectation(LossSpec::huber(loss::kHuberKSigma));
}

}  // namespace

double default_penalty(Method m, std::span<const double> data) {
    if (m == Method::Cusum) {
        return cusum_threshold(data.size());
    }
    return loss::default_config(loss_kind(m), data).penalty.beta;
}

MethodResult run_method(Method m, std::span<const double> data, std::optional<double> penalty, double multiplier) {
    const auto cfg = loss::default_config(loss_kind(m), data);
    MethodResult out;
    const auto t0 = std::chrono::steady_clock::now();
    if (m == Method::Cusum) {
        const double sigma = cfg.penalty.sigma_hat;
        const double k = cfg.spec.k;
        out.penalty = penalty.value_or(multiplier * cusum_threshold(data.size()));
        out.changepoints = baseline::binseg_robust(data, k, out.penalty, sigma);
        out.fitted.resize(data.size());
        std::size_t start = 0;
        for (std::size_t i = 0; i <= out.changepoints.size(); ++i) {
            const std::size_t end = i < out.changepoints.size() ? out.changepoints[i] : data.size();
            const double level = baseline::huber_m_estimate(data.subspan(start, end - start), k);
            std::fill(out.fitted.begin() + static_cast<std::ptrdiff_t>(start),
                      out.fitted.begin() + static_cast<std::ptrdiff_t>(end), level);
            start = end;
        }
    } else {
        out.penalty = penalty.value_or(multiplier * cfg.penalty.beta);
        auto res = run(data, cfg.spec, out.penalty);
        out.fitted = fitted_signal(res.segmentation, data.size());
        out.changepoints = std::move(res.segmentation.changepoints);
    }
    out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<RocPoint> roc_sweep(std::span<const double> data, std::span<const std::size_t> truth, Method m,
                                std::span<const double> grid, std::size_t window) {
    if (grid.empty()) {
        throw std::invalid_argument("penalty grid is empty");
    }
    std::vector<RocPoint> out;
    out.reserve(grid.size());
    for (double p : grid) {
        const auto res = run_method(m, data, p);
        const auto score = tp_fp(truth, res.changepoints, window);
        out.push_back({p, score.tp, score.fp});
    }
    return out;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::vector<EvalRow> simulate(const ScenarioConfig& config, std::span<const Method> methods, std::size_t reps,
                              std::size_t threads, double multiplier) {
    config.validate();
    const auto truth = step_signal(config);
    std::vector<EvalRow> rows(reps * methods.size());
    parallel_for(rows.size(), threads, [&](std::size_t cell) {
        const std::size_t rep = cell / methods.size();
        const Method m = methods[cell % methods.size()];
        ScenarioConfig c = config;
        c.seed = config.seed + rep;
        const auto data = generate(c);
        const auto res = run_method(m, data, std::nullopt, multiplier);
        const auto score = tp_fp(config.true_changepoints, res.changepoints);
        EvalRow& row = rows[cell];
        row.scenario = config.name;
        row.method = std::string(method_name(m));
        row.penalty = res.penalty;
        row.rep = rep;
        row.tp = score.tp;
        row.fp = score.fp;
        row.mse = mse(res.fitted, truth);
        row.rand = rand_index_normalized(config.true_changepoints, res.changepoints, config.n);
        row.runtime_s = res.runtime_s;
    });
    return rows;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("slope needs at least two paired points");
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

ScalingReport runtime_scaling(LossKind kind, std::span<const std::size_t> n_grid, ChangeRegime regime,
                              std::uint64_t seed) {
    if (!std::is_sorted(n_grid.begin(), n_grid.end())) {
        throw std::invalid_argument("n grid must be ascending");
    }
    ScalingReport report;
    std::vector<double> ns;
    std::vector<double> secs;
    for (std::size_t n : n_grid) {
        ScenarioConfig c;
        c.n = n;
        c.seed = seed;
        c.noise = Noise::gaussian(1.0);
        c.segment_levels = {0.0};
        if (regime == ChangeRegime::Every100) {
            for (std::size_t cp = 100; cp < n; cp += 100) {
                c.true_changepoints.push_back(cp);
                c.segment_levels.push_back(c.segment_levels.size() % 2 == 1 ? 3.0 : 0.0);
            }
        }
        const auto data = generate(c);
        const auto cfg = loss::default_config(kind, data);
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = run(data, cfg.spec, cfg.penalty.beta);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back({n, s, res.stats.max_pieces, res.stats.mean_pieces, res.segmentation.k()});
        ns.push_back(static_cast<double>(n));
        secs.push_back(std::max(s, 1e-9));
    }
    if (ns.size() >= 2) {
        report.slope = loglog_slope(ns, secs);
    }
    return report;
}

std::string to_tsv(std::span<const EvalRow> rows) {
    std::ostringstream os;
    os.precision(10);
    os << "scenario\tmethod\tpenalty\trep\ttp\tfp\tmse\trand\truntime_s\n";
    for (const auto& r : rows) {
        os << r.scenario << '\t' << r.method << '\t' << r.penalty << '\t' << r.rep << '\t' << r.tp << '\t' << r.fp
           << '\t' << r.mse << '\t' << r.rand << '\t' << r.runtime_s << '\n';
    }
    return os.str();
}

nlohmann::json to_json(std::span<const EvalRow> rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"scenario", r.scenario},
                       {"method", r.method},
                       {"penalty", r.penalty},
                       {"rep", r.rep},
                       {"tp", r.tp},
                       {"fp", r.fp},
                       {"mse", r.mse},
                       {"rand", r.rand},
                       {"runtime_s", r.runtime_s}});
    }
    return {{"rng", kRngAlgorithm}, {"rows", arr}};
}

}  // namespace rfpop::simbench
