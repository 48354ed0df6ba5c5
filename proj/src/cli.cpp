#include "rfpop/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rfpop/engine.hpp"

namespace rfpop::cli {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(s);
    while (std::getline(is, field, sep)) {
        out.push_back(trim(field));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::optional<double> to_number(const std::string& text) {
    if (text.empty()) {
        return std::nullopt;
    }
    const char* first = text.data();
    const char* last = first + text.size();
    if (*first == '+') {
        ++first;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::size_t> to_index(const std::string& text) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return v;
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool uses_k(loss::LossKind kind) { return kind == loss::LossKind::Huber || kind == loss::LossKind::Biweight; }

}  // namespace

Format parse_format(const std::string& text) {
    if (text == "json") {
        return Format::Json;
    }
    if (text == "tsv") {
        return Format::Tsv;
    }
    throw ConfigError("unknown format '" + text + "'");
}

SeriesReader::SeriesReader(std::istream& in, std::optional<std::string> column) : in_(in), column_(std::move(column)) {
    if (column_) {
        column_index_ = to_index(*column_);
    }
}

double SeriesReader::parse_field(const std::string& text) const {
    const auto v = to_number(text);
    if (!v) {
        throw InputError("line " + std::to_string(line_) + ": '" + text + "' is not a number");
    }
    if (!std::isfinite(*v)) {
        throw InputError("line " + std::to_string(line_) + ": non-finite value");
    }
    return *v;
}

bool SeriesReader::next(double& value) {
    std::string raw;
    while (std::getline(in_, raw)) {
        ++line_;
        const std::string text = trim(raw);
        if (text.empty()) {
            throw InputError("line " + std::to_string(line_) + ": blank line");
        }
        std::string field = text;
        if (column_) {
            const auto fields = split(text, ',');
            if (!column_index_) {
                if (line_ != 1) {
                    throw InputError("column '" + *column_ + "' not found in a header line");
                }
                const auto it = std::find(fields.begin(), fields.end(), *column_);
                if (it == fields.end()) {
                    throw InputError("column '" + *column_ + "' not found in header");
                }
                column_index_ = static_cast<std::size_t>(it - fields.begin());
                continue;
            }
            if (*column_index_ >= fields.size()) {
                throw InputError("line " + std::to_string(line_) + ": missing column " + *column_);
            }
            field = fields[*column_index_];
        } else if (text.find(',') != std::string::npos) {
            throw InputError("line " + std::to_string(line_) + ": multi-column input needs --column");
        }
        if (line_ == 1 && !to_number(field)) {
            continue;  // header
        }
        value = parse_field(field);
        return true;
    }
    return false;
}

std::vector<double> read_series(std::istream& in, const std::optional<std::string>& column) {
    SeriesReader reader(in, column);
    std::vector<double> out;
    double v = 0.0;
    while (reader.next(v)) {
        out.push_back(v);
    }
    return out;
}

bool needs_whole_series(const RunConfig& config) {
    const bool k_needs_sigma = uses_k(config.loss) && !config.k;
    return !config.beta || (k_needs_sigma && !config.sigma);
}

Resolved resolve(const RunConfig& config, std::span<const double> data) {
    if (config.k && config.k_sigma) {
        throw ConfigError("give at most one of --k and --k-sigma");
    }
    if (config.beta && config.beta_multiplier) {
        throw ConfigError("give at most one of --beta and --beta-multiplier");
    }
    if (config.quantile && config.loss != loss::LossKind::Quantile) {
        throw ConfigError("--quantile applies only to the quantile loss");
    }
    if (!uses_k(config.loss) && (config.k || config.k_sigma)) {
        throw ConfigError("--k/--k-sigma apply only to the huber and biweight losses");
    }

    Resolved r;
    r.n = data.size();
    if (config.sigma) {
        if (!(*config.sigma > 0.0) || !std::isfinite(*config.sigma)) {
            throw ConfigError("--sigma must be positive");
        }
        r.sigma_hat = *config.sigma;
    } else if (data.size() >= 2) {
        const auto est = loss::mad_sigma(data);
        if (!est.degenerate) {
            r.sigma_hat = est.sigma;
        }
    }

    const bool need_sigma = (uses_k(config.loss) && !config.k) || !config.beta;
    if (need_sigma && !r.sigma_hat) {
        throw ConfigError("noise scale estimate is degenerate; supply --k and --beta explicitly (or --sigma)");
    }

    r.spec.kind = config.loss;
    r.spec.u = config.quantile.value_or(0.5);
    if (uses_k(config.loss)) {
        const double def = config.loss == loss::LossKind::Biweight ? loss::kBiweightKSigma : loss::kHuberKSigma;
        r.spec.k = config.k ? *config.k : config.k_sigma.value_or(def) * *r.sigma_hat;
    }
    try {
        r.spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    if (config.beta) {
        if (!(*config.beta >= 0.0) || !std::isfinite(*config.beta)) {
            throw ConfigError("--beta must be finite and non-negative");
        }
        r.beta = *config.beta;
    } else {
        if (r.n == 0) {
            throw ConfigError("the default penalty needs the series length; give --beta");
        }
        const double sigma = *r.sigma_hat;
        loss::LossSpec unit = r.spec;
        unit.k = r.spec.k / sigma;
        if (config.beta_multiplier && !(*config.beta_multiplier >= 0.0)) {
            throw ConfigError("--beta-multiplier must be non-negative");
        }
        r.beta = config.beta_multiplier.value_or(1.0) * 2.0 * sigma * sigma *
                 std::log(static_cast<double>(r.n)) * loss::phi_sq_expectation(unit);
    }
    return r;
}

namespace {

json summary(const RunConfig& config, const Resolved& r, const OnlineState& state) {
    const auto seg = state.backtrack();
    json j;
    j["n"] = state.t();
    j["loss"] = loss::name(config.loss);
    j["mode"] = config.mode == Mode::Online ? "online" : "batch";
    j["K"] = uses_k(config.loss) ? json(r.spec.k) : json(nullptr);
    if (config.loss == loss::LossKind::Quantile) {
        j["quantile"] = r.spec.u;
    }
    j["beta"] = r.beta;
    j["sigma_hat"] = nullable(r.sigma_hat);
    j["changepoints"] = seg.changepoints;
    std::vector<double> means = seg.segment_means;
    for (double& m : means) {
        m += 0.0;  // no "-0.0" in the output
    }
    j["segment_means"] = means;
    j["total_cost"] = seg.total_cost;
    const auto msl = state.min_segment_length();
    j["min_segment_length"] = msl ? json(*msl) : json(nullptr);
    j["max_intervals"] = state.interval_stats().max_pieces;
    return j;
}

std::string tsv_value(const json& v) {
    if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += (i ? "," : "") + v[i].dump();
        }
        return s;
    }
    if (v.is_string()) {
        return v.get<std::string>();
    }
    return v.dump();
}

void write_summary(const json& j, Format format, bool online, std::ostream& out) {
    if (format == Format::Json) {
        out << (online ? j.dump() : j.dump(2)) << '\n';
        return;
    }
    if (online) {
        out << '\n';
    }
    for (const auto& [key, value] : j.items()) {
        out << key << '\t' << tsv_value(value) << '\n';
    }
}

class RecordWriter {
public:
    RecordWriter(Format format, std::ostream& out) : format_(format), out_(out) {}

    void write(std::size_t t, const Best& best) {
        if (format_ == Format::Json) {
            out_ << json{{"t", t}, {"most_recent_cp", best.most_recent_cp}, {"cost", best.cost}}.dump() << '\n';
        } else {
            if (!header_done_) {
                out_ << "t\tmost_recent_cp\tcost\n";
                header_done_ = true;
            }
            out_ << t << '\t' << best.most_recent_cp << '\t' << json(best.cost).dump() << '\n';
        }
        out_.flush();
    }

private:
    Format format_;
    std::ostream& out_;
    bool header_done_ = false;
};

// Every segmentation of a constant series has the same fit, so the optimum
// has no changepoints whatever K and beta are.
int constant_series(const RunConfig& config, std::span<const double> data, std::ostream& out) {
    json j;
    j["n"] = data.size();
    j["loss"] = loss::name(config.loss);
    j["mode"] = config.mode == Mode::Online ? "online" : "batch";
    j["K"] = uses_k(config.loss) && config.k ? json(*config.k) : json(nullptr);
    if (config.loss == loss::LossKind::Quantile) {
        j["quantile"] = config.quantile.value_or(0.5);
    }
    j["beta"] = nullable(config.beta);
    j["sigma_hat"] = 0.0;
    j["changepoints"] = json::array();
    j["segment_means"] = json::array({data.front()});
    j["total_cost"] = nullable(config.beta);
    j["min_segment_length"] = nullptr;
    j["max_intervals"] = nullptr;
    if (config.mode == Mode::Online) {
        RecordWriter records(config.format, out);
        for (std::size_t t = 1; t <= data.size(); ++t) {
            records.write(t, {config.beta.value_or(0.0), 0});
        }
    }
    write_summary(j, config.format, config.mode == Mode::Online, out);
    return kOk;
}

}  // namespace

int detect(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
    try {
        const bool online = config.mode == Mode::Online;
        if (!online || needs_whole_series(config)) {
            const auto data = read_series(in, config.column);
            if (data.empty()) {
                throw InputError("no data values");
            }
            if (online && config.input.empty()) {
                err << "note: K/beta depend on the whole series; records follow the end of input\n";
            }
            Resolved r;
            try {
                r = resolve(config, data);
            } catch (const ConfigError&) {
                const bool constant = std::all_of(data.begin(), data.end(), [&](double v) { return v == data.front(); });
                if (constant && !config.sigma) {
                    return constant_series(config, data, out);
                }
                throw;
            }
            OnlineState state(r.spec, r.beta);
            if (state.zero_penalty()) {
                err << "warning: beta = 0 makes every split free for unbounded losses\n";
            }
            state.reserve(data.size());
            RecordWriter records(config.format, out);
            for (double y : data) {
                state.step(y);
                if (online) {
                    records.write(state.t(), state.current_best());
                }
            }
            write_summary(summary(config, r, state), config.format, online, out);
            return kOk;
        }

        const Resolved r = resolve(config, {});
        OnlineState state(r.spec, r.beta);
        if (state.zero_penalty()) {
            err << "warning: beta = 0 makes every split free for unbounded losses\n";
        }
        SeriesReader reader(in, config.column);
        RecordWriter records(config.format, out);
        double y = 0.0;
        while (reader.next(y)) {
            state.step(y);
            records.write(state.t(), state.current_best());
        }
        if (state.t() == 0) {
            throw InputError("no data values");
        }
        Resolved final = r;
        final.n = state.t();
        write_summary(summary(config, final, state), config.format, true, out);
        return kOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kMalformedInput;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    }
}

std::vector<std::size_t> parse_n_grid(const std::string& text) {
    std::vector<std::size_t> grid;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const auto lo = to_index(trim(text.substr(0, dots)));
        const auto hi = to_index(trim(text.substr(dots + 2)));
        if (!lo || !hi || *lo == 0 || *lo > *hi) {
            throw ConfigError("bad n range '" + text + "'");
        }
        for (std::size_t n = *lo; n <= *hi; n *= 2) {
            grid.push_back(n);
        }
        return grid;
    }
    for (const auto& f : split(text, ',')) {
        const auto n = to_index(f);
        if (!n || *n == 0) {
            throw ConfigError("bad n value '" + f + "'");
        }
        grid.push_back(*n);
    }
    if (grid.empty() || !std::is_sorted(grid.begin(), grid.end())) {
        throw ConfigError("n grid must be non-empty and ascending");
    }
    return grid;
}

std::vector<simbench::Method> parse_methods(const std::string& text) {
    std::vector<simbench::Method> out;
    for (const auto& f : split(text, ',')) {
        try {
            out.push_back(simbench::parse_method(f));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (out.empty()) {
        throw ConfigError("no methods given");
    }
    return out;
}

int simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err) {
    try {
        simbench::ScenarioConfig scenario;
        if (config.scenario.rfind("bundled-", 0) == 0) {
            scenario = simbench::bundled_scenario(config.scenario);
        } else {
            std::ifstream f(config.scenario);
            if (!f) {
                throw InputError("cannot open scenario file '" + config.scenario + "'");
            }
            json j;
            try {
                f >> j;
            } catch (const json::exception& e) {
                throw InputError(std::string("scenario file: ") + e.what());
            }
            scenario = simbench::scenario_from_json(j);
        }
        if (config.df) {
            scenario.noise = simbench::Noise::student_t(*config.df, scenario.noise.scale);
        }
        scenario.seed = config.seed;
        scenario.validate();
        const auto rows =
            simbench::simulate(scenario, config.methods, config.reps, config.threads, config.beta_multiplier);
        if (config.format == Format::Json) {
            auto j = simbench::to_json(rows);
            j["seed"] = config.seed;
            j["noise"] = {{"kind", scenario.noise.kind == simbench::NoiseKind::Gaussian ? "gaussian" : "student_t"},
                          {"scale", scenario.noise.scale},
                          {"df", scenario.noise.df}};
            out << j.dump(2) << '\n';
        } else {
            out << "# rng=" << simbench::kRngAlgorithm << " seed=" << config.seed << '\n' << simbench::to_tsv(rows);
        }
        return kOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kMalformedInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    }
}

int bench(const BenchConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const auto report = simbench::runtime_scaling(config.loss, config.n_grid, config.changes, config.seed);
        const char* regime = config.changes == simbench::ChangeRegime::None ? "none" : "every100";
        if (config.format == Format::Json) {
            json rows = json::array();
            for (const auto& r : report.rows) {
                rows.push_back({{"n", r.n},
                                {"seconds", r.seconds},
                                {"max_intervals", r.max_pieces},
                                {"mean_intervals", r.mean_pieces},
                                {"changepoints", r.changepoints}});
            }
            out << json{{"loss", loss::name(config.loss)},
                        {"changes", regime},
                        {"rng", simbench::kRngAlgorithm},
                        {"seed", config.seed},
                        {"rows", rows},
                        {"slope", report.slope}}
                       .dump(2)
                << '\n';
        } else {
            out << "# loss=" << loss::name(config.loss) << " changes=" << regime << " rng=" << simbench::kRngAlgorithm
                << " seed=" << config.seed << '\n';
            out << "n\tseconds\tmax_intervals\tmean_intervals\tchangepoints\n";
            for (const auto& r : report.rows) {
                out << r.n << '\t' << r.seconds << '\t' << r.max_pieces << '\t' << r.mean_pieces << '\t'
                    << r.changepoints << '\n';
            }
            out << "# slope=" << report.slope << '\n';
        }
        return kOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    }
}

}  // namespace rfpop::cli
