#include <doctest.h>

#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "rfpop/loss.hpp"

using namespace rfpop;
using loss::LossSpec;

TEST_CASE("loss pieces match direct evaluation") {
    const std::vector<LossSpec> specs{LossSpec::square_error(), LossSpec::absolute_error(), LossSpec::huber(1.0),
                                      LossSpec::biweight(2.0), LossSpec::quantile(0.8)};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (const auto& spec : specs) {
        const double y = u(rng);
        const auto pieces = loss::loss_pieces(y, spec);
        CHECK(pieces.size() == spec.piece_count());
        pwq::validate_tiling(pieces);
        for (int i = 0; i < 500; ++i) {
            const double th = u(rng);
            for (const auto& p : pieces) {
                if (p.interval.contains(th)) {
                    CHECK(p.quad(th) == doctest::Approx(loss::loss_value(y, th, spec)));
                }
            }
        }
    }
}

TEST_CASE("loss values at known points") {
    CHECK(loss::loss_value(1.0, 4.0, LossSpec::square_error()) == 9.0);
    CHECK(loss::loss_value(1.0, 4.0, LossSpec::absolute_error()) == 3.0);
    CHECK(loss::loss_value(0.0, 4.0, LossSpec::huber(1.0)) == 7.0);
    CHECK(loss::loss_value(0.0, 0.5, LossSpec::huber(1.0)) == 0.25);
    CHECK(loss::loss_value(0.0, 4.0, LossSpec::biweight(3.0)) == 9.0);
    CHECK(loss::loss_value(0.0, 2.0, LossSpec::biweight(3.0)) == 4.0);
    CHECK(loss::loss_value(0.0, -1.0, LossSpec::quantile(0.25)) == doctest::Approx(0.5));
    CHECK(loss::loss_value(0.0, 1.0, LossSpec::quantile(0.25)) == doctest::Approx(1.5));
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(LossSpec::huber(0.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LossSpec::biweight(-1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LossSpec::quantile(1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(loss::parse_kind("l3"), std::invalid_argument);
    CHECK(loss::parse_kind("biweight") == loss::LossKind::Biweight);
}

TEST_CASE("segment fit matches the brute-force oracle") {
    const std::vector<LossSpec> specs{LossSpec::square_error(), LossSpec::absolute_error(), LossSpec::huber(1.0),
                                      LossSpec::biweight(1.5), LossSpec::quantile(0.3)};
    std::mt19937_64 rng(5);
    std::student_t_distribution<double> t(2.0);
    for (const auto& spec : specs) {
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<double> ys(1 + rep % 15);
            for (double& y : ys) {
                y = t(rng);
            }
            const auto fit = loss::fit_segment(ys, spec);
            const double want = oracle::segment_cost(ys, spec);
            REQUIRE(fit.cost == doctest::Approx(want).epsilon(1e-10));
            double at = 0.0;
            for (double y : ys) {
                at += loss::loss_value(y, fit.theta, spec);
            }
            REQUIRE(at == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("square-error fit is the mean") {
    const std::vector<double> ys{1.0, 2.0, 6.0};
    const auto fit = loss::fit_segment(ys, LossSpec::square_error());
    CHECK(fit.theta == doctest::Approx(3.0));
    CHECK(fit.cost == doctest::Approx(14.0));
}

TEST_CASE("biweight fit ignores a far outlier") {
    const std::vector<double> ys{0.0, 0.0, 0.0, 0.0, 100.0, 0.0, 0.0, 0.0, 0.0};
    const auto fit = loss::fit_segment(ys, LossSpec::biweight(3.0));
    CHECK(fit.theta == doctest::Approx(0.0));
    CHECK(fit.cost == doctest::Approx(9.0));
}

TEST_CASE("phi^2 expectation: frozen values and closed forms") {
    CHECK(loss::phi_sq_expectation(LossSpec::square_error()) == 1.0);
    // Frozen from the erfc closed form.
    CHECK(loss::phi_sq_expectation(LossSpec::biweight(3.0)) == doctest::Approx(0.9707091134651118).epsilon(1e-10));
    CHECK(loss::phi_sq_expectation(LossSpec::huber(1.345)) == doctest::Approx(0.7101645482690486).epsilon(1e-10));
    CHECK(loss::phi_sq_expectation(LossSpec::absolute_error()) == doctest::Approx(1.0).epsilon(1e-10));
    for (double u : {0.1, 0.3, 0.5, 0.9}) {
        CHECK(loss::phi_sq_expectation(LossSpec::quantile(u)) ==
              doctest::Approx(oracle::phi_sq_closed(LossSpec::quantile(u))).epsilon(1e-10));
    }
    double prev = 0.0;
    for (double k = 0.25; k <= 6.0; k += 0.25) {
        const double h = loss::phi_sq_expectation(LossSpec::huber(k));
        CHECK(h == doctest::Approx(oracle::phi_sq_closed(LossSpec::huber(k))).epsilon(1e-10));
        CHECK(h > prev);
        prev = h;
        CHECK(loss::phi_sq_expectation(LossSpec::biweight(k)) ==
              doctest::Approx(oracle::phi_sq_closed(LossSpec::biweight(k))).epsilon(1e-10));
    }
}

TEST_CASE("MAD scale estimate") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 2.0);
    std::vector<double> data(20000);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = z(rng) + (i >= 10000 ? 50.0 : 0.0);
    }
    const auto s = loss::mad_sigma(data);
    CHECK_FALSE(s.degenerate);
    CHECK(s.sigma == doctest::Approx(2.0).epsilon(0.05));
    const std::vector<double> flat(10, 3.0);
    CHECK(loss::mad_sigma(flat).degenerate);
}

TEST_CASE("default config") {
    const auto c = loss::default_config(loss::LossKind::Biweight, 2.0, 100);
    CHECK(c.spec.k == doctest::Approx(6.0));
    CHECK(c.penalty.beta == doctest::Approx(2.0 * 4.0 * std::log(100.0) * 0.9707091134651118).epsilon(1e-9));
    const auto l2 = loss::default_config(loss::LossKind::SquareError, 1.0, 1000);
    CHECK(l2.penalty.beta == doctest::Approx(2.0 * std::log(1000.0)));
    CHECK_THROWS_AS(loss::default_config(loss::LossKind::Biweight, 0.0, 10), std::invalid_argument);
    const std::vector<double> flat(10, 1.0);
    CHECK_THROWS_AS(loss::default_config(loss::LossKind::Biweight, flat), std::invalid_argument);
}

TEST_CASE("minimum segment length") {
    CHECK(loss::min_segment_length(LossSpec::biweight(2.0), 70.0) == std::size_t{18});
    CHECK(loss::min_segment_length(LossSpec::biweight(3.0), 9.0) == std::size_t{2});
    CHECK(loss::min_segment_length(LossSpec::biweight(3.0), 8.0) == std::size_t{1});
    CHECK_FALSE(loss::min_segment_length(LossSpec::huber(1.0), 10.0).has_value());
}

TEST_CASE("running median and K diagnostic") {
    const std::vector<double> xs{5.0, 1.0, 3.0, 2.0, 4.0};
    const auto rm = loss::running_median(xs, 3);
    REQUIRE(rm.size() == 5);
    CHECK(rm[0] == doctest::Approx(3.0));
    CHECK(rm[1] == 3.0);
    CHECK(rm[2] == 2.0);
    CHECK(rm[3] == 3.0);
    CHECK(rm[4] == doctest::Approx(3.0));

    std::mt19937_64 rng(21);
    std::normal_distribution<double> z;
    std::vector<double> data(5000);
    for (double& d : data) {
        d = z(rng);
    }
    const auto ok = loss::biweight_k_diagnostic(data, 3.0);
    CHECK(ok.sufficient);
    CHECK(ok.stat < 3.0);
    CHECK_FALSE(loss::biweight_k_diagnostic(data, 0.5).sufficient);
}
