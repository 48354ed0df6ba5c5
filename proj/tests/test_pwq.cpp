#include <doctest.h>

#include <random>
#include <stdexcept>

#include "rfpop/loss.hpp"
#include "rfpop/pwq.hpp"

using namespace rfpop;
using pwq::PiecewiseQuadFn;
using pwq::Quadratic;

TEST_CASE("initial function is a single constant piece") {
    const auto f = pwq::make_initial(5.0);
    REQUIRE(f.size() == 1);
    CHECK(f(-1e9) == 5.0);
    CHECK(f(3.0) == 5.0);
    CHECK(f[0].tau == 0);
}

TEST_CASE("adding a square-error loss to a constant") {
    const auto f = pwq::add_loss(pwq::make_initial(1.0), loss::loss_pieces(2.0, loss::LossSpec::square_error()));
    REQUIRE(f.size() == 1);
    CHECK(f(2.0) == doctest::Approx(1.0));
    CHECK(f(5.0) == doctest::Approx(10.0));
    const auto m = pwq::global_min(f);
    CHECK(m.value == doctest::Approx(1.0));
    CHECK(m.argmin == doctest::Approx(2.0));
}

TEST_CASE("min with a constant splits at the two roots") {
    const auto f = PiecewiseQuadFn::from_pieces({{pwq::kInf, {1.0, 0.0, 0.0}, 0}});
    const auto g = pwq::min_with_constant(f, 4.0, 7);
    REQUIRE(g.size() == 3);
    CHECK(g[0].hi == doctest::Approx(-2.0));
    CHECK(g[1].hi == doctest::Approx(2.0));
    CHECK(g[0].tau == 7);
    CHECK(g[1].tau == 0);
    CHECK(g[2].tau == 7);
    CHECK(g(0.5) == doctest::Approx(0.25));
    CHECK(g(10.0) == 4.0);
    g.check_invariants();
}

TEST_CASE("tangent constant does not split") {
    const auto f = PiecewiseQuadFn::from_pieces({{pwq::kInf, {1.0, -4.0, 4.0}, 3}});
    const auto g = pwq::min_with_constant(f, 0.0, 9);
    REQUIRE(g.size() == 1);
    CHECK(g[0].tau == 9);
    CHECK(g(2.0) == 0.0);
}

TEST_CASE("constant below the whole function leaves it unchanged") {
    const auto f = PiecewiseQuadFn::from_pieces({{pwq::kInf, {1.0, 0.0, 1.0}, 2}});
    const auto g = pwq::min_with_constant(f, 0.5, 5);
    REQUIRE(g.size() == 1);
    CHECK(g[0].tau == 5);
    const auto h = pwq::min_with_constant(f, 100.0, 5);
    CHECK(h.size() == 3);
}

TEST_CASE("neighbouring identical pieces merge") {
    const auto f = PiecewiseQuadFn::from_pieces(
        {{0.0, {0.0, 0.0, 1.0}, 1}, {1.0, {0.0, 0.0, 1.0}, 1}, {pwq::kInf, {0.0, 0.0, 1.0}, 2}});
    CHECK(f.size() == 2);
}

TEST_CASE("invariant checker rejects discontinuity") {
    const auto f = PiecewiseQuadFn::from_pieces({{0.0, {0.0, 0.0, 1.0}, 1}, {pwq::kInf, {0.0, 0.0, 2.0}, 1}});
    CHECK_THROWS_AS(f.check_invariants(), std::logic_error);
}

TEST_CASE("unbounded-below function has no minimum") {
    const auto f = PiecewiseQuadFn::from_pieces({{pwq::kInf, {0.0, 1.0, 0.0}, 0}});
    CHECK_THROWS_AS(pwq::global_min(f), std::domain_error);
}

TEST_CASE("global min prefers the leftmost piece on ties") {
    const auto f = PiecewiseQuadFn::from_pieces(
        {{0.0, {1.0, 2.0, 1.0}, 4}, {pwq::kInf, {1.0, -2.0, 1.0}, 6}});  // (x+1)^2, (x-1)^2
    const auto m = pwq::global_min(f);
    CHECK(m.value == doctest::Approx(0.0));
    CHECK(m.tau == 4);
    CHECK(m.argmin == doctest::Approx(-1.0));
}

TEST_CASE("validate_tiling rejects gaps") {
    std::vector<pwq::LossPiece> bad{{{-pwq::kInf, 0.0}, {}}, {{1.0, pwq::kInf}, {}}};
    CHECK_THROWS_AS(pwq::validate_tiling(bad), std::invalid_argument);
    CHECK_NOTHROW(pwq::validate_tiling(loss::loss_pieces(0.0, loss::LossSpec::huber(1.0))));
}

TEST_CASE("random operation sequences agree pointwise with direct evaluation") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> y(0.0, 3.0);
    std::uniform_real_distribution<double> probe(-20.0, 20.0);
    const std::vector<loss::LossSpec> specs{loss::LossSpec::square_error(), loss::LossSpec::absolute_error(),
                                            loss::LossSpec::huber(1.5), loss::LossSpec::biweight(2.0),
                                            loss::LossSpec::quantile(0.3)};
    for (const auto& spec : specs) {
        CAPTURE(loss::name(spec.kind));
        auto f = pwq::make_initial(2.0);
        for (int step = 0; step < 60; ++step) {
            const double yt = y(rng);
            const auto prev = f;
            f = pwq::add_loss(f, loss::loss_pieces(yt, spec));
            f.check_invariants();
            for (int i = 0; i < 1000; ++i) {
                const double th = probe(rng);
                REQUIRE(f(th) == doctest::Approx(prev(th) + loss::loss_value(yt, th, spec)).epsilon(1e-9));
            }
            const auto m = pwq::global_min(f);
            for (int i = 0; i < 200; ++i) {
                REQUIRE(f(probe(rng)) >= m.value - 1e-9 * (1.0 + std::abs(m.value)));
            }
            REQUIRE(f(m.argmin) == doctest::Approx(m.value).epsilon(1e-9));
            const double c = m.value + 2.0;
            const auto before = f;
            f = pwq::min_with_constant(f, c, static_cast<std::size_t>(step + 1));
            f.check_invariants();
            for (int i = 0; i < 1000; ++i) {
                const double th = probe(rng);
                REQUIRE(f(th) == doctest::Approx(std::min(before(th), c)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("from_breakpoints sums shifted pieces") {
    // |x| built as -x on the left with a +2x change at 0.
    const auto f = PiecewiseQuadFn::from_breakpoints({0.0, -1.0, 0.0}, {{0.0, {0.0, 2.0, 0.0}}});
    REQUIRE(f.size() == 2);
    CHECK(f(-3.0) == doctest::Approx(3.0));
    CHECK(f(3.0) == doctest::Approx(3.0));
}
