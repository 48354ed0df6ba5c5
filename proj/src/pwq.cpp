#include "rfpop/pwq.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rfpop::pwq {

namespace {

#ifndef NDEBUG
void debug_check(const PiecewiseQuadFn& f) { f.check_invariants(); }
#else
void debug_check(const PiecewiseQuadFn&) {}
#endif

double term_scale(const Quadratic& q, double x) {
    return std::max({std::abs(q.a * x * x), std::abs(q.b * x), std::abs(q.c)});
}

// A point strictly inside (lo, hi].
double sample_point(double lo, double hi) {
    if (std::isinf(lo) && std::isinf(hi)) {
        return 0.0;
    }
    if (std::isinf(lo)) {
        return hi - std::max(1.0, std::abs(hi));
    }
    if (std::isinf(hi)) {
        return lo + std::max(1.0, std::abs(lo));
    }
    return lo + 0.5 * (hi - lo);
}

bool near(double x, double endpoint) {
    return std::isfinite(endpoint) && std::abs(x - endpoint) <= kSnapTol * std::max(1.0, std::abs(endpoint));
}

// Real roots of q(theta) = 0, ascending. A non-positive discriminant yields no
// roots: tangency never splits a piece.
int real_roots(const Quadratic& q, double& r1, double& r2) {
    if (q.a != 0.0) {
        const double disc = q.b * q.b - 4.0 * q.a * q.c;
        if (!(disc > 0.0)) {
            return 0;
        }
        const double s = std::sqrt(disc);
        const double t = -0.5 * (q.b + std::copysign(s, q.b));
        double x1 = t / q.a;
        double x2 = t != 0.0 ? q.c / t : -x1;
        if (x1 > x2) {
            std::swap(x1, x2);
        }
        r1 = x1;
        r2 = x2;
        return x1 == x2 ? 1 : 2;
    }
    if (q.b != 0.0) {
        r1 = -q.c / q.b;
        return 1;
    }
    return 0;
}

// Sign classification of d = q - c at x given the roots of d: true when d < 0.
bool below_at(const Quadratic& d, int nroots, double r1, double r2, double x) {
    if (d.a > 0.0) {
        return nroots == 2 && x > r1 && x < r2;
    }
    if (d.a < 0.0) {
        return !(nroots == 2 && x >= r1 && x <= r2);
    }
    if (d.b != 0.0) {
        return d.b * (x - r1) < 0.0;
    }
    return d.c < 0.0;
}

}  // namespace

bool Quadratic::approx_equal(const Quadratic& o, double tol) const {
    return std::abs(a - o.a) <= tol && std::abs(b - o.b) <= tol && std::abs(c - o.c) <= tol;
}

PiecewiseQuadFn PiecewiseQuadFn::constant(double value, std::size_t tau) {
    PiecewiseQuadFn f;
    f.pieces_.push_back({kInf, Quadratic::constant(value), tau});
    return f;
}

PiecewiseQuadFn PiecewiseQuadFn::from_pieces(std::vector<Piece> pieces) {
    if (pieces.empty()) {
        throw std::invalid_argument("piecewise quadratic needs at least one piece");
    }
    PiecewiseQuadFn f;
    f.reserve(pieces.size());
    double prev = -kInf;
    for (const auto& p : pieces) {
        if (std::isnan(p.hi) || !(p.hi > prev)) {
            throw std::invalid_argument("piece endpoints must be strictly increasing");
        }
        f.push(p.hi, p.quad, p.tau);
        prev = p.hi;
    }
    if (prev != kInf) {
        throw std::invalid_argument("last piece must extend to +inf");
    }
    return f;
}

PiecewiseQuadFn PiecewiseQuadFn::from_breakpoints(Quadratic leftmost, std::vector<Breakpoint> breakpoints,
                                                  std::optional<Quadratic> rightmost) {
    std::sort(breakpoints.begin(), breakpoints.end(),
              [](const Breakpoint& l, const Breakpoint& r) { return l.x < r.x; });
    PiecewiseQuadFn f;
    f.reserve(breakpoints.size() + 1);
    Quadratic current = leftmost;
    std::size_t i = 0;
    while (i < breakpoints.size()) {
        const double x = breakpoints[i].x;
        if (!std::isfinite(x)) {
            throw std::invalid_argument("breakpoints must be finite");
        }
        f.push(x, current, 0);
        for (; i < breakpoints.size() && breakpoints[i].x == x; ++i) {
            current += breakpoints[i].delta;
        }
    }
    f.push(kInf, rightmost.value_or(current), 0);
    debug_check(f);
    return f;
}

std::size_t PiecewiseQuadFn::locate(double theta) const {
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), theta,
                               [](const Piece& p, double x) { return p.hi < x; });
    if (it == pieces_.end()) {
        // Only reachable for NaN or an empty function.
        throw std::out_of_range("theta outside the function domain");
    }
    return static_cast<std::size_t>(it - pieces_.begin());
}

void PiecewiseQuadFn::push(double hi, const Quadratic& quad, std::size_t tau) {
    if (!pieces_.empty()) {
        Piece& last = pieces_.back();
        if (!(hi > last.hi)) {
            return;  // empty interval
        }
        if (last.tau == tau && last.quad.approx_equal(quad)) {
            last.hi = hi;
            return;
        }
    }
    pieces_.push_back({hi, quad, tau});
}

void PiecewiseQuadFn::check_invariants(double rel_tol) const {
    if (pieces_.empty()) {
        throw std::logic_error("empty piecewise quadratic");
    }
    if (pieces_.back().hi != kInf) {
        throw std::logic_error("last piece does not extend to +inf");
    }
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
        const Piece& l = pieces_[i];
        const Piece& r = pieces_[i + 1];
        if (!std::isfinite(l.hi) || !(l.hi < r.hi)) {
            std::ostringstream os;
            os << "pieces " << i << "," << i + 1 << " are not ordered";
            throw std::logic_error(os.str());
        }
        if (l.tau == r.tau && l.quad.approx_equal(r.quad)) {
            std::ostringstream os;
            os << "pieces " << i << "," << i + 1 << " should have been merged";
            throw std::logic_error(os.str());
        }
        const double x = l.hi;
        const double scale = std::max({1.0, term_scale(l.quad, x), term_scale(r.quad, x)});
        if (std::abs(l.quad(x) - r.quad(x)) > rel_tol * scale) {
            std::ostringstream os;
            os.precision(17);
            os << "discontinuity at " << x << ": " << l.quad(x) << " vs " << r.quad(x);
            throw std::logic_error(os.str());
        }
    }
}

PiecewiseQuadFn make_initial(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("penalty must be finite and non-negative");
    }
    return PiecewiseQuadFn::constant(beta, 0);
}

void validate_tiling(std::span<const LossPiece> loss) {
    if (loss.empty()) {
        throw std::invalid_argument("loss has no pieces");
    }
    double prev = -kInf;
    for (const auto& p : loss) {
        if (p.interval.lo != prev || !(p.interval.hi > p.interval.lo)) {
            throw std::invalid_argument("loss pieces do not tile the line");
        }
        prev = p.interval.hi;
    }
    if (prev != kInf) {
        throw std::invalid_argument("loss pieces do not reach +inf");
    }
}

void add_loss_into(const PiecewiseQuadFn& f, std::span<const LossPiece> loss, PiecewiseQuadFn& out) {
    assert(&f != &out);
    out.clear();
    out.reserve(f.size() + loss.size());
    const auto pieces = f.pieces();
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < pieces.size() && j < loss.size()) {
        const double fh = pieces[i].hi;
        const double lh = loss[j].interval.hi;
        const double hi = std::min(fh, lh);
        out.push(hi, pieces[i].quad + loss[j].quad, pieces[i].tau);
        if (hi == fh) {
            ++i;
        }
        if (hi == lh) {
            ++j;
        }
    }
    debug_check(out);
}

PiecewiseQuadFn add_loss(const PiecewiseQuadFn& f, std::span<const LossPiece> loss) {
    validate_tiling(loss);
    PiecewiseQuadFn out;
    add_loss_into(f, loss, out);
    return out;
}

Minimum global_min(const PiecewiseQuadFn& f) {
    if (f.empty()) {
        throw std::invalid_argument("global_min of an empty function");
    }
    Minimum best{kInf, 0.0, 0, 0};
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto [lo, hi] = f.interval(i);
        const Quadratic& q = f[i].quad;
        double x = 0.0;
        if (q.a > 0.0) {
            x = -q.b / (2.0 * q.a);
            if (x <= lo) {
                x = lo;
            } else if (x > hi) {
                x = hi;
            }
        } else if (q.a == 0.0 && q.b == 0.0) {
            x = std::isfinite(hi) ? hi : (std::isfinite(lo) ? lo : 0.0);
        } else {
            // Linear or concave: the minimum sits on an endpoint.
            const bool left = q.a == 0.0 ? q.b > 0.0 : q(lo) <= q(hi);
            x = left ? lo : hi;
            if (std::isinf(x) || (q.a < 0.0 && (std::isinf(lo) || std::isinf(hi)))) {
                throw std::domain_error("piecewise quadratic is unbounded below");
            }
        }
        const double v = q(x);
        if (v < best.value) {
            best = {v, x, f[i].tau, i};
        }
    }
    return best;
}

void min_with_constant_into(const PiecewiseQuadFn& f, double c, std::size_t new_tau, PiecewiseQuadFn& out) {
    assert(&f != &out);
    if (!std::isfinite(c)) {
        throw std::invalid_argument("constant must be finite");
    }
    out.clear();
    out.reserve(f.size() + 4);
    const Quadratic flat = Quadratic::constant(c);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto [lo, hi] = f.interval(i);
        const Piece& p = f[i];
        const Quadratic d = p.quad - flat;

        double r1 = 0.0;
        double r2 = 0.0;
        const int nroots = real_roots(d, r1, r2);
        double cuts[3];
        int ncuts = 0;
        for (int k = 0; k < nroots; ++k) {
            const double r = k == 0 ? r1 : r2;
            if (r > lo && r < hi && !near(r, lo) && !near(r, hi)) {
                cuts[ncuts++] = r;
            }
        }
        cuts[ncuts++] = hi;

        double left = lo;
        for (int k = 0; k < ncuts; ++k) {
            const double right = cuts[k];
            if (below_at(d, nroots, r1, r2, sample_point(left, right))) {
                out.push(right, p.quad, p.tau);
            } else {
                out.push(right, flat, new_tau);
            }
            left = right;
        }
    }
    debug_check(out);
}

PiecewiseQuadFn min_with_constant(const PiecewiseQuadFn& f, double c, std::size_t new_tau) {
    PiecewiseQuadFn out;
    min_with_constant_into(f, c, new_tau, out);
    return out;
}

std::string to_string(const PiecewiseQuadFn& f) {
    std::ostringstream os;
    os.precision(10);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto iv = f.interval(i);
        const auto& q = f[i].quad;
        os << "(" << iv.lo << ", " << iv.hi << "] " << q.a << "t^2 + " << q.b << "t + " << q.c
           << " tau=" << f[i].tau << "\n";
    }
    return os.str();
}

}  // namespace rfpop::pwq
