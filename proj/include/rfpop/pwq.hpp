#pragma once

// Piecewise-quadratic functions of a scalar location parameter theta.
//
// A PiecewiseQuadFn is an ordered list of pieces tiling the whole real line.
// Piece i covers (hi_{i-1}, hi_i] with hi_{-1} = -inf and the last hi = +inf,
// and carries a quadratic a*theta^2 + b*theta + c plus the label of the most
// recent changepoint that produced it.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfpop::pwq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coefficient tolerance used when deciding whether two neighbouring pieces
/// are the same function.
inline constexpr double kMergeTol = 1e-12;

/// Roots closer than this (relative to max(1, |endpoint|)) to an interval
/// endpoint are snapped onto it.
inline constexpr double kSnapTol = 1e-12;

struct Quadratic {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double operator()(double theta) const { return (a * theta + b) * theta + c; }

    Quadratic& operator+=(const Quadratic& o) {
        a += o.a;
        b += o.b;
        c += o.c;
        return *this;
    }
    Quadratic& operator-=(const Quadratic& o) {
        a -= o.a;
        b -= o.b;
        c -= o.c;
        return *this;
    }
    friend Quadratic operator+(Quadratic l, const Quadratic& r) { return l += r; }
    friend Quadratic operator-(Quadratic l, const Quadratic& r) { return l -= r; }

    bool approx_equal(const Quadratic& o, double tol = kMergeTol) const;

    static Quadratic constant(double value) { return {0.0, 0.0, value}; }
};

/// Half-open interval (lo, hi]; either end may be infinite.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    bool contains(double x) const { return x > lo && x <= hi; }
};

/// One piece of a loss function: no changepoint label attached.
struct LossPiece {
    Interval interval;
    Quadratic quad;
};

struct Piece {
    double hi = kInf;
    Quadratic quad;
    std::size_t tau = 0;
};

/// Change of the summed quadratic when a sweep crosses x from left to right.
struct Breakpoint {
    double x = 0.0;
    Quadratic delta;
};

struct Minimum {
    double value = 0.0;
    double argmin = 0.0;
    std::size_t tau = 0;
    std::size_t piece = 0;
};

class PiecewiseQuadFn {
public:
    PiecewiseQuadFn() = default;

    /// A single piece covering the whole line.
    static PiecewiseQuadFn constant(double value, std::size_t tau = 0);

    /// Builds from explicit pieces. Upper endpoints must be strictly
    /// increasing and end at +inf; equal neighbours are merged.
    static PiecewiseQuadFn from_pieces(std::vector<Piece> pieces);

    /// Sum of a leftmost quadratic and the changes recorded at breakpoints,
    /// swept in increasing x. All pieces get label 0. When given, rightmost
    /// replaces the swept last piece so that rounding in the running sum
    /// cannot tilt an unbounded end.
    static PiecewiseQuadFn from_breakpoints(Quadratic leftmost, std::vector<Breakpoint> breakpoints,
                                            std::optional<Quadratic> rightmost = std::nullopt);

    std::size_t size() const { return pieces_.size(); }
    bool empty() const { return pieces_.empty(); }
    std::span<const Piece> pieces() const { return pieces_; }
    const Piece& operator[](std::size_t i) const { return pieces_[i]; }
    Interval interval(std::size_t i) const {
        return {i == 0 ? -kInf : pieces_[i - 1].hi, pieces_[i].hi};
    }

    /// Index of the piece whose interval contains theta.
    std::size_t locate(double theta) const;
    double operator()(double theta) const { return pieces_[locate(theta)].quad(theta); }

    /// Throws std::logic_error describing the first violated invariant
    /// (tiling, merged uniqueness, continuity within rel_tol).
    void check_invariants(double rel_tol = 1e-9) const;

    /// Appends a piece ending at hi, merging it into the last piece when the
    /// quadratic and label agree. Used by the builders below.
    void push(double hi, const Quadratic& quad, std::size_t tau);
    void clear() { pieces_.clear(); }
    void reserve(std::size_t n) { pieces_.reserve(n); }

private:
    std::vector<Piece> pieces_;
};

PiecewiseQuadFn make_initial(double beta);

/// Pointwise sum of f and a line-tiling loss; boundaries are the union of
/// both inputs, labels come from f.
PiecewiseQuadFn add_loss(const PiecewiseQuadFn& f, std::span<const LossPiece> loss);
void add_loss_into(const PiecewiseQuadFn& f, std::span<const LossPiece> loss, PiecewiseQuadFn& out);

/// Leftmost piece wins ties. Throws std::domain_error if f is unbounded below.
Minimum global_min(const PiecewiseQuadFn& f);

/// Pointwise min of f and the constant c. Regions where f >= c become the
/// constant with label new_tau.
PiecewiseQuadFn min_with_constant(const PiecewiseQuadFn& f, double c, std::size_t new_tau);
void min_with_constant_into(const PiecewiseQuadFn& f, double c, std::size_t new_tau,
                            PiecewiseQuadFn& out);

inline std::size_t piece_count(const PiecewiseQuadFn& f) { return f.size(); }
inline double evaluate(const PiecewiseQuadFn& f, double theta) { return f(theta); }

/// Checks that loss pieces tile the line in order; throws std::invalid_argument.
void validate_tiling(std::span<const LossPiece> loss);

std::string to_string(const PiecewiseQuadFn& f);

}  // namespace rfpop::pwq
