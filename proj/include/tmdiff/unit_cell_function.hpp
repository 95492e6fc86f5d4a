#ifndef TMDIFF_UNIT_CELL_FUNCTION_HPP
#define TMDIFF_UNIT_CELL_FUNCTION_HPP

#include <array>
#include <functional>
#include <vector>

namespace tmdiff {

/// Highest polynomial degree a materialized UnitCellFunction may carry.
/// Correctors of piecewise-constant laminates are cubic, so products of a
/// profile with a corrector stay within this bound. Moments of higher-degree
/// products never materialize an overflowing function (see mean_product).
inline constexpr int kMaxDegree = 4;

/**
 * @brief 1-periodic piecewise-polynomial function on the unit cell [0, 1).
 *
 * Each piece [breaks[i], breaks[i+1]) carries polynomial coefficients in the
 * local coordinate u = y - breaks[i]. All calculus on this class (means,
 * derivatives, antiderivatives, products) is exact closed-form polynomial
 * algebra; no quadrature is involved. Continuity across breakpoints is a
 * property of particular functions (correctors), not of the class.
 *
 * Instances are immutable after construction and safe to share across threads.
 */
class UnitCellFunction {
public:
    /// The zero function.
    UnitCellFunction();

    static UnitCellFunction constant(double value);

    /// Piecewise-constant function: values[i] on [breakpoints[i], breakpoints[i+1]),
    /// where breakpoints has the same length as values, starts at 0, and is
    /// strictly increasing with all entries < 1.
    static UnitCellFunction piecewise_constant(const std::vector<double>& breakpoints,
                                               const std::vector<double>& values);

    /// General constructor from per-piece local coefficient lists.
    /// breakpoints must start at 0, be strictly increasing, and stay < 1;
    /// piece i spans [breakpoints[i], breakpoints[i+1]) with wrap to 1.
    static UnitCellFunction from_pieces(const std::vector<double>& breakpoints,
                                        const std::vector<std::vector<double>>& local_coeffs);

    /// Sample a pointwise function onto `pieces` uniform cells as a
    /// piecewise-constant (degree 0, midpoint value) or piecewise-linear
    /// (degree 1, endpoint interpolation) representation.
    static UnitCellFunction sampled(const std::function<double(double)>& fn,
                                    int pieces, int degree = 1);

    /// Periodic pointwise evaluation.
    double operator()(double y) const;

    /// Exact cell mean <f>.
    double mean() const;

    /// Piecewise derivative (loses continuity information at breakpoints).
    UnitCellFunction derivative() const;

    /// Exact running integral y -> \int_0^y f. Continuous on [0,1); its wrap
    /// jump equals <f>, so it is 1-periodic exactly when f has zero mean.
    UnitCellFunction antiderivative() const;

    /// f - <f>.
    UnitCellFunction mean_zero() const;

    /// Pointwise reciprocal. Exact for piecewise-constant functions; for
    /// higher-degree pieces, falls back to piecewise-linear interpolation of
    /// 1/f through the piece endpoints (adequate for sampled profiles).
    UnitCellFunction reciprocal() const;

    /// Exact <f*g> without materializing the product (no degree cap).
    static double mean_product(const UnitCellFunction& f, const UnitCellFunction& g);
    /// Exact <f*g*h>.
    static double mean_product(const UnitCellFunction& f, const UnitCellFunction& g,
                               const UnitCellFunction& h);

    UnitCellFunction operator-() const;
    friend UnitCellFunction operator+(const UnitCellFunction& a, const UnitCellFunction& b);
    friend UnitCellFunction operator-(const UnitCellFunction& a, const UnitCellFunction& b);
    friend UnitCellFunction operator*(double s, const UnitCellFunction& f);
    friend UnitCellFunction operator*(const UnitCellFunction& f, double s);
    /// Materialized product; throws DegreeOverflowError beyond kMaxDegree.
    friend UnitCellFunction operator*(const UnitCellFunction& a, const UnitCellFunction& b);
    UnitCellFunction operator+(double c) const;
    UnitCellFunction operator-(double c) const;

    int piece_count() const { return static_cast<int>(coeffs_.size()); }
    int degree() const { return degree_; }
    const std::vector<double>& breakpoints() const { return breaks_; }

    /// Largest |f| over the cell (exact for degree <= 1, dense sampling above).
    double max_abs() const;
    /// Smallest f over the cell (exact for degree <= 1, dense sampling above).
    double min_value() const;
    /// True if f deviates from its mean by at most tol * max(1, |mean|).
    bool is_constant(double tol = 1e-12) const;

    /// Largest jump |f(b+) - f(b-)| over interior breakpoints and the wrap 1->0.
    double continuity_defect() const;

    /// Re-express this function on a refined partition containing the given
    /// breakpoints (values unchanged).
    UnitCellFunction refined(const std::vector<double>& extra_breakpoints) const;

    /// Union partition of two functions.
    static std::vector<double> merged_breakpoints(const UnitCellFunction& a,
                                                  const UnitCellFunction& b);

private:
    static constexpr int kStorage = 8; // coefficient slots per piece (degree <= 7)

    std::vector<double> breaks_;                    // piece_count + 1 entries, 0 ... 1
    std::vector<std::array<double, kStorage>> coeffs_; // local coefficients per piece
    int degree_ = 0;

    void normalize_degree();
    int piece_index(double y) const;

    template <typename Op>
    static UnitCellFunction combine(const UnitCellFunction& a, const UnitCellFunction& b, Op op,
                                    bool is_product);
};

} // namespace tmdiff

#endif
