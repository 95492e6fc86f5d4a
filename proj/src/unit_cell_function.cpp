#include "tmdiff/unit_cell_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tmdiff/errors.hpp"

namespace tmdiff {

namespace {

constexpr double kBreakTol = 1e-13;

// p(u) -> p(u + delta), in place, for coefficients c[0..deg].
void shift_poly(std::array<double, 8>& c, int deg, double delta) {
    if (delta == 0.0) return;
    // Horner-style Taylor shift.
    for (int j = 0; j < deg; ++j) {
        for (int k = deg - 1; k >= j; --k) {
            c[k] += delta * c[k + 1];
        }
    }
}

double eval_poly(const std::array<double, 8>& c, int deg, double u) {
    double v = c[deg];
    for (int k = deg - 1; k >= 0; --k) v = v * u + c[k];
    return v;
}

// Exact \int_0^len p(u) du.
long double integrate_poly(const double* c, int deg, double len) {
    long double acc = 0.0L;
    long double p = len;
    for (int k = 0; k <= deg; ++k) {
        acc += static_cast<long double>(c[k]) * p / static_cast<long double>(k + 1);
        p *= len;
    }
    return acc;
}

} // namespace

UnitCellFunction::UnitCellFunction() {
    breaks_ = {0.0, 1.0};
    coeffs_.push_back({});
    degree_ = 0;
}

UnitCellFunction UnitCellFunction::constant(double value) {
    UnitCellFunction f;
    f.coeffs_[0][0] = value;
    return f;
}

UnitCellFunction UnitCellFunction::piecewise_constant(const std::vector<double>& breakpoints,
                                                      const std::vector<double>& values) {
    std::vector<std::vector<double>> coeffs;
    coeffs.reserve(values.size());
    for (double v : values) coeffs.push_back({v});
    return from_pieces(breakpoints, coeffs);
}

UnitCellFunction UnitCellFunction::from_pieces(const std::vector<double>& breakpoints,
                                               const std::vector<std::vector<double>>& local_coeffs) {
    if (breakpoints.empty() || breakpoints.size() != local_coeffs.size())
        throw ValidationError("breakpoints: must be nonempty and match the coefficient list");
    if (std::abs(breakpoints.front()) > kBreakTol)
        throw ValidationError("breakpoints: first entry must be 0");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (breakpoints[i + 1] <= breakpoints[i] + kBreakTol)
            throw ValidationError("breakpoints: must be strictly increasing");
    }
    if (breakpoints.back() >= 1.0 - kBreakTol)
        throw ValidationError("breakpoints: entries must lie in [0, 1)");

    UnitCellFunction f;
    f.breaks_ = breakpoints;
    f.breaks_[0] = 0.0;
    f.breaks_.push_back(1.0);
    f.coeffs_.assign(local_coeffs.size(), {});
    f.degree_ = 0;
    for (std::size_t i = 0; i < local_coeffs.size(); ++i) {
        const auto& c = local_coeffs[i];
        if (static_cast<int>(c.size()) > kStorage)
            throw DegreeOverflowError(static_cast<int>(c.size()) - 1);
        for (std::size_t k = 0; k < c.size(); ++k) f.coeffs_[i][k] = c[k];
        f.degree_ = std::max(f.degree_, static_cast<int>(c.size()) - 1);
    }
    f.normalize_degree();
    return f;
}

UnitCellFunction UnitCellFunction::sampled(const std::function<double(double)>& fn,
                                           int pieces, int degree) {
    if (pieces < 1) throw ValidationError("pieces: must be >= 1");
    if (degree != 0 && degree != 1)
        throw ValidationError("degree: sampled representation supports degree 0 or 1");
    UnitCellFunction f;
    f.breaks_.resize(pieces + 1);
    f.coeffs_.assign(pieces, {});
    const double dy = 1.0 / pieces;
    for (int i = 0; i <= pieces; ++i) f.breaks_[i] = i * dy;
    f.breaks_[pieces] = 1.0;
    for (int i = 0; i < pieces; ++i) {
        if (degree == 0) {
            f.coeffs_[i][0] = fn((i + 0.5) * dy);
        } else {
            const double a = fn(i * dy);
            const double b = fn(i + 1 == pieces ? 0.0 : (i + 1) * dy); // periodic extension
            f.coeffs_[i][0] = a;
            f.coeffs_[i][1] = (b - a) / dy;
        }
    }
    f.degree_ = degree;
    f.normalize_degree();
    return f;
}

void UnitCellFunction::normalize_degree() {
    int deg = 0;
    for (const auto& c : coeffs_) {
        for (int k = kStorage - 1; k > deg; --k) {
            if (c[k] != 0.0) { deg = k; break; }
        }
    }
    degree_ = deg;
}

int UnitCellFunction::piece_index(double y) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
    int i = static_cast<int>(it - breaks_.begin()) - 1;
    if (i < 0) i = 0;
    if (i >= piece_count()) i = piece_count() - 1;
    return i;
}

double UnitCellFunction::operator()(double y) const {
    y -= std::floor(y); // wrap into [0, 1)
    const int i = piece_index(y);
    return eval_poly(coeffs_[i], degree_, y - breaks_[i]);
}

double UnitCellFunction::mean() const {
    long double acc = 0.0L;
    for (int i = 0; i < piece_count(); ++i) {
        acc += integrate_poly(coeffs_[i].data(), degree_, breaks_[i + 1] - breaks_[i]);
    }
    return static_cast<double>(acc);
}

UnitCellFunction UnitCellFunction::derivative() const {
    UnitCellFunction g;
    g.breaks_ = breaks_;
    g.coeffs_.assign(piece_count(), {});
    for (int i = 0; i < piece_count(); ++i) {
        for (int k = 1; k <= degree_; ++k) g.coeffs_[i][k - 1] = k * coeffs_[i][k];
    }
    g.degree_ = std::max(0, degree_ - 1);
    g.normalize_degree();
    return g;
}

UnitCellFunction UnitCellFunction::antiderivative() const {
    if (degree_ + 1 > kMaxDegree) throw DegreeOverflowError(degree_ + 1);
    UnitCellFunction g;
    g.breaks_ = breaks_;
    g.coeffs_.assign(piece_count(), {});
    long double running = 0.0L;
    for (int i = 0; i < piece_count(); ++i) {
        g.coeffs_[i][0] = static_cast<double>(running);
        for (int k = 0; k <= degree_; ++k) g.coeffs_[i][k + 1] = coeffs_[i][k] / (k + 1);
        running += integrate_poly(coeffs_[i].data(), degree_, breaks_[i + 1] - breaks_[i]);
    }
    g.degree_ = degree_ + 1;
    g.normalize_degree();
    return g;
}

UnitCellFunction UnitCellFunction::mean_zero() const {
    return *this - mean();
}

UnitCellFunction UnitCellFunction::reciprocal() const {
    UnitCellFunction g;
    g.breaks_ = breaks_;
    g.coeffs_.assign(piece_count(), {});
    bool linear = false;
    for (int i = 0; i < piece_count(); ++i) {
        bool piece_const = true;
        for (int k = 1; k <= degree_; ++k) {
            if (coeffs_[i][k] != 0.0) { piece_const = false; break; }
        }
        const double len = breaks_[i + 1] - breaks_[i];
        if (piece_const) {
            if (coeffs_[i][0] == 0.0)
                throw ValidationError("reciprocal: function vanishes on a piece");
            g.coeffs_[i][0] = 1.0 / coeffs_[i][0];
        } else {
            const double fa = eval_poly(coeffs_[i], degree_, 0.0);
            const double fb = eval_poly(coeffs_[i], degree_, len);
            if (fa == 0.0 || fb == 0.0)
                throw ValidationError("reciprocal: function vanishes at a breakpoint");
            g.coeffs_[i][0] = 1.0 / fa;
            g.coeffs_[i][1] = (1.0 / fb - 1.0 / fa) / len;
            linear = true;
        }
    }
    g.degree_ = linear ? 1 : 0;
    g.normalize_degree();
    return g;
}

std::vector<double> UnitCellFunction::merged_breakpoints(const UnitCellFunction& a,
                                                         const UnitCellFunction& b) {
    std::vector<double> out;
    out.reserve(a.breaks_.size() + b.breaks_.size());
    std::merge(a.breaks_.begin(), a.breaks_.end(), b.breaks_.begin(), b.breaks_.end(),
               std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end(),
                          [](double x, double y) { return std::abs(x - y) <= kBreakTol; }),
              out.end());
    out.front() = 0.0;
    out.back() = 1.0;
    return out;
}

UnitCellFunction UnitCellFunction::refined(const std::vector<double>& extra) const {
    std::vector<double> merged = breaks_;
    merged.insert(merged.end(), extra.begin(), extra.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end(),
                             [](double x, double y) { return std::abs(x - y) <= kBreakTol; }),
                 merged.end());
    if (merged.front() > kBreakTol) merged.insert(merged.begin(), 0.0);
    merged.front() = 0.0;
    if (merged.back() < 1.0 - kBreakTol) merged.push_back(1.0);
    merged.back() = 1.0;

    UnitCellFunction g;
    g.breaks_ = merged;
    g.coeffs_.assign(merged.size() - 1, {});
    g.degree_ = degree_;
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
        const double y0 = merged[i];
        // Locate the source piece containing [y0, merged[i+1]).
        int src = piece_index(0.5 * (y0 + merged[i + 1]));
        g.coeffs_[i] = coeffs_[src];
        shift_poly(g.coeffs_[i], degree_, y0 - breaks_[src]);
    }
    g.normalize_degree();
    return g;
}

template <typename Op>
UnitCellFunction UnitCellFunction::combine(const UnitCellFunction& a, const UnitCellFunction& b,
                                           Op op, bool is_product) {
    const auto grid = merged_breakpoints(a, b);
    const UnitCellFunction ra = a.refined(grid);
    const UnitCellFunction rb = b.refined(grid);
    UnitCellFunction g;
    g.breaks_ = ra.breaks_;
    g.coeffs_.assign(ra.piece_count(), {});
    if (is_product) {
        const int deg = a.degree_ + b.degree_;
        if (deg > kMaxDegree) throw DegreeOverflowError(deg);
        for (int i = 0; i < ra.piece_count(); ++i) {
            for (int k = 0; k <= a.degree_; ++k) {
                if (ra.coeffs_[i][k] == 0.0) continue;
                for (int l = 0; l <= b.degree_; ++l)
                    g.coeffs_[i][k + l] += ra.coeffs_[i][k] * rb.coeffs_[i][l];
            }
        }
        g.degree_ = deg;
    } else {
        const int deg = std::max(a.degree_, b.degree_);
        for (int i = 0; i < ra.piece_count(); ++i) {
            for (int k = 0; k <= deg; ++k)
                g.coeffs_[i][k] = op(ra.coeffs_[i][k], rb.coeffs_[i][k]);
        }
        g.degree_ = deg;
    }
    g.normalize_degree();
    return g;
}

UnitCellFunction operator+(const UnitCellFunction& a, const UnitCellFunction& b) {
    return UnitCellFunction::combine(a, b, [](double x, double y) { return x + y; }, false);
}

UnitCellFunction operator-(const UnitCellFunction& a, const UnitCellFunction& b) {
    return UnitCellFunction::combine(a, b, [](double x, double y) { return x - y; }, false);
}

UnitCellFunction operator*(const UnitCellFunction& a, const UnitCellFunction& b) {
    return UnitCellFunction::combine(a, b, [](double, double) { return 0.0; }, true);
}

UnitCellFunction UnitCellFunction::operator-() const {
    UnitCellFunction g = *this;
    for (auto& c : g.coeffs_)
        for (auto& v : c) v = -v;
    return g;
}

UnitCellFunction operator*(double s, const UnitCellFunction& f) {
    UnitCellFunction g = f;
    for (auto& c : g.coeffs_)
        for (auto& v : c) v *= s;
    return g;
}

UnitCellFunction operator*(const UnitCellFunction& f, double s) { return s * f; }

UnitCellFunction UnitCellFunction::operator+(double c) const {
    UnitCellFunction g = *this;
    for (auto& p : g.coeffs_) p[0] += c;
    return g;
}

UnitCellFunction UnitCellFunction::operator-(double c) const { return *this + (-c); }

double UnitCellFunction::mean_product(const UnitCellFunction& f, const UnitCellFunction& g) {
    const auto grid = merged_breakpoints(f, g);
    const UnitCellFunction rf = f.refined(grid);
    const UnitCellFunction rg = g.refined(grid);
    long double acc = 0.0L;
    double prod[16];
    for (int i = 0; i < rf.piece_count(); ++i) {
        std::fill(prod, prod + 16, 0.0);
        for (int k = 0; k <= f.degree_; ++k) {
            if (rf.coeffs_[i][k] == 0.0) continue;
            for (int l = 0; l <= g.degree_; ++l)
                prod[k + l] += rf.coeffs_[i][k] * rg.coeffs_[i][l];
        }
        acc += integrate_poly(prod, f.degree_ + g.degree_, rf.breaks_[i + 1] - rf.breaks_[i]);
    }
    return static_cast<double>(acc);
}

double UnitCellFunction::mean_product(const UnitCellFunction& f, const UnitCellFunction& g,
                                      const UnitCellFunction& h) {
    auto grid = merged_breakpoints(f, g);
    {
        UnitCellFunction tmp;
        tmp.breaks_ = grid;
        tmp.coeffs_.assign(grid.size() - 1, {});
        grid = merged_breakpoints(tmp, h);
    }
    const UnitCellFunction rf = f.refined(grid);
    const UnitCellFunction rg = g.refined(grid);
    const UnitCellFunction rh = h.refined(grid);
    long double acc = 0.0L;
    double fg[16];
    double fgh[24];
    for (int i = 0; i < rf.piece_count(); ++i) {
        std::fill(fg, fg + 16, 0.0);
        for (int k = 0; k <= f.degree_; ++k) {
            if (rf.coeffs_[i][k] == 0.0) continue;
            for (int l = 0; l <= g.degree_; ++l)
                fg[k + l] += rf.coeffs_[i][k] * rg.coeffs_[i][l];
        }
        std::fill(fgh, fgh + 24, 0.0);
        for (int k = 0; k <= f.degree_ + g.degree_; ++k) {
            if (fg[k] == 0.0) continue;
            for (int l = 0; l <= h.degree_; ++l)
                fgh[k + l] += fg[k] * rh.coeffs_[i][l];
        }
        acc += integrate_poly(fgh, f.degree_ + g.degree_ + h.degree_,
                              rf.breaks_[i + 1] - rf.breaks_[i]);
    }
    return static_cast<double>(acc);
}

double UnitCellFunction::max_abs() const {
    double m = 0.0;
    for (int i = 0; i < piece_count(); ++i) {
        const double len = breaks_[i + 1] - breaks_[i];
        const int samples = degree_ <= 1 ? 1 : 8 * degree_;
        for (int s = 0; s <= samples; ++s) {
            const double u = len * s / samples;
            m = std::max(m, std::abs(eval_poly(coeffs_[i], degree_, u)));
        }
    }
    return m;
}

double UnitCellFunction::min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < piece_count(); ++i) {
        const double len = breaks_[i + 1] - breaks_[i];
        const int samples = degree_ <= 1 ? 1 : 8 * degree_;
        for (int s = 0; s <= samples; ++s) {
            const double u = len * s / samples;
            m = std::min(m, eval_poly(coeffs_[i], degree_, u));
        }
    }
    return m;
}

bool UnitCellFunction::is_constant(double tol) const {
    const double m = mean();
    double dev = 0.0;
    for (int i = 0; i < piece_count(); ++i) {
        const double len = breaks_[i + 1] - breaks_[i];
        double bound = std::abs(coeffs_[i][0] - m);
        double p = len;
        for (int k = 1; k <= degree_; ++k) {
            bound += std::abs(coeffs_[i][k]) * p;
            p *= len;
        }
        dev = std::max(dev, bound);
    }
    return dev <= tol * std::max(1.0, std::abs(m));
}

double UnitCellFunction::continuity_defect() const {
    double worst = 0.0;
    for (int i = 0; i < piece_count(); ++i) {
        const int j = (i + 1) % piece_count();
        const double left = eval_poly(coeffs_[i], degree_, breaks_[i + 1] - breaks_[i]);
        const double right = coeffs_[j][0];
        worst = std::max(worst, std::abs(left - right));
    }
    return worst;
}

} // namespace tmdiff
