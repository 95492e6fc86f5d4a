#ifndef TMDIFF_BLOCH_HPP
#define TMDIFF_BLOCH_HPP

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "tmdiff/laminate.hpp"

namespace tmdiff::bloch {

using cplx = std::complex<double>;

enum class Frame { Moving, Fixed };

/// The two layer exponents of one phase: roots of
/// sigma r^2 + b r - i omega_tilde gamma = 0, where b = v_m gamma (Model 1)
/// or b = v_m rho0_bar c_bar (Model 2). omega_tilde is the moving-frame
/// frequency; this choice reproduces the homogeneous-medium branch exactly.
struct PhaseRoots {
    cplx plus, minus;
    cplx spread; // sqrt of the discriminant; plus - minus = spread / sigma
};

PhaseRoots layer_roots(double sigma, double b, double gamma, cplx omega_tilde);

/// 4x4 boundary/continuity matrix of the bilayer in the moving frame. The
/// unknowns are the four layer coefficients multiplying exp(r_j^± xi).
struct BlochMatrix {
    std::array<std::array<cplx, 4>, 4> entries{};
    PhaseRoots r_a, r_b;
    double kappa_tilde = 0.0;
    cplx omega_tilde{};
    Model model = Model::Model1;
};

BlochMatrix assemble(double kappa_tilde, cplx omega_tilde, const BilayerSpec& bilayer,
                     Model model);

/// Determinant after dividing each row by its largest-modulus entry; the
/// product of the scale factors is reported separately through log_scale
/// (natural log). Zeros of the determinant are preserved. Throws
/// SingularStructureError on an all-zero row.
cplx det_scaled(const std::array<std::array<cplx, 4>, 4>& m, double* log_scale = nullptr);
cplx det_scaled(const BlochMatrix& m, double* log_scale = nullptr);

/// Entire dispersion function f(omega_tilde) = det(M) / (spread_A * spread_B).
/// Dividing by the root spreads removes the square-root branch ambiguity and
/// the spurious zeros at coincident layer exponents, so f is single-valued
/// and analytic; its zeros are exactly the dispersion points.
class DispersionFunction {
public:
    DispersionFunction(const BilayerSpec& bilayer, Model model, double kappa_tilde);
    cplx operator()(cplx omega_tilde) const;
    double residual(cplx omega_tilde) const; // |det_scaled| certificate
    double kappa_tilde() const { return kappa_tilde_; }

private:
    BilayerSpec bilayer_;
    Model model_;
    double kappa_tilde_;
};

struct BranchOptions {
    double residual_tol = 1e-10; // acceptance bound on |det_scaled|
    double step_rel_tol = 1e-12; // Newton relative step tolerance
    int max_iterations = 50;
    int slow_iteration_threshold = 10; // continuation halves its step beyond this
    int max_bisection_depth = 6;
    double jump_factor = 50.0; // branch-switch warning threshold
};

struct RootResult {
    cplx omega_tilde{};
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Damped complex Newton (secant fallback) on the entire dispersion function.
RootResult refine_root(const DispersionFunction& f, cplx guess, double scale,
                       const BranchOptions& opt = {});

/// One sampled complex-frequency branch, stored in both frames
/// (omega_fixed = omega_moving + v_m * kappa).
struct DispersionBranch {
    std::vector<double> kappa;
    std::vector<cplx> omega_moving;
    std::vector<cplx> omega_fixed;
    std::vector<double> residual;
    std::vector<bool> converged;
    std::vector<bool> jump_warning;
    int branch_index = 0;
};

/// Uniformly spaced grid over [0, kappa_max] (default kappa_max = pi/h).
std::vector<double> default_kappa_grid(double h, int points = 400, double kappa_max = 0.0);

/// Track the branch seeded by initial_guess across the kappa grid by damped
/// Newton with continuation. The default guess is the second-order effective
/// prediction (order 0 when no single-parameter closed form applies).
DispersionBranch find_branch(const BilayerSpec& bilayer, Model model,
                             const std::vector<double>& kappa_grid,
                             const std::function<cplx(double)>& initial_guess = {},
                             const BranchOptions& opt = {});

/// Rectangular search window in the moving-frame omega plane.
struct SearchWindow {
    double re_min = 0.0, re_max = 0.0, im_min = 0.0, im_max = 0.0;
};

/// Default window sized from the homogeneous Floquet ladder estimate for the
/// n lowest branches.
SearchWindow default_window(const BilayerSpec& bilayer, Model model, double kappa_tilde, int n);

struct MultiBranchResult {
    std::vector<DispersionBranch> branches;
    bool complete = true;   // false when fewer than n roots were located somewhere
    std::string message;    // partial-result report
};

/// Locate the n lowest-|Omega| branches by argument-principle counting on
/// adaptively subdivided rectangles followed by Newton polish, then
/// continuation in kappa. Branches are sorted by Im(Omega) at small kappa.
MultiBranchResult find_branches(const BilayerSpec& bilayer, Model model,
                                const std::vector<double>& kappa_grid, int n,
                                const BranchOptions& opt = {},
                                const SearchWindow* window = nullptr);

} // namespace tmdiff::bloch

#endif
