#ifndef TMDIFF_CELL_HPP
#define TMDIFF_CELL_HPP

#include <optional>
#include <vector>

#include "tmdiff/laminate.hpp"
#include "tmdiff/report.hpp"
#include "tmdiff/unit_cell_function.hpp"

namespace tmdiff::cell {

/// Default tolerances for the exact piecewise-polynomial pipeline.
inline constexpr double kSolvabilityTol = 1e-10;
inline constexpr double kIdentityRelTol = 1e-8;
inline constexpr double kIdentityAbsFloor = 1e-12;

/**
 * @brief Generic periodic cell problem  d/dy [ sigma X' + G ] = H  on [0,1),
 * with X 1-periodic, <X> = 0, and X and sigma X' + G continuous.
 *
 * Solvable iff <H> = 0; the constructor-level check lives in solve_cell.
 */
struct CellProblem {
    UnitCellFunction sigma;
    UnitCellFunction G; // flux offset
    UnitCellFunction H; // divergence source
    std::string name;   // used in error messages
};

/// A corrector together with its derivative and flux sigma X' + G.
struct Corrector {
    UnitCellFunction value;
    UnitCellFunction deriv;
    UnitCellFunction flux;
};

/// Solve a cell problem exactly (piecewise-polynomial algebra).
/// Throws SolvabilityError when <H> exceeds the tolerance.
Corrector solve_cell(const CellProblem& problem, double solvability_tol = kSolvabilityTol);

// ---------------------------------------------------------------------------
// Model 1 pipeline
// ---------------------------------------------------------------------------

struct Order1Correctors {
    Corrector P, Q;
};

struct Order0Coefficients {
    double gamma0 = 0.0; // <gamma>
    double sigma0 = 0.0; // <sigma (P'+1)> = <1/sigma>^-1
    double W0 = 0.0;     // <sigma Q'>, the convective coefficient
};

struct Order2Correctors {
    Corrector R, S, V, A;
};

/// Coefficients of the first-order source terms: F = d_xx dxx T0 + d_x dx T0
/// and A(f) = a_f f.
struct FirstOrderSources {
    double d_xx = 0.0, d_x = 0.0, a_f = 0.0;
};

struct Order3Correctors {
    Corrector L, M_corr, N, O, B, C; // M_corr is the corrector multiplying dtx^2
    double C1 = 0.0, C2 = 0.0;       // projection constants of the L and N problems
};

/// Coefficients of the second-order sources E (acting on T0) and B (acting on f).
struct SecondOrderSources {
    double e_xxx = 0.0, e_txx = 0.0, e_tx = 0.0, e_tt = 0.0;
    double e_xx = 0.0, e_x = 0.0, e_t = 0.0;
    double b_xx = 0.0, b_x = 0.0, b_t = 0.0, b_0 = 0.0;
};

Order1Correctors correctors_order1(const NondimProblem& nd);
Order0Coefficients effective_order0(const NondimProblem& nd, const Order1Correctors& o1);
Order2Correctors correctors_order2(const NondimProblem& nd, const Order1Correctors& o1,
                                   const Order0Coefficients& c0);
FirstOrderSources first_order_sources(const NondimProblem& nd, const Order1Correctors& o1,
                                      const Order0Coefficients& c0, const Order2Correctors& o2);
Order3Correctors correctors_order3(const NondimProblem& nd, const Order1Correctors& o1,
                                   const Order0Coefficients& c0, const Order2Correctors& o2);
SecondOrderSources second_order_sources(const NondimProblem& nd, const Order1Correctors& o1,
                                        const Order0Coefficients& c0, const Order2Correctors& o2,
                                        const Order3Correctors& o3);

/// Single-parameter non-reciprocity coefficient, assembled from corrector
/// moments and via its closed form (they must agree):
///   gamma constant: N_sigma = <sigma R> + <sigma L'> - <sigma P><sigma R'>/sigma0
///                   closed form 2 v <P^2>
///   sigma constant: N_gamma = -<gamma R>, closed form (2/v) <Q^2>
struct NonReciprocityModel1 {
    bool sigma_modulated = false; // true -> N_sigma, false -> N_gamma
    double assembled = 0.0;
    double closed_form = 0.0;
};
NonReciprocityModel1 nonreciprocity_model1(const NondimProblem& nd);

// ---------------------------------------------------------------------------
// Model 2 pipeline
// ---------------------------------------------------------------------------

struct Model2Correctors {
    Corrector P, S, A, M_corr, C;
    Corrector R_adv, L_adv, N_adv_corr, B_adv;
};

struct Model2Coefficients {
    double gamma0 = 0.0, sigma0 = 0.0, rho0 = 0.0;
    // second-order sources of the density-modulated effective equation
    double e_txx = 0.0, e_xx = 0.0, e_xxx = 0.0; // e_xxx == N_adv
    double b_t = 0.0, b_xx = 0.0, b_x = 0.0;
    double N_adv = 0.0;            // assembled, user scales
    double N_adv_normalized = 0.0; // assembled under <1/sigma> = 1
    double N_adv_reduced = 0.0;    // reduced formula under <1/sigma> = 1
};

struct Model2Result {
    Model2Correctors correctors;
    Model2Coefficients coeffs;
};

/// Full Model-2 homogenization. Throws ValidationError on a Model-1 spec.
Model2Result model2_pipeline(const NondimProblem& nd);

// ---------------------------------------------------------------------------
// Bilayer closed forms and the aggregate result
// ---------------------------------------------------------------------------

/// Analytic bilayer coefficients; beta3 only for Model 2 (density) bilayers.
///   beta1 = <P^2>              = (sa-sb)^2 (1-phi)^2 phi^2 / (12 (sa(1-phi)+sb phi)^2)
///   beta2 = <P^2 / sigma_bar>  = (sa-sb)^2 (1-phi)^2 phi^2 / (12 sa sb (sa(1-phi)+sb phi))
///   beta3 = (ra-rb)^2 (1-phi)^2 phi^2 / 12
struct BilayerBetas {
    double beta1 = 0.0;
    double beta2 = 0.0;
    std::optional<double> beta3;
};
BilayerBetas bilayer_closed_forms(const BilayerSpec& bilayer);

/// Every homogenized scalar of orders 0-2 plus the specializations.
struct EffectiveCoefficients {
    Model model = Model::Model1;

    double gamma0 = 0.0, sigma0 = 0.0, W0 = 0.0; // nondimensional
    double gamma0_dim = 0.0;                     // <gamma_bar>
    double sigma0_dim = 0.0;                     // <1/sigma_bar>^-1
    double W0_script_dim = 0.0;                  // <gamma_bar/sigma_bar> sigma0_dim - gamma0_dim

    double d_xx = 0.0, d_x = 0.0, a_f = 0.0;
    double C1 = 0.0, C2 = 0.0;
    double e_xxx = 0.0, e_txx = 0.0, e_tx = 0.0, e_tt = 0.0, e_xx = 0.0, e_x = 0.0, e_t = 0.0;
    double b_xx = 0.0, b_x = 0.0, b_t = 0.0, b_0 = 0.0;

    std::optional<double> N_sigma;  // gamma constant
    std::optional<double> N_gamma;  // sigma constant
    std::optional<double> N_adv;    // Model 2
    std::optional<double> beta1, beta2, beta3;
    std::optional<double> rho0;     // Model 2, nondimensional mean density
};

struct HomogenizationResult {
    NondimProblem nd;
    EffectiveCoefficients coeffs;
    std::optional<Order1Correctors> order1;
    std::optional<Order2Correctors> order2;
    std::optional<Order3Correctors> order3;
    std::optional<Model2Correctors> model2;
    std::vector<OracleReport> identity_checks;
};

/// Complete homogenization driver for either model. Runs every cell problem,
/// assembles all coefficients, and evaluates the built-in identity audit.
HomogenizationResult homogenize(const LaminateSpec& spec, const ScaleSet& scales);
/// Same, with ScaleSet::natural(spec).
HomogenizationResult homogenize(const LaminateSpec& spec);

} // namespace tmdiff::cell

#endif
