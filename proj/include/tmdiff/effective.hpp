#ifndef TMDIFF_EFFECTIVE_HPP
#define TMDIFF_EFFECTIVE_HPP

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "tmdiff/cell.hpp"

namespace tmdiff::effective {

enum class PdeVariant {
    Order0Both,           // convection-diffusion from order-0 homogenization
    SigmaOnlyOrder2,      // conductivity-only modulation, second order
    Model2RhoOnlyOrder2,  // density-only modulation (Model 2), second order
    CascadeGeneral,       // both parameters modulated: three-level cascade
};

/**
 * @brief One constant-coefficient effective PDE in dimensional (SI) form:
 *
 *   coeff_t dtau Theta + coeff_x dX Theta + coeff_xx dXX Theta
 *     + coeff_xxx dXXX Theta + coeff_txx dtauXX Theta = F(X, tau).
 *
 * Diffusion-stabilizing sign convention: coeff_t > 0 and coeff_xx < 0.
 */
struct EffectivePde {
    double coeff_t = 1.0;
    double coeff_x = 0.0;
    double coeff_xx = 0.0;
    double coeff_xxx = 0.0;
    double coeff_txx = 0.0;
    PdeVariant variant = PdeVariant::Order0Both;
    std::function<double(double, double)> source; // optional F(X, tau)
};

/// Assemble the dimensional effective PDE for a homogenized laminate.
/// `order` < 2 drops the second-order (h^2) corrections; Order0Both is
/// insensitive to it. Throws ValidationError on variant/coefficient mismatch
/// (e.g. SigmaOnlyOrder2 on a laminate whose capacity is modulated).
EffectivePde assemble_pde(const cell::HomogenizationResult& hom, PdeVariant variant,
                          int order = 2);

/// Complex plane-wave frequency Omega(kappa) of an EffectivePde under the
/// convention Theta = exp(i(Omega tau - kappa X)).
std::complex<double> dispersion_value(const EffectivePde& pde, double kappa);
std::vector<std::complex<double>> dispersion(const EffectivePde& pde,
                                             const std::vector<double>& kappa);

/// Dispersion closure at a given homogenization order.
struct EffectiveDispersion {
    int order = 2;
    PdeVariant variant = PdeVariant::SigmaOnlyOrder2;
    EffectivePde pde;
    std::complex<double> operator()(double kappa) const { return dispersion_value(pde, kappa); }
};
EffectiveDispersion make_dispersion(const cell::HomogenizationResult& hom, PdeVariant variant,
                                    int order);

/// Pick the natural variant for a laminate: SigmaOnlyOrder2 when only the
/// conductivity is modulated, Model2RhoOnlyOrder2 for density-only Model 2,
/// Order0Both otherwise.
PdeVariant natural_variant(const cell::HomogenizationResult& hom);

/**
 * @brief The three-level nondimensional cascade for general Model-1 laminates.
 *
 * Every level shares the operator  gamma0 dt - sigma0 dxx - W0 dx applied to
 * T0, T1, T2; level 1 is driven by F(T0) + A(f) and level 2 by
 * F(T1) + E(T0) + B(f). The macroscopic reconstruction is
 * T^(2) = T0 + eta T1 + eta^2 T2.
 */
struct CascadeSpec {
    double gamma0 = 0.0, sigma0 = 0.0, W0 = 0.0; // shared left-hand operator
    cell::FirstOrderSources first_order;         // F and A coefficients
    cell::SecondOrderSources second_order;       // E and B coefficients
    double eta = 0.0;
};
CascadeSpec cascade_solvers_spec(const cell::HomogenizationResult& hom);

} // namespace tmdiff::effective

#endif
