#include "tmdiff/effective.hpp"

#include <cmath>

#include "tmdiff/errors.hpp"

namespace tmdiff::effective {

namespace {

constexpr double kConstTol = 1e-11;

} // namespace

PdeVariant natural_variant(const cell::HomogenizationResult& hom) {
    const bool sigma_const = hom.nd.sigma.is_constant(kConstTol);
    if (hom.nd.model == Model::Model2) {
        if (sigma_const) return PdeVariant::Model2RhoOnlyOrder2;
        if (hom.nd.rho && hom.nd.rho->is_constant(kConstTol)) return PdeVariant::SigmaOnlyOrder2;
        return PdeVariant::Order0Both;
    }
    if (hom.nd.gamma.is_constant(kConstTol) && !sigma_const) return PdeVariant::SigmaOnlyOrder2;
    return PdeVariant::Order0Both;
}

EffectivePde assemble_pde(const cell::HomogenizationResult& hom, PdeVariant variant, int order) {
    const auto& c = hom.coeffs;
    const double h = hom.nd.h;
    const double v_m = hom.nd.v * hom.nd.scales.v_star();

    EffectivePde pde;
    pde.variant = variant;
    switch (variant) {
        case PdeVariant::Order0Both: {
            pde.coeff_t = c.gamma0_dim;
            pde.coeff_x = -v_m * c.W0_script_dim;
            pde.coeff_xx = -c.sigma0_dim;
            break;
        }
        case PdeVariant::SigmaOnlyOrder2: {
            if (!c.beta1 || !c.beta2)
                throw ValidationError(
                    "assemble_pde: SigmaOnlyOrder2 requires a constant-capacity laminate "
                    "(beta1/beta2 unavailable)");
            const double gamma_bar = c.gamma0_dim; // capacity is constant
            pde.coeff_t = gamma_bar;
            if (order >= 2) {
                pde.coeff_xx = -(c.sigma0_dim +
                                 h * h * v_m * v_m * gamma_bar * gamma_bar * (*c.beta2));
                pde.coeff_xxx = -2.0 * h * h * v_m * gamma_bar * (*c.beta1);
                pde.coeff_txx = -h * h * gamma_bar * (*c.beta1);
            } else {
                pde.coeff_xx = -c.sigma0_dim;
            }
            break;
        }
        case PdeVariant::Model2RhoOnlyOrder2: {
            if (hom.nd.model != Model::Model2 || !c.beta3 || !c.rho0)
                throw ValidationError(
                    "assemble_pde: Model2RhoOnlyOrder2 requires a Model 2 laminate with "
                    "constant conductivity (beta3 unavailable)");
            const double c_bar = hom.nd.c_bar;
            const double rho0_dim = (*c.rho0) * hom.nd.scales.gamma_star / c_bar;
            const double sigma_bar = c.sigma0_dim; // conductivity is constant
            pde.coeff_t = c.gamma0_dim;
            if (order >= 2) {
                pde.coeff_xx = -(sigma_bar +
                                 h * h * v_m * v_m * (c_bar * c_bar / sigma_bar) * (*c.beta3));
                pde.coeff_xxx = -2.0 * h * h * v_m * (c_bar / rho0_dim) * (*c.beta3);
                pde.coeff_txx = -h * h * (c_bar / rho0_dim) * (*c.beta3);
            } else {
                pde.coeff_xx = -sigma_bar;
            }
            break;
        }
        case PdeVariant::CascadeGeneral:
            throw ValidationError(
                "assemble_pde: the general cascade is not a single PDE; use "
                "cascade_solvers_spec");
    }
    return pde;
}

std::complex<double> dispersion_value(const EffectivePde& pde, double kappa) {
    // Theta = exp(i(Omega tau - kappa X)):
    //   dtau -> i Omega, dX -> -i kappa, dXX -> -kappa^2,
    //   dXXX -> i kappa^3, dtauXX -> -i Omega kappa^2.
    const double k2 = kappa * kappa;
    const double mass = pde.coeff_t - pde.coeff_txx * k2;
    const double re = (pde.coeff_x * kappa - pde.coeff_xxx * kappa * k2) / mass;
    const double im = -pde.coeff_xx * k2 / mass;
    return {re, im};
}

std::vector<std::complex<double>> dispersion(const EffectivePde& pde,
                                             const std::vector<double>& kappa) {
    std::vector<std::complex<double>> out;
    out.reserve(kappa.size());
    for (double k : kappa) out.push_back(dispersion_value(pde, k));
    return out;
}

EffectiveDispersion make_dispersion(const cell::HomogenizationResult& hom, PdeVariant variant,
                                    int order) {
    EffectiveDispersion d;
    d.order = order;
    d.variant = variant;
    d.pde = assemble_pde(hom, variant, order);
    return d;
}

CascadeSpec cascade_solvers_spec(const cell::HomogenizationResult& hom) {
    if (hom.nd.model != Model::Model1)
        throw ValidationError("cascade_solvers_spec: defined for Model 1 laminates");
    const auto o1 = cell::correctors_order1(hom.nd);
    const auto c0 = cell::effective_order0(hom.nd, o1);
    const auto o2 = cell::correctors_order2(hom.nd, o1, c0);
    const auto o3 = cell::correctors_order3(hom.nd, o1, c0, o2);

    CascadeSpec spec;
    spec.gamma0 = c0.gamma0;
    spec.sigma0 = c0.sigma0;
    spec.W0 = c0.W0;
    spec.first_order = cell::first_order_sources(hom.nd, o1, c0, o2);
    spec.second_order = cell::second_order_sources(hom.nd, o1, c0, o2, o3);
    spec.eta = hom.nd.eta;
    return spec;
}

} // namespace tmdiff::effective
