#include "tmdiff/cell.hpp"

#include <cmath>

#include "tmdiff/errors.hpp"

namespace tmdiff::cell {

namespace {

using UCF = UnitCellFunction;

double mp(const UCF& f, const UCF& g) { return UCF::mean_product(f, g); }
double mp(const UCF& f, const UCF& g, const UCF& h) { return UCF::mean_product(f, g, h); }

constexpr double kConstTol = 1e-11;

} // namespace

Corrector solve_cell(const CellProblem& pb, double solvability_tol) {
    const double h_mean = pb.H.mean();
    if (std::abs(h_mean) > solvability_tol * std::max(1.0, pb.H.max_abs()))
        throw SolvabilityError(pb.name.empty() ? "cell problem" : pb.name, h_mean);

    // sigma X' + G = \int_0^y H + c0, with c0 fixed by periodicity <X'> = 0.
    const UCF integrated = pb.H.antiderivative();
    const UCF recip = pb.sigma.reciprocal();
    const UCF numerator = integrated - pb.G;
    const double c0 = -mp(numerator, recip) / recip.mean();

    Corrector out;
    out.deriv = (numerator + c0) * recip;
    out.value = out.deriv.antiderivative().mean_zero();
    out.flux = pb.sigma * out.deriv + pb.G;
    return out;
}

Order1Correctors correctors_order1(const NondimProblem& nd) {
    Order1Correctors o1;
    o1.P = solve_cell({nd.sigma, nd.sigma, UCF(), "cell problem P"});
    o1.Q = solve_cell({nd.sigma, nd.v * nd.gamma, UCF(), "cell problem Q"});
    return o1;
}

Order0Coefficients effective_order0(const NondimProblem& nd, const Order1Correctors& o1) {
    Order0Coefficients c;
    c.gamma0 = nd.gamma.mean();
    c.sigma0 = mp(nd.sigma, o1.P.deriv) + nd.sigma.mean();
    c.W0 = mp(nd.sigma, o1.Q.deriv);
    return c;
}

Order2Correctors correctors_order2(const NondimProblem& nd, const Order1Correctors& o1,
                                   const Order0Coefficients& c0) {
    const UCF& sigma = nd.sigma;
    const UCF& gamma = nd.gamma;
    const UCF sigmaP = sigma * o1.P.value;
    const UCF sigmaQp = sigma * o1.Q.deriv;

    Order2Correctors o2;
    o2.R = solve_cell({sigma,
                       nd.v * (gamma * o1.P.value) + sigma * o1.Q.value -
                           (c0.W0 / c0.sigma0) * sigmaP,
                       (-1.0) * sigmaQp + c0.W0,
                       "cell problem R"});
    o2.S = solve_cell({sigma, (c0.gamma0 / c0.sigma0) * sigmaP, gamma - c0.gamma0,
                       "cell problem S"});
    o2.V = solve_cell({sigma, nd.v * (gamma * o1.Q.value), UCF(), "cell problem V"});
    o2.A = solve_cell({sigma, (-1.0 / c0.sigma0) * sigmaP, UCF(), "cell problem A"});
    return o2;
}

FirstOrderSources first_order_sources(const NondimProblem& nd, const Order1Correctors& o1,
                                      const Order0Coefficients& c0, const Order2Correctors& o2) {
    const double sigmaQ_plus_Rp = mp(nd.sigma, o1.Q.value) + mp(nd.sigma, o2.R.deriv);
    const double sigmaP = mp(nd.sigma, o1.P.value);
    const double gammaQ = mp(nd.gamma, o1.Q.value);

    FirstOrderSources s;
    s.d_xx = sigmaQ_plus_Rp - (c0.W0 / c0.sigma0) * sigmaP - (c0.sigma0 / c0.gamma0) * gammaQ;
    s.d_x = mp(nd.sigma, o2.V.deriv) - (c0.W0 / c0.gamma0) * gammaQ;
    s.a_f = -gammaQ / c0.gamma0;
    return s;
}

Order3Correctors correctors_order3(const NondimProblem& nd, const Order1Correctors& o1,
                                   const Order0Coefficients& c0, const Order2Correctors& o2) {
    const UCF& sigma = nd.sigma;
    const UCF& gamma = nd.gamma;
    const double gammaQ = mp(gamma, o1.Q.value);
    const UCF sigmaP = sigma * o1.P.value;

    Order3Correctors o3;
    o3.C1 = -(mp(sigma, o1.Q.value) + mp(sigma, o2.R.deriv)) / c0.sigma0 +
            (c0.W0 / (c0.sigma0 * c0.sigma0)) * mp(sigma, o1.P.value) + gammaQ / c0.gamma0;
    o3.C2 = -(nd.v / c0.sigma0) * mp(gamma, o1.Q.value, o1.P.deriv) +
            (c0.W0 / (c0.gamma0 * c0.sigma0)) * gammaQ;

    o3.L = solve_cell({sigma,
                       sigma * o2.R.value + (c0.sigma0 / c0.gamma0) * nd.v * (gamma * o2.S.value) +
                           o3.C1 * sigmaP,
                       (-1.0) * (sigma * o1.Q.value) - sigma * o2.R.deriv +
                           (c0.W0 / c0.sigma0) * sigmaP + (c0.sigma0 / c0.gamma0) * (gamma * o1.Q.value) -
                           c0.sigma0 * o3.C1,
                       "cell problem L"});
    o3.M_corr = solve_cell({sigma, sigma * o2.S.value,
                            (-1.0) * (sigma * o2.S.deriv) + gamma * o1.P.value -
                                (c0.gamma0 / c0.sigma0) * sigmaP,
                            "cell problem M"});
    o3.N = solve_cell({sigma,
                       sigma * o2.V.value + o3.C2 * sigmaP + nd.v * (gamma * o2.R.value) +
                           (c0.W0 / c0.gamma0) * nd.v * (gamma * o2.S.value),
                       (-1.0) * (sigma * o2.V.deriv) + (c0.W0 / c0.gamma0) * (gamma * o1.Q.value) -
                           c0.sigma0 * o3.C2,
                       "cell problem N"});
    o3.O = solve_cell({sigma, nd.v * (gamma * o2.V.value), UCF(), "cell problem O"});
    o3.B = solve_cell({sigma,
                       (gammaQ / (c0.gamma0 * c0.sigma0)) * sigmaP + nd.v * (gamma * o2.A.value) +
                           (nd.v / c0.gamma0) * (gamma * o2.S.value),
                       (1.0 / c0.gamma0) * (gamma * o1.Q.value) - gammaQ / c0.gamma0,
                       "cell problem B"});
    o3.C = solve_cell({sigma, sigma * o2.A.value,
                       (-1.0) * (sigma * o2.A.deriv) + (1.0 / c0.sigma0) * sigmaP,
                       "cell problem C"});
    return o3;
}

SecondOrderSources second_order_sources(const NondimProblem& nd, const Order1Correctors& o1,
                                        const Order0Coefficients& c0, const Order2Correctors& o2,
                                        const Order3Correctors& o3) {
    const UCF& sigma = nd.sigma;
    const UCF& gamma = nd.gamma;
    const double sigmaP = mp(sigma, o1.P.value);
    const double gammaQ = mp(gamma, o1.Q.value);

    SecondOrderSources s;
    s.e_xxx = mp(sigma, o2.R.value) + mp(sigma, o3.L.deriv) + sigmaP * o3.C1;
    s.e_txx = mp(sigma, o2.S.value) + mp(sigma, o3.M_corr.deriv);
    s.e_tx = -mp(gamma, o2.R.value);
    s.e_tt = -mp(gamma, o2.S.value);
    s.e_xx = mp(sigma, o2.V.value) + mp(sigma, o3.N.deriv) +
             gammaQ * (c0.sigma0 / c0.gamma0) * o3.C1 + sigmaP * o3.C2;
    s.e_x = mp(sigma, o3.O.deriv) + gammaQ * (c0.sigma0 / c0.gamma0) * o3.C2;
    s.e_t = -mp(gamma, o2.V.value);
    s.b_xx = mp(sigma, o2.A.value) + mp(sigma, o3.C.deriv);
    s.b_x = mp(sigma, o3.B.deriv) + sigmaP * gammaQ / (c0.gamma0 * c0.sigma0);
    s.b_t = -mp(gamma, o2.A.value);
    s.b_0 = gammaQ * gammaQ / (c0.gamma0 * c0.gamma0);
    return s;
}

NonReciprocityModel1 nonreciprocity_model1(const NondimProblem& nd) {
    if (nd.model != Model::Model1)
        throw ValidationError("nonreciprocity_model1: requires a Model 1 problem");
    const bool sigma_const = nd.sigma.is_constant(kConstTol);
    const bool gamma_const = nd.gamma.is_constant(kConstTol);
    if (sigma_const == gamma_const)
        throw ValidationError(
            "nonreciprocity_model1: exactly one of sigma, gamma must be constant; "
            "for jointly modulated laminates use second_order_sources");

    const auto o1 = correctors_order1(nd);
    const auto c0 = effective_order0(nd, o1);
    const auto o2 = correctors_order2(nd, o1, c0);
    const auto o3 = correctors_order3(nd, o1, c0, o2);

    NonReciprocityModel1 out;
    out.sigma_modulated = gamma_const;
    if (nd.v == 0.0) {
        // A static laminate is reciprocal; the (2/v) closed form is never evaluated.
        out.assembled = 0.0;
        out.closed_form = 0.0;
        return out;
    }
    if (gamma_const) {
        out.assembled = mp(nd.sigma, o2.R.value) + mp(nd.sigma, o3.L.deriv) -
                        mp(nd.sigma, o1.P.value) * mp(nd.sigma, o2.R.deriv) / c0.sigma0;
        out.closed_form = 2.0 * nd.v * mp(o1.P.value, o1.P.value);
    } else {
        out.assembled = -mp(nd.gamma, o2.R.value);
        out.closed_form = (2.0 / nd.v) * mp(o1.Q.value, o1.Q.value);
    }
    return out;
}

namespace {

/// Model-2 correctors and raw moments for one (already scaled) problem.
struct Model2Internals {
    Model2Correctors corr;
    double sigma0 = 0.0, rho0 = 0.0, gamma0 = 0.0;
    double e_txx = 0.0, e_xx = 0.0, N_adv = 0.0;
    double b_t = 0.0, b_xx = 0.0, b_x = 0.0;
    double N_adv_reduced = 0.0; // only meaningful when <1/sigma> = 1
};

Model2Internals model2_solve(const NondimProblem& nd) {
    const UCF& sigma = nd.sigma;
    const UCF& rho = *nd.rho;
    const double c = nd.c;
    const double v = nd.v;

    Model2Internals r;
    r.rho0 = rho.mean();
    r.gamma0 = c * r.rho0;
    const UCF delta_rho = rho - r.rho0;
    const UCF gamma = c * rho;

    r.corr.P = solve_cell({sigma, sigma, UCF(), "cell problem P"});
    r.sigma0 = mp(sigma, r.corr.P.deriv) + sigma.mean();
    const UCF sigmaP = sigma * r.corr.P.value;

    r.corr.S = solve_cell({sigma, (r.gamma0 / r.sigma0) * sigmaP, gamma - r.gamma0,
                           "cell problem S (model 2)"});
    r.corr.A = solve_cell({sigma, (-1.0 / r.sigma0) * sigmaP, UCF(), "cell problem A (model 2)"});
    r.corr.M_corr = solve_cell({sigma, sigma * r.corr.S.value,
                                (-1.0) * (sigma * r.corr.S.deriv) + gamma * r.corr.P.value -
                                    (r.gamma0 / r.sigma0) * sigmaP,
                                "cell problem M (model 2)"});
    r.corr.C = solve_cell({sigma, sigma * r.corr.A.value,
                           (-1.0) * (sigma * r.corr.A.deriv) + (1.0 / r.sigma0) * sigmaP,
                           "cell problem C (model 2)"});
    r.corr.R_adv = solve_cell({sigma, (v * c * r.rho0) * r.corr.P.value, (c * v) * delta_rho,
                               "cell problem R_adv"});
    r.corr.L_adv = solve_cell({sigma,
                               (v * r.sigma0) * r.corr.S.value + sigma * r.corr.R_adv.value,
                               (c * v) * (delta_rho * r.corr.P.value) -
                                   sigma * r.corr.R_adv.deriv,
                               "cell problem L_adv"});
    r.corr.N_adv_corr = solve_cell({sigma, (r.rho0 * c * v) * r.corr.R_adv.value, UCF(),
                                    "cell problem N_adv"});
    r.corr.B_adv = solve_cell({sigma, UCF(),
                               (-v) * ((r.rho0 * c) * r.corr.A.deriv + r.corr.S.deriv),
                               "cell problem B_adv"});

    const double rhoS = mp(rho, r.corr.S.value);
    const double rhoR = mp(rho, r.corr.R_adv.value);
    const double rhoA = mp(rho, r.corr.A.value);

    r.e_txx = -(r.sigma0 / r.rho0) * rhoS + mp(sigma, r.corr.S.value) +
              mp(sigma, r.corr.M_corr.deriv);
    r.e_xx = -c * v * rhoR + mp(sigma, r.corr.N_adv_corr.deriv);
    r.N_adv = -(r.sigma0 / r.rho0) * rhoR - v * (r.sigma0 / r.rho0) * rhoS +
              mp(sigma, r.corr.R_adv.value) + mp(sigma, r.corr.L_adv.deriv);
    r.b_t = -rhoS / r.rho0 - c * rhoA;
    r.b_xx = mp(sigma, r.corr.C.deriv) + mp(sigma, r.corr.A.value);
    r.b_x = -rhoR / r.rho0 - c * v * rhoA + mp(sigma, r.corr.B_adv.deriv) -
            (v / r.rho0) * rhoS;

    // Reduced form, valid under the normalization <1/sigma> = 1: with
    // T = \int_0^y (rho - rho0),
    //   N_adv = (2 c sigma0 v / rho0) [ <T^2/sigma> - <T/sigma>^2 ]
    //           + 2 c v <rho P^2> - 4 c v <P T>.
    const UCF T = delta_rho.antiderivative();
    const UCF recip = sigma.reciprocal();
    r.N_adv_reduced = (2.0 * c * r.sigma0 * v / r.rho0) *
                          (mp(T, T, recip) - mp(T, recip) * mp(T, recip)) +
                      2.0 * c * v * mp(rho, r.corr.P.value, r.corr.P.value) -
                      4.0 * c * v * mp(r.corr.P.value, T);
    return r;
}

} // namespace

Model2Result model2_pipeline(const NondimProblem& nd) {
    if (nd.model != Model::Model2 || !nd.rho)
        throw ValidationError("model2_pipeline: requires a Model 2 problem with a density profile");

    const Model2Internals user = model2_solve(nd);

    // Rerun under sigma_star' = sigma_star * sigma0 so that <1/sigma> = 1,
    // where the reduced formula applies; rescaling sigma rescales v as well.
    NondimProblem normalized = nd;
    normalized.sigma = (1.0 / user.sigma0) * nd.sigma;
    normalized.v = nd.v / user.sigma0;
    const Model2Internals norm = model2_solve(normalized);

    Model2Result out;
    out.correctors = user.corr;
    out.coeffs.gamma0 = user.gamma0;
    out.coeffs.sigma0 = user.sigma0;
    out.coeffs.rho0 = user.rho0;
    out.coeffs.e_txx = user.e_txx;
    out.coeffs.e_xx = user.e_xx;
    out.coeffs.e_xxx = user.N_adv;
    out.coeffs.b_t = user.b_t;
    out.coeffs.b_xx = user.b_xx;
    out.coeffs.b_x = user.b_x;
    out.coeffs.N_adv = user.N_adv;
    out.coeffs.N_adv_normalized = norm.N_adv;
    out.coeffs.N_adv_reduced = norm.N_adv_reduced;
    return out;
}

BilayerBetas bilayer_closed_forms(const BilayerSpec& bl) {
    if (!(bl.phi > 0.0 && bl.phi < 1.0))
        throw ValidationError("phi: must lie strictly inside (0, 1)");
    const double sa = bl.sigma_a, sb = bl.sigma_b, phi = bl.phi;
    const double dphi = 1.0 - phi;
    const double diff2 = (sa - sb) * (sa - sb);
    const double denom = sa * dphi + sb * phi;

    BilayerBetas b;
    b.beta1 = diff2 * dphi * dphi * phi * phi / (12.0 * denom * denom);
    b.beta2 = diff2 * dphi * dphi * phi * phi / (12.0 * sa * sb * denom);
    if (bl.model == Model::Model2) {
        const double drho2 = (bl.rho_a - bl.rho_b) * (bl.rho_a - bl.rho_b);
        b.beta3 = drho2 * dphi * dphi * phi * phi / 12.0;
    }
    return b;
}

namespace {

void add_check(std::vector<OracleReport>& checks, std::string name, double lhs, double rhs,
               std::string provenance = {}) {
    checks.push_back(OracleReport::compare(std::move(name), lhs, rhs, kIdentityRelTol,
                                           kIdentityAbsFloor, std::move(provenance)));
}

void model1_identity_audit(const NondimProblem& nd, const Order1Correctors& o1,
                           const Order0Coefficients& c0, const Order2Correctors& o2,
                           const Order3Correctors& o3, std::vector<OracleReport>& checks) {
    const UCF& sigma = nd.sigma;
    const UCF& gamma = nd.gamma;
    const double v = nd.v;

    // Flux of the P problem is pointwise constant and equals sigma0.
    const UCF flux_defect = o1.P.flux - c0.sigma0;
    add_check(checks, "sigma(P'+1) == sigma0", flux_defect.max_abs() + c0.sigma0, c0.sigma0,
              "constant-flux identity");
    add_check(checks, "sigma0 == <1/sigma>^-1", c0.sigma0, 1.0 / sigma.reciprocal().mean(),
              "harmonic-mean identity");

    add_check(checks, "<sigma Q'> == v <gamma P'>", c0.W0, v * mp(gamma, o1.P.deriv),
              "order-1 integration by parts");
    add_check(checks, "<sigma R'> identity",
              mp(sigma, o2.R.deriv),
              v * mp(gamma, o1.P.value, o1.P.deriv) + mp(sigma, o1.Q.value, o1.P.deriv) +
                  (c0.W0 / c0.sigma0) * mp(sigma, o1.P.value) -
                  mp(sigma, o1.Q.deriv, o1.P.value),
              "R-problem integration by parts");
    add_check(checks, "<sigma S'> identity", mp(sigma, o2.S.deriv),
              mp(gamma, o1.P.value) - (c0.gamma0 / c0.sigma0) * mp(sigma, o1.P.value),
              "S-problem integration by parts");
    add_check(checks, "<sigma V'> identity", mp(sigma, o2.V.deriv),
              v * mp(gamma, o1.Q.value, o1.P.deriv), "V-problem integration by parts");
    add_check(checks, "<sigma A'> identity", mp(sigma, o2.A.deriv),
              mp(sigma, o1.P.value) / c0.sigma0, "A-problem integration by parts");

    // Corrector hygiene: zero means, periodic continuity, continuous fluxes.
    double worst_mean = 0.0, worst_cont = 0.0, worst_flux = 0.0;
    const Corrector* all[] = {&o1.P, &o1.Q, &o2.R, &o2.S, &o2.V, &o2.A,
                              &o3.L, &o3.M_corr, &o3.N, &o3.O, &o3.B, &o3.C};
    for (const Corrector* c : all) {
        worst_mean = std::max(worst_mean, std::abs(c->value.mean()));
        worst_cont = std::max(worst_cont, c->value.continuity_defect());
        worst_flux = std::max(worst_flux,
                              c->flux.continuity_defect() / std::max(1.0, c->flux.max_abs()));
    }
    add_check(checks, "corrector means vanish", worst_mean, 0.0, "zero-mean normalization");
    add_check(checks, "correctors continuous and periodic", worst_cont, 0.0, "continuity");
    add_check(checks, "corrector fluxes continuous", worst_flux, 0.0, "flux continuity");

    const bool sigma_const = sigma.is_constant(kConstTol);
    const bool gamma_const = gamma.is_constant(kConstTol);
    if (sigma_const) {
        add_check(checks, "<gamma Q> == 0 (sigma constant)", mp(gamma, o1.Q.value), 0.0,
                  "Q-problem moment identity");
        add_check(checks, "R' == -2Q (sigma constant)",
                  (o2.R.deriv + 2.0 * o1.Q.value).max_abs(), 0.0, "pointwise reduction");
        if (v != 0.0) {
            add_check(checks, "gamma == gamma0 - Q'/v (sigma constant)",
                      (gamma - (c0.gamma0 + (-1.0 / v) * o1.Q.deriv)).max_abs(), 0.0,
                      "pointwise reduction");
        }
    }
    if (gamma_const) {
        add_check(checks, "S' == -P/sigma0 (gamma constant)",
                  (o2.S.deriv + (1.0 / c0.sigma0) * o1.P.value).max_abs(), 0.0,
                  "pointwise reduction");
        add_check(checks, "<P/sigma> == 0 (gamma constant)",
                  mp(o1.P.value, sigma.reciprocal()), 0.0, "moment identity");
        add_check(checks, "<sigma M'> identity (gamma constant)",
                  mp(sigma, o3.M_corr.deriv),
                  mp(sigma, o2.S.value, o1.P.deriv) - mp(sigma, o2.S.deriv, o1.P.value) +
                      mp(o1.P.value, o1.P.value) -
                      mp(sigma, o1.P.value, o1.P.value) / c0.sigma0,
                  "M-problem integration by parts");
        add_check(checks, "<sigma N'> identity (gamma constant)", mp(sigma, o3.N.deriv),
                  -v * mp(o1.P.value, o2.R.deriv), "N-problem integration by parts");
        add_check(checks, "<sigma L'> identity (gamma constant)", mp(sigma, o3.L.deriv),
                  mp(sigma, o2.R.value, o1.P.deriv) - mp(sigma, o2.R.deriv, o1.P.value) -
                      c0.sigma0 * v * mp(o2.S.deriv, o1.P.value) +
                      mp(sigma, o2.R.deriv) * mp(sigma, o1.P.value) / c0.sigma0,
                  "L-problem integration by parts");
    }
}

} // namespace

HomogenizationResult homogenize(const LaminateSpec& spec, const ScaleSet& scales) {
    HomogenizationResult res;
    res.nd = nondimensionalize(spec, scales);
    const NondimProblem& nd = res.nd;

    EffectiveCoefficients& c = res.coeffs;
    c.model = spec.model;

    // Dimensional order-0 parameters straight from the dimensional profiles.
    c.gamma0_dim = spec.profile.gamma.mean();
    c.sigma0_dim = 1.0 / spec.profile.sigma.reciprocal().mean();
    c.W0_script_dim =
        UCF::mean_product(spec.profile.gamma, spec.profile.sigma.reciprocal()) * c.sigma0_dim -
        c.gamma0_dim;

    if (spec.model == Model::Model1) {
        const auto o1 = correctors_order1(nd);
        const auto c0 = effective_order0(nd, o1);
        const auto o2 = correctors_order2(nd, o1, c0);
        const auto src1 = first_order_sources(nd, o1, c0, o2);
        const auto o3 = correctors_order3(nd, o1, c0, o2);
        const auto src2 = second_order_sources(nd, o1, c0, o2, o3);

        c.gamma0 = c0.gamma0;
        c.sigma0 = c0.sigma0;
        c.W0 = c0.W0;
        c.d_xx = src1.d_xx;
        c.d_x = src1.d_x;
        c.a_f = src1.a_f;
        c.C1 = o3.C1;
        c.C2 = o3.C2;
        c.e_xxx = src2.e_xxx;
        c.e_txx = src2.e_txx;
        c.e_tx = src2.e_tx;
        c.e_tt = src2.e_tt;
        c.e_xx = src2.e_xx;
        c.e_x = src2.e_x;
        c.e_t = src2.e_t;
        c.b_xx = src2.b_xx;
        c.b_x = src2.b_x;
        c.b_t = src2.b_t;
        c.b_0 = src2.b_0;

        const bool sigma_const = nd.sigma.is_constant(kConstTol);
        const bool gamma_const = nd.gamma.is_constant(kConstTol);
        if (gamma_const && !sigma_const) {
            c.N_sigma = src2.e_xxx;
            c.beta1 = UCF::mean_product(o1.P.value, o1.P.value);
            c.beta2 = UCF::mean_product(o1.P.value, o1.P.value, nd.sigma.reciprocal()) /
                      scales.sigma_star;
        }
        if (sigma_const && !gamma_const) c.N_gamma = src2.e_tx;

        model1_identity_audit(nd, o1, c0, o2, o3, res.identity_checks);
        if (gamma_const && !sigma_const && nd.v != 0.0) {
            const auto nr = nonreciprocity_model1(nd);
            res.identity_checks.push_back(OracleReport::compare(
                "N_sigma assembled == 2 v <P^2>", nr.assembled, nr.closed_form, kIdentityRelTol,
                kIdentityAbsFloor, "non-reciprocity closed form"));
        }
        if (sigma_const && !gamma_const && nd.v != 0.0) {
            const auto nr = nonreciprocity_model1(nd);
            res.identity_checks.push_back(OracleReport::compare(
                "N_gamma assembled == (2/v) <Q^2>", nr.assembled, nr.closed_form, kIdentityRelTol,
                kIdentityAbsFloor, "non-reciprocity closed form"));
        }

        res.order1 = o1;
        res.order2 = o2;
        res.order3 = o3;
    } else {
        const auto m2 = model2_pipeline(nd);
        c.gamma0 = m2.coeffs.gamma0;
        c.sigma0 = m2.coeffs.sigma0;
        c.W0 = 0.0;
        c.rho0 = m2.coeffs.rho0;
        c.e_txx = m2.coeffs.e_txx;
        c.e_xx = m2.coeffs.e_xx;
        c.e_xxx = m2.coeffs.e_xxx;
        c.b_t = m2.coeffs.b_t;
        c.b_xx = m2.coeffs.b_xx;
        c.b_x = m2.coeffs.b_x;
        c.N_adv = m2.coeffs.N_adv;

        if (nd.sigma.is_constant(kConstTol)) {
            // beta3 = (rho_star)^2 <(S')^2> under the c = 1 convention.
            const double rho_star = scales.gamma_star / *spec.profile.c_specific;
            c.beta3 = rho_star * rho_star *
                      UCF::mean_product(m2.correctors.S.deriv, m2.correctors.S.deriv);
        }

        res.identity_checks.push_back(OracleReport::compare(
            "N_adv assembled == reduced form (<1/sigma> = 1)", m2.coeffs.N_adv_normalized,
            m2.coeffs.N_adv_reduced, kIdentityRelTol, kIdentityAbsFloor,
            "density-modulation non-reciprocity"));
        res.model2 = m2.correctors;
    }
    return res;
}

HomogenizationResult homogenize(const LaminateSpec& spec) {
    return homogenize(spec, ScaleSet::natural(spec));
}

} // namespace tmdiff::cell
