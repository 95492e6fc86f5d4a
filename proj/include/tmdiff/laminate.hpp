#ifndef TMDIFF_LAMINATE_HPP
#define TMDIFF_LAMINATE_HPP

#include <optional>
#include <string>

#include "tmdiff/unit_cell_function.hpp"

namespace tmdiff {

/// Which governing equation the laminate obeys.
///  Model1: capacity and/or conductivity modulated; the capacity sits inside
///          the time derivative.
///  Model2: density modulation with the corrective advection that enforces
///          mass conservation; requires rho and the specific capacity c.
enum class Model { Model1, Model2 };

/**
 * @brief Dimensional material profiles on the unit cell y = xi / h in [0, 1).
 *
 * sigma is the conductivity, gamma the capacity. For Model 2, gamma must equal
 * c_specific * rho pointwise; validate() enforces this.
 */
struct MaterialProfile {
    UnitCellFunction sigma;
    UnitCellFunction gamma;
    std::optional<UnitCellFunction> rho;  // Model 2 only
    std::optional<double> c_specific;     // Model 2 only

    void validate(Model model) const;
};

/// A space-time modulated laminate: profiles translate rigidly at speed v_m,
/// so every coefficient is a function of xi = X - v_m * tau with period h.
struct LaminateSpec {
    MaterialProfile profile;
    double h = 0.0;    // cell period [m], > 0
    double v_m = 0.0;  // modulation speed [m/s], any sign; 0 = static laminate
    Model model = Model::Model1;

    void validate() const;
};

/// Two-phase laminate: phase A on [0, phi*h), phase B on [phi*h, h).
/// For Model 2 supply rho_a/rho_b and c instead of gamma_a/gamma_b.
struct BilayerSpec {
    double sigma_a = 0.0, sigma_b = 0.0;
    double gamma_a = 0.0, gamma_b = 0.0; // Model 1
    double rho_a = 0.0, rho_b = 0.0;     // Model 2
    double c = 0.0;                      // Model 2 specific capacity
    double phi = 0.0;                    // volume fraction of phase A, in (0,1)
    double h = 0.0;
    double v_m = 0.0;
    Model model = Model::Model1;
};

/// Expand a bilayer into a general two-piece LaminateSpec.
LaminateSpec make_bilayer(const BilayerSpec& spec);

/**
 * @brief Reference scales fixing the nondimensionalization.
 *
 * Derived quantities: alpha_star = sigma_star / gamma_star (diffusivity scale),
 * v_star = alpha_star * kappa_star (velocity scale), eta = kappa_star * h.
 */
struct ScaleSet {
    double kappa_star = 1.0;  // reference wavenumber [1/m]
    double sigma_star = 1.0;  // reference conductivity
    double gamma_star = 1.0;  // reference capacity
    double theta_star = 1.0;  // reference field amplitude

    double alpha_star() const { return sigma_star / gamma_star; }
    double v_star() const { return alpha_star() * kappa_star; }
    double eta(double h) const { return kappa_star * h; }

    void validate() const;

    /// Scales adapted to a laminate: sigma_star = <1/sigma>^-1 (so the scaled
    /// conductivity has unit harmonic mean), gamma_star = <gamma>.
    static ScaleSet natural(const LaminateSpec& spec, double kappa_star = 1.0);
};

/// The laminate expressed in scaled variables. The profiles live on the unit
/// cell; for Model 2 the split gamma = c * rho is retained.
struct NondimProblem {
    UnitCellFunction sigma;   // sigma_bar / sigma_star
    UnitCellFunction gamma;   // gamma_bar / gamma_star
    std::optional<UnitCellFunction> rho; // rho_bar / rho_star, rho_star = gamma_star / c_bar
    double c = 1.0;           // scaled specific capacity (c * rho == gamma)
    double c_bar = 0.0;       // dimensional specific capacity, kept for the inverse map
    double v = 0.0;           // v_m / v_star
    double eta = 0.0;         // kappa_star * h
    Model model = Model::Model1;
    ScaleSet scales;
    double h = 0.0;           // retained for dimensionalization
};

NondimProblem nondimensionalize(const LaminateSpec& spec, const ScaleSet& scales);

/// Inverse of nondimensionalize; composes to the identity.
LaminateSpec dimensionalize(const NondimProblem& problem);

/// Parse the JSON laminate descriptor (see README for the schema).
LaminateSpec laminate_from_json(const std::string& json_text);
/// Serialize a laminate to the same JSON schema (bilayers are emitted as profiles).
std::string laminate_to_json(const LaminateSpec& spec);

} // namespace tmdiff

#endif
