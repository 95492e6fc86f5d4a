#include "tmdiff/laminate.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "tmdiff/errors.hpp"

namespace tmdiff {

using nlohmann::json;

namespace {

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw ValidationError(std::string(field) + ": must be strictly positive");
}

} // namespace

void MaterialProfile::validate(Model model) const {
    if (sigma.min_value() <= 0.0) throw ValidationError("sigma: profile must be strictly positive");
    if (gamma.min_value() <= 0.0) throw ValidationError("gamma: profile must be strictly positive");
    if (model == Model::Model2) {
        if (!rho || !c_specific)
            throw ValidationError("rho/c_specific: required for Model 2");
        require_positive(*c_specific, "c_specific");
        if (rho->min_value() <= 0.0)
            throw ValidationError("rho: profile must be strictly positive");
        // gamma = c * rho pointwise
        const UnitCellFunction defect = gamma - (*c_specific) * (*rho);
        if (defect.max_abs() > 1e-9 * std::max(1.0, gamma.max_abs()))
            throw ValidationError("gamma: must equal c_specific * rho pointwise for Model 2");
    }
}

void LaminateSpec::validate() const {
    require_positive(h, "h");
    if (!std::isfinite(v_m)) throw ValidationError("v_m: must be finite");
    profile.validate(model);
}

LaminateSpec make_bilayer(const BilayerSpec& spec) {
    if (!(spec.phi > 0.0 && spec.phi < 1.0))
        throw ValidationError("phi: must lie strictly inside (0, 1)");
    require_positive(spec.sigma_a, "sigma_a");
    require_positive(spec.sigma_b, "sigma_b");
    require_positive(spec.h, "h");

    LaminateSpec out;
    out.h = spec.h;
    out.v_m = spec.v_m;
    out.model = spec.model;
    const std::vector<double> breaks = {0.0, spec.phi};
    out.profile.sigma = UnitCellFunction::piecewise_constant(breaks, {spec.sigma_a, spec.sigma_b});
    if (spec.model == Model::Model1) {
        require_positive(spec.gamma_a, "gamma_a");
        require_positive(spec.gamma_b, "gamma_b");
        out.profile.gamma = UnitCellFunction::piecewise_constant(breaks, {spec.gamma_a, spec.gamma_b});
    } else {
        require_positive(spec.rho_a, "rho_a");
        require_positive(spec.rho_b, "rho_b");
        require_positive(spec.c, "c");
        out.profile.rho = UnitCellFunction::piecewise_constant(breaks, {spec.rho_a, spec.rho_b});
        out.profile.gamma = UnitCellFunction::piecewise_constant(
            breaks, {spec.c * spec.rho_a, spec.c * spec.rho_b});
        out.profile.c_specific = spec.c;
    }
    out.validate();
    return out;
}

void ScaleSet::validate() const {
    require_positive(kappa_star, "kappa_star");
    require_positive(sigma_star, "sigma_star");
    require_positive(gamma_star, "gamma_star");
    require_positive(theta_star, "theta_star");
}

ScaleSet ScaleSet::natural(const LaminateSpec& spec, double kappa_star) {
    ScaleSet s;
    s.kappa_star = kappa_star;
    s.sigma_star = 1.0 / spec.profile.sigma.reciprocal().mean();
    s.gamma_star = spec.profile.gamma.mean();
    s.theta_star = 1.0;
    s.validate();
    return s;
}

NondimProblem nondimensionalize(const LaminateSpec& spec, const ScaleSet& scales) {
    spec.validate();
    scales.validate();
    NondimProblem nd;
    nd.sigma = (1.0 / scales.sigma_star) * spec.profile.sigma;
    nd.gamma = (1.0 / scales.gamma_star) * spec.profile.gamma;
    nd.v = spec.v_m / scales.v_star();
    nd.eta = scales.eta(spec.h);
    nd.model = spec.model;
    nd.scales = scales;
    nd.h = spec.h;
    if (spec.model == Model::Model2) {
        // rho_star = gamma_star / c_bar, so the scaled profiles satisfy
        // c * rho = gamma with c = 1. Keeping c explicit documents the split.
        nd.c_bar = *spec.profile.c_specific;
        const double rho_star = scales.gamma_star / nd.c_bar;
        nd.rho = (1.0 / rho_star) * (*spec.profile.rho);
        nd.c = 1.0;
    }
    return nd;
}

LaminateSpec dimensionalize(const NondimProblem& nd) {
    LaminateSpec spec;
    spec.h = nd.h;
    spec.v_m = nd.v * nd.scales.v_star();
    spec.model = nd.model;
    spec.profile.sigma = nd.scales.sigma_star * nd.sigma;
    spec.profile.gamma = nd.scales.gamma_star * nd.gamma;
    if (nd.model == Model::Model2 && nd.rho) {
        const double rho_star = nd.scales.gamma_star / nd.c_bar;
        spec.profile.rho = rho_star * (*nd.rho);
        spec.profile.c_specific = nd.c_bar;
    }
    return spec;
}

LaminateSpec laminate_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }

    const std::string model_name = j.value("model", "model1");
    Model model;
    if (model_name == "model1") model = Model::Model1;
    else if (model_name == "model2") model = Model::Model2;
    else throw ConfigError("model: expected \"model1\" or \"model2\"");

    if (!j.contains("h")) throw ConfigError("h: missing");
    if (!j.contains("v_m")) throw ConfigError("v_m: missing");
    const double h = j.at("h").get<double>();
    const double v_m = j.at("v_m").get<double>();

    if (j.contains("bilayer")) {
        const json& b = j.at("bilayer");
        BilayerSpec bl;
        bl.h = h;
        bl.v_m = v_m;
        bl.model = model;
        bl.phi = b.value("phi", 0.0);
        bl.sigma_a = b.value("sigma_a", 0.0);
        bl.sigma_b = b.value("sigma_b", 0.0);
        if (model == Model::Model1) {
            bl.gamma_a = b.value("gamma_a", 0.0);
            bl.gamma_b = b.value("gamma_b", 0.0);
        } else {
            bl.rho_a = b.value("rho_a", 0.0);
            bl.rho_b = b.value("rho_b", 0.0);
            bl.c = b.value("c", 0.0);
        }
        try {
            return make_bilayer(bl);
        } catch (const ValidationError& e) {
            throw ConfigError(std::string("bilayer: ") + e.what());
        }
    }

    if (j.contains("profile")) {
        const json& prof = j.at("profile");
        if (!prof.is_array() || prof.empty())
            throw ConfigError("profile: expected a nonempty array");
        std::vector<double> breaks;
        std::vector<double> sig, gam, rho;
        double c = 0.0;
        if (model == Model::Model2) {
            if (!j.contains("c")) throw ConfigError("c: required for model2 profiles");
            c = j.at("c").get<double>();
        }
        for (const auto& seg : prof) {
            breaks.push_back(seg.at("breakpoint").get<double>());
            sig.push_back(seg.at("sigma").get<double>());
            if (model == Model::Model1) {
                gam.push_back(seg.at("gamma").get<double>());
            } else {
                rho.push_back(seg.at("rho").get<double>());
                gam.push_back(c * rho.back());
            }
        }
        LaminateSpec spec;
        spec.h = h;
        spec.v_m = v_m;
        spec.model = model;
        try {
            spec.profile.sigma = UnitCellFunction::piecewise_constant(breaks, sig);
            spec.profile.gamma = UnitCellFunction::piecewise_constant(breaks, gam);
            if (model == Model::Model2) {
                spec.profile.rho = UnitCellFunction::piecewise_constant(breaks, rho);
                spec.profile.c_specific = c;
            }
            spec.validate();
        } catch (const ValidationError& e) {
            throw ConfigError(std::string("profile: ") + e.what());
        }
        return spec;
    }

    throw ConfigError("expected either a \"bilayer\" object or a \"profile\" array");
}

std::string laminate_to_json(const LaminateSpec& spec) {
    json j;
    j["model"] = spec.model == Model::Model1 ? "model1" : "model2";
    j["h"] = spec.h;
    j["v_m"] = spec.v_m;
    if (spec.model == Model::Model2) j["c"] = *spec.profile.c_specific;
    json prof = json::array();
    const auto& breaks = spec.profile.sigma.breakpoints();
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
        json seg;
        seg["breakpoint"] = breaks[i];
        seg["sigma"] = spec.profile.sigma(mid);
        if (spec.model == Model::Model1) {
            seg["gamma"] = spec.profile.gamma(mid);
        } else {
            seg["rho"] = (*spec.profile.rho)(mid);
        }
        prof.push_back(seg);
    }
    j["profile"] = prof;
    return j.dump(2);
}

} // namespace tmdiff
