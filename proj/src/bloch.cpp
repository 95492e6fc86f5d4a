#include "tmdiff/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tmdiff/cell.hpp"
#include "tmdiff/effective.hpp"
#include "tmdiff/errors.hpp"

namespace tmdiff::bloch {

namespace {

constexpr double kPi = std::numbers::pi;

// Largest |Re(r)| * h tolerated inside one matrix entry; the determinant
// multiplies at most four entries, so this keeps it within double range.
constexpr double kMaxExponent = 170.0;

struct PhaseParams {
    double sigma_a, sigma_b, gamma_a, gamma_b, phi, h, v_m;
    double b_a, b_b; // first-order ODE coefficients per phase
};

PhaseParams phase_params(const BilayerSpec& bl, Model model) {
    PhaseParams p{};
    p.sigma_a = bl.sigma_a;
    p.sigma_b = bl.sigma_b;
    p.phi = bl.phi;
    p.h = bl.h;
    p.v_m = bl.v_m;
    if (model == Model::Model1) {
        p.gamma_a = bl.gamma_a;
        p.gamma_b = bl.gamma_b;
        p.b_a = bl.v_m * bl.gamma_a;
        p.b_b = bl.v_m * bl.gamma_b;
    } else {
        if (!(bl.c > 0.0) || !(bl.rho_a > 0.0) || !(bl.rho_b > 0.0))
            throw ValidationError("bilayer: Model 2 requires rho_a, rho_b, c");
        p.gamma_a = bl.c * bl.rho_a;
        p.gamma_b = bl.c * bl.rho_b;
        const double rho0 = bl.phi * bl.rho_a + (1.0 - bl.phi) * bl.rho_b;
        p.b_a = p.b_b = bl.v_m * rho0 * bl.c;
    }
    return p;
}

} // namespace

PhaseRoots layer_roots(double sigma, double b, double gamma, cplx omega_tilde) {
    // sigma r^2 + b r - i omega gamma = 0 with discriminant b^2 + 4 sigma gamma i omega.
    const cplx disc = cplx(b * b, 0.0) + 4.0 * sigma * gamma * cplx(0.0, 1.0) * omega_tilde;
    const cplx s = std::sqrt(disc);
    PhaseRoots r;
    r.spread = s;
    const cplx num_plus = -b + s;
    const cplx num_minus = -b - s;
    const cplx product = cplx(0.0, -1.0) * omega_tilde * gamma / sigma; // r+ r-
    // Evaluate the better-conditioned root directly, the other via the product.
    if (std::abs(num_plus) >= std::abs(num_minus)) {
        r.plus = num_plus / (2.0 * sigma);
        r.minus = (r.plus != 0.0) ? product / r.plus : num_minus / (2.0 * sigma);
    } else {
        r.minus = num_minus / (2.0 * sigma);
        r.plus = (r.minus != 0.0) ? product / r.minus : num_plus / (2.0 * sigma);
    }
    return r;
}

BlochMatrix assemble(double kappa_tilde, cplx omega_tilde, const BilayerSpec& bl, Model model) {
    const PhaseParams p = phase_params(bl, model);
    BlochMatrix m;
    m.kappa_tilde = kappa_tilde;
    m.omega_tilde = omega_tilde;
    m.model = model;
    m.r_a = layer_roots(p.sigma_a, p.b_a, p.gamma_a, omega_tilde);
    m.r_b = layer_roots(p.sigma_b, p.b_b, p.gamma_b, omega_tilde);

    const double worst = std::max({std::abs(m.r_a.plus.real()), std::abs(m.r_a.minus.real()),
                                   std::abs(m.r_b.plus.real()), std::abs(m.r_b.minus.real())}) *
                         p.h;
    if (worst > kMaxExponent)
        throw SingularStructureError(
            "dispersion evaluation out of double-precision range (|Re r| h = " +
            std::to_string(worst) + "); shrink the frequency search window");

    const cplx bloch = std::exp(cplx(0.0, -kappa_tilde * p.h));
    const double ph = p.phi * p.h;
    const cplx eAp = std::exp(m.r_a.plus * ph), eAm = std::exp(m.r_a.minus * ph);
    const cplx eBp = std::exp(m.r_b.plus * ph), eBm = std::exp(m.r_b.minus * ph);
    const cplx eBp1 = std::exp(m.r_b.plus * p.h), eBm1 = std::exp(m.r_b.minus * p.h);

    // Flux entries: Model 1 carries the v_m gamma terms, Model 2 bare sigma r.
    cplx wrap_flux_p, wrap_flux_m, ifc_a_p, ifc_a_m, ifc_b_p, ifc_b_m;
    if (model == Model::Model1) {
        const double dg = p.v_m * (p.gamma_b - p.gamma_a);
        wrap_flux_p = p.sigma_b * m.r_b.plus + dg;
        wrap_flux_m = p.sigma_b * m.r_b.minus + dg;
        ifc_a_p = p.sigma_a * m.r_a.plus + p.v_m * p.gamma_a;
        ifc_a_m = p.sigma_a * m.r_a.minus + p.v_m * p.gamma_a;
        ifc_b_p = p.sigma_b * m.r_b.plus + p.v_m * p.gamma_b;
        ifc_b_m = p.sigma_b * m.r_b.minus + p.v_m * p.gamma_b;
    } else {
        wrap_flux_p = p.sigma_b * m.r_b.plus;
        wrap_flux_m = p.sigma_b * m.r_b.minus;
        ifc_a_p = p.sigma_a * m.r_a.plus;
        ifc_a_m = p.sigma_a * m.r_a.minus;
        ifc_b_p = p.sigma_b * m.r_b.plus;
        ifc_b_m = p.sigma_b * m.r_b.minus;
    }

    auto& e = m.entries;
    e[0] = {bloch, bloch, -eBp1, -eBm1};
    e[1] = {m.r_a.plus * p.sigma_a * bloch, m.r_a.minus * p.sigma_a * bloch,
            -eBp1 * wrap_flux_p, -eBm1 * wrap_flux_m};
    e[2] = {eAp, eAm, -eBp, -eBm};
    e[3] = {eAp * ifc_a_p, eAm * ifc_a_m, -eBp * ifc_b_p, -eBm * ifc_b_m};
    return m;
}

cplx det_scaled(const std::array<std::array<cplx, 4>, 4>& m, double* log_scale) {
    std::array<std::array<cplx, 4>, 4> a = m;
    double log_sc = 0.0;
    for (int i = 0; i < 4; ++i) {
        double rowmax = 0.0;
        for (int j = 0; j < 4; ++j) rowmax = std::max(rowmax, std::abs(a[i][j]));
        if (rowmax == 0.0)
            throw SingularStructureError("det_scaled: matrix row " + std::to_string(i) +
                                         " is identically zero");
        for (int j = 0; j < 4; ++j) a[i][j] /= rowmax;
        log_sc += std::log(rowmax);
    }
    // LU with partial pivoting.
    cplx det = 1.0;
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int i = col + 1; i < 4; ++i)
            if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            det = -det;
        }
        if (a[col][col] == 0.0) {
            det = 0.0;
            break;
        }
        det *= a[col][col];
        for (int i = col + 1; i < 4; ++i) {
            const cplx f = a[i][col] / a[col][col];
            for (int j = col; j < 4; ++j) a[i][j] -= f * a[col][j];
        }
    }
    if (log_scale) *log_scale = log_sc;
    return det;
}

cplx det_scaled(const BlochMatrix& m, double* log_scale) {
    return det_scaled(m.entries, log_scale);
}

namespace {

cplx det_raw(const std::array<std::array<cplx, 4>, 4>& m) {
    std::array<std::array<cplx, 4>, 4> a = m;
    cplx det = 1.0;
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int i = col + 1; i < 4; ++i)
            if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            det = -det;
        }
        if (a[col][col] == 0.0) return 0.0;
        det *= a[col][col];
        for (int i = col + 1; i < 4; ++i) {
            const cplx f = a[i][col] / a[col][col];
            for (int j = col; j < 4; ++j) a[i][j] -= f * a[col][j];
        }
    }
    return det;
}

} // namespace

DispersionFunction::DispersionFunction(const BilayerSpec& bilayer, Model model,
                                       double kappa_tilde)
    : bilayer_(bilayer), model_(model), kappa_tilde_(kappa_tilde) {}

cplx DispersionFunction::operator()(cplx omega_tilde) const {
    const BlochMatrix m = assemble(kappa_tilde_, omega_tilde, bilayer_, model_);
    cplx spread = m.r_a.spread * m.r_b.spread;
    if (spread == 0.0) {
        // Coincident layer exponents: nudge off the double root; the zero set
        // of the entire function is unaffected at this scale.
        const cplx nudged = omega_tilde + cplx(0.0, 1e-12 * (1.0 + std::abs(omega_tilde)));
        const BlochMatrix m2 = assemble(kappa_tilde_, nudged, bilayer_, model_);
        spread = m2.r_a.spread * m2.r_b.spread;
        return det_raw(m2.entries) / spread;
    }
    return det_raw(m.entries) / spread;
}

double DispersionFunction::residual(cplx omega_tilde) const {
    return std::abs(det_scaled(assemble(kappa_tilde_, omega_tilde, bilayer_, model_)));
}

RootResult refine_root(const DispersionFunction& f, cplx guess, double scale,
                       const BranchOptions& opt) {
    RootResult out;
    cplx z = guess;
    cplx fz = f(z);
    const double floor = 1e-3 * scale;
    cplx z_prev = z + cplx(1e-4 * (scale + std::abs(z)), 0.0);
    cplx f_prev = f(z_prev);

    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        const double delta = 1e-6 * (std::abs(z) + scale);
        const cplx fp = (f(z + delta) - f(z - delta)) / (2.0 * delta);
        cplx step;
        if (fp != 0.0 && std::isfinite(std::abs(fp))) {
            step = fz / fp;
        } else if (f_prev != fz && z_prev != z) {
            step = fz * (z - z_prev) / (fz - f_prev); // secant fallback
        } else {
            break;
        }
        // Trust region: never jump further than half the current magnitude scale.
        const double max_step = 0.5 * (std::abs(z) + scale);
        if (std::abs(step) > max_step) step *= max_step / std::abs(step);

        cplx z_new = z - step;
        cplx f_new = f(z_new);
        int halvings = 0;
        while (std::abs(f_new) > std::abs(fz) && halvings < 8) {
            step *= 0.5;
            z_new = z - step;
            f_new = f(z_new);
            ++halvings;
        }
        z_prev = z;
        f_prev = fz;
        z = z_new;
        fz = f_new;
        if (std::abs(step) <= opt.step_rel_tol * (std::abs(z) + floor)) break;
    }
    out.omega_tilde = z;
    out.residual = f.residual(z);
    out.converged = out.residual <= opt.residual_tol;
    return out;
}

std::vector<double> default_kappa_grid(double h, int points, double kappa_max) {
    if (kappa_max <= 0.0) kappa_max = kPi / h;
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) grid[i] = kappa_max * (i + 1) / points;
    grid.insert(grid.begin(), 0.0);
    return grid;
}

namespace {

std::function<cplx(double)> effective_guess(const BilayerSpec& bl, Model model) {
    BilayerSpec spec = bl;
    spec.model = model;
    const LaminateSpec lam = make_bilayer(spec);
    const auto hom = cell::homogenize(lam);
    const auto variant = effective::natural_variant(hom);
    const auto disp = effective::make_dispersion(hom, variant, 2);
    const double v_m = bl.v_m;
    return [disp, v_m](double kappa) -> cplx {
        return disp(kappa) - v_m * kappa; // moving frame
    };
}

double default_scale(const BilayerSpec& bl, double kappa_max) {
    const double diff = std::max(bl.sigma_a, bl.sigma_b) /
                        std::min(bl.gamma_a > 0 ? bl.gamma_a : bl.c * bl.rho_a,
                                 bl.gamma_b > 0 ? bl.gamma_b : bl.c * bl.rho_b);
    return diff * kappa_max * kappa_max * 1e-4 + std::abs(bl.v_m) * kappa_max * 1e-4;
}

} // namespace

DispersionBranch find_branch(const BilayerSpec& bilayer, Model model,
                             const std::vector<double>& kappa_grid,
                             const std::function<cplx(double)>& initial_guess,
                             const BranchOptions& opt) {
    std::function<cplx(double)> guess =
        initial_guess ? initial_guess : effective_guess(bilayer, model);

    DispersionBranch br;
    br.kappa = kappa_grid;
    const std::size_t n = kappa_grid.size();
    br.omega_moving.resize(n);
    br.omega_fixed.resize(n);
    br.residual.resize(n, 0.0);
    br.converged.assign(n, false);
    br.jump_warning.assign(n, false);

    double kmax = 0.0;
    for (double k : kappa_grid) kmax = std::max(kmax, std::abs(k));
    const double scale_floor = default_scale(bilayer, kmax > 0 ? kmax : kPi / bilayer.h);

    bool have_prev = false, have_prev2 = false;
    double k_prev = 0.0, k_prev2 = 0.0;
    cplx w_prev, w_prev2;

    // Walk from a known point toward the target, bisecting when Newton labors.
    std::function<RootResult(double, cplx, int)> walk = [&](double kappa, cplx seed,
                                                            int depth) -> RootResult {
        DispersionFunction f(bilayer, model, kappa);
        const double scale = std::max(std::abs(seed), scale_floor);
        RootResult res = refine_root(f, seed, scale, opt);
        if ((!res.converged || res.iterations > opt.slow_iteration_threshold) &&
            depth < opt.max_bisection_depth && have_prev && kappa != k_prev) {
            const double mid = 0.5 * (kappa + k_prev);
            const cplx mid_seed = w_prev + (seed - w_prev) * ((mid - k_prev) / (kappa - k_prev));
            const RootResult mid_res = walk(mid, mid_seed, depth + 1);
            if (mid_res.converged) {
                const cplx new_seed =
                    mid_res.omega_tilde + (mid_res.omega_tilde - w_prev); // extrapolate
                RootResult retry = refine_root(f, new_seed, scale, opt);
                if (retry.converged) return retry;
            }
        }
        return res;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double kappa = kappa_grid[i];
        cplx seed;
        if (have_prev2 && k_prev != k_prev2) {
            seed = w_prev + (w_prev - w_prev2) * ((kappa - k_prev) / (k_prev - k_prev2));
        } else if (have_prev) {
            seed = w_prev;
        } else {
            seed = guess(kappa);
        }
        if (kappa == 0.0 && std::abs(seed) == 0.0) {
            DispersionFunction f(bilayer, model, 0.0);
            br.omega_moving[i] = 0.0;
            br.omega_fixed[i] = 0.0;
            br.residual[i] = f.residual(0.0);
            br.converged[i] = br.residual[i] <= opt.residual_tol;
        } else {
            const RootResult res = walk(kappa, seed, 0);
            br.omega_moving[i] = res.omega_tilde;
            br.omega_fixed[i] = res.omega_tilde + bilayer.v_m * kappa;
            br.residual[i] = res.residual;
            br.converged[i] = res.converged;
            if (have_prev2) {
                const cplx expected =
                    w_prev + (w_prev - w_prev2) * ((kappa - k_prev) / (k_prev - k_prev2));
                const double typical =
                    std::max(std::abs(w_prev - w_prev2), 1e-6 * (std::abs(w_prev) + scale_floor));
                if (std::abs(res.omega_tilde - expected) > opt.jump_factor * typical)
                    br.jump_warning[i] = true;
            }
        }
        if (br.converged[i]) {
            have_prev2 = have_prev;
            k_prev2 = k_prev;
            w_prev2 = w_prev;
            have_prev = true;
            k_prev = kappa;
            w_prev = br.omega_moving[i];
        }
    }
    return br;
}

// ---------------------------------------------------------------------------
// Argument-principle multi-root search
// ---------------------------------------------------------------------------

namespace {

struct GaussLegendre {
    std::vector<double> nodes, weights; // on [-1, 1]
};

const GaussLegendre& gl256() {
    static const GaussLegendre table = [] {
        constexpr int n = 256;
        GaussLegendre t;
        t.nodes.resize(n);
        t.weights.resize(n);
        for (int i = 0; i < n; ++i) {
            // Newton on P_n with the Tricomi initial guess.
            double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            t.nodes[n - 1 - i] = x;
            t.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return t;
    }();
    return table;
}

struct CountResult {
    int count = -1;       // -1: unreliable
    cplx centroid{};      // first moment / count (root location when count == 1)
    bool reliable = false;
};

CountResult count_roots(const DispersionFunction& f, const SearchWindow& w) {
    const cplx corners[5] = {{w.re_min, w.im_min},
                             {w.re_max, w.im_min},
                             {w.re_max, w.im_max},
                             {w.re_min, w.im_max},
                             {w.re_min, w.im_min}};
    const auto& gl = gl256();
    const double diag = std::hypot(w.re_max - w.re_min, w.im_max - w.im_min);
    const double dstep = 1e-6 * diag;

    cplx winding = 0.0, moment = 0.0;
    double prev_arg = 0.0;
    bool have_prev = false;
    for (int edge = 0; edge < 4; ++edge) {
        const cplx a = corners[edge], b = corners[edge + 1];
        const cplx half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const cplx z = mid + half * gl.nodes[q];
            const cplx fz = f(z);
            if (fz == 0.0 || !std::isfinite(std::abs(fz))) return {};
            // Phase continuity safeguard: coarse sampling across a fast phase
            // swing means the quadrature cannot be trusted.
            const double arg = std::arg(fz);
            if (have_prev) {
                double d = arg - prev_arg;
                while (d > kPi) d -= 2.0 * kPi;
                while (d < -kPi) d += 2.0 * kPi;
                if (std::abs(d) > 0.5 * kPi) return {};
            }
            prev_arg = arg;
            have_prev = true;
            const cplx fp = (f(z + dstep) - f(z - dstep)) / (2.0 * dstep);
            const cplx integrand = fp / fz;
            winding += gl.weights[q] * half * integrand;
            moment += gl.weights[q] * half * (z * integrand);
        }
    }
    winding /= cplx(0.0, 2.0 * kPi);
    moment /= cplx(0.0, 2.0 * kPi);

    CountResult res;
    const double rounded = std::round(winding.real());
    if (std::abs(winding - rounded) > 0.2 || rounded < 0.0) return res;
    res.count = static_cast<int>(rounded);
    res.reliable = true;
    if (res.count > 0) res.centroid = moment / static_cast<double>(res.count);
    return res;
}

void search_window(const DispersionFunction& f, SearchWindow w, int depth,
                   std::vector<cplx>& roots, const BranchOptions& opt, double scale_floor) {
    constexpr int kMaxDepth = 12;
    CountResult c = count_roots(f, w);
    if (!c.reliable) {
        // Retry with slightly expanded margins (roots near the boundary), then subdivide.
        SearchWindow w2 = w;
        const double mre = 0.013 * (w.re_max - w.re_min);
        const double mim = 0.013 * (w.im_max - w.im_min);
        w2.re_min -= mre;
        w2.re_max += mre;
        w2.im_min -= mim;
        w2.im_max += mim;
        c = count_roots(f, w2);
        if (c.reliable) w = w2;
    }
    if (!c.reliable) {
        if (depth >= kMaxDepth) return;
        const double rm = 0.5 * (w.re_min + w.re_max);
        const double im = 0.5 * (w.im_min + w.im_max);
        search_window(f, {w.re_min, rm, w.im_min, im}, depth + 1, roots, opt, scale_floor);
        search_window(f, {rm, w.re_max, w.im_min, im}, depth + 1, roots, opt, scale_floor);
        search_window(f, {w.re_min, rm, im, w.im_max}, depth + 1, roots, opt, scale_floor);
        search_window(f, {rm, w.re_max, im, w.im_max}, depth + 1, roots, opt, scale_floor);
        return;
    }
    if (c.count == 0) return;
    if (c.count == 1 || depth >= kMaxDepth) {
        const double scale = std::max(std::abs(c.centroid), scale_floor);
        const RootResult r = refine_root(f, c.centroid, scale, opt);
        if (r.converged) {
            for (const cplx& known : roots)
                if (std::abs(known - r.omega_tilde) <=
                    1e-8 * (std::abs(known) + scale_floor))
                    return;
            roots.push_back(r.omega_tilde);
            return;
        }
        if (depth >= kMaxDepth) return;
        // Polish failed: tighten the box around the root instead.
    }
    const double rm = 0.5 * (w.re_min + w.re_max);
    const double im = 0.5 * (w.im_min + w.im_max);
    search_window(f, {w.re_min, rm, w.im_min, im}, depth + 1, roots, opt, scale_floor);
    search_window(f, {rm, w.re_max, w.im_min, im}, depth + 1, roots, opt, scale_floor);
    search_window(f, {w.re_min, rm, im, w.im_max}, depth + 1, roots, opt, scale_floor);
    search_window(f, {rm, w.re_max, im, w.im_max}, depth + 1, roots, opt, scale_floor);
}

} // namespace

SearchWindow default_window(const BilayerSpec& bl, Model model, double kappa_tilde, int n) {
    const PhaseParams p = phase_params(bl, model);
    const int ladder = (n + 1) / 2;
    const double k_eff = std::abs(kappa_tilde) + 2.0 * kPi * ladder / p.h;
    const double diff_max = std::max(p.sigma_a / p.gamma_a, p.sigma_b / p.gamma_b);
    SearchWindow w;
    w.im_max = 3.0 * diff_max * k_eff * k_eff;
    w.im_min = -0.02 * w.im_max;
    w.re_max = 3.0 * std::abs(p.v_m) * k_eff + 0.05 * w.im_max;
    w.re_min = -w.re_max;
    return w;
}

MultiBranchResult find_branches(const BilayerSpec& bilayer, Model model,
                                const std::vector<double>& kappa_grid, int n,
                                const BranchOptions& opt, const SearchWindow* window) {
    if (n < 1) throw ValidationError("find_branches: n must be >= 1");
    MultiBranchResult out;
    if (kappa_grid.empty()) return out;

    double kmax = 0.0;
    for (double k : kappa_grid) kmax = std::max(kmax, std::abs(k));
    const double scale_floor = default_scale(bilayer, kmax > 0 ? kmax : kPi / bilayer.h);

    // Start the search away from kappa = 0 where the trivial root sits on the
    // window boundary; branches are then continued to every grid point.
    std::size_t start = 0;
    for (std::size_t i = 0; i < kappa_grid.size(); ++i) {
        if (kappa_grid[i] != 0.0) {
            start = i;
            break;
        }
    }

    auto box_search = [&](double kappa) {
        DispersionFunction f(bilayer, model, kappa);
        SearchWindow w = window ? *window : default_window(bilayer, model, kappa, n);
        std::vector<cplx> roots;
        for (int attempt = 0; attempt < 3; ++attempt) {
            roots.clear();
            search_window(f, w, 0, roots, opt, scale_floor);
            if (static_cast<int>(roots.size()) >= n) break;
            w.im_max *= 2.0;
            w.re_max *= 1.5;
            w.re_min *= 1.5;
        }
        // Keep the n lowest fixed-frame |Omega|.
        std::sort(roots.begin(), roots.end(), [&](const cplx& a, const cplx& b) {
            return std::abs(a + bilayer.v_m * kappa) < std::abs(b + bilayer.v_m * kappa);
        });
        if (static_cast<int>(roots.size()) > n) roots.resize(n);
        return roots;
    };

    std::vector<cplx> current = box_search(kappa_grid[start]);
    if (static_cast<int>(current.size()) < n) {
        out.complete = false;
        out.message = "located " + std::to_string(current.size()) + " of " + std::to_string(n) +
                      " requested roots at kappa = " + std::to_string(kappa_grid[start]) +
                      " within the search window";
    }
    const int found = static_cast<int>(current.size());
    if (found == 0) return out;

    out.branches.assign(found, {});
    for (int b = 0; b < found; ++b) {
        out.branches[b].branch_index = b;
        out.branches[b].kappa = kappa_grid;
        out.branches[b].omega_moving.resize(kappa_grid.size());
        out.branches[b].omega_fixed.resize(kappa_grid.size());
        out.branches[b].residual.resize(kappa_grid.size(), 0.0);
        out.branches[b].converged.assign(kappa_grid.size(), false);
        out.branches[b].jump_warning.assign(kappa_grid.size(), false);
    }

    auto record = [&](std::size_t i, const std::vector<cplx>& roots,
                      const std::vector<bool>& ok, const std::vector<double>& res) {
        for (int b = 0; b < found; ++b) {
            out.branches[b].omega_moving[i] = roots[b];
            out.branches[b].omega_fixed[i] = roots[b] + bilayer.v_m * kappa_grid[i];
            out.branches[b].converged[i] = ok[b];
            out.branches[b].residual[i] = res[b];
        }
    };

    auto continue_to = [&](std::size_t i, std::vector<cplx>& prev) {
        const double kappa = kappa_grid[i];
        DispersionFunction f(bilayer, model, kappa);
        std::vector<cplx> roots(found);
        std::vector<bool> ok(found, false);
        std::vector<double> res(found, 0.0);
        bool clash = false;
        for (int b = 0; b < found; ++b) {
            const double scale = std::max(std::abs(prev[b]), scale_floor);
            const RootResult r = refine_root(f, prev[b], scale, opt);
            roots[b] = r.omega_tilde;
            ok[b] = r.converged;
            res[b] = r.residual;
            if (!r.converged) clash = true;
        }
        for (int a = 0; a < found && !clash; ++a)
            for (int b = a + 1; b < found; ++b)
                if (std::abs(roots[a] - roots[b]) <=
                    1e-7 * (std::abs(roots[a]) + scale_floor))
                    clash = true;
        if (clash) {
            // Re-seed from a fresh window search, matched to the previous roots.
            std::vector<cplx> fresh = box_search(kappa);
            if (static_cast<int>(fresh.size()) >= found) {
                std::vector<bool> used(fresh.size(), false);
                for (int b = 0; b < found; ++b) {
                    int best = -1;
                    double bestd = 0.0;
                    for (std::size_t j = 0; j < fresh.size(); ++j) {
                        if (used[j]) continue;
                        const double d = std::abs(fresh[j] - prev[b]);
                        if (best < 0 || d < bestd) {
                            best = static_cast<int>(j);
                            bestd = d;
                        }
                    }
                    used[best] = true;
                    roots[b] = fresh[best];
                    res[b] = f.residual(roots[b]);
                    ok[b] = res[b] <= opt.residual_tol;
                }
            }
        }
        record(i, roots, ok, res);
        prev = roots;
    };

    std::vector<cplx> prev = current;
    {
        std::vector<bool> ok(found, false);
        std::vector<double> res(found, 0.0);
        DispersionFunction f(bilayer, model, kappa_grid[start]);
        for (int b = 0; b < found; ++b) {
            res[b] = f.residual(current[b]);
            ok[b] = res[b] <= opt.residual_tol;
        }
        record(start, current, ok, res);
    }
    for (std::size_t i = start + 1; i < kappa_grid.size(); ++i) continue_to(i, prev);
    prev = current;
    for (std::size_t i = start; i-- > 0;) continue_to(i, prev);

    // Sort branches by Im(Omega) at the smallest kappa.
    std::size_t ref = 0;
    for (std::size_t i = 1; i < kappa_grid.size(); ++i)
        if (std::abs(kappa_grid[i]) < std::abs(kappa_grid[ref])) ref = i;
    std::sort(out.branches.begin(), out.branches.end(),
              [&](const DispersionBranch& a, const DispersionBranch& b) {
                  return a.omega_fixed[ref].imag() < b.omega_fixed[ref].imag();
              });
    for (int b = 0; b < found; ++b) out.branches[b].branch_index = b;
    return out;
}

} // namespace tmdiff::bloch
