//! The invariant battery run by `twisted-tori verify`.
//!
//! Each check reports a measured value against a pinned tolerance. Errors
//! raised while computing a check turn it into a failure rather than
//! aborting the battery.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::curve::{
    beta_grid, curvature_from_jet, eval_jet, offset_circle, total_curvature, u_parameter, winding_number,
    winding_quadrature, CurveSpec, TrigPoly,
};
use crate::error::Result;
use crate::geometry::{complex_structure, metric, omega_c2, stationarity_density, GeometryFrame};
use crate::ode;
use crate::quadrature::adaptive_gauss_kronrod;
use crate::random::{random_curve, random_mixed_curve, random_noncircular_curve, seeded_rng, CurveKind};
use crate::reduction::{self, DoublePointKind, DoublePointSet};
use crate::stationarity::{self, LogRhoCosineFamily, ScanOptions, StationarityOptions, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub module: String,
    pub name: String,
    /// Measured quantity; for boolean checks 0 on success and 1 on failure.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn below(module: &str, name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            module: module.into(),
            name: name.into(),
            value,
            tolerance,
            passed: value < tolerance,
            detail: String::new(),
        }
    }

    fn holds(module: &str, name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            module: module.into(),
            name: name.into(),
            value: if ok { 0.0 } else { 1.0 },
            tolerance: 0.5,
            passed: ok,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} {}::{} value={:.3e} tol={:.1e}",
            self.module, self.name, self.value, self.tolerance
        );
        if !self.detail.is_empty() {
            s.push_str(" (");
            s.push_str(&self.detail);
            s.push(')');
        }
        s
    }
}

fn guard(module: &str, name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check {
        module: module.into(),
        name: name.into(),
        value: f64::NAN,
        tolerance: 0.0,
        passed: false,
        detail: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryOptions {
    pub seed: u64,
    pub n_samples: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            n_samples: 2048,
        }
    }
}

/// Runs every check; order is fixed.
pub fn run_battery(opts: &BatteryOptions) -> Vec<Check> {
    let mut out = Vec::new();
    out.extend(curve_checks(opts));
    out.extend(geometry_checks(opts));
    out.extend(stationarity_checks(opts));
    out.extend(ode_checks());
    out.extend(reduction_checks(opts));
    out
}

fn random_batch(seed: u64, n: usize) -> Vec<CurveSpec> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| random_mixed_curve(&mut rng)).collect()
}

/// Same curve traversed from `β = s`: `γ_s(β) = γ(β + s)`.
pub fn shift_parameter(curve: &CurveSpec, s: f64) -> CurveSpec {
    let shift = |p: &TrigPoly| {
        let mut cos = Vec::with_capacity(p.degree());
        let mut sin = Vec::with_capacity(p.degree());
        for n in 1..=p.degree() {
            let a = p.cos.get(n - 1).copied().unwrap_or(0.0);
            let b = p.sin.get(n - 1).copied().unwrap_or(0.0);
            let (sn, cn) = (n as f64 * s).sin_cos();
            cos.push(a * cn + b * sn);
            sin.push(b * cn - a * sn);
        }
        TrigPoly::new(p.a0, cos, sin)
    };
    let mut f = shift(&curve.f_periodic);
    f.a0 += curve.k as f64 * s;
    CurveSpec::new(shift(&curve.log_rho), f, curve.k)
}

fn curve_checks(opts: &BatteryOptions) -> Vec<Check> {
    const M: &str = "curve_model";
    let mut out = Vec::new();
    let batch = random_batch(opts.seed, 100);

    out.push(guard(M, "jet_vs_central_differences", || {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for c in &batch {
            for beta in beta_grid(8) {
                let j = c.jet_unchecked(beta);
                let (p, m) = (c.jet_unchecked(beta + h), c.jet_unchecked(beta - h));
                let fd = |a: f64, b: f64| (a - b) / (2.0 * h);
                let errs = [
                    j.rho_d1 - fd(p.rho, m.rho),
                    j.rho_d2 - fd(p.rho_d1, m.rho_d1),
                    j.rho_d3 - fd(p.rho_d2, m.rho_d2),
                    j.f_d1 - fd(p.f_val, m.f_val),
                    j.f_d2 - fd(p.f_d1, m.f_d1),
                    j.f_d3 - fd(p.f_d2, m.f_d2),
                ];
                worst = errs.iter().fold(worst, |w, e| w.max(e.abs()));
            }
        }
        Ok(Check::below(M, "jet_vs_central_differences", worst, 1e-6))
    }));

    out.push(guard(M, "winding_structural_matches_quadrature", || {
        let mut worst: f64 = 0.0;
        for c in &batch {
            winding_number(c, 1024)?;
            worst = worst.max((winding_quadrature(c, 1024)? - c.k as f64).abs());
        }
        Ok(Check::below(M, "winding_structural_matches_quadrature", worst, 1e-9))
    }));

    out.push(guard(M, "u_parameter_monotone", || {
        let mut ok = true;
        for (_, c) in corpus::all()? {
            let mut prev = -1.0;
            for i in 0..=64 {
                let u = u_parameter(&c, TAU * i as f64 / 64.0)?;
                ok &= u > prev;
                prev = u;
            }
        }
        Ok(Check::holds(M, "u_parameter_monotone", ok, "corpus, 65-point grid"))
    }));

    out.push(guard(M, "curvature_vs_cartesian", || {
        let mut worst: f64 = 0.0;
        for c in batch.iter().take(20) {
            for beta in beta_grid(64) {
                let j = eval_jet(c, beta)?;
                let (d1, d2) = (j.gamma_d1(), j.gamma_d2());
                let cart = (d1.re * d2.im - d1.im * d2.re) / d1.norm().powi(3);
                let k = curvature_from_jet(&j);
                worst = worst.max((k - cart).abs() / cart.abs().max(1e-300));
            }
        }
        Ok(Check::below(M, "curvature_vs_cartesian", worst, 1e-8))
    }));

    out.push(guard(M, "total_curvature_is_2pi", || {
        let mut worst: f64 = 0.0;
        let mut curves: Vec<CurveSpec> = corpus::all()?.into_iter().map(|(_, c)| c).collect();
        curves.extend(batch.iter().take(20).cloned());
        for c in &curves {
            worst = worst.max((total_curvature(c)? - TAU).abs());
        }
        Ok(Check::below(M, "total_curvature_is_2pi", worst, 1e-8))
    }));
    out
}

fn geometry_checks(opts: &BatteryOptions) -> Vec<Check> {
    const M: &str = "torus_geometry";
    let mut out = Vec::new();
    let batch = random_batch(opts.seed.wrapping_add(1), 20);
    let mut rng = seeded_rng(opts.seed.wrapping_add(2));

    let mut samples = Vec::new();
    for c in &batch {
        for _ in 0..50 {
            use rand::Rng;
            samples.push((c, rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)));
        }
    }

    out.push(guard(M, "lagrangian", || {
        let mut worst: f64 = 0.0;
        for &(c, alpha, beta) in &samples {
            let fr = GeometryFrame::new(&eval_jet(c, beta)?, alpha)?;
            worst = worst.max(omega_c2(&fr.e1, &fr.e2).abs());
        }
        Ok(Check::below(M, "lagrangian", worst, 1e-12))
    }));

    out.push(guard(M, "metric_positive", || {
        let mut ok = true;
        for &(c, _, beta) in &samples {
            let g = metric(&eval_jet(c, beta)?)?;
            ok &= g.g_aa > 0.0 && g.g_bb > 0.0;
        }
        Ok(Check::holds(M, "metric_positive", ok, "1000 random points"))
    }));

    out.push(guard(M, "trace_equals_mean_curvature", || {
        let mut worst: f64 = 0.0;
        for &(c, alpha, beta) in &samples {
            let fr = GeometryFrame::new(&eval_jet(c, beta)?, alpha)?;
            worst = worst.max((fr.trace_second_form() - fr.h).amax());
        }
        Ok(Check::below(M, "trace_equals_mean_curvature", worst, 1e-10))
    }));

    out.push(guard(M, "h_umbilical_coefficients", || {
        let mut worst: f64 = 0.0;
        for &(c, alpha, beta) in &samples {
            let fr = GeometryFrame::new(&eval_jet(c, beta)?, alpha)?;
            let (j1, j2) = (complex_structure(&fr.eps1), complex_structure(&fr.eps2));
            let (lam, mu) = (fr.umbilical.lambda, fr.umbilical.mu);
            let b11 = fr.second_form.b_bb / fr.metric.g_bb;
            let b22 = fr.second_form.b_aa / fr.metric.g_aa;
            let b12 = fr.second_form.b_ab / (fr.metric.g_aa * fr.metric.g_bb).sqrt();
            worst = worst
                .max((b11 - j1 * lam).amax())
                .max((b22 - j1 * mu).amax())
                .max((b12 - j2 * mu).amax());
        }
        Ok(Check::below(M, "h_umbilical_coefficients", worst, 1e-10))
    }));

    out.push(guard(M, "rho_norm_h_shift_invariant", || {
        let mut worst: f64 = 0.0;
        for c in &batch {
            let s = 0.917;
            let shifted = shift_parameter(c, s);
            for beta in beta_grid(32) {
                let a = GeometryFrame::new(&eval_jet(c, beta + s)?, 0.0)?.rho_norm_h;
                let b = GeometryFrame::new(&eval_jet(&shifted, beta)?, 0.0)?.rho_norm_h;
                worst = worst.max((a - b).abs());
            }
        }
        Ok(Check::below(M, "rho_norm_h_shift_invariant", worst, 1e-10))
    }));

    out.push(guard(M, "divergence_identity", || {
        let h = 2e-4;
        let mut worst: f64 = 0.0;
        for c in &batch {
            let s = |b: f64| stationarity_density(&eval_jet(c, b)?);
            for beta in beta_grid(256) {
                let fr = GeometryFrame::new(&eval_jet(c, beta)?, 0.0)?;
                let psi = |b: f64| -> Result<f64> { Ok(s(b)?.powi(2)) };
                let d = (8.0 * (psi(beta + h)? - psi(beta - h)?) - (psi(beta + 2.0 * h)? - psi(beta - 2.0 * h)?))
                    / (12.0 * h);
                let lhs = fr.e2 * (fr.metric.inv_bb * d);
                let jh = complex_structure(&fr.h);
                let rhs = jh * (2.0 * fr.metric.g_aa * fr.div_jh);
                worst = worst.max((lhs - rhs).amax());
            }
        }
        Ok(Check::below(M, "divergence_identity", worst, 1e-8))
    }));
    out
}

fn stationarity_checks(opts: &BatteryOptions) -> Vec<Check> {
    const M: &str = "stationarity";
    let mut out = Vec::new();
    let sopts = StationarityOptions {
        n_samples: opts.n_samples,
        ..Default::default()
    };
    let mut rng = seeded_rng(opts.seed.wrapping_add(3));
    let mut battery: Vec<CurveSpec> = [0.5, 1.0, 2f64.sqrt(), 1.7, 3.0]
        .iter()
        .filter_map(|&r| CurveSpec::circle(r).ok())
        .collect();
    battery.extend((0..45).map(|_| random_noncircular_curve(&mut rng, 1e-3)));

    out.push(guard(M, "defect_iff_divergence_vanishes", || {
        let mut ok = true;
        for c in &battery {
            let rep = stationarity::analyze(c, &sopts)?;
            let stationary = rep.relative_defect < sopts.tolerance;
            ok &= stationary == (rep.max_abs_div_jh < 1e-6);
            ok &= stationary == (rep.rho_norm_h_max - rep.rho_norm_h_min < 1e-6);
        }
        Ok(Check::holds(M, "defect_iff_divergence_vanishes", ok, "50 curves, also rho|H| spread"))
    }));

    out.push(guard(M, "circles_are_product_tori", || {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for c in battery.iter().take(5) {
            let rep = stationarity::analyze(c, &sopts)?;
            ok &= rep.verdict == Verdict::StationaryProduct;
            worst = worst
                .max(rep.defect)
                .max((rep.rho_norm_h_max - 2.0).abs())
                .max((rep.rho_norm_h_min - 2.0).abs())
                .max(rep.b_estimate.abs());
        }
        let mut chk = Check::below(M, "circles_are_product_tori", worst, 1e-10);
        chk.passed &= ok;
        Ok(chk)
    }));

    out.push(guard(M, "noncircular_defect_bounded_below", || {
        let mut least = f64::INFINITY;
        for c in battery.iter().skip(5) {
            least = least.min(stationarity::defect(c, opts.n_samples)?.defect);
        }
        let mut chk = Check::holds(M, "noncircular_defect_bounded_below", least > 1e-4, format!("min defect {least:.3e}"));
        chk.value = least;
        chk.tolerance = 1e-4;
        Ok(chk)
    }));

    out.push(guard(M, "classify_scale_covariant", || {
        let mut ok = true;
        for c in battery.iter().take(10) {
            let base = stationarity::classify(c, &sopts)?;
            for lambda in [0.5, 2.0, 10.0] {
                ok &= stationarity::classify(&c.scaled(lambda)?, &sopts)? == base;
            }
        }
        Ok(Check::holds(M, "classify_scale_covariant", ok, "lambda in {0.5, 2, 10}"))
    }));

    out.push(guard(M, "rotation_invariance", || {
        let mut worst: f64 = 0.0;
        for c in battery.iter().take(10) {
            let a = stationarity::defect(c, opts.n_samples)?;
            let b = stationarity::defect(&c.rotated(1.234), opts.n_samples)?;
            worst = worst
                .max((a.c_estimate - b.c_estimate).abs())
                .max((a.defect - b.defect).abs());
        }
        Ok(Check::below(M, "rotation_invariance", worst, 1e-12))
    }));

    out.push(guard(M, "scan_minimum_at_zero", || {
        let fam = LogRhoCosineFamily::first_harmonic(0.0, 0.5);
        let sc = ScanOptions {
            seed: opts.seed,
            ..Default::default()
        };
        let res = stationarity::scan_family(&fam, &sc)?;
        let again = stationarity::scan_family(&fam, &sc)?;
        let mut chk = Check::below(M, "scan_minimum_at_zero", res.argmin[0].abs().max(res.min_defect), 1e-8);
        chk.passed &= res == again;
        chk.detail = "deterministic rerun".into();
        Ok(chk)
    }));
    out
}

/// `∫_R^{R_max} dR'/(cR'√((R' − R_min)(R_max − R')))` after
/// `R' = m + a cos θ`, which removes both endpoint singularities.
pub fn separated_quadrature(r: f64, c: f64) -> Result<f64> {
    let (lo, hi) = ode::bounds(c)?;
    let (m, a) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let theta = ((r - m) / a).clamp(-1.0, 1.0).acos();
    adaptive_gauss_kronrod(|t| Ok(1.0 / (c * (m + a * t.cos()))), 0.0, theta, 1e-14)
}

/// Periodic sixth-order central difference of uniformly spaced samples.
pub fn periodic_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let at = |i: isize| values[(i.rem_euclid(n as isize)) as usize];
    (0..n as isize)
        .map(|i| {
            (45.0 * (at(i + 1) - at(i - 1)) - 9.0 * (at(i + 2) - at(i - 2)) + (at(i + 3) - at(i - 3))) / (60.0 * h)
        })
        .collect()
}

fn ode_checks() -> Vec<Check> {
    const M: &str = "ode_reconstruction";
    let cs = [2.1, 2.5, 3.0, 5.0, 20.0];
    let mut out = Vec::new();

    out.push(guard(M, "closed_form_vs_quadrature", || {
        let mut worst: f64 = 0.0;
        for c in cs {
            let (lo, hi) = ode::bounds(c)?;
            for i in 1..=20 {
                let r = lo + (hi - lo) * i as f64 / 21.0;
                worst = worst.max((ode::closed_form_u(r, c)? - separated_quadrature(r, c)?).abs());
            }
        }
        Ok(Check::below(M, "closed_form_vs_quadrature", worst, 1e-8))
    }));

    out.push(guard(M, "ascending_branch_mirror", || {
        let mut worst: f64 = 0.0;
        for c in cs {
            let (lo, hi) = ode::bounds(c)?;
            let u1 = ode::half_period(c)?;
            for i in 1..=20 {
                let r = lo + (hi - lo) * i as f64 / 21.0;
                // u on [u1, u*] by integrating from R_min upward
                let rise = u1 + (separated_quadrature(lo, c)? - separated_quadrature(r, c)?);
                worst = worst.max((ode::closed_form_u_ascending(r, c)? - rise).abs());
            }
        }
        Ok(Check::below(M, "ascending_branch_mirror", worst, 1e-8))
    }));

    out.push(guard(M, "numeric_period", || {
        let mut worst: f64 = 0.0;
        for c in cs {
            let p = ode::integrate_profile(c, 256)?;
            worst = worst.max((p.numeric_period - p.header.u_star).abs() / p.header.u_star);
        }
        Ok(Check::below(M, "numeric_period", worst, 1e-6))
    }));

    out.push(guard(M, "constraint_residual_from_samples", || {
        let mut worst: f64 = 0.0;
        for c in cs {
            let p = ode::integrate_profile(c, 4096)?;
            let r: Vec<f64> = p.samples.iter().map(|s| s.r).collect();
            let h = p.numeric_period / r.len() as f64;
            let dr = periodic_derivative(&r, h);
            for (ri, di) in r.iter().zip(&dr) {
                worst = worst.max((di * di - ode::constraint_rhs(*ri, c)).abs());
            }
        }
        Ok(Check::below(M, "constraint_residual_from_samples", worst, 1e-8))
    }));

    out.push(guard(M, "closure_gap_positive_k0", || {
        let mut least = f64::INFINITY;
        for c in cs.iter().copied().chain([10.0, 100.0]) {
            least = least.min(ode::period_analysis(c, 0)?.closure_gap);
        }
        let mut chk = Check::holds(M, "closure_gap_positive_k0", least > 0.0, format!("min gap {least:.3e}"));
        chk.value = least;
        Ok(chk)
    }));

    out.push(guard(M, "k1_angle_increasing", || {
        let mut least = f64::INFINITY;
        for c in cs {
            least = least.min(ode::integrate_profile_k(c, 1, 256)?.min_df_du);
        }
        let mut chk = Check::holds(M, "k1_angle_increasing", least > 0.0, format!("min df/du {least:.3e}"));
        chk.value = least;
        Ok(chk)
    }));
    out
}

fn reduction_checks(opts: &BatteryOptions) -> Vec<Check> {
    const M: &str = "reduction_embedding";
    let mut out = Vec::new();

    let rep = reduction::verify_pullbacks(100, opts.seed);
    out.push(Check::below(M, "pullback_l", rep.l_pullback, 1e-10));
    out.push(Check::below(M, "pullback_psi", rep.psi_pullback, 1e-10));
    out.push(Check::below(M, "pullback_phi_half", rep.phi_half_pullback, 1e-10));
    out.push(Check::below(M, "orbit_direction_in_kernel", rep.orbit_kernel, 1e-12));
    out.push(Check::below(
        M,
        "map_round_trips",
        rep.psi_round_trip.max(rep.phi_half_round_trip),
        1e-12,
    ));

    out.push(guard(M, "level_set_and_reduction_identity", || {
        let mut worst: f64 = 0.0;
        for (_, c) in corpus::all()? {
            worst = worst
                .max(reduction::level_set_check(&c, 128))
                .max(reduction::reduction_identity_residual(&c, 64));
        }
        Ok(Check::below(M, "level_set_and_reduction_identity", worst, 1e-12))
    }));

    out.push(guard(M, "reduced_winding_doubles", || {
        let mut ok = true;
        let mut rng = seeded_rng(opts.seed.wrapping_add(4));
        let mut curves: Vec<CurveSpec> = corpus::all()?.into_iter().map(|(_, c)| c).collect();
        curves.push(random_curve(&mut rng, CurveKind::StarShaped));
        curves.push(random_curve(&mut rng, CurveKind::HalfPlane));
        for c in &curves {
            ok &= winding_number(&reduction::reduced_curve(c), 1024)? == 2 * winding_number(c, 1024)?;
        }
        Ok(Check::holds(M, "reduced_winding_doubles", ok, ""))
    }));

    out.push(guard(M, "double_points_examples", || {
        let mut ok = true;
        let mut detail = Vec::new();
        let off = offset_circle(2.0, 1.0)?;
        let none = reduction::find_double_points(&off)? == DoublePointSet::Points { points: vec![] };
        ok &= none;
        if !none {
            detail.push("offset d=2 has double points");
        }
        let sym = matches!(
            reduction::find_double_points(&CurveSpec::circle(1.0)?)?,
            DoublePointSet::CentrallySymmetric { .. }
        );
        ok &= sym;
        if !sym {
            detail.push("origin circle not flagged");
        }
        let half = offset_circle(0.5, 1.0)?;
        let target = 3f64.sqrt() / 2.0;
        match reduction::find_double_points(&half)? {
            DoublePointSet::Points { points } => {
                let good = points.len() == 2
                    && points.iter().all(|p| {
                        p.kind == DoublePointKind::Cross
                            && p.planar().re.abs() < 1e-6
                            && (p.planar().im.abs() - target).abs() < 1e-6
                    })
                    && points[0].planar().im * points[1].planar().im < 0.0;
                ok &= good;
                if !good {
                    detail.push("half-offset circle points wrong");
                }
            }
            DoublePointSet::CentrallySymmetric { .. } => {
                ok = false;
                detail.push("half-offset circle flagged symmetric");
            }
        }
        Ok(Check::holds(M, "double_points_examples", ok, detail.join("; ")))
    }));

    out.push(guard(M, "double_point_sheet_identities", || {
        let half = offset_circle(0.5, 1.0)?;
        let mut worst: f64 = 0.0;
        let mut rank_ok = true;
        if let DoublePointSet::Points { points } = reduction::find_double_points(&half)? {
            for p in &points {
                worst = worst.max((half.point(p.beta1) + half.point(p.beta2)).norm());
                for alpha in beta_grid(16) {
                    let chk = reduction::sheet_check(&half, p, alpha);
                    worst = worst.max(chk.point).max(chk.d_alpha).max(chk.d_beta);
                    rank_ok &= chk.singular_values[3] < 1e-9 * chk.singular_values[0];
                }
            }
        }
        let mut chk = Check::below(M, "double_point_sheet_identities", worst, 1e-9);
        chk.passed &= rank_ok;
        chk.detail = "includes rank <= 3".into();
        Ok(chk)
    }));

    out.push(guard(M, "cover_identity_origin_circle", || {
        let worst = [0.5, 1.0, 3.0]
            .iter()
            .map(|&r| CurveSpec::circle(r).map(|c| reduction::cover_identity_residual(&c, 64)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Check::below(M, "cover_identity_origin_circle", worst, 1e-12))
    }));

    out.push(guard(M, "spec_json_round_trip", || {
        let mut ok = true;
        for (_, c) in corpus::all()? {
            ok &= CurveSpec::from_json(&c.to_json()?)? == c;
        }
        for c in random_batch(opts.seed.wrapping_add(5), 10) {
            ok &= CurveSpec::from_json(&c.to_json()?)? == c;
        }
        Ok(Check::holds(M, "spec_json_round_trip", ok, ""))
    }));
    out
}
