//! Hamiltonian stationarity of twisted tori.
//!
//! `L_γ` is Hamiltonian stationary exactly when `s(β) = √det g · C_{ρ,f}` is
//! constant. Along such curves `ρ²(φ − c/2)` is conserved, where
//! `φ = w/√(v² + w²)`. The only stationary members are circles about the
//! origin, for which `ρ|H| = 2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{beta_grid, eval_jet, orientation_check, CurveJet, CurveSpec, Orientation, TrigPoly};
use crate::error::{Error, Result};
use crate::geometry::{div_jh, mean_curvature, stationarity_density};
use crate::nelder_mead::{self, NelderMeadOptions};
use crate::random::{rho_variance, seeded_rng};

/// Default `β` grid for defect evaluation.
pub const DEFAULT_SAMPLES: usize = 2048;
/// Stationary iff `defect / |c_estimate|` is below this.
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Critical values of `ρ` closer than this are merged.
pub const CRITICAL_VALUE_TOL: f64 = 1e-9;
const CRITICAL_SCAN_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Stationary, `ρ` constant and `ρ|H| = 2`: a product torus.
    StationaryProduct,
    NonStationary,
    /// `s(β)` is constant within tolerance but the product-torus checks
    /// (constant `ρ`, `ρ|H| = 2`) fail. Never expected; flags an anomaly.
    DegenerateAllCritical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectEstimate {
    /// Mean of `s(β)` over the grid.
    pub c_estimate: f64,
    /// `max_β |s(β) − c_estimate|`.
    pub defect: f64,
}

impl DefectEstimate {
    pub fn relative(&self) -> f64 {
        if self.c_estimate == 0.0 {
            f64::INFINITY
        } else {
            self.defect / self.c_estimate.abs()
        }
    }
}

/// One row of the `s(β)` trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub beta: f64,
    pub s: f64,
    pub rho_norm_h: f64,
    pub div_jh: f64,
    pub conserved: f64,
}

fn jets(curve: &CurveSpec, n: usize) -> Result<Vec<CurveJet>> {
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    beta_grid(n).map(|b| eval_jet(curve, b)).collect()
}

/// `φ = w/√(v² + w²)`; always in `[−1, 1]`.
pub fn defect_phi(jet: &CurveJet) -> f64 {
    jet.w / jet.speed_sq().sqrt()
}

pub fn defect(curve: &CurveSpec, n_samples: usize) -> Result<DefectEstimate> {
    let s: Vec<f64> = jets(curve, n_samples)?
        .iter()
        .map(stationarity_density)
        .collect::<Result<_>>()?;
    let c_estimate = s.iter().sum::<f64>() / s.len() as f64;
    let defect = s.iter().map(|x| (x - c_estimate).abs()).fold(0.0, f64::max);
    Ok(DefectEstimate { c_estimate, defect })
}

/// `ρ²(φ − c/2)` at `beta`.
pub fn conserved_quantity(curve: &CurveSpec, c: f64, beta: f64) -> Result<f64> {
    let jet = eval_jet(curve, beta)?;
    Ok(jet.rho * jet.rho * (defect_phi(&jet) - 0.5 * c))
}

/// `s`, `ρ|H|`, `div_g(JH)` and the conserved quantity along the grid.
pub fn trace(curve: &CurveSpec, n_samples: usize, c: f64) -> Result<Vec<TracePoint>> {
    jets(curve, n_samples)?
        .iter()
        .map(|jet| {
            Ok(TracePoint {
                beta: jet.beta,
                s: stationarity_density(jet)?,
                rho_norm_h: mean_curvature(jet, 0.0)?.rho_norm_h,
                div_jh: div_jh(jet)?,
                conserved: jet.rho * jet.rho * (defect_phi(jet) - 0.5 * c),
            })
        })
        .collect()
}

/// Critical points of `ρ` along the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    /// `ρ` is constant: every `β` is critical.
    pub degenerate: bool,
    pub n_points: usize,
    pub n_values: usize,
    pub locations: Vec<f64>,
    /// Distinct critical values, ascending.
    pub values: Vec<f64>,
}

/// Roots of `ρ̇` (equivalently of `v`) on `[0, 2π)` by sign-change scan and
/// bisection.
pub fn count_critical_points(curve: &CurveSpec) -> CriticalPoints {
    let v = |b: f64| curve.log_rho.eval_d3(b)[1];
    let grid: Vec<f64> = beta_grid(CRITICAL_SCAN_GRID).collect();
    let vals: Vec<f64> = grid.iter().map(|&b| v(b)).collect();
    let vmax = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if curve.log_rho.is_constant() || vmax < 1e-13 {
        return CriticalPoints {
            degenerate: true,
            n_points: 0,
            n_values: 0,
            locations: Vec::new(),
            values: Vec::new(),
        };
    }
    let h = std::f64::consts::TAU / CRITICAL_SCAN_GRID as f64;
    let mut roots = Vec::new();
    for i in 0..CRITICAL_SCAN_GRID {
        let a = vals[i];
        let b = vals[(i + 1) % CRITICAL_SCAN_GRID];
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a * b < 0.0 {
            let (mut lo, mut hi, mut flo) = (grid[i], grid[i] + h, a);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = v(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi) % std::f64::consts::TAU);
        }
    }
    let mut values: Vec<f64> = roots.iter().map(|&b| curve.rho(b)).collect();
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for r in values {
        match distinct.last() {
            Some(&last) if (r - last).abs() <= CRITICAL_VALUE_TOL => {}
            _ => distinct.push(r),
        }
    }
    CriticalPoints {
        degenerate: false,
        n_points: roots.len(),
        n_values: distinct.len(),
        locations: roots,
        values: distinct,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityOptions {
    pub n_samples: usize,
    /// Relative defect threshold.
    pub tolerance: f64,
    /// Threshold for `|ρ|H| − 2|` and the relative variance of `ρ`.
    pub product_tolerance: f64,
}

impl Default for StationarityOptions {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
            tolerance: STATIONARITY_TOL,
            product_tolerance: STATIONARITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub c_estimate: f64,
    pub defect: f64,
    pub relative_defect: f64,
    pub b_estimate: f64,
    pub b_spread: f64,
    pub rho_norm_h_min: f64,
    pub rho_norm_h_max: f64,
    pub max_abs_div_jh: f64,
    pub rho_relative_variance: f64,
    pub n_critical_points: usize,
    pub n_critical_values: usize,
    pub critical_degenerate: bool,
    pub verdict: Verdict,
    pub n_samples: usize,
    pub tolerance: f64,
}

/// Full stationarity analysis. Requires a counterclockwise curve.
pub fn analyze(curve: &CurveSpec, opts: &StationarityOptions) -> Result<StationarityReport> {
    let orientation_grid = opts.n_samples.max(64);
    match orientation_check(curve, orientation_grid)? {
        Orientation::CounterClockwise => {}
        _ => {
            return Err(Error::OrientationError {
                signed_area: crate::curve::signed_area(curve, orientation_grid)?,
            })
        }
    }
    let est = defect(curve, opts.n_samples)?;
    let points = trace(curve, opts.n_samples, est.c_estimate)?;
    let n = points.len() as f64;
    let b_estimate = points.iter().map(|p| p.conserved).sum::<f64>() / n;
    let (b_min, b_max) = min_max(points.iter().map(|p| p.conserved));
    let (h_min, h_max) = min_max(points.iter().map(|p| p.rho_norm_h));
    let max_abs_div_jh = points.iter().map(|p| p.div_jh.abs()).fold(0.0, f64::max);

    let mean_rho = beta_grid(opts.n_samples).map(|b| curve.rho(b)).sum::<f64>() / n;
    let rho_relative_variance = rho_variance(curve, opts.n_samples) / (mean_rho * mean_rho);
    let crit = count_critical_points(curve);

    let relative_defect = est.relative();
    let verdict = if relative_defect < opts.tolerance {
        let product = rho_relative_variance < opts.product_tolerance
            && (h_min - 2.0).abs() < opts.product_tolerance
            && (h_max - 2.0).abs() < opts.product_tolerance;
        if product {
            Verdict::StationaryProduct
        } else {
            Verdict::DegenerateAllCritical
        }
    } else {
        Verdict::NonStationary
    };

    Ok(StationarityReport {
        c_estimate: est.c_estimate,
        defect: est.defect,
        relative_defect,
        b_estimate,
        b_spread: b_max - b_min,
        rho_norm_h_min: h_min,
        rho_norm_h_max: h_max,
        max_abs_div_jh,
        rho_relative_variance,
        n_critical_points: crit.n_points,
        n_critical_values: crit.n_values,
        critical_degenerate: crit.degenerate,
        verdict,
        n_samples: opts.n_samples,
        tolerance: opts.tolerance,
    })
}

pub fn classify(curve: &CurveSpec, opts: &StationarityOptions) -> Result<Verdict> {
    Ok(analyze(curve, opts)?.verdict)
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// A parametrized family of curves scanned by [`scan_family`].
pub trait CurveFamily: Sync {
    fn param_names(&self) -> Vec<String>;
    /// Lower and upper parameter bounds.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn curve(&self, params: &[f64]) -> Result<CurveSpec>;

    fn dim(&self) -> usize {
        self.param_names().len()
    }
}

/// `ρ = exp(Σ t_j cos(n_j β))`, `f = β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRhoCosineFamily {
    pub harmonics: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LogRhoCosineFamily {
    /// The one-parameter family `ρ = exp(t cos β)`, `t ∈ [t_min, t_max]`.
    pub fn first_harmonic(t_min: f64, t_max: f64) -> Self {
        Self {
            harmonics: vec![1],
            lower: vec![t_min],
            upper: vec![t_max],
        }
    }
}

impl CurveFamily for LogRhoCosineFamily {
    fn param_names(&self) -> Vec<String> {
        self.harmonics.iter().map(|n| format!("t{n}")).collect()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }

    fn curve(&self, params: &[f64]) -> Result<CurveSpec> {
        if params.len() != self.harmonics.len() {
            return Err(Error::domain("parameter count does not match the family"));
        }
        let deg = self.harmonics.iter().copied().max().unwrap_or(0);
        let mut cos = vec![0.0; deg];
        for (&n, &t) in self.harmonics.iter().zip(params) {
            if n == 0 {
                return Err(Error::domain("harmonic index must be at least 1"));
            }
            cos[n - 1] += t;
        }
        Ok(CurveSpec::new(TrigPoly::new(0.0, cos, vec![]), TrigPoly::default(), 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Grid points per parameter axis.
    pub grid_per_dim: usize,
    /// Maximum objective evaluations for the polish stage.
    pub budget: usize,
    pub seed: u64,
    pub n_samples: usize,
    /// Members with `ρ`-variance below this are excluded.
    pub min_rho_variance: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid_per_dim: 51,
            budget: 400,
            seed: 0,
            n_samples: DEFAULT_SAMPLES,
            min_rho_variance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub params: Vec<f64>,
    pub defect: f64,
    pub c_estimate: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub param_names: Vec<String>,
    pub rows: Vec<ScanRow>,
    pub argmin: Vec<f64>,
    pub min_defect: f64,
    pub polish_evals: usize,
}

fn grid_points(lower: &[f64], upper: &[f64], per_dim: usize) -> Vec<Vec<f64>> {
    let axis = |d: usize| -> Vec<f64> {
        if per_dim == 1 {
            vec![0.5 * (lower[d] + upper[d])]
        } else {
            (0..per_dim)
                .map(|i| lower[d] + (upper[d] - lower[d]) * i as f64 / (per_dim - 1) as f64)
                .collect()
        }
    };
    let mut points = vec![Vec::new()];
    for d in 0..lower.len() {
        let ax = axis(d);
        points = points
            .into_iter()
            .flat_map(|p| {
                ax.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    points
}

fn member_defect<F: CurveFamily + ?Sized>(
    family: &F,
    params: &[f64],
    opts: &ScanOptions,
) -> (f64, f64, bool) {
    let Ok(curve) = family.curve(params) else {
        return (f64::INFINITY, f64::NAN, true);
    };
    let excluded = opts
        .min_rho_variance
        .is_some_and(|m| rho_variance(&curve, 512) < m);
    match defect(&curve, opts.n_samples) {
        Ok(est) => (est.defect, est.c_estimate, excluded),
        Err(_) => (f64::INFINITY, f64::NAN, true),
    }
}

/// Grid scan of the stationarity defect over a family, followed by a
/// Nelder-Mead polish from the best admissible grid point.
pub fn scan_family<F: CurveFamily + ?Sized>(family: &F, opts: &ScanOptions) -> Result<ScanResult> {
    let (lower, upper) = family.bounds();
    if lower.len() != family.dim() || upper.len() != family.dim() {
        return Err(Error::domain("family bounds do not match its dimension"));
    }
    if lower.iter().zip(&upper).any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::domain("family bounds are inverted"));
    }
    if opts.grid_per_dim == 0 || family.dim() == 0 {
        return Err(Error::BudgetExhausted {
            evaluations: 0,
            reason: "empty family".into(),
        });
    }
    let points = grid_points(&lower, &upper, opts.grid_per_dim);
    let rows: Vec<ScanRow> = points
        .into_par_iter()
        .map(|params| {
            let (defect, c_estimate, excluded) = member_defect(family, &params, opts);
            ScanRow {
                params,
                defect,
                c_estimate,
                excluded,
            }
        })
        .collect();

    // lowest index wins ties
    let mut best: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        if row.excluded || !row.defect.is_finite() {
            continue;
        }
        if best.is_none_or(|b| row.defect < rows[b].defect) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        return Err(Error::BudgetExhausted {
            evaluations: rows.len(),
            reason: "no admissible family member".into(),
        });
    };

    let mut rng = seeded_rng(opts.seed);
    let denom = opts.grid_per_dim.saturating_sub(1).max(1) as f64;
    let steps: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| {
            let cell = (hi - lo) / denom;
            let jitter: f64 = rand::Rng::random_range(&mut rng, 0.0..0.1);
            if cell > 0.0 { cell * (1.0 + jitter) } else { 0.0 }
        })
        .collect();
    let polished = nelder_mead::minimize(
        |x| {
            let (d, _, excluded) = member_defect(family, x, opts);
            if excluded {
                f64::INFINITY
            } else {
                d
            }
        },
        &rows[best].params,
        &steps,
        &lower,
        &upper,
        NelderMeadOptions {
            max_evals: opts.budget,
            ..Default::default()
        },
    );
    if !polished.converged {
        return Err(Error::BudgetExhausted {
            evaluations: polished.evals,
            reason: format!("polish did not converge (best defect {:e})", polished.f),
        });
    }
    let (argmin, min_defect) = if polished.f <= rows[best].defect {
        (polished.x, polished.f)
    } else {
        (rows[best].params.clone(), rows[best].defect)
    };
    Ok(ScanResult {
        param_names: family.param_names(),
        rows,
        argmin,
        min_defect,
        polish_evals: polished.evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn origin_circles_are_stationary() {
        for r in [0.3, 1.0, 4.0] {
            let est = defect(&CurveSpec::circle(r).unwrap(), DEFAULT_SAMPLES).unwrap();
            assert!((est.c_estimate - 2.0).abs() < 1e-12);
            assert!(est.defect < 1e-10);
        }
    }

    #[test]
    fn perturbed_and_offset_circles_are_not() {
        let pert = CurveSpec::new(TrigPoly::new(0.0, vec![0.1], vec![]), TrigPoly::default(), 1);
        assert!(defect(&pert, DEFAULT_SAMPLES).unwrap().defect > 1e-3);
        let off = corpus::chekanov_circle().unwrap();
        assert!(defect(&off, DEFAULT_SAMPLES).unwrap().defect > 1e-2);
    }

    #[test]
    fn conserved_quantity_examples() {
        let c = CurveSpec::circle(1.4).unwrap();
        for b in [0.0, 1.0, 2.5] {
            assert!(conserved_quantity(&c, 2.0, b).unwrap().abs() < 1e-14);
        }
        let off = corpus::chekanov_circle().unwrap();
        let est = defect(&off, 512).unwrap();
        let vals: Vec<f64> = beta_grid(64)
            .map(|b| conserved_quantity(&off, est.c_estimate, b).unwrap())
            .collect();
        let (lo, hi) = min_max(vals.into_iter());
        assert!(hi - lo > 1e-3);
    }

    #[test]
    fn phi_is_bounded() {
        let off = corpus::chekanov_circle().unwrap();
        for b in beta_grid(200) {
            let phi = defect_phi(&eval_jet(&off, b).unwrap());
            assert!(phi.abs() <= 1.0);
        }
    }

    #[test]
    fn classification_examples() {
        let opts = StationarityOptions::default();
        assert_eq!(
            classify(&CurveSpec::circle(1.7).unwrap(), &opts).unwrap(),
            Verdict::StationaryProduct
        );
        assert_eq!(classify(&corpus::star_shaped(), &opts).unwrap(), Verdict::NonStationary);
        assert_eq!(
            classify(&corpus::chekanov_circle().unwrap(), &opts).unwrap(),
            Verdict::NonStationary
        );
    }

    #[test]
    fn clockwise_input_is_rejected() {
        let cw = CurveSpec::new(TrigPoly::default(), TrigPoly::default(), -1);
        assert!(matches!(
            classify(&cw, &StationarityOptions::default()),
            Err(Error::OrientationError { .. })
        ));
    }

    #[test]
    fn critical_point_examples() {
        let one = CurveSpec::new(TrigPoly::new(0.0, vec![0.1], vec![]), TrigPoly::default(), 1);
        let cp = count_critical_points(&one);
        assert_eq!((cp.n_points, cp.n_values, cp.degenerate), (2, 2, false));
        let two = CurveSpec::new(TrigPoly::new(0.0, vec![0.0, 0.1], vec![]), TrigPoly::default(), 1);
        let cp = count_critical_points(&two);
        assert_eq!((cp.n_points, cp.n_values), (4, 2));
        assert!(count_critical_points(&CurveSpec::circle(2.0).unwrap()).degenerate);
    }

    #[test]
    fn report_for_origin_circle() {
        let rep = analyze(&CurveSpec::circle(1.0).unwrap(), &StationarityOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::StationaryProduct);
        assert!(rep.b_estimate.abs() < 1e-12);
        assert!(rep.critical_degenerate);
        assert!((rep.rho_norm_h_min - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scan_finds_the_circle() {
        let fam = LogRhoCosineFamily::first_harmonic(0.0, 0.5);
        let res = scan_family(&fam, &ScanOptions { n_samples: 512, ..Default::default() }).unwrap();
        assert_eq!(res.rows.len(), 51);
        assert!(res.argmin[0].abs() < 1e-9);
        assert!(res.min_defect < 1e-10);
    }

    #[test]
    fn constrained_scan_stays_away_from_zero() {
        let fam = LogRhoCosineFamily::first_harmonic(0.1, 0.5);
        let res = scan_family(&fam, &ScanOptions { n_samples: 512, ..Default::default() }).unwrap();
        assert!((res.argmin[0] - 0.1).abs() < 1e-9);
        assert!(res.min_defect > 1e-2);

        let fam = LogRhoCosineFamily::first_harmonic(0.0, 0.5);
        let opts = ScanOptions {
            n_samples: 512,
            min_rho_variance: Some(0.005),
            ..Default::default()
        };
        let res = scan_family(&fam, &opts).unwrap();
        assert!(res.argmin[0] > 0.09);
        assert!(res.min_defect > 1e-2);
    }

    #[test]
    fn empty_family_exhausts_budget() {
        let fam = LogRhoCosineFamily::first_harmonic(0.0, 0.5);
        let opts = ScanOptions {
            grid_per_dim: 0,
            ..Default::default()
        };
        assert!(matches!(scan_family(&fam, &opts), Err(Error::BudgetExhausted { .. })));
    }

    #[test]
    fn scan_is_deterministic() {
        let fam = LogRhoCosineFamily {
            harmonics: vec![1, 2],
            lower: vec![0.0, -0.2],
            upper: vec![0.3, 0.2],
        };
        let opts = ScanOptions {
            grid_per_dim: 7,
            n_samples: 256,
            seed: 11,
            ..Default::default()
        };
        let a = scan_family(&fam, &opts).unwrap();
        let b = scan_family(&fam, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.min_defect < 1e-9);
    }
}
