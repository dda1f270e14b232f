//! Acceptance criteria, one PASS/FAIL line each. Reference values come from
//! oracles written here: spectral differentiation of sampled curve points,
//! adaptive Simpson quadrature, finite differences and closed forms.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64 as C64;

use twisted_tori::curve::{self, offset_circle, CurveSpec};
use twisted_tori::geometry::{complex_structure, immersion, GeometryFrame};
use twisted_tori::random::{random_mixed_curve, random_noncircular_curve, rho_variance, seeded_rng};
use twisted_tori::reduction::{self, DoublePointKind, DoublePointSet};
use twisted_tori::stationarity::{self, LogRhoCosineFamily, ScanOptions, StationarityOptions, Verdict};
use twisted_tori::{corpus, ode};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Samples of `γ`, `γ′`, `γ″` on `n` uniform nodes, the derivatives taken
/// by trigonometric interpolation of the sampled points.
struct Spectral {
    beta: Vec<f64>,
    g: Vec<C64>,
    d1: Vec<C64>,
    d2: Vec<C64>,
}

fn spectral(curve: &CurveSpec, n: usize) -> Spectral {
    let beta: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let g: Vec<C64> = beta.iter().map(|&b| curve.point(b)).collect();
    let root: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, TAU * j as f64 / n as f64)).collect();
    let half = (n / 2) as i64;
    let modes: Vec<i64> = (-(half - 1)..half).collect();
    let coeff: Vec<C64> = modes
        .iter()
        .map(|&m| {
            let s: C64 = g
                .iter()
                .enumerate()
                .map(|(j, &gj)| gj * root[((-m * j as i64).rem_euclid(n as i64)) as usize])
                .sum();
            s / n as f64
        })
        .collect();
    let synth = |order: u32| -> Vec<C64> {
        (0..n)
            .map(|j| {
                modes
                    .iter()
                    .zip(&coeff)
                    .map(|(&m, &c)| {
                        let factor = C64::new(0.0, m as f64).powu(order);
                        factor * c * root[((m * j as i64).rem_euclid(n as i64)) as usize]
                    })
                    .sum()
            })
            .collect()
    };
    let (d1, d2) = (synth(1), synth(2));
    Spectral { beta, g, d1, d2 }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Cartesian curvature `(x′y″ − y′x″)/|γ′|³`.
fn cartesian_curvature(d1: C64, d2: C64) -> f64 {
    cross(d1, d2) / d1.norm().powi(3)
}

/// `√det g · C` rebuilt from plane data: `ρκ + ⟨iγ, γ′⟩/(|γ||γ′|)`.
fn density_oracle(g: C64, d1: C64, d2: C64) -> f64 {
    g.norm() * cartesian_curvature(d1, d2) + cross(g, d1) / (g.norm() * d1.norm())
}

fn oracle_defect(curve: &CurveSpec, n: usize) -> f64 {
    let sp = spectral(curve, n);
    let s: Vec<f64> = (0..n).map(|j| density_oracle(sp.g[j], sp.d1[j], sp.d2[j])).collect();
    let mean = s.iter().sum::<f64>() / n as f64;
    s.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max)
}

fn random_batch(seed: u64, n: usize) -> Vec<CurveSpec> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| random_mixed_curve(&mut rng)).collect()
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, SQRT_2, 3.0] {
        let c = CurveSpec::circle(r).map_err(|e| e.to_string())?;
        for beta in curve::beta_grid(2048) {
            let jet = curve::eval_jet(&c, beta).map_err(|e| e.to_string())?;
            let fr = GeometryFrame::new(&jet, 0.0).map_err(|e| e.to_string())?;
            worst = worst.max((fr.rho_norm_h - 2.0).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        worst < 1e-10 && elapsed < 1.0,
        format!("max |rho|H| - 2| = {worst:.2e} (tol 1e-10), {elapsed:.3} s (limit 1 s)"),
    )
}

fn criterion_2() -> Outcome {
    let opts = StationarityOptions::default();
    let mut worst_circle: f64 = 0.0;
    for r in [0.5, 1.0, SQRT_2, 3.0] {
        let c = CurveSpec::circle(r).map_err(|e| e.to_string())?;
        let rep = stationarity::analyze(&c, &opts).map_err(|e| e.to_string())?;
        if rep.verdict != Verdict::StationaryProduct {
            return Err(format!("circle r = {r} classified {:?}", rep.verdict));
        }
        worst_circle = worst_circle.max(rep.defect).max(oracle_defect(&c, 256));
    }

    let mut rng = seeded_rng(41);
    let mut least = f64::INFINITY;
    let mut oracle_gap: f64 = 0.0;
    for _ in 0..50 {
        let c = random_noncircular_curve(&mut rng, 1e-3);
        if rho_variance(&c, 2048) < 1e-3 {
            return Err("generator returned a near-circular curve".into());
        }
        least = least.min(stationarity::defect(&c, 2048).map_err(|e| e.to_string())?.defect);
        let lib = stationarity::defect(&c, 256).map_err(|e| e.to_string())?.defect;
        oracle_gap = oracle_gap.max((lib - oracle_defect(&c, 256)).abs());
    }

    let fam = LogRhoCosineFamily::first_harmonic(0.0, 0.5);
    let scan = stationarity::scan_family(&fam, &ScanOptions::default()).map_err(|e| e.to_string())?;
    let t_min = scan.argmin[0];
    check(
        worst_circle < 1e-10 && least > 1e-4 && oracle_gap < 1e-8 && t_min.abs() < 1e-8,
        format!(
            "circle defect {worst_circle:.2e} (tol 1e-10); min non-circular defect {least:.2e} (> 1e-4); \
             library vs oracle {oracle_gap:.2e} (tol 1e-8); scan argmin t = {t_min:.2e}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for c in random_batch(43, 20) {
        // ρ²|JH|² from the frame vectors
        let psi = |b: f64| -> f64 {
            let jet = c.jet_unchecked(b);
            let fr = GeometryFrame::new(&jet, 0.0).expect("regular");
            fr.e1.norm_squared() * complex_structure(&fr.h).norm_squared()
        };
        for beta in curve::beta_grid(256) {
            let d = (45.0 * (psi(beta + h) - psi(beta - h)) - 9.0 * (psi(beta + 2.0 * h) - psi(beta - 2.0 * h))
                + (psi(beta + 3.0 * h) - psi(beta - 3.0 * h)))
                / (60.0 * h);
            let fr = GeometryFrame::new(&c.jet_unchecked(beta), 0.0).map_err(|e| e.to_string())?;
            let lhs = fr.e2 * (d / fr.e2.norm_squared());
            let rhs = complex_structure(&fr.h) * (2.0 * fr.e1.norm_squared() * fr.div_jh);
            worst = worst.max((lhs - rhs).amax());
        }
    }
    check(worst < 1e-8, format!("max componentwise residual {worst:.2e} (tol 1e-8), 20 curves x 256 points"))
}

fn criterion_4() -> Outcome {
    let batch = random_batch(44, 20);
    let mut rel: f64 = 0.0;
    let mut turning: f64 = 0.0;
    for c in &batch {
        let sp = spectral(c, 256);
        let mut total = 0.0;
        for j in 0..256 {
            let oracle = cartesian_curvature(sp.d1[j], sp.d2[j]);
            let lib = curve::signed_curvature(c, sp.beta[j]).map_err(|e| e.to_string())?;
            rel = rel.max((lib - oracle).abs() / oracle.abs());
            total += oracle * sp.d1[j].norm() * TAU / 256.0;
        }
        turning = turning.max((total - TAU).abs());
    }
    let mut lib_turning: f64 = 0.0;
    let mut simple: Vec<CurveSpec> = corpus::all().map_err(|e| e.to_string())?.into_iter().map(|(_, c)| c).collect();
    simple.extend(batch);
    for c in &simple {
        lib_turning = lib_turning.max((curve::total_curvature(c).map_err(|e| e.to_string())? - TAU).abs());
    }
    let unit = offset_circle(2.0, 1.0).map_err(|e| e.to_string())?;
    let mut unit_dev: f64 = 0.0;
    for beta in curve::beta_grid(1000) {
        unit_dev = unit_dev.max((curve::signed_curvature(&unit, beta).map_err(|e| e.to_string())? - 1.0).abs());
    }
    check(
        rel < 1e-8 && lib_turning < 1e-8 && turning < 1e-8 && unit_dev < 1e-10,
        format!(
            "relative curvature error {rel:.2e} (tol 1e-8); |total curvature - 2pi| {lib_turning:.2e}, \
             oracle {turning:.2e} (tol 1e-8); offset unit circle |kappa - 1| {unit_dev:.2e} (tol 1e-10)"
        ),
    )
}

fn criterion_5() -> Outcome {
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for c in random_batch(45, 20) {
        // metric from the plane curve: g_aa = |γ|², g_bb = |γ′|²
        let g_aa = |b: f64| c.point(b).norm_sqr();
        let g_bb = |b: f64| c.jet_unchecked(b).gamma_d1().norm_sqr();
        let fd = |f: &dyn Fn(f64) -> f64, b: f64| (8.0 * (f(b + h) - f(b - h)) - (f(b + 2.0 * h) - f(b - 2.0 * h))) / (12.0 * h);
        for beta in curve::beta_grid(64) {
            let (da, db) = (fd(&g_aa, beta), fd(&g_bb, beta));
            let (ga, gb) = (g_aa(beta), g_bb(beta));
            // Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij), only ∂_β nonzero
            let oracle = [0.0, 0.5 * da / ga, 0.0, -0.5 * da / gb, 0.0, 0.5 * db / gb];
            let jet = curve::eval_jet(&c, beta).map_err(|e| e.to_string())?;
            let g = twisted_tori::geometry::christoffel(&jet).map_err(|e| e.to_string())?;
            let lib = [g.a_aa, g.a_ab, g.a_bb, g.b_aa, g.b_ab, g.b_bb];
            for (a, b) in lib.iter().zip(oracle) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(worst < 1e-6, format!("max |Gamma - Gamma_fd| = {worst:.2e} (tol 1e-6)"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut quad: f64 = 0.0;
    let mut period: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    let mut gap_err: f64 = 0.0;
    for c in [2.1, 2.5, 3.0, 5.0, 20.0] {
        let (lo, hi) = ((c - 2.0) / c, (c + 2.0) / c);
        let (mid, amp) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for i in 1..=20 {
            let r = lo + (hi - lo) * i as f64 / 21.0;
            // R = mid + amp cos θ turns dR/(cR√((R − R_min)(R_max − R))) into dθ/(cR)
            let theta = ((r - mid) / amp).acos();
            let oracle = simpson(&|t: f64| 1.0 / (c * (mid + amp * t.cos())), 0.0, theta, 1e-14);
            quad = quad.max((ode::closed_form_u(r, c).map_err(|e| e.to_string())? - oracle).abs());
        }
        let closed = TAU / (c * c - 4.0).sqrt();
        let prof = ode::integrate_profile(c, 256).map_err(|e| e.to_string())?;
        period = period.max((prof.numeric_period - closed).abs() / closed);
        let gap = ode::period_analysis(c, 0).map_err(|e| e.to_string())?.closure_gap;
        min_gap = min_gap.min(gap);
        gap_err = gap_err.max((gap - (closed - TAU / c)).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        quad < 1e-8 && period < 1e-6 && min_gap > 0.0 && gap_err < 1e-12 && elapsed < 5.0,
        format!(
            "closed form vs quadrature {quad:.2e} (tol 1e-8); period rel err {period:.2e} (tol 1e-6); \
             min gap {min_gap:.4} (> 0), gap formula err {gap_err:.1e}; {elapsed:.2} s (limit 5 s)"
        ),
    )
}

fn criterion_7() -> Outcome {
    use rand::Rng as _;
    let mut rng = seeded_rng(47);
    let mut u = || rng.random_range(-1.0..1.0);
    let om = |x: &[C64; 2], y: &[C64; 2]| cross(x[0], y[0]) + cross(x[1], y[1]);
    let reduced = |w: C64, a: C64, b: C64| cross(a, b) / (2.0 * w.norm());
    let psi = |w: C64| w * w.norm();
    let phi = |w: C64| 0.5 * w * w;
    let h = 1e-3;
    let jac = |f: &dyn Fn(C64) -> C64, w: C64, a: C64| {
        (8.0 * (f(w + a * h) - f(w - a * h)) - (f(w + a * (2.0 * h)) - f(w - a * (2.0 * h)))) / (12.0 * h)
    };
    let (mut res_l, mut res_psi, mut res_phi): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let r = 0.3 + 1.5 * (u() + 1.0) / 2.0;
        let (th, et) = (PI * u(), PI * u());
        let (ea, eb) = (C64::from_polar(1.0, th), C64::from_polar(1.0, et));
        let z = [r * ea, r * eb];
        let basis = [[ea, eb], [C64::i() * z[0], C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::i() * z[1]]];
        let mut tangent = || {
            let (a, b, c) = (u(), u(), u());
            [0, 1].map(|k| basis[0][k] * a + basis[1][k] * b + basis[2][k] * c)
        };
        let (x, y) = (tangent(), tangent());
        let l = z[0] * z[1];
        let dl = |v: &[C64; 2]| z[0] * v[1] + z[1] * v[0];
        res_l = res_l.max((om(&x, &y) - reduced(l, dl(&x), dl(&y))).abs());

        let w = C64::from_polar(0.5 + 1.5 * (u() + 1.0) / 2.0, PI * u());
        let (a, b) = (C64::new(u(), u()), C64::new(u(), u()));
        let target = cross(a, b);
        res_psi = res_psi.max((reduced(psi(w), jac(&psi, w, a), jac(&psi, w, b)) - target).abs());
        let wu = C64::new(w.re, w.im.abs());
        res_phi = res_phi.max((reduced(phi(wu), jac(&phi, wu, a), jac(&phi, wu, b)) - target).abs());
    }
    let lib = reduction::verify_pullbacks(100, 47);
    let mut level: f64 = 0.0;
    for (_, c) in corpus::all().map_err(|e| e.to_string())? {
        level = level.max(reduction::level_set_check(&c, 128));
        for beta in curve::beta_grid(64) {
            let g = c.point(beta);
            for alpha in curve::beta_grid(16) {
                let (z1, z2) = (g * C64::from_polar(1.0, alpha) / SQRT_2, g * C64::from_polar(1.0, -alpha) / SQRT_2);
                level = level.max(0.5 * (z1.norm_sqr() - z2.norm_sqr()).abs());
            }
        }
    }
    let oracle_worst = res_l.max(res_psi).max(res_phi);
    let lib_worst = lib.l_pullback.max(lib.psi_pullback).max(lib.phi_half_pullback);
    check(
        oracle_worst < 1e-10 && lib_worst < 1e-10 && level < 1e-12,
        format!(
            "l {res_l:.1e}, psi {res_psi:.1e}, phi {res_phi:.1e}, library {lib_worst:.1e} \
             (tol 1e-10); max |h o F| on corpus {level:.1e} (tol 1e-12)"
        ),
    )
}

fn criterion_8() -> Outcome {
    let err = |e: twisted_tori::Error| e.to_string();
    let off = offset_circle(2.0, 1.0).map_err(err)?;
    let empty = matches!(reduction::find_double_points(&off).map_err(err)?, DoublePointSet::Points { ref points } if points.is_empty());

    let half = offset_circle(0.5, 1.0).map_err(err)?;
    let expected = [C64::new(0.0, (0.75f64).sqrt()), C64::new(0.0, -(0.75f64).sqrt())];
    let (mut pair_ok, mut pos_err) = (false, f64::INFINITY);
    if let DoublePointSet::Points { points } = reduction::find_double_points(&half).map_err(err)? {
        if points.len() == 2 && points.iter().all(|p| p.kind == DoublePointKind::Cross) {
            let e1 = (points[0].planar() - expected[0]).norm().max((points[1].planar() - expected[1]).norm());
            let e2 = (points[0].planar() - expected[1]).norm().max((points[1].planar() - expected[0]).norm());
            pos_err = e1.min(e2);
            // tangents of |z − ½| = 1 and |z + ½| = 1 at the expected points are transverse
            let transverse = expected.iter().all(|z| {
                let (t1, t2) = (C64::i() * (z - 0.5), C64::i() * (z + 0.5));
                cross(t1, t2).abs() / (t1.norm() * t2.norm()) > 1e-3
            });
            pair_ok = pos_err < 1e-6 && transverse;
        }
    }

    let circle = CurveSpec::circle(1.0).map_err(err)?;
    let symmetric = matches!(reduction::find_double_points(&circle).map_err(err)?, DoublePointSet::CentrallySymmetric { .. });
    let mut cover: f64 = reduction::cover_identity_residual(&circle, 64);
    for beta in curve::beta_grid(64) {
        let (g, gs) = (circle.point(beta), circle.point(beta + PI));
        for alpha in curve::beta_grid(64) {
            let f = |g: C64, a: f64| [g * C64::from_polar(1.0, a) / SQRT_2, g * C64::from_polar(1.0, -a) / SQRT_2];
            let (p, q) = (f(g, alpha), f(gs, alpha + PI));
            cover = cover.max((p[0] - q[0]).norm()).max((p[1] - q[1]).norm());
        }
        let jet = circle.jet_unchecked(beta);
        let lib = immersion(&jet, 0.3).point - immersion(&circle.jet_unchecked(beta + PI), 0.3 + PI).point;
        cover = cover.max(lib.amax());
    }
    check(
        empty && pair_ok && symmetric && cover < 1e-12,
        format!(
            "offset d=2 empty: {empty}; half-offset two Cross points at +-i*sqrt(3)/2 within {pos_err:.1e} \
             (tol 1e-6): {pair_ok}; origin circle symmetric: {symmetric}; cover identity {cover:.1e} (tol 1e-12)"
        ),
    )
}

fn criterion_9() -> Outcome {
    let dir = std::env::temp_dir().join(format!("twisted-tori-acceptance-{}", std::process::id()));
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_twisted-tori"))
        .args(["verify", "--out"])
        .arg(&dir)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let _ = std::fs::remove_dir_all(&dir);
    let code = out.status.code().unwrap_or(-1);
    let summary = String::from_utf8_lossy(&out.stdout).lines().last().unwrap_or("").to_string();
    check(
        code == 0 && elapsed < 60.0,
        format!("exit {code}, {elapsed:.1} s (limit 60 s), {summary}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("product-torus identity rho|H| = 2", criterion_1),
        ("stationarity of circles and defect of non-circles", criterion_2),
        ("divergence identity", criterion_3),
        ("curvature oracle", criterion_4),
        ("Christoffel symbols from the metric", criterion_5),
        ("ODE closed forms and closure gap", criterion_6),
        ("reduction pullbacks", criterion_7),
        ("double points and cover identity", criterion_8),
        ("verify command", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {}: PASS {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
