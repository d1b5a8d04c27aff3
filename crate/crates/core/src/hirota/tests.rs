use super::*;
use crate::hirota::engine;

fn single(alpha: f64, phase: f64) -> NSolitonSolution {
    NSolitonSolution::new(vec![Soliton { alpha, phase }]).unwrap()
}

fn sol(params: &[(f64, f64)]) -> NSolitonSolution {
    NSolitonSolution::new(
        params
            .iter()
            .map(|&(alpha, phase)| Soliton { alpha, phase })
            .collect(),
    )
    .unwrap()
}

/// Reference single-soliton profile (alpha^2/2) sech^2((-(alpha)(x-s) + alpha^3 t)/2),
/// evaluated with plain transcendentals; valid while cosh does not overflow.
fn sech2_reference(alpha: f64, s: f64, x: f64, t: f64) -> f64 {
    let z = (-alpha * (x - s) + alpha * alpha * alpha * t) / 2.0;
    let c = z.cosh();
    (alpha * alpha / 2.0) / (c * c)
}

// ---- independent determinant oracle -------------------------------------
//
// The subset expansion of the tau function equals det(I + A) with the
// Cauchy-Gram matrix A_ij = 2 sqrt(alpha_i alpha_j f_i f_j)/(alpha_i+alpha_j):
// the principal-minor expansion of the determinant reproduces exactly the
// coefficients a(S). Evaluated in plain arithmetic this is an independent
// route to F at moderate exponents.

fn det_oracle_tau(params: &[(f64, f64)], x: f64, t: f64) -> f64 {
    let n = params.len();
    let f: Vec<f64> = params
        .iter()
        .map(|&(a, s)| (-a * (x - s) + a * a * a * t).exp())
        .collect();
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            let (ai, aj) = (params[i].0, params[j].0);
            m[i * n + j] = 2.0 * (ai * aj * f[i] * f[j]).sqrt() / (ai + aj);
            if i == j {
                m[i * n + j] += 1.0;
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().partial_cmp(&m[b * n + col].abs()).unwrap())
            .unwrap();
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        for row in (col + 1)..n {
            let fac = m[row * n + col] / d;
            for j in col..n {
                m[row * n + j] -= fac * m[col * n + j];
            }
        }
    }
    det
}

#[test]
fn interaction_coefficient_examples() {
    assert_eq!(interaction_coefficient(1.0, 1.0).unwrap(), 0.0);
    let a = interaction_coefficient(2.0, 1.0).unwrap();
    assert!((a - 1.0 / 9.0).abs() < 1e-15, "{a}");
    let b = interaction_coefficient(3.0, 1.0).unwrap();
    assert!((b - 0.25).abs() < 1e-15, "{b}");
    assert!(interaction_coefficient(-1.0, 2.0).is_err());
    assert!(interaction_coefficient(2.0, 0.0).is_err());
}

#[test]
fn tau_examples() {
    let s1 = single(2.0, 0.0);
    let f = s1.tau_derivative(0, 0.0, 0.0).unwrap();
    assert!((f.value() - 2.0).abs() < 1e-14, "F = {}", f.value());
    let fx = s1.tau_derivative(1, 0.0, 0.0).unwrap();
    assert!((fx.value() + 2.0).abs() < 1e-13, "F_x = {}", fx.value());

    let s2 = sol(&[(2.0, 0.0), (1.0, 0.0)]);
    let f2 = s2.tau_derivative(0, 0.0, 0.0).unwrap();
    let expected = 1.0 + 1.0 + 1.0 + 1.0 / 9.0;
    assert!(
        (f2.value() - expected).abs() < 1e-13,
        "F = {} vs {expected}",
        f2.value()
    );

    assert!(matches!(
        s1.tau_derivative(5, 0.0, 0.0),
        Err(crate::Error::UnsupportedOrder(5))
    ));
}

#[test]
fn tau_matches_determinant_oracle() {
    let cases: Vec<Vec<(f64, f64)>> = vec![
        vec![(1.7, 0.3), (0.6, -1.1)],
        vec![(2.3, 0.0), (1.1, 1.5), (0.7, -2.0)],
        vec![(3.1, 0.2), (2.2, -0.7), (1.4, 1.1), (0.9, 0.5), (0.5, -1.3)],
        vec![
            (4.0, 0.1),
            (3.3, -0.4),
            (2.7, 0.9),
            (2.1, 1.7),
            (1.6, -1.2),
            (1.2, 0.3),
            (0.8, -0.6),
            (0.45, 1.0),
        ],
    ];
    for params in &cases {
        let s = sol(params);
        for &(x, t) in &[(0.0, 0.0), (0.7, 0.2), (-1.3, 0.05), (2.0, -0.1)] {
            let ours = s.tau_derivative(0, x, t).unwrap().value();
            let oracle = det_oracle_tau(params, x, t);
            assert!(
                (ours - oracle).abs() <= 1e-11 * oracle.abs(),
                "n={} ({x},{t}): {ours} vs det oracle {oracle}",
                params.len()
            );
        }
    }
}

#[test]
fn tau_derivatives_match_finite_differences_of_oracle() {
    let params = vec![(1.3, 0.5), (0.9, -1.0), (2.1, 2.0)];
    let s = sol(&params);
    let (x, t) = (0.4, 0.1);
    let h = 1e-2;
    let f = |xx: f64| det_oracle_tau(&params, xx, t);
    let stencil = [f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h)];
    let fd = [
        (stencil[0] - 8.0 * stencil[1] + 8.0 * stencil[3] - stencil[4]) / (12.0 * h),
        (-stencil[0] + 16.0 * stencil[1] - 30.0 * stencil[2] + 16.0 * stencil[3] - stencil[4])
            / (12.0 * h * h),
        (stencil[4] - 2.0 * stencil[3] + 2.0 * stencil[1] - stencil[0]) / (2.0 * h * h * h),
        (stencil[0] - 4.0 * stencil[1] + 6.0 * stencil[2] - 4.0 * stencil[3] + stencil[4])
            / (h * h * h * h),
    ];
    for order in 1..=4 {
        let ours = s.tau_derivative(order, x, t).unwrap().value();
        let tol = if order <= 2 { 1e-5 } else { 1e-3 };
        assert!(
            (ours - fd[order - 1]).abs() <= tol * fd[order - 1].abs().max(1.0),
            "order {order}: {ours} vs fd {}",
            fd[order - 1]
        );
    }
}

#[test]
fn eta_single_soliton_peak_and_speed() {
    let s = single(2.0, 0.0);
    // amplitude alpha^2/2 at the peak
    let peak = s.eta(0.0, 0.0, EvalFrame::Soliton).unwrap();
    assert!((peak - 2.0).abs() < 1e-13, "peak {peak}");
    // peak tracks s + alpha^2 t
    let t0 = 0.3;
    let moving = s.eta(4.0 * t0, t0, EvalFrame::Soliton).unwrap();
    assert!((moving - 2.0).abs() < 1e-12, "moving peak {moving}");
}

#[test]
fn eta_physical_frame_is_scaled_shift() {
    let s = single(2.0, 0.0);
    // 6 * eta(x - t, t): at the origin the peak maps to 12
    let y0 = s.eta(0.0, 0.0, EvalFrame::Physical).unwrap();
    assert!((y0 - 12.0).abs() < 1e-12, "{y0}");
    // frame identity at a generic point
    let (x, t) = (0.3, 0.3);
    let phys = s.eta(x, t, EvalFrame::Physical).unwrap();
    let shifted = s.eta(x - t, t, EvalFrame::Soliton).unwrap();
    assert!(
        (phys - 6.0 * shifted).abs() <= 1e-13 * phys.abs(),
        "{phys} vs 6*{shifted}"
    );
}

#[test]
fn eta_derivatives_single_soliton() {
    let s = single(2.0, 0.0);
    let d = s.eta_derivatives(0.0, 0.0).unwrap();
    assert!((d.eta - 2.0).abs() < 1e-13);
    assert!(d.eta_x.abs() < 1e-11, "eta_x at peak = {}", d.eta_x);
    // second derivative of (a^2/2) sech^2(a u / 2) at the peak is -a^4/4
    assert!(
        (d.eta_xx + 4.0).abs() < 1e-10,
        "eta_xx at peak = {}",
        d.eta_xx
    );
    // decay far from the peak
    let far = s.eta_derivatives(400.0, 0.0).unwrap();
    assert!(far.eta < 1e-200 && far.eta_x.abs() < 1e-200 && far.eta_xx.abs() < 1e-200);
}

#[test]
fn eta_derivatives_match_finite_differences_two_solitons() {
    let s = sol(&[(2.0, 0.0), (1.0, 1.0)]);
    let h = 1e-4;
    for &(x, t) in &[(0.5, 0.1), (-1.0, 0.3), (2.5, 0.0)] {
        let d = s.eta_derivatives(x, t).unwrap();
        let em = s.eta(x - h, t, EvalFrame::Soliton).unwrap();
        let e0 = s.eta(x, t, EvalFrame::Soliton).unwrap();
        let ep = s.eta(x + h, t, EvalFrame::Soliton).unwrap();
        let fd_x = (ep - em) / (2.0 * h);
        let fd_xx = (ep - 2.0 * e0 + em) / (h * h);
        assert!((d.eta - e0).abs() <= 1e-13 * e0.abs());
        assert!(
            (d.eta_x - fd_x).abs() <= 1e-6 * fd_x.abs().max(1.0),
            "({x},{t}) eta_x {} vs fd {fd_x}",
            d.eta_x
        );
        assert!(
            (d.eta_xx - fd_xx).abs() <= 1e-5 * fd_xx.abs().max(1.0),
            "({x},{t}) eta_xx {} vs fd {fd_xx}",
            d.eta_xx
        );
    }
}

#[test]
fn single_soliton_reduction_extreme_exponents() {
    // Plain sech^2 comparison wherever cosh^2 stays in f64 range.
    let alpha = 2.0;
    let s = single(alpha, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..=200 {
        // thetas from -680 to 680
        let theta = -680.0 + 6.8 * k as f64;
        let x = -theta / alpha; // t = 0
        let ours = s.eta(x, 0.0, EvalFrame::Soliton).unwrap();
        let reference = sech2_reference(alpha, 0.0, x, 0.0);
        let rel = (ours - reference).abs() / reference;
        worst = worst.max(rel);
    }
    assert!(worst < 1e-12, "worst relative deviation {worst}");

    // Beyond f64 range the log-magnitude view must stay exact: for one
    // soliton ln F = ln(1 + e^theta) = softplus(theta).
    for &theta in &[-5000.0, -2000.0, 2000.0, 5000.0] {
        let x = -theta / alpha;
        let f = s.tau_derivative(0, x, 0.0).unwrap();
        let expected = crate::logsum::softplus(theta);
        assert!(
            (f.ln_abs - expected).abs() <= 1e-12 * expected.abs().max(1.0),
            "theta={theta}: ln F = {} vs {expected}",
            f.ln_abs
        );
        // F_x = -alpha e^theta: ln |F_x| = ln(alpha) + theta
        let fx = s.tau_derivative(1, x, 0.0).unwrap();
        assert_eq!(fx.sign, -1.0);
        let expected_x = alpha.ln() + theta;
        assert!(
            (fx.ln_abs - expected_x).abs() <= 1e-12 * expected_x.abs().max(1.0),
            "theta={theta}: ln |F_x| = {} vs {expected_x}",
            fx.ln_abs
        );
    }
}

#[test]
fn time_derivative_travelling_wave_identity() {
    // eta_t = -alpha^2 eta_x for a single travelling profile
    let s = single(1.0, 0.0);
    let (x, t) = (0.5, 0.0);
    let et = s.eta_time_derivative(x, t).unwrap();
    let ex = s.eta_derivatives(x, t).unwrap().eta_x;
    assert!((et + ex).abs() < 1e-6, "eta_t {et} vs -eta_x {}", -ex);

    // peak value is constant in time
    let s2 = single(2.0, 0.0);
    let t0 = 0.25;
    let et_peak = s2.eta_time_derivative(4.0 * t0, t0).unwrap();
    assert!(et_peak.abs() < 1e-6, "peak eta_t = {et_peak}");
}

#[test]
fn construction_rejects_bad_input() {
    assert!(NSolitonSolution::new(vec![]).is_err());
    assert!(NSolitonSolution::new(vec![
        Soliton { alpha: 1.0, phase: 0.0 },
        Soliton { alpha: 1.0 + 1e-12, phase: 5.0 },
    ])
    .is_err());
    assert!(Soliton::new(-2.0, 0.0).is_err());
    assert!(Soliton::new(2.0, f64::NAN).is_err());
}

#[test]
fn tau_positive_and_at_least_one() {
    let s = sol(&[(2.0, 0.0), (1.0, -3.0), (0.5, 4.0)]);
    for &(x, t) in &[(0.0, 0.0), (5.0, 1.0), (-8.0, 2.0), (100.0, 0.0)] {
        let f = s.tau_derivative(0, x, t).unwrap();
        assert_eq!(f.sign, 1.0);
        assert!(f.ln_abs >= -1e-15, "ln F = {} at ({x},{t})", f.ln_abs);
    }
}

// ---- plain-real reference (overflow-prone, used only in range) ----------

fn plain_tau(params: &[(f64, f64)], order: usize, x: f64, t: f64) -> f64 {
    let n = params.len();
    let mut total = if order == 0 { 1.0 } else { 0.0 };
    for mask in 1usize..(1 << n) {
        let mut coeff = 1.0;
        let mut prod = 1.0;
        let mut asum = 0.0;
        for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            let (ai, si) = params[i];
            prod *= (-ai * (x - si) + ai * ai * ai * t).exp();
            asum += ai;
            for j in (i + 1)..n {
                if mask & (1 << j) != 0 {
                    let aj = params[j].0;
                    let r = (ai - aj) / (ai + aj);
                    coeff *= r * r;
                }
            }
        }
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * asum.powi(order as i32) * coeff * prod;
    }
    total
}

#[test]
fn log_domain_matches_plain_real_where_plain_works() {
    let params = vec![(2.2, 0.4), (1.3, -0.8), (0.7, 1.9)];
    let s = sol(&params);
    for &(x, t) in &[(0.0, 0.0), (1.5, 0.2), (-2.0, 0.1), (4.0, -0.3)] {
        for order in 0..=4 {
            let plain = plain_tau(&params, order, x, t);
            let ours = s.tau_derivative(order, x, t).unwrap().value();
            assert!(
                (ours - plain).abs() <= 1e-12 * plain.abs().max(1e-30),
                "order {order} at ({x},{t}): {ours} vs plain {plain}"
            );
        }
    }
}

// ---- windowed path vs exact enumeration ----------------------------------

fn uniform_ladder(n: usize, alpha1: f64, eps: f64, s1: f64, ds: f64) -> Vec<Soliton> {
    (0..n)
        .map(|i| Soliton {
            alpha: alpha1 - eps * i as f64 / (n - 1) as f64,
            phase: s1 - ds * i as f64,
        })
        .collect()
}

#[test]
fn windowed_path_matches_exact_enumeration() {
    // Separation strong enough that the saturation reduction engages,
    // as in synthesized trains.
    let solitons = uniform_ladder(14, 6.0, 1.0, 0.0, 4.0);
    let exact = NSolitonSolution::new(solitons.clone()).unwrap();
    let windowed = NSolitonSolution::with_config(
        solitons,
        EvalConfig {
            prefer_windowed: true,
            ..EvalConfig::default()
        },
    )
    .unwrap();
    let mut checked = 0;
    for k in 0..70 {
        let x = -60.0 + 1.05 * k as f64;
        for &t in &[0.0, 0.13, 0.6] {
            let ee = exact.eta(x, t, EvalFrame::Soliton).unwrap();
            let ew = windowed.eta(x, t, EvalFrame::Soliton).unwrap();
            if ee > 1e-250 {
                assert!(
                    (ee - ew).abs() <= 1e-11 * ee,
                    "eta mismatch at ({x},{t}): exact {ee} vs windowed {ew}"
                );
                checked += 1;
            }
            let de = exact.eta_derivatives(x, t).unwrap();
            let dw = windowed.eta_derivatives(x, t).unwrap();
            // The exact path carries subset log weights of magnitude
            // ~sum(theta); their ulp noise is amplified by the
            // cancellation in the eta_xx combination, so the comparison
            // scale is eta times the squared total alpha sum.
            let alpha_sum: f64 = exact.solitons().iter().map(|s| s.alpha).sum();
            let scale_x = de.eta * alpha_sum;
            let scale_xx = de.eta * alpha_sum * alpha_sum;
            assert!(
                (de.eta_x - dw.eta_x).abs() <= 1e-11 * scale_x.max(1e-250),
                "eta_x mismatch at ({x},{t}): {} vs {}",
                de.eta_x,
                dw.eta_x
            );
            assert!(
                (de.eta_xx - dw.eta_xx).abs() <= 1e-11 * scale_xx.max(1e-250),
                "eta_xx mismatch at ({x},{t}): {} vs {}",
                de.eta_xx,
                dw.eta_xx
            );
            let fe = exact.tau_derivative(0, x, t).unwrap();
            let fw = windowed.tau_derivative(0, x, t).unwrap();
            assert!(
                (fe.ln_abs - fw.ln_abs).abs() <= 1e-11 * fe.ln_abs.abs().max(1.0),
                "ln F mismatch at ({x},{t}): {} vs {}",
                fe.ln_abs,
                fw.ln_abs
            );
        }
    }
    assert!(checked > 50, "only {checked} comparable points");
}

#[test]
fn ladder_prefix_sums_match_direct_sums() {
    let solitons = uniform_ladder(60, 8.0, 0.5, 0.0, 2.0);
    let s = NSolitonSolution::new(solitons.clone()).unwrap();
    let lad = engine::ladder_data(&s).expect("ladder path");
    let ln_a = |i: usize, j: usize| {
        let (ai, aj) = (solitons[i].alpha, solitons[j].alpha);
        let r = (ai - aj) / (ai + aj);
        2.0 * r.abs().ln()
    };
    for &(j, m) in &[(0usize, 0usize), (5, 3), (3, 10), (10, 10), (25, 25), (59, 40), (7, 60)] {
        let mut direct = 0.0;
        for i in 0..m {
            if i != j {
                direct += ln_a(i, j);
            }
        }
        let fast = lad.prefix_ln_a_test(j, m);
        assert!(
            (fast - direct).abs() <= 1e-9 * direct.abs().max(1.0),
            "prefix({j},{m}): {fast} vs {direct}"
        );
    }
    // dressing equals prefix over all faster
    let dress = lad.dress_test();
    for &j in &[0usize, 1, 17, 59] {
        let mut direct = 0.0;
        for i in 0..j {
            direct += ln_a(i, j);
        }
        assert!(
            (dress[j] - direct).abs() <= 1e-9 * direct.abs().max(1.0),
            "dress[{j}] = {} vs {direct}",
            dress[j]
        );
    }
}
