//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Runs with `cargo test --test acceptance` (plain `main`, no libtest harness,
//! so the report is always printed).

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use siegel_theta::forms;
use siegel_theta::nullwert;
use siegel_theta::siegel::{self, random_siegel_point, SiegelPoint};
use siegel_theta::theta::{self, TruncationPolicy};
use siegel_theta::{Result, C64};

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            detail: String::new(),
        }
    }

    /// Records `label`, failing the criterion if `ok` is false.
    fn expect(&mut self, ok: bool, label: impl AsRef<str>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(label.as_ref());
        if !ok {
            self.detail.push_str(" [violated]");
            self.ok = false;
        }
    }
}

fn policy() -> TruncationPolicy {
    TruncationPolicy::default()
}

/// Direct summation over |m| <= 10.
fn oracle_abc() -> (f64, f64, f64) {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for m in -10i32..=10 {
        let e = (-PI * f64::from(m * m)).exp();
        let m2 = f64::from(m * m);
        a += e;
        b += m2 * e;
        c += m2 * m2 * e;
    }
    (a, b, c)
}

fn points(g: usize, count: usize, base: u64) -> Result<Vec<SiegelPoint>> {
    (0..count as u64)
        .map(|k| random_siegel_point(g, base + 100 * g as u64 + k))
        .collect()
}

fn criterion_1(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    let k = forms::genus1_constants(&policy())?;
    let elapsed = start.elapsed();
    let (a, b, c) = oracle_abc();
    ch.expect(
        (k.a - 1.08643481).abs() < 1e-7 && (k.a - a).abs() < 1e-12,
        format!("a={:.10}", k.a),
    );
    ch.expect(
        (k.b - b).abs() < 1e-12 && (k.c - c).abs() < 1e-12,
        "b,c match direct sums",
    );
    ch.expect(
        (k.a - 4.0 * PI * k.b).abs() < 1e-8,
        format!("|a-4pi b|={:.1e}", (k.a - 4.0 * PI * k.b).abs()),
    );
    let gap = 4.0 * PI * k.c - 7.0 * k.b;
    ch.expect((gap - 0.4823).abs() < 5e-4 && gap > 0.0, format!("4pi c-7b={gap:.6}"));
    ch.expect(
        elapsed < Duration::from_millis(1),
        format!("{:.0}us", elapsed.as_secs_f64() * 1e6),
    );
    Ok(())
}

fn criterion_2(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    for (g, count, tol) in [(1, 5, 1e-8), (2, 5, 1e-8), (3, 2, 1e-7)] {
        let mut worst: f64 = 0.0;
        for tau in points(g, count, 2000)? {
            worst = worst.max(nullwert::verify_lfs(&tau, &policy())?.residual);
        }
        ch.expect(worst < tol, format!("g={g} residual={worst:.1e}"));
    }
    ch.expect(
        start.elapsed() < Duration::from_secs(10),
        format!("{:.2}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_3(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    for g in 1..=4 {
        let m = nullwert::addition_matrix(g)?;
        let gram = m.gram();
        let n = m.size();
        let mut exact = true;
        for i in 0..n {
            for j in 0..n {
                let e = &gram[i * n + j];
                exact &= if i == j {
                    e.equals_rational(1, 1 << g)
                } else {
                    e.is_zero()
                };
            }
        }
        ch.expect(
            exact && m.orthogonality_defect() == 0.0,
            format!("g={g} M^tM=I/{}", 1 << g),
        );
    }
    ch.expect(
        start.elapsed() < Duration::from_secs(1),
        format!("{:.2}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_4(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    for g in 1..=3 {
        let (mut modulus, mut descent): (f64, f64) = (0.0, 0.0);
        for tau in points(g, 5, 4000)? {
            for m in siegel::standard_generators(g)? {
                modulus = modulus
                    .max(nullwert::modulus_law_residual(&m, &tau, &policy())?)
                    .max(nullwert::t_modulus_residual(&m, &tau, &policy())?);
                descent = descent.max(nullwert::descent_residual(&m, &tau, &policy())?);
            }
        }
        ch.expect(
            modulus < 1e-8 && descent < 1e-8,
            format!("g={g} modulus={modulus:.1e} W={descent:.1e}"),
        );
    }
    ch.expect(
        start.elapsed() < Duration::from_secs(20),
        format!("{:.2}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_5(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    for g in 1..=3 {
        let mut worst: f64 = 0.0;
        let zero = vec![C64::new(0.0, 0.0); g];
        for tau in points(g, 5, 5000)? {
            for u in nullwert::enumerate_u(g)? {
                let jet = theta::theta_second_order_jet(&u.half_vector(), &zero, &tau, &policy())?;
                worst = worst.max(theta::heat_residual(&jet));
            }
        }
        ch.expect(worst < 1e-9, format!("g={g} residual={worst:.1e}"));
    }
    ch.expect(
        start.elapsed() < Duration::from_secs(10),
        format!("{:.2}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_6(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    for g in 1..=3 {
        let (mut rel, mut min_eig): (f64, f64) = (0.0, f64::INFINITY);
        for tau in points(g, 5, 6000)? {
            let analytic = forms::fs_pullback_theta(&tau, &policy())?;
            let fd = forms::fs_pullback_fd(&tau, 1e-3, &policy())?;
            rel = rel.max(analytic.relative_distance(&fd.form));
            min_eig = min_eig.min(analytic.eigenvalues()?[0]);
        }
        ch.expect(
            rel < 1e-5 && min_eig >= -1e-9,
            format!("g={g} rel={rel:.1e} min_eig={min_eig:.2e}"),
        );
    }
    ch.expect(
        start.elapsed() < Duration::from_secs(30),
        format!("{:.2}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_7(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    let (a, b, c) = oracle_abc();
    let r = forms::genus1_record(C64::new(0.0, 1.0), &policy())?;
    let lhs = 2.0 * PI * PI * a.powi(3) * c - 6.0 * PI * PI * a * a * b * b;
    let rhs = a.powi(4) / 2.0;
    let ratio = 2.0 * PI * lhs / (a.powi(4) * PI);
    ch.expect(
        (r.lhs - 1.66812).abs() < 1e-4 && (r.lhs - lhs).abs() < 1e-10,
        format!("lhs={:.6}", r.lhs),
    );
    ch.expect(
        (r.rhs - 0.69660).abs() < 1e-5 && (r.rhs - rhs).abs() < 1e-12,
        format!("rhs={:.6}", r.rhs),
    );
    ch.expect(
        (r.ratio - 2.3947).abs() < 5e-3 && (r.ratio - ratio).abs() < 1e-10,
        format!("ratio={:.5}", r.ratio),
    );
    let tau = SiegelPoint::genus1(C64::new(0.0, 1.0))?;
    let fd = forms::fs_pullback_fd(&tau, 1e-3, &policy())?.form.entry(0, 0).re;
    let fd_ratio = 8.0 * PI * fd / PI;
    ch.expect(
        (fd_ratio - r.ratio).abs() < 5e-3,
        format!("stencil ratio={fd_ratio:.5}"),
    );
    ch.expect(
        r.w_x.abs() < 1e-8 && (r.w_y + r.w / 2.0).abs() < 1e-8,
        format!("w_x={:.1e} w_y+w/2={:.1e}", r.w_x, r.w_y + r.w / 2.0),
    );
    ch.expect(
        start.elapsed() < Duration::from_secs(1),
        format!("{:.3}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_8(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    let at = |y: f64| -> Result<f64> {
        Ok(
            forms::structure_difference(&SiegelPoint::genus1(C64::new(0.0, y))?, &policy())?
                .get(0, 0)
                .norm(),
        )
    };
    let (d1, d2) = (at(1.0)?, at(2.0)?);
    ch.expect(d1 < 1e-6, format!("|diff(i)|={d1:.1e}"));
    ch.expect(d2 > 1e-3, format!("|diff(2i)|={d2:.3e}"));
    ch.expect(
        start.elapsed() < Duration::from_secs(1),
        format!("{:.3}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_9(ch: &mut Check) -> Result<()> {
    let start = Instant::now();
    for g in 2..=3 {
        let (mut split, mut iso_theta, mut iso_siegel): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let zs = points(1, 5, 9000 + g as u64)?;
        for (z, tp) in zs.iter().zip(points(g - 1, 5, 9500)?) {
            let z = z.get(0, 0);
            split = split.max(forms::splitting_residual(z, &tp, &policy())?);
            let rep = forms::iota_pullback_check(z, &tp, &policy())?;
            iso_theta = iso_theta.max(rep.theta_residual);
            iso_siegel = iso_siegel.max(rep.siegel_residual);
        }
        ch.expect(
            split < 1e-10 && iso_theta < 1e-6 && iso_siegel < 1e-6,
            format!("g={g} split={split:.1e} theta={iso_theta:.1e} siegel={iso_siegel:.1e}"),
        );
    }
    ch.expect(
        start.elapsed() < Duration::from_secs(20),
        format!("{:.2}s", start.elapsed().as_secs_f64()),
    );
    Ok(())
}

fn criterion_10(ch: &mut Check) -> Result<()> {
    let exe = env!("CARGO_BIN_EXE_siegel-theta");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let start = Instant::now();
        let out = Command::new(exe)
            .args(["verify", "all", "--seed", "1"])
            .output()
            .expect("binary runs");
        let secs = start.elapsed().as_secs_f64();
        ch.expect(
            out.status.code() == Some(0) && secs <= 120.0,
            format!("exit={:?} {secs:.2}s", out.status.code()),
        );
        outputs.push(out.stdout);
    }
    let parsed: Option<serde_json::Value> = serde_json::from_slice(&outputs[0]).ok();
    ch.expect(parsed.is_some_and(|v| v.is_array()), "valid JSON");
    ch.expect(
        !outputs[0].is_empty() && outputs[0] == outputs[1],
        format!("byte-identical ({} bytes)", outputs[0].len()),
    );
    Ok(())
}

fn main() {
    type Criterion = fn(&mut Check) -> Result<()>;
    let criteria: [(&str, Criterion); 10] = [
        ("genus-1 constants", criterion_1),
        ("addition formula", criterion_2),
        ("exact orthogonality", criterion_3),
        ("transformation and descent", criterion_4),
        ("heat equation", criterion_5),
        ("analytic vs stencil forms", criterion_6),
        ("genus-1 separation", criterion_7),
        ("sigma = eta at i", criterion_8),
        ("splitting and isometries", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let mut ch = Check::new();
        if let Err(e) = f(&mut ch) {
            ch.expect(false, format!("error: {e}"));
        }
        println!(
            "{} criterion {:>2} ({name}): {}",
            if ch.ok { "PASS" } else { "FAIL" },
            k + 1,
            ch.detail
        );
        failures += usize::from(!ch.ok);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
