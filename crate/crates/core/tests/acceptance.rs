//! Acceptance criteria 1 to 10. Each criterion prints one line with its
//! verdict; the process exits nonzero if any criterion fails.
//!
//! Closed forms are restated here from the published tables rather than taken
//! from the library, and breakpoints are decided exactly (`v ≤ √2 − 1` as
//! `(v + 1)² ≤ 2`, and so on).

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use prguess::behavior::{decomposition_from_unnormalized, pr_product, reduced_lift, Behavior, NoiseParameter, Transform};
use prguess::certify::{verify_certificate, verify_sandwich, vertex_check, Certificate};
use prguess::guessprob::{
    beta_bound, entropy_rates, guessing_probability, guessing_probability_with, rates_bounded_by_single_round,
    solve_instance, Formulation,
};
use prguess::nosig::{satisfies, ScenarioKind};
use prguess::numeric::{rat, Mode, Rational, Scalar};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ScenarioKind::{Abns, FullNs, Tons, Wtons};

const N4_TOLERANCE: f64 = 5e-4;
/// Smallest WTONS - TONS gap at four rounds that counts as a separation, far above float noise.
const N4_SEPARATION: f64 = 1e-5;
const SQRT2_ENTROPY_TOLERANCE: f64 = 1e-3;
const FUZZ_ROUNDS: usize = 100;

fn q(p: i64, d: i64) -> Rational {
    rat(p, d).unwrap()
}

fn int(k: i64) -> Rational {
    Rational::from(k)
}

/// Every solved instance, for the properties that must hold on all of them.
static SOLVED: Mutex<BTreeMap<(usize, String, String), Scalar>> = Mutex::new(BTreeMap::new());

/// Longest single solve seen since the last reset.
static SLOWEST: Mutex<Duration> = Mutex::new(Duration::ZERO);

fn solve(n: usize, s: ScenarioKind, v: Scalar) -> Result<Scalar, String> {
    let t = Instant::now();
    let r = guessing_probability(n, s, &v).map_err(|e| format!("n={n} {s} v={v}: {e}"))?;
    let took = t.elapsed();
    let mut slowest = SLOWEST.lock().unwrap();
    *slowest = (*slowest).max(took);
    let key = (n, v.to_string(), s.to_string());
    SOLVED.lock().unwrap().insert(key, r.g.clone());
    Ok(r.g)
}

fn solve_exact(n: usize, s: ScenarioKind, v: &Rational) -> Result<Rational, String> {
    match solve(n, s, Scalar::Exact(v.clone()))? {
        Scalar::Exact(g) => Ok(g),
        Scalar::Float(_) => Err("exact solve returned a float".into()),
    }
}

fn expect_eq(n: usize, s: ScenarioKind, v: &Rational, want: &Rational) -> Result<(), String> {
    let got = solve_exact(n, s, v)?;
    if &got == want {
        Ok(())
    } else {
        Err(format!("n={n} {s} v={v}: got {got}, expected {want}"))
    }
}

fn cubic(c: [i64; 4], v: &Rational) -> Rational {
    // c[0] + c[1] v + c[2] v² + c[3] v³
    c.iter().rev().fold(int(0), |acc, &k| acc * v.clone() + int(k))
}

fn poly(c: &[(i64, i64)], v: &Rational) -> Rational {
    c.iter().rev().fold(int(0), |acc, &(p, d)| acc * v.clone() + q(p, d))
}

fn two_rounds_abns(v: &Rational) -> Rational {
    let below = (v.clone() + int(1)).pow(2) <= int(2);
    if below {
        poly(&[(1, 1), (-1, 2)], v)
    } else {
        poly(&[(9, 8), (-3, 4), (-1, 8)], v)
    }
}

fn two_rounds_tons(v: &Rational) -> Rational {
    poly(&[(1, 1), (-3, 4)], v)
}

fn three_rounds_abns(v: &Rational) -> Rational {
    // v₁: root of x³ − 3x² − 13x + 3 (decreasing on [0, 1]); v₂: root of x³ + 5x² + 3x − 5 (increasing)
    let below_v1 = cubic([3, -13, -3, 1], v) >= int(0);
    let above_v2 = cubic([-5, 3, 5, 1], v) >= int(0);
    if below_v1 {
        poly(&[(1, 1), (-1, 2)], v)
    } else if above_v2 {
        poly(&[(41, 32), (-27, 32), (-9, 32), (-1, 32)], v)
    } else {
        poly(&[(67, 64), (-45, 64), (-3, 64), (1, 64)], v)
    }
}

fn three_rounds_tons(v: &Rational) -> Rational {
    if (v.clone() + int(2)).pow(2) <= int(5) {
        poly(&[(1, 1), (-29, 32), (1, 8), (1, 32)], v)
    } else {
        poly(&[(1, 1), (-7, 8)], v)
    }
}

fn single_round(v: &Rational) -> Rational {
    int(1) - v.clone() / int(2)
}

fn grid(points: &[(i64, i64)]) -> Vec<Rational> {
    points.iter().map(|&(p, d)| q(p, d)).collect()
}

fn two_round_grid() -> Vec<Rational> {
    grid(&[(1, 10), (1, 4), (2, 5), (1, 2), (3, 4), (9, 10), (1, 1)])
}

fn three_round_tons_grid() -> Vec<Rational> {
    grid(&[(1, 10), (1, 5), (1, 2), (3, 4), (1, 1)])
}

fn three_round_abns_grid() -> Vec<Rational> {
    // below v₁, inside (v₁, v₂), above v₂
    grid(&[(1, 10), (1, 5), (1, 4), (1, 2), (3, 5), (3, 4), (9, 10), (1, 1)])
}

fn criterion_1() -> Result<String, String> {
    let vs = grid(&[(0, 1), (1, 10), (1, 4), (1, 2), (3, 4), (9, 10), (1, 1)]);
    for s in ScenarioKind::ALL {
        for v in &vs {
            expect_eq(1, s, v, &single_round(v))?;
        }
    }
    Ok(format!("{} solves equal 1 - v/2", vs.len() * 4))
}

fn criterion_2() -> Result<String, String> {
    let vs = two_round_grid();
    for v in &vs {
        expect_eq(2, Abns, v, &two_rounds_abns(v))?;
        expect_eq(2, Tons, v, &two_rounds_tons(v))?;
        expect_eq(2, Wtons, v, &two_rounds_tons(v))?;
    }
    Ok(format!("ABNS, TONS, WTONS at {} points", vs.len()))
}

fn criterion_3() -> Result<String, String> {
    *SLOWEST.lock().unwrap() = Duration::ZERO;
    for v in three_round_tons_grid() {
        expect_eq(3, Tons, &v, &three_rounds_tons(&v))?;
        expect_eq(3, Wtons, &v, &three_rounds_tons(&v))?;
    }
    for v in three_round_abns_grid() {
        expect_eq(3, Abns, &v, &three_rounds_abns(&v))?;
    }
    let slowest = *SLOWEST.lock().unwrap();
    if slowest > Duration::from_secs(30 * 60) {
        return Err(format!("slowest solve took {slowest:?}"));
    }
    Ok(format!("v=1/10 TONS is {}; slowest solve {:.2}s", three_rounds_tons(&q(1, 10)), slowest.as_secs_f64()))
}

fn criterion_4() -> Result<String, String> {
    let vs = grid(&[(1, 4), (1, 2), (3, 4)]);
    for n in 1..=3u32 {
        for v in &vs {
            expect_eq(n as usize, FullNs, v, &single_round(v).pow(n))?;
        }
    }
    let t = Instant::now();
    for n in 1..=5u32 {
        for v in &vs {
            let prod = pr_product(n as usize, &NoiseParameter::new(v.clone()).unwrap()).unwrap();
            let b = beta_bound(&prod);
            if b != single_round(v).pow(n) {
                return Err(format!("beta bound at n={n} v={v} is {b}"));
            }
        }
    }
    let took = t.elapsed();
    if took > Duration::from_secs(1) {
        return Err(format!("beta bounds took {took:?}"));
    }
    Ok(format!("LP and beta bound equal (1 - v/2)^n; beta bounds in {:.3}s", took.as_secs_f64()))
}

fn criterion_5() -> Result<String, String> {
    for n in 1..=3 {
        for s in ScenarioKind::ALL {
            expect_eq(n, s, &int(1), &q(1, 1 << n))?;
            expect_eq(n, s, &int(0), &int(1))?;
        }
    }
    Ok("G_n(1) = 2^-n and G_n(0) = 1 for n <= 3".into())
}

fn exact_certificate(n: usize, s: ScenarioKind, v: &Rational) -> Result<Certificate, String> {
    guessing_probability(n, s, &Scalar::Exact(v.clone())).map(|r| r.certificate).map_err(|e| e.to_string())
}

fn criterion_6() -> Result<String, String> {
    let cases = [(2, two_round_grid()), (3, three_round_tons_grid())];
    for (n, vs) in &cases {
        for v in vs {
            let (t, w) = (solve_exact(*n, Tons, v)?, solve_exact(*n, Wtons, v)?);
            if t != w {
                return Err(format!("n={n} v={v}: TONS {t}, WTONS {w}"));
            }
        }
    }
    for n in [2, 3] {
        let p = exact_certificate(n, Tons, &q(1, 2))?;
        let d = exact_certificate(n, Wtons, &q(1, 2))?;
        let report = verify_sandwich(&p, &d).map_err(|e| e.to_string())?;
        if let Some(reason) = report.reason {
            return Err(format!("sandwich n={n}: {reason}"));
        }
    }
    Ok("equal on both grids; sandwich verified at v=1/2 for n=2,3".into())
}

fn criterion_7() -> Result<String, String> {
    let vs = [0.05, 0.1, 0.15, 0.2];
    let expected = [(Wtons, [0.9487, 0.8981, 0.8482, 0.7990]), (Tons, [0.9481, 0.8972, 0.8473, 0.7985])];
    let mut detail = Vec::new();
    let mut values = Vec::new();
    for (s, want) in expected {
        let t = Instant::now();
        let mut worst: f64 = 0.0;
        let mut got = Vec::new();
        for (v, w) in vs.iter().zip(want) {
            let g = solve(4, s, Scalar::Float(*v))?.to_f64();
            if (g - w).abs() > N4_TOLERANCE {
                return Err(format!("{s} v={v}: got {g:.6}, expected {w}"));
            }
            worst = worst.max((g - w).abs());
            got.push(g);
        }
        let took = t.elapsed();
        if took > Duration::from_secs(2 * 3600) {
            return Err(format!("{s} took {took:?}"));
        }
        detail.push(format!("{s} max deviation {worst:.1e} in {:.0}s", took.as_secs_f64()));
        values.push(got);
    }
    // at four rounds the two scenarios separate
    let gap = values[0].iter().zip(&values[1]).map(|(w, t)| w - t).fold(f64::INFINITY, f64::min);
    if gap <= N4_SEPARATION {
        return Err(format!("WTONS exceeds TONS by only {gap:.1e}"));
    }
    detail.push(format!("WTONS - TONS >= {gap:.1e}"));
    Ok(detail.join("; "))
}

/// Appendix B maps on a decomposition built from a solver optimum.
fn transforms_hold(s: ScenarioKind, n: usize, dec: &prguess::behavior::AttackDecomposition<Rational>) -> Result<(), String> {
    let objective = dec.guessing_objective(0, 0);
    for kind in [Transform::T1, Transform::T2, Transform::T3] {
        for round in 1..=n {
            let img = dec.transform(kind, round).map_err(|e| e.to_string())?;
            let tag = format!("{s} n={n} {kind:?} round {round}");
            if img.target != dec.target {
                return Err(format!("{tag}: the target box is not invariant"));
            }
            img.validate().map_err(|e| format!("{tag}: {e}"))?;
            for c in &img.components {
                if !satisfies(&c.behavior, s).map_err(|e| e.to_string())? {
                    return Err(format!("{tag}: component {} leaves the scenario", c.guess));
                }
            }
            let preserved = match kind {
                Transform::T1 => true,
                Transform::T2 => s != Wtons,
                Transform::T3 => false,
            };
            if preserved && img.guessing_objective(0, 0) != objective {
                return Err(format!("{tag}: objective moved from {objective} to {}", img.guessing_objective(0, 0)));
            }
        }
    }
    Ok(())
}

fn transforms() -> Result<(), String> {
    for n in 1..=2 {
        for s in ScenarioKind::ALL {
            for v in grid(&[(1, 4), (1, 2), (3, 4)]) {
                let target = pr_product(n, &NoiseParameter::new(v.clone()).unwrap()).unwrap();

                let red = solve_instance(Formulation::Reduced, n, s, &v, 0, 0).map_err(|e| e.to_string())?;
                let mut p0 = vec![int(0); 1 << (4 * n)];
                for (j, x) in &red.solution.primal {
                    p0[*j] = x.clone();
                }
                let dec = reduced_lift(&Behavior::from_entries(n, p0).map_err(|e| e.to_string())?);
                if dec.target != target {
                    return Err(format!("{s} n={n} v={v}: reduced optimum does not reproduce the box"));
                }
                transforms_hold(s, n, &dec)?;

                let full = solve_instance(Formulation::Full, n, s, &v, 0, 0).map_err(|e| e.to_string())?;
                let mut vals = vec![int(0); 1 << (5 * n)];
                for (j, x) in &full.solution.primal {
                    vals[*j] = x.clone();
                }
                let dec = decomposition_from_unnormalized(n, &vals, target).map_err(|e| e.to_string())?;
                transforms_hold(s, n, &dec)?;
            }
        }
    }
    Ok(())
}

fn input_independence() -> Result<(), String> {
    let v = q(1, 2);
    for s in ScenarioKind::ALL {
        let reference = solve_exact(2, s, &v)?;
        for x in 0..4 {
            for y in 0..4 {
                let r = guessing_probability_with(Formulation::Full, 2, s, &Scalar::Exact(v.clone()), x, y)
                    .map_err(|e| e.to_string())?;
                if r.g != Scalar::Exact(reference.clone()) {
                    return Err(format!("{s} inputs ({x:02b},{y:02b}): {} vs {reference}", r.g));
                }
            }
        }
    }
    Ok(())
}

fn reduced_equals_full() -> Result<(), String> {
    for n in 1..=2 {
        for s in ScenarioKind::ALL {
            for v in grid(&[(0, 1), (1, 4), (1, 2), (3, 4), (1, 1)]) {
                let reduced = solve_exact(n, s, &v)?;
                let full = guessing_probability_with(Formulation::Full, n, s, &Scalar::Exact(v.clone()), 0, 0)
                    .map_err(|e| e.to_string())?;
                if full.g != Scalar::Exact(reduced.clone()) {
                    return Err(format!("{s} n={n} v={v}: reduced {reduced}, full {}", full.g));
                }
            }
        }
    }
    Ok(())
}

fn leq(a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Exact(a), Scalar::Exact(b)) => a <= b,
        _ => a.to_f64() <= b.to_f64() + 1e-8,
    }
}

/// Monotonicity along FullNS ⊆ TONS ⊆ WTONS ⊆ ABNS and the trivial bounds, on every instance solved so far.
fn solved_instance_properties() -> Result<usize, String> {
    let solved = SOLVED.lock().unwrap().clone();
    let chain = [FullNs, Tons, Wtons, Abns];
    for ((n, v, s), g) in &solved {
        let v = Scalar::parse(v, g.mode()).map_err(|e| e.to_string())?;
        let (lo, hi) = match &v {
            Scalar::Exact(v) => (Scalar::Exact(single_round(v).pow(*n as u32)), Scalar::Exact(single_round(v))),
            Scalar::Float(v) => (Scalar::Float((1.0 - v / 2.0).powi(*n as i32)), Scalar::Float(1.0 - v / 2.0)),
        };
        if !leq(&lo, g) || !leq(g, &hi) {
            return Err(format!("n={n} {s} v={v}: {g} outside [{lo}, {hi}]"));
        }
        let pos = chain.iter().position(|c| c.to_string() == *s).unwrap();
        for weaker in &chain[pos + 1..] {
            if let Some(h) = solved.get(&(*n, v.to_string(), weaker.to_string())) {
                if !leq(g, h) {
                    return Err(format!("n={n} v={v}: {s} {g} above {weaker} {h}"));
                }
            }
        }
    }
    Ok(solved.len())
}

fn perturb(cert: &Certificate, rng: &mut StdRng) -> Certificate {
    let mut bad = cert.clone();
    let exact = cert.metadata.mode == Mode::Exact;
    let delta = |rng: &mut StdRng| -> Scalar {
        let k = rng.random_range(1..=40i64) * if rng.random_bool(0.5) { 1 } else { -1 };
        if exact {
            Scalar::Exact(q(k, 8))
        } else {
            Scalar::Float(k as f64 / 8.0)
        }
    };
    let shift = |text: &str, d: Scalar| -> String {
        match d {
            Scalar::Exact(d) => (text.parse::<Rational>().unwrap() + d).to_string(),
            Scalar::Float(d) => (text.parse::<f64>().unwrap() + d).to_string(),
        }
    };
    let num_vars = cert.metadata.problem::<f64>().map(|p| p.num_vars()).unwrap_or(0);
    match rng.random_range(0..3) {
        0 => {
            let j = rng.random_range(0..num_vars.max(1));
            let d = delta(rng);
            match bad.primal.binary_search_by_key(&j, |e| e.0) {
                Ok(k) => bad.primal[k].1 = shift(&bad.primal[k].1, d),
                Err(k) => bad.primal.insert(k, (j, shift("0", d))),
            }
        }
        1 => {
            let i = rng.random_range(0..bad.dual.len());
            bad.dual[i] = shift(&bad.dual[i], delta(rng));
        }
        _ => bad.objective = shift(&bad.objective, delta(rng)),
    }
    bad
}

fn fuzzing() -> Result<usize, String> {
    let mut certs = Vec::new();
    for s in ScenarioKind::ALL {
        certs.push(exact_certificate(2, s, &q(1, 2))?);
        certs.push(exact_certificate(1, s, &q(1, 4))?);
    }
    certs.push(exact_certificate(3, Tons, &q(1, 10))?);
    for s in [Abns, Wtons] {
        let r = guessing_probability(2, s, &Scalar::Float(0.3)).map_err(|e| e.to_string())?;
        certs.push(r.certificate);
    }
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for cert in &certs {
        let meta = &cert.metadata;
        let tag = format!("{} n={} v={} {}", meta.scenario, meta.n, meta.v, meta.mode);
        // mode is fixed per certificate, so the problem is rebuilt in the matching field
        if !verify_certificate(cert).map_err(|e| e.to_string())?.accepted() {
            return Err(format!("{tag}: original certificate rejected"));
        }
        for k in 0..FUZZ_ROUNDS {
            let bad = perturb(cert, &mut rng);
            let report = verify_certificate(&bad).map_err(|e| e.to_string())?;
            if report.accepted() {
                return Err(format!("{tag}: perturbation {k} accepted"));
            }
        }
    }
    Ok(certs.len())
}

fn criterion_8() -> Result<String, String> {
    transforms()?;
    input_independence()?;
    reduced_equals_full()?;
    let certs = fuzzing()?;
    let instances = solved_instance_properties()?;
    Ok(format!(
        "transforms, input independence, reduced = full; monotonicity and bounds on {instances} instances; \
         {FUZZ_ROUNDS} perturbations of each of {certs} certificates rejected"
    ))
}

fn criterion_9() -> Result<String, String> {
    let t = Instant::now();
    let check = |n: usize, v: Rational, s: ScenarioKind| -> Result<bool, String> {
        let beh = pr_product(n, &NoiseParameter::new(v).unwrap()).unwrap();
        vertex_check(&beh, s).map_err(|e| e.to_string())
    };
    for n in 1..=2 {
        for s in ScenarioKind::ALL {
            if !check(n, int(1), s)? {
                return Err(format!("PR product is not a vertex for n={n} {s}"));
            }
            if check(n, int(-1), s)? {
                return Err(format!("uniform product reported as a vertex for n={n} {s}"));
            }
        }
    }
    let took = t.elapsed();
    if took > Duration::from_secs(60) {
        return Err(format!("vertex tests took {took:?}"));
    }
    Ok(format!("PR products are vertices, uniform products are not ({:.2}s)", took.as_secs_f64()))
}

fn criterion_10() -> Result<String, String> {
    let h1 = guessing_probability(1, Abns, &Scalar::Exact(int(1))).map_err(|e| e.to_string())?.h;
    if h1 != 1.0 {
        return Err(format!("H_1(1) = {h1}"));
    }
    let v = std::f64::consts::SQRT_2 - 1.0;
    let h = guessing_probability(1, Abns, &Scalar::Float(v)).map_err(|e| e.to_string())?.h;
    if (h - 0.335).abs() > SQRT2_ENTROPY_TOLERANCE {
        return Err(format!("H_1(sqrt2 - 1) = {h}"));
    }
    let grid: Vec<Scalar> = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9].into_iter().map(Scalar::Float).collect();
    let mut rows = 0;
    for (s, k_max) in [(FullNs, 3), (Abns, 4), (Tons, 4), (Wtons, 3)] {
        let table = entropy_rates(s, &grid, k_max).map_err(|e| e.to_string())?;
        if !rates_bounded_by_single_round(&table) {
            return Err(format!("{s}: some H_k/k exceeds H_1"));
        }
        rows += table.len();
    }
    Ok(format!("H_1(1) = 1, H_1(sqrt2 - 1) = {h:.4}; {rows} rate rows bounded by H_1"))
}

fn main() {
    let criteria: [(&str, fn() -> Result<String, String>); 10] = [
        ("single-copy value", criterion_1),
        ("two-round closed forms", criterion_2),
        ("three-round closed forms", criterion_3),
        ("Full-NS independent strategy", criterion_4),
        ("endpoints", criterion_5),
        ("TONS = WTONS", criterion_6),
        ("four-round tables", criterion_7),
        ("property suites", criterion_8),
        ("vertex test", criterion_9),
        ("min-entropy anchors", criterion_10),
    ];
    let limits: [Option<Duration>; 10] = [
        Some(Duration::from_secs(1)),
        Some(Duration::from_secs(30)),
        None,
        None,
        None,
        None,
        None,
        None,
        None,
        None,
    ];
    let mut failures = 0;
    for (k, ((name, run), limit)) in criteria.iter().zip(limits).enumerate() {
        let t = Instant::now();
        let mut outcome = run();
        let took = t.elapsed();
        if let (Ok(d), Some(limit)) = (&outcome, limit) {
            if took > limit {
                outcome = Err(format!("{d}; took {took:?}, limit {limit:?}"));
            }
        }
        let (verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {verdict} {name} ({:.1}s): {detail}", k + 1, took.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
