//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout; the
//! process exits non-zero if any criterion fails.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;

use rubbercodes::bounds::{
    adl_upper, c2f_binary, entropy_q, hamming_q, modified_rubber_rate, r0, r_mr, rubber_rate,
    solve_z_r, tangency_gap, tau_c, tau_grid,
};
use rubbercodes::channel::{
    build_graph, complement, relabel_complement, ChannelKind, ErrorPattern,
};
use rubbercodes::cli::{parse_and_dispatch, parse_error_spec, replay, write_trace};
use rubbercodes::codec::{binomial, CodeParams, Constraint, Method, SkeletonSpace};
use rubbercodes::round_trip;
use rubbercodes::verify::{
    measure_rate, random_round_trip, trial_rng, verify_exhaustive, Outcome, VerificationReport,
    VerifyOptions,
};
use rubbercodes::Symbol;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn verify(p: &CodeParams) -> Result<VerificationReport, String> {
    verify_exhaustive(p, VerifyOptions::default()).map_err(|e| e.to_string())
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

const FIVE_MINUTES: Duration = Duration::from_secs(300);

fn criterion_1() -> Check {
    let mut notes = Vec::new();
    for (q, n, t, want) in [(3, 8, 2, 16u64), (4, 6, 1, 81)] {
        let p = CodeParams::new(Method::Rubber1, q, n, t);
        let start = Instant::now();
        let r = verify(&p)?;
        let took = start.elapsed();
        ensure(
            r.messages == big(want),
            format!("q={q}: {} messages, want {want}", r.messages),
        )?;
        ensure(r.verified(), format!("q={q} n={n} t={t}: {:?}", r.outcome))?;
        ensure(took <= FIVE_MINUTES, format!("q={q}: took {took:?}"))?;
        notes.push(format!(
            "q={q},n={n},t={t}: M={} leaves={} {:.3}s",
            r.messages,
            r.leaves,
            took.as_secs_f64()
        ));
    }
    Ok(notes.join("; "))
}

fn criterion_2() -> Check {
    let mut notes = Vec::new();
    for n in [8, 10] {
        for t in [1, 2] {
            for channel in [ChannelKind::Z(2), ChannelKind::InverseZ(2)] {
                let tok = channel.token();
                let p = CodeParams::new(Method::Modified, 2, n, t)
                    .with_r(2)
                    .on(channel);
                // independent count: binary words of length n-rt with no "11"
                // (or "00" on inverse Z), by brute force
                let len = n - 2 * t;
                let b = p.rubber_symbol();
                let brute = (0..1u32 << len)
                    .filter(|w| {
                        let bits: Vec<u8> =
                            (0..len).map(|i| ((w >> (len - 1 - i)) & 1) as u8).collect();
                        !bits.windows(2).any(|x| x[0] == b && x[1] == b)
                    })
                    .count() as u64;
                let start = Instant::now();
                let r = verify(&p)?;
                let took = start.elapsed();
                ensure(
                    r.messages == big(brute),
                    format!("n={n} t={t} {tok}: count {} vs {brute}", r.messages),
                )?;
                ensure(r.verified(), format!("n={n} t={t} {tok}: {:?}", r.outcome))?;
                ensure(
                    r.towards_rubber_leaves == 0,
                    format!(
                        "n={n} t={t} {tok}: {} towards-rubber leaves",
                        r.towards_rubber_leaves
                    ),
                )?;
                ensure(
                    took <= FIVE_MINUTES,
                    format!("n={n} t={t} {tok}: took {took:?}"),
                )?;
                notes.push(format!("n={n},t={t},{tok}:M={}", r.messages));
            }
        }
    }
    Ok(format!(
        "{} (AvoidBlock(b,2) counts at length n-rt)",
        notes.join(" ")
    ))
}

fn criterion_3() -> Check {
    let graph_z = build_graph(&ChannelKind::Z(3)).map_err(|e| e.to_string())?;
    let graph_inv = build_graph(&ChannelKind::InverseZ(3)).map_err(|e| e.to_string())?;
    ensure(
        relabel_complement(&graph_z).map_err(|e| e.to_string())? == graph_inv,
        "relabelled Z(3) is not inverse Z(3)",
    )?;
    let mut compared = 0;
    for q in [2usize, 3] {
        let pz = CodeParams::new(Method::Modified, q, 8, 1).with_r(2);
        let pi = pz.clone().on(ChannelKind::InverseZ(q));
        let sz = pz.skeleton_space().map_err(|e| e.to_string())?;
        let si = pi.skeleton_space().map_err(|e| e.to_string())?;
        let count = sz.count().to_u64().unwrap_or(0);
        let mut pick = trial_rng(2024, q as u64);
        for trial in 0..100u64 {
            let message = big(pick.gen_range(0..count));
            let mut rng = trial_rng(7, trial);
            let z = random_round_trip(&pz, &message, None, &mut rng).map_err(|e| e.to_string())?;
            let skeleton = sz.unrank(&message).map_err(|e| e.to_string())?;
            let mirrored = si
                .rank(&complement(&skeleton, q))
                .map_err(|e| e.to_string())?;
            let overrides: Vec<(usize, Symbol)> = z
                .transcript
                .steps
                .iter()
                .filter(|s| s.sent != s.received)
                .map(|s| (s.position, (q - 1) as Symbol - s.received))
                .collect();
            let pattern = ErrorPattern::new(8, overrides, 1).map_err(|e| e.to_string())?;
            let inv = round_trip(&pi, &mirrored, &pattern).map_err(|e| e.to_string())?;
            ensure(
                z.ok() && inv.ok(),
                format!("q={q} trial {trial}: decode failed"),
            )?;
            for (a, b) in z.transcript.steps.iter().zip(&inv.transcript.steps) {
                let same = complement(&[a.sent], q) == [b.sent]
                    && complement(&[a.received], q) == [b.received]
                    && complement(&a.stack, q) == b.stack
                    && a.kind == b.kind;
                ensure(
                    same,
                    format!(
                        "q={q} trial {trial} step {}: {a:?} vs {b:?}",
                        a.position + 1
                    ),
                )?;
            }
            ensure(
                z.transcript.steps.len() == inv.transcript.steps.len(),
                "transcript lengths differ",
            )?;
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} transcript pairs match symbol-wise under x -> q-1-x"
    ))
}

fn criterion_4() -> Check {
    let p = CodeParams::new(Method::Lebedev, 3, 8, 1).with_z(1);
    // n' = n - 2t - ceil(log2 C(2,1)) = 5; C(5,1) * 2^4
    let formula = binomial(5, 1) * big(16);
    let r = verify(&p)?;
    ensure(
        r.messages == formula,
        format!("{} messages vs formula {formula}", r.messages),
    )?;
    ensure(r.messages == big(80), "expected 80 messages")?;
    ensure(r.verified(), format!("{:?}", r.outcome))?;
    Ok(format!("M={} leaves={}", r.messages, r.leaves))
}

fn criterion_5() -> Check {
    let mut notes = Vec::new();
    for q in [3usize, 2] {
        let p = CodeParams::new(Method::Unidirectional, q, 8, 1).with_r(2);
        let r = verify(&p)?;
        ensure(r.verified(), format!("q={q}: {:?}", r.outcome))?;
        let (m, rate) = measure_rate(&p).map_err(|e| e.to_string())?;
        let target =
            rubbercodes::codec::unidirectional_target_capacity(&p).map_err(|e| e.to_string())?;
        let target_rate = target.to_f64().unwrap_or(f64::NAN).log(q as f64) / 8.0;
        let asymptotic = r_mr(1.0 / 8.0, q, 2);
        notes.push(format!(
            "q={q}: M={m} rate={rate:.4} vs n-rt target M={target} rate={target_rate:.4} (R_mr(1/8)={asymptotic:.4})"
        ));
    }
    Ok(notes.join("; "))
}

fn criterion_6() -> Check {
    ensure(
        (r0() - 0.694_241_914).abs() <= 1e-8,
        format!("R0 = {}", r0()),
    )?;
    ensure(
        (tau_c() - 0.190_983_006).abs() <= 1e-8,
        format!("tau_c = {}", tau_c()),
    )?;
    let z2 = solve_z_r(2, 2);
    ensure((z2 - 1.618_033_989).abs() <= 1e-8, format!("z2 = {z2}"))?;
    let tc = tau_c();
    let left = 1.0 - entropy_q(tc, 2);
    let right = (1.0 - 3.0 * tc) * r0();
    ensure(
        (left - right).abs() <= 1e-9,
        format!("branches at tau_c: {left} vs {right}"),
    )?;
    ensure(
        (c2f_binary(tc) - right).abs() <= 1e-9,
        "c2f_binary at tau_c",
    )?;
    let h = 1e-6;
    let slope = ((1.0 - entropy_q(tc + h, 2)) - (1.0 - entropy_q(tc - h, 2))) / (2.0 * h);
    ensure(
        (slope + 3.0 * r0()).abs() <= 1e-6,
        format!("slope {slope} vs {}", -3.0 * r0()),
    )?;
    for q in 2..=6 {
        let t = 1.0 / q as f64;
        let first = hamming_q(t, q);
        let second = (1.0 - 2.0 * t) * ((q - 1) as f64).log(q as f64);
        ensure(
            (first - second).abs() <= 1e-9,
            format!("adl branches at 1/{q}: {first} vs {second}"),
        )?;
        for i in 0..=1000 {
            let tau = t + (0.5 - t) * i as f64 / 1000.0;
            let gap = (rubber_rate(tau, q, 1) - adl_upper(tau, q)).abs();
            ensure(
                gap <= 1e-12,
                format!("q={q} tau={tau}: rubber_rate vs adl_upper differ by {gap}"),
            )?;
        }
    }
    Ok(format!(
        "R0={:.9} tau_c={:.9} z2={z2:.9} slope={slope:.7}",
        r0(),
        tau_c()
    ))
}

fn criterion_7() -> Check {
    let mut worst = Vec::new();
    for q in [2usize, 3, 4] {
        for r in [1usize, 2, 3] {
            let end = 1.0 / (r + 1) as f64;
            let grid: Vec<f64> = tau_grid(1e-4, end)
                .into_iter()
                .filter(|&t| t > 0.0 && t < end)
                .collect();
            let (gap, at) = tangency_gap(q, r, &grid);
            ensure(
                (-1e-9..=1e-3).contains(&gap),
                format!("q={q} r={r}: min gap {gap} at {at}"),
            )?;
            worst.push(format!("q{q}r{r}:{gap:.1e}@{at:.4}"));
        }
    }
    Ok(worst.join(" "))
}

/// Independent constraint check for brute force.
fn admissible(seq: &[Symbol], c: Constraint) -> bool {
    match c {
        Constraint::NoZero => seq.iter().all(|&s| s != 0),
        Constraint::AvoidBlock { b, r } => !seq.windows(r).any(|w| w.iter().all(|&s| s == b)),
        Constraint::ExactZeros { z } => seq.iter().filter(|&&s| s == 0).count() == z,
    }
}

fn all_words(q: usize, len: usize) -> impl Iterator<Item = Vec<Symbol>> {
    let total = q.pow(len as u32);
    (0..total).map(move |mut k| {
        let mut w = vec![0; len];
        for i in (0..len).rev() {
            w[i] = (k % q) as Symbol;
            k /= q;
        }
        w
    })
}

fn criterion_8() -> Check {
    // brute-force counts
    let mut count_checks = 0;
    for q in [2usize, 3] {
        for r in 1..=3 {
            for b in [0, (q - 1) as Symbol] {
                for len in 0..=12 {
                    let c = Constraint::AvoidBlock { b, r };
                    let space = SkeletonSpace::new(q, c, len).map_err(|e| e.to_string())?;
                    let brute = all_words(q, len).filter(|w| admissible(w, c)).count();
                    ensure(
                        space.count() == big(brute as u64),
                        format!("q={q} {c:?} len={len}: {} vs {brute}", space.count()),
                    )?;
                    count_checks += 1;
                }
            }
        }
    }
    // exhaustive bijection for every space with count <= 1e5
    let mut spaces = 0;
    let mut elements = 0u64;
    for q in [2usize, 3, 4] {
        let mut constraints = vec![Constraint::NoZero];
        for r in 1..=3 {
            constraints.push(Constraint::AvoidBlock { b: 0, r });
            constraints.push(Constraint::AvoidBlock {
                b: (q - 1) as Symbol,
                r,
            });
        }
        for z in 0..=4 {
            constraints.push(Constraint::ExactZeros { z });
        }
        for c in constraints {
            for len in 0..=40 {
                let Ok(space) = SkeletonSpace::new(q, c, len) else {
                    continue;
                };
                let Some(count) = space.count().to_u64() else {
                    break;
                };
                if count > 100_000 {
                    break;
                }
                let lexicographic = !matches!(c, Constraint::ExactZeros { .. });
                let mut seen = HashSet::new();
                let mut prev: Option<Vec<Symbol>> = None;
                for k in 0..count {
                    let s = space.unrank(&big(k)).map_err(|e| e.to_string())?;
                    ensure(
                        s.len() == len && admissible(&s, c),
                        format!("q={q} {c:?} len={len} k={k}: {s:?}"),
                    )?;
                    ensure(
                        space.rank(&s).map_err(|e| e.to_string())? == big(k),
                        format!("rank(unrank({k})) != {k}"),
                    )?;
                    if lexicographic {
                        ensure(
                            prev.as_ref().is_none_or(|p| *p < s),
                            format!("q={q} {c:?}: not increasing at {k}"),
                        )?;
                        prev = Some(s);
                    } else {
                        ensure(seen.insert(s), format!("duplicate at {k}"))?;
                    }
                }
                spaces += 1;
                elements += count;
            }
        }
    }
    // ratio convergence at length 60
    let mut ratios = Vec::new();
    for q in [2usize, 3, 4] {
        for r in 1..=3 {
            let c = Constraint::AvoidBlock { b: 0, r };
            let a = SkeletonSpace::new(q, c, 60)
                .map_err(|e| e.to_string())?
                .count();
            let b = SkeletonSpace::new(q, c, 61)
                .map_err(|e| e.to_string())?
                .count();
            let ratio = b.to_f64().unwrap_or(f64::NAN) / a.to_f64().unwrap_or(f64::NAN);
            let z = solve_z_r(q, r);
            ensure(
                (ratio - z).abs() <= 1e-6,
                format!("q={q} r={r}: ratio {ratio} vs z_r {z}"),
            )?;
            ratios.push((ratio - z).abs());
        }
    }
    let worst = ratios.iter().cloned().fold(0.0f64, f64::max);
    Ok(format!(
        "{count_checks} brute-force counts, {spaces} spaces / {elements} elements bijective, max |ratio - z_r| = {worst:.1e}"
    ))
}

fn criterion_9() -> Check {
    let p = CodeParams::new(Method::Broken, 3, 6, 1).with_r(2);
    let r = verify(&p)?;
    let Outcome::Counterexample(c) = r.outcome else {
        return Err("broken decoder was verified".into());
    };
    let spec = parse_error_spec(&c.errors_spec())?;
    let rt = replay(&p, &c.message, &spec, c.direction).map_err(|e| e.to_string())?;
    let mut trace = Vec::new();
    write_trace(&mut trace, &rt).map_err(|e| e.to_string())?;
    let trace = String::from_utf8(trace).map_err(|e| e.to_string())?;
    let last = trace.lines().last().unwrap_or("");
    ensure(last.starts_with("FAIL"), format!("replay verdict: {last}"))?;
    Ok(format!(
        "message {} errors {} -> {last}",
        c.message,
        c.errors_spec()
    ))
}

fn criterion_10() -> Check {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = parse_and_dispatch(
        ["rubbercodes", "rates", "--q", "2", "--r-max", "4"],
        &mut out,
        &mut err,
    );
    ensure(code == 0, format!("rates exited {code}"))?;
    let csv = String::from_utf8(out).map_err(|e| e.to_string())?;
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or(format!("no column {name}"))
    };
    let (c2f, rmr) = (col("c2f")?, col("r_mr")?);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    let at = |tau: f64| {
        rows.iter()
            .find(|r| (r[0] - tau).abs() < 5e-10)
            .ok_or(format!("no row at {tau}"))
    };
    let third = at(1.0 / 3.0)?;
    ensure(
        third[c2f].abs() <= 1e-9,
        format!("c2f(1/3) = {}", third[c2f]),
    )?;
    let quarter = at(0.25)?;
    let want = 0.5 * r0();
    ensure(
        (quarter[rmr] - want).abs() <= 1e-6,
        format!("r_mr(0.25) = {} vs {want}", quarter[rmr]),
    )?;
    let mut checked = 0;
    for r in rows
        .iter()
        .filter(|r| r[0] >= tau_c() - 5e-10 && r[0] <= 1.0 / 3.0 + 5e-10)
    {
        ensure(
            r[rmr] >= r[c2f],
            format!("tau={}: r_mr {} < c2f {}", r[0], r[rmr], r[c2f]),
        )?;
        checked += 1;
    }
    // sanity against the library directly
    ensure(
        (modified_rubber_rate(0.25, 2, 2) - want).abs() < 1e-12,
        "library r_mr",
    )?;
    Ok(format!(
        "c2f(1/3)={:.9} r_mr(0.25)={:.9} r_mr>=c2f on {checked} rows",
        third[c2f], quarter[rmr]
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exhaustive 1-rubber", criterion_1),
        ("exhaustive modified rubber on Z and inverse Z", criterion_2),
        ("Z / inverse-Z isomorphism", criterion_3),
        ("Lebedev reconstruction", criterion_4),
        ("unidirectional reconstruction", criterion_5),
        ("bound numerics", criterion_6),
        ("tangency", criterion_7),
        ("codec properties", criterion_8),
        ("verifier self-test", criterion_9),
        ("rate curve data", criterion_10),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| label.contains(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        let result =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("{label} PASS [{name}] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{label} FAIL [{name}] {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
