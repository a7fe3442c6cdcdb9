//! Rate formulas, capacity-error functions and curve sampling.
//!
//! All rates are in q-ary units per channel use.

use std::fmt::Write as _;

/// Golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;

/// `R0 = log2 PHI`, the binary rate on the linear branch.
pub fn r0() -> f64 {
    PHI.log2()
}

/// Switch point `1 / (3 + sqrt 5)` of the binary capacity-error function.
pub fn tau_c() -> f64 {
    1.0 / (3.0 + 5f64.sqrt())
}

fn log_q(x: f64, q: usize) -> f64 {
    x.ln() / (q as f64).ln()
}

/// q-ary entropy `-tau log_q tau - (1-tau) log_q (1-tau)`, 0 at the ends.
pub fn entropy_q(tau: f64, q: usize) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * log_q(p, q) };
    term(tau) + term(1.0 - tau)
}

/// Hamming-type volume bound `1 - h_q(tau) - tau log_q (q-1)`.
pub fn hamming_q(tau: f64, q: usize) -> f64 {
    1.0 - entropy_q(tau, q) - tau * log_q((q - 1) as f64, q)
}

/// Binary capacity-error function with feedback.
pub fn c2f_binary(tau: f64) -> f64 {
    if tau <= tau_c() {
        1.0 - entropy_q(tau, 2)
    } else if tau <= 1.0 / 3.0 {
        ((1.0 - 3.0 * tau) * r0()).max(0.0)
    } else {
        0.0
    }
}

/// Upper bound on the binary function; it meets the lower bound.
pub fn berlekamp_upper(tau: f64) -> f64 {
    c2f_binary(tau)
}

/// Lower bound on the binary function; it meets the upper bound.
pub fn zigangirov_lower(tau: f64) -> f64 {
    c2f_binary(tau)
}

/// q-ary upper bound: the volume bound up to `1/q`, then the straight
/// line `(1-2tau) log_q (q-1)` down to zero at `1/2`.
pub fn adl_upper(tau: f64, q: usize) -> f64 {
    if tau <= 1.0 / q as f64 {
        hamming_q(tau, q)
    } else if tau <= 0.5 {
        (1.0 - 2.0 * tau) * log_q((q - 1) as f64, q)
    } else {
        0.0
    }
}

fn poly(z: f64, q: f64, r: i32) -> f64 {
    z.powi(r + 1) - q * z.powi(r) + q - 1.0
}

/// Dominant root of `z^(r+1) = q z^r - q + 1`. For `r = 1` this is
/// `q - 1`; for `r >= 2` it lies strictly inside `(q-1, q)`.
///
/// # Panics
/// If `q < 2` or `r == 0`.
pub fn solve_z_r(q: usize, r: usize) -> f64 {
    assert!(q >= 2 && r >= 1, "solve_z_r needs q >= 2 and r >= 1");
    if r == 1 {
        return (q - 1) as f64;
    }
    let (qf, ri) = (q as f64, r as i32);
    // p(q-1) <= 0 < p(q) for r >= 2; for q = 2 the left end is the root 1,
    // but p is negative just above it
    let (mut lo, mut hi) = ((q - 1) as f64, qf);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poly(mid, qf, ri) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..8 {
        let d = (ri + 1) as f64 * z.powi(ri) - qf * ri as f64 * z.powi(ri - 1);
        if d == 0.0 {
            break;
        }
        let next = z - poly(z, qf, ri) / d;
        if !(next > (q - 1) as f64 && next < qf) || (next - z).abs() < 1e-16 {
            break;
        }
        z = next;
    }
    z
}

/// Rate of the plain r-rubber code, `(1-(r+1)tau) log_q z_r`, floored at 0.
pub fn rubber_rate(tau: f64, q: usize, r: usize) -> f64 {
    ((1.0 - (r + 1) as f64 * tau) * log_q(solve_z_r(q, r), q)).max(0.0)
}

/// Rate of the modified rubber, `(1-r tau) log_q z_r`, floored at 0.
pub fn modified_rubber_rate(tau: f64, q: usize, r: usize) -> f64 {
    ((1.0 - r as f64 * tau) * log_q(solve_z_r(q, r), q)).max(0.0)
}

/// Best modified rubber rate over `2 <= r <= r_max`, and the `r` that
/// attains it (smallest on ties). Zero beyond `tau = 1/2`.
pub fn r_mr_with_arg(tau: f64, q: usize, r_max: usize) -> (f64, usize) {
    if tau > 0.5 {
        return (0.0, 2);
    }
    let mut best = (0.0, 2);
    for r in 2..=r_max.max(2) {
        let v = modified_rubber_rate(tau, q, r);
        if v > best.0 {
            best = (v, r);
        }
    }
    best
}

pub fn r_mr(tau: f64, q: usize, r_max: usize) -> f64 {
    r_mr_with_arg(tau, q, r_max).0
}

/// Minimum of `H_q(tau) - rubber_rate(tau, q, r)` over the grid, and where
/// it occurs. An empty grid gives `(inf, NaN)`.
pub fn tangency_gap(q: usize, r: usize, grid: &[f64]) -> (f64, f64) {
    grid.iter().fold((f64::INFINITY, f64::NAN), |best, &tau| {
        let gap = hamming_q(tau, q) - rubber_rate(tau, q, r);
        if gap < best.0 {
            (gap, tau)
        } else {
            best
        }
    })
}

/// Grid from 0 to `end` inclusive in steps of `step`, built from integer
/// multiples so that it is reproducible.
pub fn tau_grid(step: f64, end: f64) -> Vec<f64> {
    let k = (end / step + 1e-9).floor() as usize;
    (0..=k).map(|i| i as f64 * step).collect()
}

/// Breakpoints of the curves for one alphabet: `1/q`, `1/(r+1)` for each
/// rubber length and, for binary, `tau_c` and `1/3`.
pub fn breakpoints(q: usize, r_max: usize) -> Vec<f64> {
    let mut pts = vec![1.0 / q as f64];
    pts.extend((1..=r_max).map(|r| 1.0 / (r + 1) as f64));
    if q == 2 {
        pts.extend([tau_c(), 1.0 / 3.0]);
    }
    pts
}

/// Regular grid on `[0, 1/2]` merged with the curve breakpoints, so that
/// kinks and zeros are sampled exactly.
pub fn rates_grid(q: usize, r_max: usize, step: f64) -> Vec<f64> {
    let mut grid = tau_grid(step, 0.5);
    grid.extend(breakpoints(q, r_max).into_iter().filter(|&t| t <= 0.5));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub label: String,
    pub values: Vec<f64>,
}

/// Sampled curves sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub tau: Vec<f64>,
    pub curves: Vec<BoundCurve>,
}

impl CurveSet {
    pub fn curve(&self, label: &str) -> Option<&BoundCurve> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// CSV with a `tau` column first and 9 decimals throughout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau");
        for c in &self.curves {
            out.push(',');
            out.push_str(&c.label);
        }
        out.push('\n');
        for (i, tau) in self.tau.iter().enumerate() {
            let _ = write!(out, "{tau:.9}");
            for c in &self.curves {
                let _ = write!(out, ",{:.9}", c.values[i]);
            }
            out.push('\n');
        }
        out
    }
}

/// Curves for one alphabet: `c2f` (binary only), `adl_upper`,
/// `rubber_r1..rubber_r{r_max}` and `r_mr`.
pub fn emit_curves(q: usize, r_max: usize, grid: &[f64]) -> CurveSet {
    let sample = |label: String, f: &dyn Fn(f64) -> f64| BoundCurve {
        label,
        values: grid.iter().map(|&t| f(t)).collect(),
    };
    let mut curves = Vec::new();
    if q == 2 {
        curves.push(sample("c2f".into(), &c2f_binary));
    }
    curves.push(sample("adl_upper".into(), &|t| adl_upper(t, q)));
    for r in 1..=r_max {
        curves.push(sample(format!("rubber_r{r}"), &|t| rubber_rate(t, q, r)));
    }
    curves.push(sample("r_mr".into(), &|t| r_mr(t, q, r_max)));
    CurveSet {
        tau: grid.to_vec(),
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps
    }

    #[test]
    fn constants() {
        assert!(close(r0(), 0.694_241_914, 1e-8));
        assert!(close(tau_c(), 0.190_983_006, 1e-8));
        assert!(close(solve_z_r(2, 2), PHI, 1e-12));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_q(0.5, 2), 1.0);
        assert_eq!(entropy_q(0.0, 3), 0.0);
        assert_eq!(entropy_q(1.0, 3), 0.0);
        let t = 0.190983f64;
        let direct = -t * t.log2() - (1.0 - t) * (1.0 - t).log2();
        assert!(close(entropy_q(t, 2), direct, 1e-15));
        assert!(close(entropy_q(t, 2), 0.703_523_3, 1e-6));
    }

    #[test]
    fn binary_function() {
        assert_eq!(c2f_binary(0.0), 1.0);
        assert!(close(c2f_binary(1.0 / 3.0), 0.0, 1e-12));
        assert_eq!(c2f_binary(0.4), 0.0);
        let tc = tau_c();
        assert!(close(1.0 - entropy_q(tc, 2), (1.0 - 3.0 * tc) * r0(), 1e-9));
    }

    /// `|p(z)|` relative to the size of its terms; the absolute value cannot
    /// drop below about `p'(z) * ulp(z)` for a root held in an f64.
    fn residual(z: f64, q: usize, r: usize) -> f64 {
        let (qf, ri) = (q as f64, r as i32);
        let scale = z.powi(ri + 1) + qf * z.powi(ri) + qf;
        poly(z, qf, ri).abs() / scale
    }

    #[test]
    fn z_r_roots() {
        for q in 2..=6 {
            assert_eq!(solve_z_r(q, 1), (q - 1) as f64);
            for r in 1..=8 {
                let z = solve_z_r(q, r);
                assert!(residual(z, q, r) < 1e-12, "q={q} r={r}");
                if r >= 2 {
                    assert!(z > (q - 1) as f64 && z < q as f64);
                }
            }
        }
        // bisection on z^4 - 2 z^3 + 1 in (1, 2)
        let (mut lo, mut hi) = (1.5f64, 2.0f64);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if m.powi(4) - 2.0 * m.powi(3) + 1.0 < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        assert!(close(solve_z_r(2, 3), lo, 1e-12));
        assert!(close(solve_z_r(2, 3), 1.839_286_755, 1e-9));
    }

    #[test]
    fn rate_formulas() {
        assert!(close(modified_rubber_rate(0.1, 2, 2), 0.8 * r0(), 1e-12));
        assert!(close(modified_rubber_rate(0.1, 2, 2), 0.55539, 1e-5));
        for q in 2..=6 {
            for i in 0..=50 {
                let tau = i as f64 / 100.0;
                let want = ((1.0 - 2.0 * tau) * log_q((q - 1) as f64, q)).max(0.0);
                assert!(close(rubber_rate(tau, q, 1), want, 1e-15));
            }
            assert_eq!(r_mr(0.6, q, 5), 0.0);
        }
    }

    #[test]
    fn adl_branches_meet() {
        for q in 2..=6 {
            let t = 1.0 / q as f64;
            let line = (1.0 - 2.0 * t) * log_q((q - 1) as f64, q);
            assert!(close(hamming_q(t, q), line, 1e-9), "q={q}");
            assert!(close(adl_upper(0.5, q), 0.0, 1e-15));
        }
        assert!(close(adl_upper(1.0 / 3.0, 3), log_q(2.0, 3) / 3.0, 1e-12));
    }

    #[test]
    fn r_mr_ties_and_args() {
        assert_eq!(r_mr_with_arg(0.25, 2, 4).1, 2);
        assert!(close(r_mr(0.25, 2, 4), 0.5 * r0(), 1e-12));
        // tiny tau prefers long rubbers
        assert!(r_mr_with_arg(0.001, 2, 6).1 > 2);
    }

    #[test]
    fn tangency_endpoints() {
        let grid = tau_grid(1e-4, 1.0 / 3.0 - 1e-4);
        let (gap, at) = tangency_gap(2, 2, &grid[1..]);
        assert!((-1e-9..1e-4).contains(&gap), "gap {gap} at {at}");
        let end = hamming_q(1.0 / 3.0, 2) - rubber_rate(1.0 / 3.0, 2, 2);
        assert!(close(end, hamming_q(1.0 / 3.0, 2), 1e-12));
    }

    #[test]
    fn grid_includes_kinks() {
        let g = rates_grid(2, 4, 0.001);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&(1.0 / 3.0)) && g.contains(&tau_c()) && g.contains(&0.2));
        assert_eq!(g.iter().filter(|&&t| (t - 0.5).abs() < 1e-12).count(), 1);
        // only tau_c and 1/3 fall between regular points
        assert_eq!(g.len(), 501 + 2);
    }

    #[test]
    fn csv_layout() {
        let set = emit_curves(2, 2, &tau_grid(0.25, 0.5));
        let csv = set.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("tau,c2f,adl_upper,rubber_r1,rubber_r2,r_mr")
        );
        assert_eq!(
            lines.next(),
            Some("0.000000000,1.000000000,1.000000000,0.000000000,0.694241914,0.694241914")
        );
        assert_eq!(csv.lines().count(), 4);
        assert!(emit_curves(3, 1, &[0.0]).curve("c2f").is_none());
    }
}
