//! Sweeps of the sampling weight W(U) over the Weyl chamber O A₁ A₂ A₃ and
//! comparisons against the per-axis (legacy) and overlap-based costs.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{pauli_coefficients, ThetaVector};
use crate::circuit::gate_based_cost;
use crate::decomposition::{legacy_cost, weight_formula};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub legacy: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

impl SweepRow {
    pub fn theta(&self) -> ThetaVector {
        ThetaVector([self.theta1, self.theta2, self.theta3])
    }
}

/// W(θ) of the canonical decomposition.
pub fn weight_at(theta: &ThetaVector) -> f64 {
    weight_formula(&pauli_coefficients(theta))
}

/// W, legacy cost and G at one point.
pub fn compare_costs(theta: &ThetaVector) -> SweepRow {
    let u = pauli_coefficients(theta);
    SweepRow {
        theta1: theta[0],
        theta2: theta[1],
        theta3: theta[2],
        w: weight_formula(&u),
        legacy: legacy_cost(theta),
        g: gate_based_cost(&u),
    }
}

/// Lattice points k·(π/4)/(m−1), k = 0..m−1, per axis, filtered to
/// π/4 ≥ θ₁ ≥ θ₂ ≥ θ₃ ≥ 0 and ordered lexicographically by lattice index.
pub fn weyl_grid(m: usize) -> Vec<ThetaVector> {
    assert!(m >= 2, "grid resolution must be at least 2");
    let h = FRAC_PI_4 / (m - 1) as f64;
    let at = |k: usize| if k == m - 1 { FRAC_PI_4 } else { k as f64 * h };
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..=i {
            for k in 0..=j {
                out.push(ThetaVector([at(i), at(j), at(k)]));
            }
        }
    }
    out
}

/// Rows for every point of `weyl_grid(m)`, in grid order.
pub fn sweep(m: usize) -> Vec<SweepRow> {
    weyl_grid(m).par_iter().map(compare_costs).collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[SweepRow], out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    /// Stop when every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { initial_step: 0.05, diameter_tol: 1e-8, max_iter: 10_000 }
    }
}

/// Minimizes `f` from `start` with the downhill simplex method.
pub fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(f: F, start: [f64; 3], opts: &NelderMeadOptions) -> ([f64; 3], f64) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(&start)));
    for d in 0..3 {
        let mut p = start;
        p[d] += opts.initial_step;
        simplex.push((p, f(&p)));
    }
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] { [0, 1, 2].map(|i| a[i] + t * (b[i] - a[i])) };

    for _ in 0..opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| (0..3).map(|i| (p[i] - best[i]).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            break;
        }
        let centroid = [0, 1, 2].map(|i| simplex[..3].iter().map(|(p, _)| p[i]).sum::<f64>() / 3.0);
        let (worst, f_worst) = simplex[3];
        let reflected = lerp(&centroid, &worst, -REFLECT);
        let f_r = f(&reflected);
        if f_r < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -EXPAND);
            let f_e = f(&expanded);
            simplex[3] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < simplex[2].1 {
            simplex[3] = (reflected, f_r);
            continue;
        }
        let (contracted, f_c) = if f_r < f_worst {
            let p = lerp(&centroid, &reflected, CONTRACT);
            (p, f(&p))
        } else {
            let p = lerp(&centroid, &worst, CONTRACT);
            (p, f(&p))
        };
        if f_c < f_worst.min(f_r) {
            simplex[3] = (contracted, f_c);
            continue;
        }
        for v in simplex.iter_mut().skip(1) {
            let p = lerp(&best, &v.0, SHRINK);
            *v = (p, f(&p));
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Folds a point of the cube [0, π/4]³ into the chamber by sorting; W is
/// invariant under permutations of the angles.
fn into_chamber(p: &[f64; 3]) -> ThetaVector {
    let mut t = p.map(|x| x.clamp(0.0, FRAC_PI_4));
    t.sort_by(|a, b| b.total_cmp(a));
    ThetaVector(t)
}

/// Objective for the refinement: −W at the clamped point plus a penalty on the
/// distance to the cube so the simplex cannot drift outside.
fn penalized_negative_weight(p: &[f64; 3]) -> f64 {
    const PENALTY: f64 = 100.0;
    let clamped = p.map(|x| x.clamp(0.0, FRAC_PI_4));
    let dist: f64 = (0..3).map(|i| (p[i] - clamped[i]).powi(2)).sum::<f64>().sqrt();
    -weight_at(&ThetaVector(clamped)) + PENALTY * dist
}

/// Resolution of the coarse grid used by [`find_max_w`].
pub const MAX_SEARCH_GRID: usize = 51;
/// Number of refinement restarts.
pub const MAX_SEARCH_RESTARTS: usize = 3;

/// Maximum of W over the chamber: a coarse grid followed by simplex
/// refinement from the best grid points.
pub fn find_max_w() -> (ThetaVector, f64) {
    let grid = sweep(MAX_SEARCH_GRID);
    let mut ranked: Vec<&SweepRow> = grid.iter().collect();
    ranked.sort_by(|a, b| b.w.total_cmp(&a.w));
    let step = FRAC_PI_4 / (MAX_SEARCH_GRID - 1) as f64;
    let opts = NelderMeadOptions { initial_step: step, ..Default::default() };
    ranked
        .iter()
        .take(MAX_SEARCH_RESTARTS)
        .map(|row| {
            let start = row.theta().0;
            let (p, _) = nelder_mead(penalized_negative_weight, start, &opts);
            let theta = into_chamber(&p);
            (theta, weight_at(&theta))
        })
        .chain(ranked.first().map(|r| (r.theta(), r.w)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{in_mirrored_weyl_domain, in_weyl_domain};
    use std::f64::consts::PI;

    #[test]
    fn grid_covers_chamber() {
        let g = weyl_grid(2);
        assert_eq!(g, vec![ThetaVector::ORIGIN, ThetaVector::A1, ThetaVector::A2, ThetaVector::A3]);
        let g = weyl_grid(20);
        assert_eq!(g.len(), 20 * 21 * 22 / 6);
        assert!(g.iter().all(in_weyl_domain));
    }

    #[test]
    fn vertex_rows() {
        let rows = sweep(2);
        let w: Vec<f64> = rows.iter().map(|r| r.w).collect();
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 3.0).abs() < 1e-12);
        assert!((w[2] - 7.0).abs() < 1e-12);
        assert!((w[3] - 7.0).abs() < 1e-12);
        assert!((rows[3].legacy - 27.0).abs() < 1e-12);
    }

    #[test]
    fn compare_examples() {
        let o = compare_costs(&ThetaVector::ORIGIN);
        assert_eq!((o.w, o.legacy), (1.0, 1.0));
        assert!((o.g - 1.0).abs() < 1e-15);
        let a1 = compare_costs(&ThetaVector::A1);
        assert!((a1.w - 3.0).abs() < 1e-12 && (a1.g - 2.0).abs() < 1e-12);
        let a3 = compare_costs(&ThetaVector::A3);
        assert!((a3.w - 7.0).abs() < 1e-12 && (a3.legacy - 27.0).abs() < 1e-12);
    }

    #[test]
    fn dominance_on_grid() {
        for r in sweep(20) {
            assert!(r.g <= r.w + 1e-10, "{r:?}");
            assert!(r.w <= r.legacy + 1e-10, "{r:?}");
        }
    }

    #[test]
    fn reflection_symmetry() {
        for t in weyl_grid(9) {
            let mirrored = ThetaVector([-t[0], t[1], t[2]]);
            assert!(in_mirrored_weyl_domain(&mirrored));
            assert!((weight_at(&t) - weight_at(&mirrored)).abs() < 1e-12);
        }
    }

    #[test]
    fn nelder_mead_on_quadratic() {
        let f = |p: &[f64; 3]| (p[0] - 1.0).powi(2) + 2.0 * (p[1] + 0.5).powi(2) + (p[2] - 0.25).powi(2);
        let (p, v) = nelder_mead(f, [0.0, 0.0, 0.0], &NelderMeadOptions { initial_step: 0.5, ..Default::default() });
        assert!(v < 1e-14);
        assert!((p[0] - 1.0).abs() < 1e-7 && (p[1] + 0.5).abs() < 1e-7 && (p[2] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn maximum() {
        let (theta, w) = find_max_w();
        assert!((8.85..=8.89).contains(&w), "{w}");
        assert!((theta[0] - FRAC_PI_4).abs() < 1e-3);
        assert!((theta[1] - 0.202 * PI).abs() < 0.01 * PI);
        assert!((theta[2] - 0.136 * PI).abs() < 0.01 * PI);
        assert!(in_weyl_domain(&theta));
    }

    #[test]
    fn csv_and_json_output() {
        let rows = sweep(2);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "theta1,theta2,theta3,W,legacy,G");
        assert_eq!(text.lines().count(), 5);
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<SweepRow> = rd.deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(back, rows);
        let mut buf = Vec::new();
        write_json(&rows, &mut buf).unwrap();
        let back: Vec<SweepRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rows);
    }
}
