//! Instance generators and brute-force oracles shared by the property tests
//! and the acceptance harness. Nothing here goes through the SVD used by the
//! library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmprc_core::{
    centroid_linkage, fit_wmprc, loo_predictions, minr, mspe_hats, rank_correlation, ClusterAssignment,
    ClusteredModel, DesignMatrix,
};

pub const LEVERAGE_TOL: f64 = 1e-10;
pub const EXACT_FIT_TOL: f64 = 1e-10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random surjective labelling of `k` items onto `c` labels.
pub fn random_assignment(rng: &mut impl Rng, k: usize, c: usize) -> ClusterAssignment {
    let mut labels: Vec<usize> = (0..k).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
    labels.shuffle(rng);
    ClusterAssignment::new(labels, c).unwrap()
}

/// Random schedule of `m` matches over `k >= 6` robots.
pub fn random_schedule(rng: &mut impl Rng, k: usize, m: usize) -> Vec<([usize; 3], [usize; 3])> {
    let mut ids: Vec<usize> = (0..k).collect();
    (0..m)
        .map(|_| {
            ids.shuffle(rng);
            ([ids[0], ids[1], ids[2]], [ids[3], ids[4], ids[5]])
        })
        .collect()
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller is plenty for test data.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A random design with a random clustering and a noisy response.
pub fn random_instance(seed: u64, max_k: usize, max_m: usize) -> (DesignMatrix, ClusterAssignment) {
    let mut r = rng(seed);
    let k = r.random_range(6..=max_k);
    let m = r.random_range(k.min(max_m)..=max_m);
    let c = r.random_range(1..=k);
    let g = random_assignment(&mut r, k, c);
    let beta: Vec<f64> = (0..k).map(|_| 10.0 * normal(&mut r)).collect();
    let sched = random_schedule(&mut r, k, m);
    let y = DVector::from_iterator(
        m,
        sched.iter().map(|(red, blue)| {
            let mean: f64 = red.iter().map(|&i| beta[i]).sum::<f64>() - blue.iter().map(|&i| beta[i]).sum::<f64>();
            mean + 5.0 * normal(&mut r)
        }),
    );
    (DesignMatrix::from_alliances(k, sched, y).unwrap(), g)
}

/// `X Z`, built from the alliance lists rather than the stored matrix.
pub fn reduced(design: &DesignMatrix, g: &ClusterAssignment) -> DMatrix<f64> {
    let mut xr = DMatrix::zeros(design.m(), g.count());
    for (s, (red, blue)) in design.alliances().iter().enumerate() {
        for &i in red {
            xr[(s, g.label(i))] += 1.0;
        }
        for &i in blue {
            xr[(s, g.label(i))] -= 1.0;
        }
    }
    xr
}

/// Least squares by Householder QR on a greedily chosen independent column
/// subset. Returns the coefficients on all columns (zero on dropped ones)
/// and the number of kept columns.
pub fn qr_least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, usize) {
    let (n, p) = a.shape();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let mut kept: Vec<usize> = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..p {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-9 * scale * (n as f64).sqrt() {
            basis.push(v / norm);
            kept.push(j);
        }
    }
    let mut coef = DVector::zeros(p);
    if kept.is_empty() {
        return (coef, 0);
    }
    let sub = a.select_columns(kept.iter());
    let qr = sub.qr();
    let qty = qr.q().transpose() * y;
    let sol = qr.r().solve_upper_triangular(&qty).expect("kept columns are independent");
    for (idx, &j) in kept.iter().enumerate() {
        coef[j] = sol[idx];
    }
    (coef, kept.len())
}

/// Constrained LSE from the Lagrangian system
/// `[2 A^T A, n; n^T, 0] [theta; lambda] = [2 A^T y; 0]`.
/// `None` when the system is singular, i.e. the design is not regular.
pub fn kkt_theta(design: &DesignMatrix, g: &ClusterAssignment) -> Option<Vec<f64>> {
    let a = reduced(design, g);
    let c = g.count();
    let sizes = g.sizes();
    let mut lhs = DMatrix::zeros(c + 1, c + 1);
    lhs.view_mut((0, 0), (c, c)).copy_from(&(a.transpose() * &a * 2.0));
    for k in 0..c {
        lhs[(k, c)] = sizes[k] as f64;
        lhs[(c, k)] = sizes[k] as f64;
    }
    let mut rhs = DVector::zeros(c + 1);
    rhs.rows_mut(0, c).copy_from(&(a.transpose() * design.y() * 2.0));
    let lu = lhs.clone().full_piv_lu();
    // Well-posed only when the reduced design has rank c - 1 or c.
    let (_, kept) = qr_least_squares(&a, design.y());
    if kept + 1 < c {
        return None;
    }
    let sol = lu.solve(&rhs)?;
    Some(sol.rows(0, c).iter().copied().collect())
}

/// Held-out predictions `(y, p, d)` by deleting each match and refitting.
/// `None` when some deletion loses a direction of the reduced design.
pub fn loo_by_refit(design: &DesignMatrix, g: &ClusterAssignment) -> Option<Vec<(f64, f64, f64)>> {
    let m = design.m();
    if m < 2 {
        return None;
    }
    let a = reduced(design, g);
    let y = design.y();
    let (_, full_rank) = qr_least_squares(&a, y);
    let floor = EXACT_FIT_TOL * y.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let snap = |v: f64| if v.abs() <= floor { 0.0 } else { v };
    let mut out = Vec::with_capacity(m);
    for s in 0..m {
        let a_s = a.clone().remove_row(s);
        let y_s = y.clone().remove_row(s);
        let (coef, rank) = qr_least_squares(&a_s, &y_s);
        if rank < full_rank {
            return None;
        }
        let y_hat = snap((a.row(s) * &coef)[0]);
        let resid = &y_s - &a_s * &coef;
        let below = resid.iter().filter(|&&r| snap(r) <= -y_hat).count();
        let p = 1.0 - below as f64 / (m - 1) as f64;
        let d = if p > 0.5 {
            1.0
        } else if p == 0.5 {
            0.5
        } else {
            0.0
        };
        out.push((y_hat, p, d));
    }
    Some(out)
}

/// Reference centroid linkage: every pair of clusters is compared each step,
/// ties go to the lexicographically smallest pair of smallest-member ids.
/// Returns the partition after each merge, keyed by cluster count.
pub fn naive_linkage(values: &[f64]) -> Vec<(usize, Vec<Vec<usize>>)> {
    let mut groups: Vec<Vec<usize>> = (0..values.len()).map(|i| vec![i]).collect();
    let centroid = |g: &[usize]| g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64;
    let sorted = |gs: &[Vec<usize>]| {
        let mut v = gs.to_vec();
        v.sort();
        v
    };
    let mut out = vec![(groups.len(), sorted(&groups))];
    while groups.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..groups.len() {
            for b in 0..groups.len() {
                if a == b || groups[a][0] > groups[b][0] {
                    continue;
                }
                let dist = (centroid(&groups[a]) - centroid(&groups[b])).abs();
                let better = match best {
                    None => true,
                    Some((bd, ba, bb)) => {
                        dist < bd || (dist == bd && (groups[a][0], groups[b][0]) < (groups[ba][0], groups[bb][0]))
                    }
                };
                if better {
                    best = Some((dist, a, b));
                }
            }
        }
        let (_, a, b) = best.unwrap();
        let absorbed = groups[b].clone();
        groups[a].extend(absorbed);
        groups[a].sort_unstable();
        groups.remove(b);
        out.push((groups.len(), sorted(&groups)));
    }
    out
}

/// Nearest index by the literal argmin, smallest index on ties.
fn literal_argmin(v: f64, centers: &[f64]) -> usize {
    let best = centers.iter().map(|c| (v - c).abs()).fold(f64::INFINITY, f64::min);
    centers.iter().position(|c| (v - c).abs() == best).unwrap()
}

/// The matching index written term by term.
pub fn literal_minr(a: &ClusteredModel, b: &ClusteredModel) -> f64 {
    let (c, d) = (a.clusters(), b.clusters());
    let k = a.robots();
    let (ga, gb) = (a.assignment().labels(), b.assignment().labels());
    let mut total = 0.0;
    for i in 0..k {
        let hat_a = literal_argmin(a.theta()[ga[i]], b.theta());
        let hat_b = literal_argmin(b.theta()[gb[i]], a.theta());
        let ind = |x: bool| if x { 1.0 } else { 0.0 };
        total += ind(hat_a == gb[i]) * ind(c > d)
            + ind(ga[i] == hat_b) * ind(c < d)
            + (ind(ga[i] == hat_b) + ind(hat_a == gb[i])) / 2.0 * ind(c == d);
    }
    total / k as f64
}

/// The modified rank correlation written term by term.
pub fn literal_rc(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                if (a[i] - a[j]) * (b[i] - b[j]) > 0.0 {
                    total += 1.0;
                }
                if a[i] == a[j] && b[i] == b[j] {
                    total += 1.0;
                }
            }
        }
    }
    total / (k * (k - 1)) as f64
}

/// A model with random distinct strengths and no residuals.
pub fn random_model(rng: &mut impl Rng, k: usize, c: usize) -> ClusteredModel {
    let g = random_assignment(rng, k, c);
    let theta: Vec<f64> = (0..c).map(|_| normal(rng)).collect();
    ClusteredModel::from_parts(g, theta, vec![]).unwrap()
}

/// The same model with its cluster labels permuted by `perm` (old -> new).
pub fn permuted(model: &ClusteredModel, perm: &[usize]) -> ClusteredModel {
    let g = model.assignment().relabel(perm);
    let mut theta = vec![0.0; model.clusters()];
    for (old, &new) in perm.iter().enumerate() {
        theta[new] = model.theta()[old];
    }
    ClusteredModel::from_parts(g, theta, model.residuals().to_vec()).unwrap()
}

/// LOO shortcut against deleting each match and refitting.
pub fn check_loo(seed: u64) -> Result<bool, TestCaseError> {
    let (design, g) = random_instance(seed, 12, 30);
    let model = fit_wmprc(&design, &g).unwrap();
    let loo = loo_predictions(&model, &design).unwrap();
    let row = mspe_hats(&loo, &design);
    let Some(oracle) = loo_by_refit(&design, &g) else {
        prop_assert!(!loo.feasible, "refit lost rank but shortcut reported feasible");
        prop_assert!(row.mspe_y_hat.is_infinite() && row.pcp_hat == f64::NEG_INFINITY);
        return Ok(false);
    };
    prop_assert!(loo.feasible);
    let m = design.m() as f64;
    let (mut sy, mut sp, mut sd) = (0.0, 0.0, 0.0);
    for (s, (rec, &(y, p, d))) in loo.records.iter().zip(&oracle).enumerate() {
        prop_assert!((rec.y_loo - y).abs() <= 1e-8 * (1.0 + y.abs()), "match {s}: {} vs {y}", rec.y_loo);
        prop_assert!((rec.p_loo - p).abs() <= 1e-8, "match {s}: p {} vs {p}", rec.p_loo);
        prop_assert_eq!(rec.d_loo, d);
        let ds = design.d()[s];
        sy += (design.y()[s] - y).powi(2);
        sp += (ds - p).powi(2);
        sd += (ds - d).powi(2);
    }
    prop_assert!((row.mspe_y_hat - sy / m).abs() <= 1e-10 * (1.0 + sy / m));
    prop_assert!((row.mspe_p_hat - sp / m).abs() <= 1e-10);
    prop_assert!((row.mspe_d_hat - sd / m).abs() <= 1e-10);
    Ok(true)
}

pub fn check_kkt(seed: u64) -> Result<(), TestCaseError> {
    let (design, g) = random_instance(seed, 12, 30);
    let model = fit_wmprc(&design, &g).unwrap();
    let beta = model.beta();
    prop_assert!(beta.iter().sum::<f64>().abs() <= 1e-10 * (1.0 + beta.iter().map(|b| b.abs()).sum::<f64>()));
    match kkt_theta(&design, &g) {
        Some(theta) => {
            for (i, &b) in beta.iter().enumerate() {
                let want = theta[g.label(i)];
                prop_assert!((b - want).abs() <= 1e-8 * (1.0 + want.abs()), "robot {i}: {b} vs {want}");
            }
        }
        None => {
            // Strengths are not identified; the fitted values still are.
            let (coef, _) = qr_least_squares(&reduced(&design, &g), design.y());
            let want = reduced(&design, &g) * coef;
            let got = design.x() * nalgebra::DVector::from_column_slice(beta);
            prop_assert!((want - got).amax() <= 1e-8 * (1.0 + design.y().amax()));
        }
    }
    Ok(())
}

fn random_values(seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let k = r.random_range(1..=25);
    if r.random_bool(0.5) {
        (0..k).map(|_| f64::from(r.random_range(0..6u8))).collect()
    } else {
        (0..k).map(|_| normal(&mut r)).collect()
    }
}

pub fn check_linkage(seed: u64) -> Result<(), TestCaseError> {
    let values = random_values(seed);
    let k = values.len();
    for (target, want) in naive_linkage(&values) {
        let got = centroid_linkage(&values, target).unwrap();
        prop_assert_eq!(got.partition(), want, "target {}", target);
        // Contiguity: no value of another cluster lies strictly inside a cluster's range.
        for part in got.partition() {
            let lo = part.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
            let hi = part.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
            for i in (0..k).filter(|i| !part.contains(i)) {
                prop_assert!(!(values[i] > lo && values[i] < hi), "robot {i} splits a cluster at target {target}");
            }
        }
        // Labels ascend by centroid.
        let centroid = |l: usize| {
            let mem = got.members(l);
            mem.iter().map(|&i| values[i]).sum::<f64>() / mem.len() as f64
        };
        for l in 1..target {
            prop_assert!(centroid(l - 1) <= centroid(l));
        }
    }
    Ok(())
}

pub fn check_indices(seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let k = r.random_range(2..=30);
    let (c, d) = (r.random_range(1..=k), r.random_range(1..=k));
    let a = random_model(&mut r, k, c);
    let b = random_model(&mut r, k, d);
    let ab = minr(&a, &b).unwrap();
    prop_assert!((0.0..=1.0).contains(&ab));
    prop_assert_eq!(ab, minr(&b, &a).unwrap());
    prop_assert!((ab - literal_minr(&a, &b)).abs() <= 1e-12);
    let rc = rank_correlation(&a, &b).unwrap();
    prop_assert!((0.0..=1.0).contains(&rc));
    prop_assert_eq!(rc, rank_correlation(&b, &a).unwrap());
    prop_assert!((rc - literal_rc(a.beta(), b.beta())).abs() <= 1e-12);
    prop_assert_eq!(minr(&a, &a).unwrap(), 1.0);
    prop_assert_eq!(rank_correlation(&a, &a).unwrap(), 1.0);

    let mut perm: Vec<usize> = (0..a.clusters()).collect();
    perm.shuffle(&mut r);
    let pa = permuted(&a, &perm);
    prop_assert_eq!(minr(&pa, &b).unwrap(), ab);
    prop_assert_eq!(rank_correlation(&pa, &b).unwrap(), rc);

    let scaled = wmprc_core::ClusteredModel::from_parts(
        a.assignment().clone(),
        a.theta().iter().map(|t| t * 3.5).collect(),
        vec![],
    )
    .unwrap();
    prop_assert_eq!(rank_correlation(&scaled, &b).unwrap(), rc);
    Ok(())
}
