//! Seeded property suites shared by the core integration tests and the
//! acceptance run. Each check returns a short description on success and the
//! first violation on failure.

use nalgebra::DMatrix;
use ttr_core::analysis::{factor_distance, lemma5_check, perturb_factors, rotated_factor};
use ttr_core::decompose::{gaussian_dense, random_tt, tt_svd};
use ttr_core::linalg::{chain_product, orthonormality_residual, telescoping_difference};
use ttr_core::rng::{derive_seed, fill_standard_normal, rng_from_seed};
use ttr_core::sensing::{measure, CorruptionModel, GaussianEnsemble, StorageMode};
use ttr_core::solvers::{
    contract_factors, factor_subgradients, frsubgm_run, full_subgradient, loss_l1, polar_retract, psubgm_run,
    residuals, sign, stiefel_project, tangency_residual, SolverConfig, StepSchedule,
};
use ttr_core::{Factor, TtTensor};

pub type Check = fn() -> Result<String, String>;

pub const SUITES: &[(&str, Check)] = &[
    ("tt_svd exact-rank fixed points", tt_svd_fixed_points),
    ("left orthogonality and norm identity", left_orthogonality_and_norm),
    ("adjoint identity", adjoint_identity),
    ("telescoping expansion", telescoping_expansion),
    ("sign(0) = 0 and zero-residual fixed points", zero_residual_fixed_points),
    ("tangent projection", tangent_projection),
    ("polar retraction", polar_retraction),
    ("factor chain rule", factor_chain_rule),
    ("one-sided finite differences", one_sided_differences),
    ("ambient error bounded by factor distance", lemma5_upper_bound),
    ("factor distance gauge invariance", gauge_invariance),
    ("schedule ratio", schedule_ratio),
];

const SHAPES: &[(&[usize], &[usize])] = &[
    (&[3, 4], &[2]),
    (&[3, 4, 3], &[2, 3]),
    (&[2, 3, 2, 3], &[2, 3, 2]),
    (&[4, 2, 3, 2, 2], &[2, 2, 3, 2]),
    (&[5, 5, 5], &[3, 4]),
];

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut data = vec![0.0; rows * cols];
    fill_standard_normal(&mut rng_from_seed(seed), &mut data);
    DMatrix::from_vec(rows, cols, data)
}

fn orthonormal(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    gaussian(rows, cols, seed).qr().q()
}

/// TT with independent Gaussian factors, not orthogonalized.
pub fn gaussian_tt(dims: &[usize], ranks: &[usize], seed: u64) -> TtTensor {
    let n = dims.len();
    let factors = (0..n)
        .map(|i| {
            let rl = if i == 0 { 1 } else { ranks[i - 1] };
            let rr = if i == n - 1 { 1 } else { ranks[i] };
            let g = gaussian(rl * dims[i], rr, derive_seed(seed, &[i as u64]));
            Factor::from_left_unfolding(rl, dims[i], rr, g).unwrap()
        })
        .collect();
    TtTensor::new(factors).unwrap()
}

/// The same tensor in another left-orthogonal gauge.
pub fn gauge_rotated(tt: &TtTensor, seed: u64) -> TtTensor {
    let mut rot = vec![DMatrix::identity(1, 1)];
    for (k, r) in tt.ranks().into_iter().enumerate() {
        rot.push(orthonormal(r, r, derive_seed(seed, &[k as u64])));
    }
    rot.push(DMatrix::identity(1, 1));
    let factors = (0..tt.order())
        .map(|i| rotated_factor(tt.factor(i), &rot[i], &rot[i + 1]))
        .collect();
    TtTensor::new_left_orthogonal(factors).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

pub fn tt_svd_fixed_points() -> Result<String, String> {
    let mut count = 0;
    for (k, (dims, ranks)) in SHAPES.iter().enumerate() {
        for j in 0..4u64 {
            let x = gaussian_tt(dims, ranks, derive_seed(100 + k as u64, &[j])).to_dense();
            let svd = tt_svd(&x, ranks).map_err(e)?;
            let recon = svd.tt.to_dense();
            let err = recon.distance(&x).map_err(e)?;
            ensure(err <= 1e-12 * x.frobenius_norm(), || format!("{dims:?}: reconstruction error {err:e}"))?;
            let again = tt_svd(&recon, ranks).map_err(e)?.tt.to_dense();
            let drift = again.distance(&recon).map_err(e)?;
            ensure(drift <= 1e-12 * x.frobenius_norm(), || format!("{dims:?}: second pass moved {drift:e}"))?;
            ensure(svd.error_bound() <= 1e-12 * x.frobenius_norm(), || {
                format!("{dims:?}: discarded tail {:e}", svd.error_bound())
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} exact-rank tensors"))
}

pub fn left_orthogonality_and_norm() -> Result<String, String> {
    let mut count = 0;
    for (k, (dims, ranks)) in SHAPES.iter().enumerate() {
        for j in 0..4u64 {
            let seed = derive_seed(200 + k as u64, &[j]);
            let from_svd = tt_svd(&gaussian_dense(dims, seed).map_err(e)?, ranks).map_err(e)?.tt;
            let from_sweep = gaussian_tt(dims, ranks, seed).left_orthogonalize().map_err(e)?;
            for tt in [random_tt(dims, ranks, seed).map_err(e)?, from_svd, from_sweep] {
                let res = tt.max_orthonormality_residual();
                ensure(res <= 1e-12, || format!("{dims:?}: orthonormality residual {res:e}"))?;
                let dense = tt.to_dense().frobenius_norm();
                let last = tt.factor(tt.order() - 1).left_unfolding().norm();
                ensure((dense - last).abs() <= 1e-12 * dense, || {
                    format!("{dims:?}: ‖X‖_F = {dense} but ‖L(X_N)‖ = {last}")
                })?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} left-orthogonal tensors"))
}

pub fn adjoint_identity() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (k, (dims, _)) in SHAPES.iter().enumerate() {
        for storage in [StorageMode::Materialized, StorageMode::Streamed] {
            let a = GaussianEnsemble::new(57, dims.to_vec(), 300 + k as u64, storage).map_err(e)?;
            let x = gaussian_dense(dims, 310 + k as u64).map_err(e)?;
            let mut z = vec![0.0; 57];
            fill_standard_normal(&mut rng_from_seed(320 + k as u64), &mut z);
            let ax = a.apply(&x).map_err(e)?;
            let lhs: f64 = ax.iter().zip(&z).map(|(p, q)| p * q).sum();
            let rhs = x.inner(&a.adjoint(&z).map_err(e)?).map_err(e)?;
            let scale = ax.iter().map(|v| v * v).sum::<f64>().sqrt() * z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gap = (lhs - rhs).abs() / scale;
            ensure(gap <= 1e-12, || format!("{dims:?} {storage:?}: ⟨A(X), z⟩ − ⟨X, A*(z)⟩ = {gap:e}"))?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("worst relative gap {worst:.1e}"))
}

pub fn telescoping_expansion() -> Result<String, String> {
    for n in 1..=6usize {
        for j in 0..5u64 {
            let seed = derive_seed(400 + n as u64, &[j]);
            let sizes: Vec<usize> = (0..=n).map(|i| 1 + (mix(seed, i) % 4) as usize).collect();
            let a: Vec<DMatrix<f64>> = (0..n)
                .map(|i| gaussian(sizes[i], sizes[i + 1], derive_seed(seed, &[1, i as u64])))
                .collect();
            let b: Vec<DMatrix<f64>> = (0..n)
                .map(|i| gaussian(sizes[i], sizes[i + 1], derive_seed(seed, &[2, i as u64])))
                .collect();
            let direct = chain_product(&a) - chain_product(&b);
            let tele = telescoping_difference(&a, &b);
            let gap = (&tele - &direct).norm();
            ensure(gap <= 1e-12 * (1.0 + direct.norm()), || format!("N = {n}: gap {gap:e}"))?;
        }
    }
    Ok("chains of length 1 to 6".into())
}

fn mix(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[99, i as u64])
}

pub fn zero_residual_fixed_points() -> Result<String, String> {
    ensure(sign(0.0) == 0.0 && sign(-0.0) == 0.0, || "sign(0) is not 0".into())?;
    ensure(sign(2.5) == 1.0 && sign(-1e-300) == -1.0, || "sign of nonzero values".into())?;
    for (k, (dims, ranks)) in SHAPES.iter().enumerate() {
        let star = random_tt(dims, ranks, 500 + k as u64).map_err(e)?;
        let x_star = star.to_dense();
        let a = GaussianEnsemble::new(60, dims.to_vec(), 510 + k as u64, StorageMode::Materialized).map_err(e)?;
        let y = measure(&a, &x_star, &CorruptionModel::new(0.0, 0, 0)).map_err(e)?.y;
        let g = full_subgradient(&a, &x_star, &y).map_err(e)?;
        ensure(g.data().iter().all(|&v| v == 0.0), || format!("{dims:?}: nonzero subgradient at X*"))?;
        let cfg = SolverConfig::new(StepSchedule::new(0.5, 0.9).map_err(e)?, 10);
        let runs = [
            ("psubgm", psubgm_run(&a, &y, ranks, &star, &cfg, Some(&x_star)).map_err(e)?),
            ("frsubgm", frsubgm_run(&a, &y, ranks, &star, &cfg, Some(&x_star)).map_err(e)?),
        ];
        for (name, out) in runs {
            ensure(out.tt == star, || format!("{name} {dims:?}: moved away from a zero-residual point"))?;
            ensure(out.trace.iter().all(|r| r.objective == 0.0), || format!("{name}: nonzero objective"))?;
        }
    }
    Ok(format!("{} shapes, both solvers", SHAPES.len()))
}

pub fn tangent_projection() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for j in 0..100u64 {
        let (rows, cols) = (4 + (j % 7) as usize, 1 + (j % 4) as usize);
        let l = orthonormal(rows, cols, derive_seed(600, &[j, 0]));
        let u = gaussian(rows, cols, derive_seed(600, &[j, 1]));
        let t = stiefel_project(&l, &u).map_err(e)?;
        let res = tangency_residual(&l, &t);
        ensure(res <= 1e-10, || format!("sample {j}: tangency residual {res:e}"))?;
        worst = worst.max(res);
        let s = gaussian(cols, cols, derive_seed(600, &[j, 2]));
        let sym = &s + s.transpose();
        let killed = stiefel_project(&l, &(&l * &sym)).map_err(e)?.norm();
        ensure(killed <= 1e-12 * (1.0 + sym.norm()), || format!("sample {j}: symmetric part left {killed:e}"))?;
        let t2 = stiefel_project(&l, &t).map_err(e)?;
        ensure((&t2 - &t).norm() <= 1e-12 * (1.0 + t.norm()), || format!("sample {j}: not idempotent"))?;
    }
    Ok(format!("100 samples, worst tangency residual {worst:.1e}"))
}

pub fn polar_retraction() -> Result<String, String> {
    for j in 0..100u64 {
        let (rows, cols) = (6 + (j % 4) as usize, 1 + (j % 3) as usize);
        let l = orthonormal(rows, cols, derive_seed(700, &[j, 0]));
        let scale = 0.1 + (j % 7) as f64 * 0.3;
        let xi = stiefel_project(&l, &(gaussian(rows, cols, derive_seed(700, &[j, 1])) * scale)).map_err(e)?;
        let target = orthonormal(rows, cols, derive_seed(700, &[j, 2]));
        let moved = &l + &xi;
        let r = polar_retract(&moved).map_err(e)?;
        let res = orthonormality_residual(&r);
        ensure(res <= 1e-12, || format!("sample {j}: retracted residual {res:e}"))?;
        let lhs = (&r - &target).norm();
        let rhs = (&moved - &target).norm();
        ensure(lhs <= rhs + 1e-10, || format!("sample {j}: {lhs} > {rhs}"))?;
    }
    Ok("100 sampled triples".into())
}

pub fn factor_chain_rule() -> Result<String, String> {
    for (k, (dims, ranks)) in SHAPES.iter().enumerate() {
        let tt = gaussian_tt(dims, ranks, 800 + k as u64);
        let g = gaussian_dense(dims, 810 + k as u64).map_err(e)?;
        let grads = contract_factors(&tt, &g).map_err(e)?;
        for i in 0..tt.order() {
            let delta = gaussian_tt(dims, ranks, derive_seed(820 + k as u64, &[i as u64])).factor(i).clone();
            let lin = tt.with_factor(i, delta.clone()).map_err(e)?.to_dense();
            let lhs = grads[i].dot(delta.left_unfolding());
            let rhs = g.inner(&lin).map_err(e)?;
            ensure((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()), || {
                format!("{dims:?} factor {i}: {lhs} vs {rhs}")
            })?;
        }
    }
    // Order two: G_1[s, b] = Σ_t G[s, t] X_2[b, t] and G_2[(t, a)] = Σ_s X_1[s, a] G[s, t].
    let (d1, d2, r) = (4, 3, 2);
    let tt = gaussian_tt(&[d1, d2], &[r], 830);
    let g = gaussian_dense(&[d1, d2], 831).map_err(e)?;
    let grads = contract_factors(&tt, &g).map_err(e)?;
    let (x1, x2) = (tt.factor(0), tt.factor(1));
    for s1 in 0..d1 {
        for b in 0..r {
            let acc: f64 = (0..d2).map(|s2| g.get(&[s1, s2]).unwrap() * x2.get(b, s2, 0)).sum();
            ensure((grads[0][(s1, b)] - acc).abs() < 1e-12, || format!("order-2 oracle, factor 1 at ({s1}, {b})"))?;
        }
    }
    for s2 in 0..d2 {
        for a in 0..r {
            let acc: f64 = (0..d1).map(|s1| x1.get(0, s1, a) * g.get(&[s1, s2]).unwrap()).sum();
            ensure((grads[1][(s2 * r + a, 0)] - acc).abs() < 1e-12, || {
                format!("order-2 oracle, factor 2 at ({s2}, {a})")
            })?;
        }
    }
    Ok(format!("{} shapes plus the order-2 scalar loop", SHAPES.len()))
}

pub fn one_sided_differences() -> Result<String, String> {
    let dims = [3, 4, 3];
    let ranks = [2, 2];
    let a = GaussianEnsemble::new(150, dims.to_vec(), 900, StorageMode::Materialized).map_err(e)?;
    let x_star = random_tt(&dims, &ranks, 901).map_err(e)?.to_dense();
    let y = measure(&a, &x_star, &CorruptionModel::new(0.3, 902, 903)).map_err(e)?.y;
    let mut tested = 0;
    for j in 0..20u64 {
        let tt = gaussian_tt(&dims, &ranks, derive_seed(904, &[j]));
        let x = tt.to_dense();
        let d = gaussian_tt(&dims, &ranks, derive_seed(905, &[j])).to_dense();
        let r = residuals(&a, &x, &y).map_err(e)?;
        let min_res = r.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        if min_res == 0.0 {
            continue;
        }
        let ad = a.apply(&d).map_err(e)?;
        let eps = min_res / (2.0 * ad.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let f0 = loss_l1(&a, &x, &y).map_err(e)?;
        let f1 = loss_l1(&a, &x.add_scaled(eps, &d).map_err(e)?, &y).map_err(e)?;
        let exact = full_subgradient(&a, &x, &y).map_err(e)?.inner(&d).map_err(e)?;
        let fd = (f1 - f0) / eps;
        ensure(rel(fd, exact) <= 1e-8, || format!("dense point {j}: {fd} vs {exact}"))?;

        let grads = factor_subgradients(&a, &tt, &y).map_err(e)?;
        let i = (j % 3) as usize;
        let delta = gaussian_tt(&dims, &ranks, derive_seed(906, &[j])).factor(i).clone();
        let dd = tt.with_factor(i, delta.clone()).map_err(e)?.to_dense();
        let add = a.apply(&dd).map_err(e)?;
        let eps = min_res / (2.0 * add.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let moved = tt
            .with_factor(
                i,
                tt.factor(i).with_unfolding(tt.factor(i).left_unfolding() + delta.left_unfolding() * eps).map_err(e)?,
            )
            .map_err(e)?;
        let f1 = loss_l1(&a, &moved.to_dense(), &y).map_err(e)?;
        let fd = (f1 - f0) / eps;
        let exact = grads[i].dot(delta.left_unfolding());
        ensure(rel(fd, exact) <= 1e-7, || format!("factor {i} at point {j}: {fd} vs {exact}"))?;
        tested += 1;
    }
    ensure(tested >= 15, || format!("only {tested} generic points"))?;
    Ok(format!("{tested} generic points, dense and per factor"))
}

pub fn lemma5_upper_bound() -> Result<String, String> {
    let shapes: &[(&[usize], &[usize])] = &[(&[4, 4, 4], &[2, 2]), (&[3, 4, 3, 3], &[2, 3, 2]), (&[5, 5], &[2])];
    let radii = [0.01, 0.05, 0.1, 0.3, 0.6];
    let mut satisfied = 0;
    for j in 0..50u64 {
        let (dims, ranks) = shapes[(j % 3) as usize];
        let star = random_tt(dims, ranks, derive_seed(1000, &[j])).map_err(e)?;
        let radius = radii[(j % 5) as usize];
        let tt = perturb_factors(&star, radius, derive_seed(1001, &[j])).map_err(e)?;
        let check = lemma5_check(&tt, &star).map_err(e)?;
        if check.precondition {
            satisfied += 1;
            ensure(check.upper_ok, || {
                format!(
                    "instance {j}: ‖X − X*‖² = {:e} > (9N/4)·dist² = {:e}",
                    check.ambient2, check.upper_bound
                )
            })?;
        }
    }
    ensure(satisfied >= 25, || format!("only {satisfied} of 50 instances satisfy the precondition"))?;
    Ok(format!("{satisfied} of 50 instances satisfy the precondition; all bounded"))
}

pub fn gauge_invariance() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (k, (dims, ranks)) in SHAPES.iter().enumerate() {
        for j in 0..3u64 {
            let star = random_tt(dims, ranks, derive_seed(1100 + k as u64, &[j])).map_err(e)?;
            let rotated = gauge_rotated(&star, derive_seed(1200 + k as u64, &[j]));
            let moved = rotated.to_dense().distance(&star.to_dense()).map_err(e)?;
            ensure(moved <= 1e-12, || format!("{dims:?}: gauge rotation changed the tensor by {moved:e}"))?;
            let report = factor_distance(&rotated, &star, 1.0).map_err(e)?;
            ensure(report.dist2 <= 1e-10, || format!("{dims:?}: dist² = {:e}", report.dist2))?;
            worst = worst.max(report.dist2);
        }
    }
    Ok(format!("worst dist² {worst:.1e}"))
}

pub fn schedule_ratio() -> Result<String, String> {
    for (lambda, q) in [(0.5, 0.9), (0.5, 0.91), (0.07, 0.99), (3.0, 0.5)] {
        let s = StepSchedule::new(lambda, q).map_err(e)?;
        ensure(s.step(0) == lambda, || format!("μ_0 = {} for λ = {lambda}", s.step(0)))?;
        for t in 1..=1000 {
            let ratio = s.step(t) / s.step(t - 1);
            ensure((ratio - q).abs() <= 4.0 * f64::EPSILON * q, || format!("q = {q}, t = {t}: ratio {ratio}"))?;
        }
    }
    Ok("four schedules over t = 1..1000".into())
}
