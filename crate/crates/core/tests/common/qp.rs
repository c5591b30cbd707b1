//! ADMM reference solver for `min ½‖y‖² s.t. Ay = b, Gy ≤ h`, in the
//! operator-splitting form `l ≤ K y ≤ u` with `K = [A; G]`, plus a generator
//! of random feasible grasp problems.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trifinger_core::grasp::{solve_qp, Contact, ContactSet, GraspQp};

pub struct AdmmResult {
    pub y: DVector<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

pub fn admm(a: &DMatrix<f64>, b: &DVector<f64>, g: &DMatrix<f64>, h: &DVector<f64>, tol: f64) -> AdmmResult {
    let n = a.ncols();
    let (me, mi) = (a.nrows(), g.nrows());
    let m = me + mi;
    let mut k = DMatrix::zeros(m, n);
    k.rows_mut(0, me).copy_from(a);
    k.rows_mut(me, mi).copy_from(g);
    let lower: Vec<f64> = b.iter().copied().chain(std::iter::repeat_n(f64::NEG_INFINITY, mi)).collect();
    let upper: Vec<f64> = b.iter().chain(h.iter()).copied().collect();

    let sigma = 1e-9;
    let alpha = 1.6;
    let rho_ineq = 1.0;
    let rho: DVector<f64> = DVector::from_fn(m, |i, _| if i < me { 1e3 * rho_ineq } else { rho_ineq });
    let kkt = DMatrix::identity(n, n) * (1.0 + sigma) + k.transpose() * DMatrix::from_diagonal(&rho) * &k;
    let chol = kkt.cholesky().expect("ADMM system is positive definite");

    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(m);
    let mut w = DVector::zeros(m);
    let mut result = AdmmResult { y: x.clone(), iterations: 0, primal_residual: f64::INFINITY, dual_residual: f64::INFINITY };
    for it in 1..=2_000_000 {
        let rhs = &x * sigma + k.transpose() * (rho.component_mul(&z) - &w);
        let xt = chol.solve(&rhs);
        let zt = &k * &xt;
        x = &xt * alpha + &x * (1.0 - alpha);
        let relaxed = &zt * alpha + &z * (1.0 - alpha);
        let z_new = DVector::from_fn(m, |i, _| (relaxed[i] + w[i] / rho[i]).clamp(lower[i], upper[i]));
        w += rho.component_mul(&(&relaxed - &z_new));
        z = z_new;
        if it % 50 == 0 {
            let primal = (&k * &x - &z).amax();
            let dual = (&x + k.transpose() * &w).amax();
            result = AdmmResult { y: x.clone(), iterations: it, primal_residual: primal, dual_residual: dual };
            if primal < tol && dual < tol {
                break;
            }
        }
    }
    result
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A random grasp with `k` contacts and a wrench produced by forces strictly
/// inside the pyramid, so the problem is feasible by construction.
pub fn random_feasible(rng: &mut ChaCha8Rng, k: usize) -> (ContactSet, GraspQp) {
    let contacts: Vec<Contact> = (0..k)
        .map(|_| {
            let r = Vector3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
            Contact::new(r, random_unit(rng))
        })
        .collect();
    let mu = rng.random_range(0.3..1.5);
    let set = ContactSet::new(contacts, mu).unwrap();
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();
    for c in &set.contacts {
        let fn_ = rng.random_range(0.1..2.0);
        let bound = 0.9 * mu / 2f64.sqrt() * fn_;
        let f = c.normal * fn_ + c.t1 * rng.random_range(-bound..bound) + c.t2 * rng.random_range(-bound..bound);
        force += f;
        moment += c.location.cross(&f);
    }
    let qp = GraspQp::for_wrench(&set, &force, &moment).unwrap();
    (set, qp)
}

/// `‖f_p‖ - μ f_n` for each contact force in `y`; non-positive inside the
/// exact cone.
pub fn cone_excess(set: &ContactSet, y: &DVector<f64>) -> Vec<f64> {
    set.contacts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let f = Vector3::new(y[3 * i], y[3 * i + 1], y[3 * i + 2]);
            let fn_ = f.dot(&c.normal);
            (f - c.normal * fn_).norm() - set.mu * fn_
        })
        .collect()
}

/// Solves the random feasible problem drawn from `seed` and checks it
/// against the optimality conditions, the exact cones and the ADMM oracle.
pub fn check_random_problem(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=3);
    let (set, qp) = random_feasible(&mut rng, k);
    let sol = solve_qp(&qp);
    if !sol.is_optimal() {
        return Err(format!("seed {seed}: {sol:?}"));
    }
    if !(sol.kkt_residual < 1e-8) {
        return Err(format!("seed {seed}: kkt {:e}", sol.kkt_residual));
    }
    if !(sol.equality_residual < 1e-9) {
        return Err(format!("seed {seed}: equality residual {:e}", sol.equality_residual));
    }
    let gy = &qp.g * &sol.y - &qp.h;
    if gy.iter().any(|v| !(*v <= 1e-9)) {
        return Err(format!("seed {seed}: pyramid violated by {:e}", gy.max()));
    }
    if cone_excess(&set, &sol.y).iter().any(|e| !(*e <= 1e-9)) {
        return Err(format!("seed {seed}: force outside its friction cone"));
    }
    let oracle = admm(&qp.a, &qp.b, &qp.g, &qp.h, 1e-11);
    let diff = (&sol.y - &oracle.y).amax();
    if !(diff < 1e-6) {
        return Err(format!("seed {seed}: differs from oracle by {diff:e} ({} iterations)", oracle.iterations));
    }
    Ok(())
}
