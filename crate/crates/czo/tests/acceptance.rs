//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::Instant;

use czo_core::curves;
use czo_core::decomposition::{cz_decompose, weak_type_experiment};
use czo_core::kernel::{audit_size, hilbert_hormander_exact, hormander_constant, two_line_hilbert};
use czo_core::metric::{check_equivalence, check_qtheta, qtheta_threshold, rho, rho_at_least, DEFAULT_MC_SAMPLES};
use czo_core::operator::{
    apply_truncated, multiplier_bound_check, recover_multipliers, MultiplierField, OperatorHandle, TruncatedOperator,
};
use czo_core::partition::build_partition;
use czo_core::{kernel, registry, Aabb, Cube, GridFunction, GridGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metric_equivalence() -> Check {
    let start = Instant::now();
    let mut notes = Vec::new();
    for name in ["diagonal", "two-lines", "diamond"] {
        let c = registry::curve(name).unwrap();
        let r = check_equivalence(&c, &Aabb::symmetric(8.0), 10_000, 7).map_err(|e| e.to_string())?;
        if !r.passed() {
            return Err(format!("{name}: {:?}", r.violation));
        }
        notes.push(format!("{name} max ratio {:.3}/{:.3}", r.max_tilde_ratio.max(r.max_tilde_star_ratio), r.bound));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("{}; {secs:.1} s", notes.join(", ")))
}

fn diagonal_oracle() -> Check {
    let c = curves::diagonal::<1>();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (x, y) = (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
        let exact = (x - y as f64).abs() / std::f64::consts::SQRT_2;
        let got = rho(&c, &[x], &[y]).value;
        if exact > 0.0 {
            worst = worst.max((got - exact).abs() / exact);
        }
    }
    ensure(worst <= 1e-6, format!("max relative error {worst:.2e}"))
}

fn size_audit() -> Check {
    let t = audit_size(&two_line_hilbert(), 100_000, 3).map_err(|e| e.to_string())?;
    let h = audit_size(&kernel::hilbert(), 100_000, 3).map_err(|e| e.to_string())?;
    let dt = (t.empirical - std::f64::consts::SQRT_2).abs();
    let dh = (h.empirical - std::f64::consts::FRAC_1_SQRT_2).abs();
    ensure(
        dt <= 1e-3 && dh <= 1e-4,
        format!("two-line-hilbert A = {:.6}, hilbert A = {:.7}", t.empirical, h.empirical),
    )
}

fn hormander() -> Check {
    let k = kernel::hilbert();
    let exact = hilbert_hormander_exact();
    let mut values = Vec::new();
    let mut slowest = 0.0f64;
    for a in [0.1, 1.0, 10.0] {
        let start = Instant::now();
        let b = Aabb::new([-1024.0 * a], [1024.0 * a]);
        let r = hormander_constant(&k, &[([0.0], [a])], &b, 1 << 20, false).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        values.push(r.values[0]);
    }
    let within = values.iter().all(|v| (v - exact).abs() / exact <= 0.02);
    let spread = values.iter().all(|v| (v - values[1]).abs() / values[1] <= 0.01);
    ensure(
        within && spread && slowest < 60.0,
        format!("values {values:.5?} vs {exact:.5}; slowest pair {slowest:.1} s"),
    )
}

fn odd_annihilation() -> Check {
    let k = two_line_hilbert();
    let geo = GridGeometry::symmetric(8.0, 1024).unwrap();
    let plan = TruncatedOperator::new(&k, geo, geo, 0.5).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let half: Vec<f64> = (0..geo.len() / 2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..geo.len())
            .map(|i| if i < half.len() { -half[half.len() - 1 - i] } else { half[i - half.len()] })
            .collect();
        let f = GridFunction::new(geo, values).unwrap();
        for e in [0.5, 0.1, 0.02] {
            let t = plan.apply(&f, e).map_err(|e| e.to_string())?;
            worst = worst.max(t.sup_norm() / f.sup_norm());
        }
    }
    ensure(worst <= 1e-12, format!("max sup(Tf)/sup(f) {worst:.2e}"))
}

fn principal_value() -> Check {
    let k = two_line_hilbert();
    let geo = GridGeometry::symmetric(8.0, 1 << 16).unwrap();
    let f = GridFunction::from_fn(geo, |p| if p[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
    let out = GridGeometry::new(Aabb::new([1.5], [2.5]), 1).unwrap();
    let v = apply_truncated(&k, &f, 1e-3, &out).map_err(|e| e.to_string())?.values[0];
    let exact = 2.0 * 3f64.ln();
    ensure((v - exact).abs() <= 1e-2, format!("T f(2) = {v:.6}, 2 ln 3 = {exact:.6}"))
}

fn decomposition() -> Check {
    let geo = GridGeometry::new(Aabb::new([-2.0], [2.0]), 64).unwrap();
    let root = Cube::new([-2.0], 4.0);
    let f = GridFunction::from_fn(geo, |p| if (0.0..1.0).contains(&p[0]) { 1.0 } else { 0.0 }).unwrap();
    let d = cz_decompose(&f, 0.3, &root).map_err(|e| e.to_string())?;
    if d.cubes.len() != 1 || d.cubes[0].cube != Cube::new([0.0], 2.0) || d.cubes[0].abs_average != 0.5 {
        return Err(format!("worked example gave {:?}", d.cubes));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..100 {
        // piecewise constant on 2^k blocks of the 64-cell grid
        let block = 1usize << rng.random_range(0..5);
        let levels: Vec<f64> = (0..64 / block)
            .map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(-4i32..=4) as f64 })
            .collect();
        let values: Vec<f64> = (0..64).map(|i| levels[i / block]).collect();
        let f = GridFunction::new(geo, values).unwrap();
        let avg = czo_core::decomposition::root_abs_average(&f, &root).unwrap();
        let lambda = avg * (1.0 + rng.random_range(0.0..8.0)) + 1e-3;
        let d = cz_decompose(&f, lambda, &root).map_err(|e| e.to_string())?;
        let inv = d.check_invariants(&f, 0.0).map_err(|e| e.to_string())?;
        if !inv.all_hold() {
            return Err(format!("trial {trial}: {inv:?}"));
        }
    }
    Ok("worked example exact; 100 random functions hold all invariants".into())
}

fn qtheta() -> Check {
    let mut notes = Vec::new();
    for name in ["diagonal", "two-lines"] {
        let c = registry::curve(name).unwrap();
        let theta = qtheta_threshold(&c) + 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut worst_measure = 0.0f64;
        let mut worst_sep = f64::INFINITY;
        for i in 0..10 {
            let side = rng.random_range(0.1..2.0);
            let center = rng.random_range(-4.0..4.0);
            let q = Cube::new([center - side / 2.0], side);
            let r = check_qtheta(&c, &q, theta, 1000, DEFAULT_MC_SAMPLES, 100 + i).map_err(|e| e.to_string())?;
            if !r.passed() {
                return Err(format!("{name} cube {q:?}: {r:?}"));
            }
            worst_measure = worst_measure.max(r.measure_estimate / r.measure_bound);
            worst_sep = worst_sep.min(r.min_separation_ratio);
        }
        notes.push(format!("{name} |Q_θ|/bound ≤ {worst_measure:.3}, min ρ ratio {worst_sep:.3}"));
    }
    Ok(notes.join("; "))
}

fn partition() -> Check {
    let mut notes = Vec::new();
    for name in ["two-lines", "diamond"] {
        let c = registry::curve(name).unwrap();
        let region = Aabb::symmetric(4.0);
        let mut leftovers = Vec::new();
        for depth in 4..=8 {
            leftovers.push(build_partition(&c, &region, depth).map_err(|e| e.to_string())?.leftover_measure);
        }
        if leftovers.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(format!("{name}: leftover not decreasing {leftovers:?}"));
        }
        let p = build_partition(&c, &region, 8).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut violations = 0;
        for _ in 0..100_000 {
            let x = [rng.random_range(-4.0..4.0)];
            let all = p.lookup_all(&c, &x);
            violations += all.windows(2).filter(|w| w[0].0 == w[1].0).count();
        }
        if violations > 0 {
            return Err(format!("{name}: {violations} disjointness violations"));
        }
        notes.push(format!("{name} leftover {:.4} -> {:.4}", leftovers[0], leftovers[4]));
    }
    Ok(notes.join("; "))
}

fn recovery() -> Check {
    let c = curves::two_lines::<1>();
    let k = two_line_hilbert();
    let geo = GridGeometry::symmetric(4.0, 256).unwrap();
    let one = |_: &[f64; 1]| 1.0;
    let s = |p: &[f64; 1]| p[0].sin();
    let declared = MultiplierField::from_fns(&c, geo, &[&one, &s]).map_err(|e| e.to_string())?;
    let part = build_partition(&c, &geo.bounds, 8).map_err(|e| e.to_string())?;
    let plan = TruncatedOperator::new(&k, geo, geo, 0.5).map_err(|e| e.to_string())?;
    let t1 = OperatorHandle::Combination(vec![
        (1.0, OperatorHandle::Truncated { plan: &plan, epsilon: 0.5 }),
        (1.0, OperatorHandle::Multiplier { curve: &c, field: &declared }),
    ]);
    let t2 = OperatorHandle::Truncated { plan: &plan, epsilon: 0.5 };
    let diff = OperatorHandle::Combination(vec![(1.0, t1), (-1.0, t2)]);
    let rec = recover_multipliers(&diff, &c, &part, &geo, &geo).map_err(|e| e.to_string())?;
    let mut err = 0.0f64;
    let mut covered = 0usize;
    for i in 0..2 {
        for cell in 0..geo.len() {
            if rec.covered[i][cell] {
                covered += 1;
                err = err.max((rec.values[i][cell] - declared.values[i][cell]).abs());
            }
        }
    }
    let bound = multiplier_bound_check(&c, &rec, 1.0 + 1e-9).map_err(|e| e.to_string())?;
    ensure(
        err <= 2.0 * geo.h() && bound.passed && covered > 0,
        format!("sup error {err:.2e} at {covered} covered samples (2h = {}); bound {:?}", 2.0 * geo.h(), bound.per_branch),
    )
}

fn weak_type() -> Check {
    let start = Instant::now();
    let k = two_line_hilbert();
    let theta = qtheta_threshold(&k.curve) + 1.0;
    let root = Cube::new([-8.0], 16.0);
    let mut maxima = Vec::new();
    for n in [256, 512] {
        let geo = GridGeometry::symmetric(8.0, n).unwrap();
        let family: Vec<GridFunction<1>> = czo::functions::standard_family()
            .iter()
            .map(|f| f.sample(geo).unwrap())
            .collect();
        let r = weak_type_experiment(&k, &family, 0.25, theta, &root).map_err(|e| e.to_string())?;
        maxima.push(r.max_ratio);
    }
    let change = (maxima[1] - maxima[0]).abs() / maxima[0];
    let secs = start.elapsed().as_secs_f64();
    ensure(
        maxima.iter().all(|m| m.is_finite() && *m > 0.0) && change < 0.1 && secs < 300.0,
        format!("max ratio {:.4} -> {:.4} ({:.2}% change); {secs:.1} s", maxima[0], maxima[1], 100.0 * change),
    )
}

fn stabilization() -> Check {
    let k = two_line_hilbert();
    let geo = GridGeometry::symmetric(8.0, 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let values: Vec<f64> = (0..geo.len())
        .map(|i| if geo.midpoint(i)[0].abs() < 1.0 { rng.random_range(-1.0..1.0) } else { 0.0 })
        .collect();
    let f = GridFunction::new(geo, values).unwrap();
    let support: Vec<[f64; 1]> = (0..geo.len()).filter(|i| f.values[*i] != 0.0).map(|i| geo.midpoint(i)).collect();
    let far: Vec<usize> = (0..geo.len())
        .filter(|i| {
            let x = geo.midpoint(*i);
            support.iter().all(|y| rho_at_least(&k.curve, &x, y, 0.5))
        })
        .collect();
    let plan = TruncatedOperator::new(&k, geo, geo, 0.4).map_err(|e| e.to_string())?;
    let outs: Vec<GridFunction<1>> = [0.4, 0.2, 0.1].iter().map(|e| plan.apply(&f, *e).unwrap()).collect();
    let identical = far
        .iter()
        .all(|i| outs.iter().all(|o| o.values[*i].to_bits() == outs[0].values[*i].to_bits()));
    ensure(identical && !far.is_empty(), format!("{} far output points bit-identical", far.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("metric equivalence", metric_equivalence),
        ("diagonal metric oracle", diagonal_oracle),
        ("kernel size audit", size_audit),
        ("hormander integral", hormander),
        ("odd annihilation", odd_annihilation),
        ("principal value", principal_value),
        ("cz decomposition", decomposition),
        ("q_theta", qtheta),
        ("partition", partition),
        ("multiplier recovery", recovery),
        ("weak type", weak_type),
        ("epsilon stabilization", stabilization),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
