//! One function per subcommand. Each reads its keys from the config, writes
//! its reports under the output directory and says whether its checks held.

use std::io;
use std::path::Path;

use czo_core::decomposition::{cz_decompose, weak_type_experiment};
use czo_core::kernel::{audit_regularity, audit_size, hilbert_hormander_exact, hormander_constant};
use czo_core::metric::{check_equivalence, EQUIVALENCE_SLACK, check_qtheta, qtheta_threshold, rho, rho_tilde, rho_tilde_star};
use czo_core::operator::{
    estimate_t0, multiplier_bound_check, recover_multipliers, MultiplierField, OperatorHandle, TruncatedOperator,
};
use czo_core::partition::build_partition;
use czo_core::{registry, Aabb, Cube, GridFunction, GridGeometry, HyperCurve, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::functions::{self, InputFunction, Multiplier};
use crate::output::{grid_table, num, write_grid, CsvReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] czo_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type RunResult = Result<Outcome, RunError>;

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<String>,
    pub passed: bool,
    /// One line per failed check.
    pub failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            files: Vec::new(),
            passed: true,
            failures: Vec::new(),
        }
    }

    fn write(&mut self, dir: &Path, name: &str, report: &CsvReport) -> io::Result<()> {
        report.write(&dir.join(name))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.passed = false;
            self.failures.push(what());
        }
    }
}

pub const SUBCOMMANDS: &[&str] = &[
    "metric",
    "metric-equivalence",
    "validate",
    "partition",
    "kernel-audit",
    "hormander",
    "apply",
    "t0-convergence",
    "recover",
    "decompose",
    "weaktype",
    "qtheta",
];

pub fn run(subcommand: &str, cfg: &Config, out: &Path) -> RunResult {
    match subcommand {
        "metric" => metric(cfg, out),
        "metric-equivalence" => metric_equivalence(cfg, out),
        "validate" => validate(cfg, out),
        "partition" => partition(cfg, out),
        "kernel-audit" => kernel_audit(cfg, out),
        "hormander" => hormander(cfg, out),
        "apply" => apply(cfg, out),
        "t0-convergence" => t0_convergence(cfg, out),
        "recover" => recover(cfg, out),
        "decompose" => decompose(cfg, out),
        "weaktype" => weaktype(cfg, out),
        "qtheta" => qtheta(cfg, out),
        other => Err(ConfigError::Invalid(format!("unknown subcommand `{other}`")).into()),
    }
}

fn curve(cfg: &Config, default: &str) -> Result<HyperCurve<1>, ConfigError> {
    let name = cfg.str("curve", default);
    registry::curve(&name).ok_or(ConfigError::UnknownCurve(name))
}

fn kernel(cfg: &Config, default: &str) -> Result<KernelSpec<1>, ConfigError> {
    let name = cfg.str("kernel", default);
    registry::kernel(&name).ok_or(ConfigError::UnknownKernel(name))
}

fn interval(cfg: &Config, key: &str, default: &str) -> Result<Aabb<1>, ConfigError> {
    let (lo, hi) = cfg.range(key, default)?;
    Ok(Aabb::new([lo], [hi]))
}

fn grid(cfg: &Config, box_key: &str, n_key: &str, box_default: &str, n_default: &str) -> Result<GridGeometry<1>, RunError> {
    let b = interval(cfg, box_key, box_default)?;
    let n: usize = cfg.get(n_key, n_default)?;
    Ok(GridGeometry::new(b, n)?)
}

fn root(cfg: &Config, default: &str) -> Result<Cube<1>, ConfigError> {
    let (lo, hi) = cfg.range("root", default)?;
    Ok(Cube::new([lo], hi - lo))
}

fn input_function(cfg: &Config, geometry: GridGeometry<1>, function: &str, support: &str) -> Result<GridFunction<1>, RunError> {
    let f = InputFunction::parse(&cfg.str("function", function), cfg.range("support", support)?)?;
    f.sample(geometry).map_err(|e| ConfigError::Invalid(e).into())
}

fn theta(cfg: &Config, curve: &HyperCurve<1>) -> Result<f64, ConfigError> {
    let raw = cfg.str("theta", "auto");
    if raw == "auto" {
        return Ok(qtheta_threshold(curve) + 1.0);
    }
    raw.parse().map_err(|e: std::num::ParseFloatError| ConfigError::BadValue {
        key: "theta".into(),
        value: raw,
        reason: e.to_string(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn metric(cfg: &Config, out: &Path) -> RunResult {
    let c = curve(cfg, "two-lines")?;
    let mut pairs = Vec::new();
    if cfg.is_set("x") || cfg.is_set("y") {
        let xs = cfg.list("x", "0")?;
        let ys = cfg.list("y", "0")?;
        if xs.len() != ys.len() {
            return Err(ConfigError::Invalid("x and y need the same number of entries".into()).into());
        }
        pairs.extend(xs.into_iter().zip(ys));
    } else {
        let count: usize = cfg.get("pairs", "1000")?;
        let seed: u64 = cfg.get("seed", "7")?;
        let b = interval(cfg, "box", "-8..8")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            pairs.push((b.sample(&mut rng)[0], b.sample(&mut rng)[0]));
        }
    }
    let mut r = CsvReport::new(["x", "y", "rho", "rho_tilde", "rho_tilde_star", "branch"]);
    r.comment(format!("curve={} c_gamma={}", c.name, num(c.c_gamma)));
    for (x, y) in pairs {
        let m = rho(&c, &[x], &[y]);
        r.row([
            num(x),
            num(y),
            num(m.value),
            num(rho_tilde(&c, &[x], &[y]).value),
            num(rho_tilde_star(&c, &[x], &[y]).value),
            m.branch.to_string(),
        ]);
    }
    let mut o = Outcome::new();
    o.write(out, "metric.csv", &r)?;
    Ok(o)
}

fn metric_equivalence(cfg: &Config, out: &Path) -> RunResult {
    let c = curve(cfg, "two-lines")?;
    let pairs: usize = cfg.get("pairs", "10000")?;
    let seed: u64 = cfg.get("seed", "7")?;
    let b = interval(cfg, "box", "-8..8")?;
    let rep = check_equivalence(&c, &b, pairs, seed)?;
    let mut r = CsvReport::new(["branch", "max_tilde_ratio", "max_tilde_star_ratio", "bound", "passed"]);
    r.comment(format!("curve={} pairs={} seed={}", c.name, pairs, seed));
    for (i, (t, s)) in rep.branch_ratios.iter().enumerate() {
        r.row([i.to_string(), num(*t), num(*s), num(rep.bound), (t.max(*s) <= rep.bound * EQUIVALENCE_SLACK).to_string()]);
    }
    r.row([
        "min".into(),
        num(rep.max_tilde_ratio),
        num(rep.max_tilde_star_ratio),
        num(rep.bound),
        rep.passed().to_string(),
    ]);
    let mut o = Outcome::new();
    if let Some(v) = &rep.violation {
        r.comment(format!(
            "witness x={} y={} branch={:?} surrogate={:?} rho={} value={}",
            num(v.x[0]),
            num(v.y[0]),
            v.branch,
            v.surrogate,
            num(v.rho),
            num(v.surrogate_value)
        ));
    }
    o.check(rep.passed(), || "metric equivalence violated".into());
    o.write(out, "metric_equivalence.csv", &r)?;
    Ok(o)
}

fn validate(cfg: &Config, out: &Path) -> RunResult {
    let c = curve(cfg, "two-lines")?;
    let samples: usize = cfg.get("samples", "10000")?;
    let seed: u64 = cfg.get("seed", "7")?;
    let rep = c.validate(samples, seed)?;
    let mut r = CsvReport::new([
        "branch",
        "degenerate",
        "max_forward_ratio",
        "max_inverse_ratio",
        "min_abs_jacobian",
        "max_round_trip_error",
    ]);
    r.comment(format!("curve={} c_gamma={} samples={samples} seed={seed}", c.name, num(rep.c_gamma)));
    for b in &rep.branches {
        r.row([
            b.branch.to_string(),
            b.degenerate.to_string(),
            num(b.max_forward_ratio),
            opt(b.max_inverse_ratio),
            opt(b.min_abs_jacobian),
            opt(b.max_round_trip_error),
        ]);
    }
    if let Some(f) = &rep.failure {
        r.comment(format!(
            "failure branch={} condition={:?} witness=({}, {}) value={}",
            f.branch,
            f.condition,
            num(f.witness.0[0]),
            num(f.witness.1[0]),
            num(f.value)
        ));
    }
    let mut o = Outcome::new();
    o.check(rep.passed(), || "curve validation failed".into());
    o.write(out, "validation.csv", &r)?;
    Ok(o)
}

fn partition(cfg: &Config, out: &Path) -> RunResult {
    let c = curve(cfg, "two-lines")?;
    let region = interval(cfg, "region", "-4..4")?;
    let depth: u32 = cfg.get("max_depth", "8")?;
    let lookups: usize = cfg.get("lookups", "10000")?;
    let seed: u64 = cfg.get("seed", "7")?;
    let p = build_partition(&c, &region, depth)?;
    let mut r = CsvReport::new(["level", "corner", "owners", "status"]);
    r.comment(format!(
        "curve={} max_depth={depth} accepted={} leftover={} leftover_measure={}",
        c.name,
        p.cubes.len(),
        p.leftover.len(),
        num(p.leftover_measure)
    ));
    for (q, owners) in p.cubes.iter().zip(&p.owners) {
        let ow: Vec<String> = owners.iter().map(|i| i.to_string()).collect();
        r.row([q.level.to_string(), q.corner[0].to_string(), ow.join(";"), "accepted".into()]);
    }
    for q in &p.leftover {
        r.row([q.level.to_string(), q.corner[0].to_string(), String::new(), "leftover".into()]);
    }
    let sampling = c.sampling_box;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    for _ in 0..lookups {
        let x = sampling.sample(&mut rng);
        let all = p.lookup_all(&c, &x);
        if all.windows(2).any(|w| w[0].0 == w[1].0) {
            violations += 1;
        }
    }
    r.comment(format!("lookups={lookups} disjointness_violations={violations}"));
    let mut o = Outcome::new();
    o.check(violations == 0, || format!("{violations} lookups reached one cube through two branches"));
    o.write(out, "partition.csv", &r)?;
    Ok(o)
}

fn kernel_audit(cfg: &Config, out: &Path) -> RunResult {
    let k = kernel(cfg, "hilbert")?;
    let audits = cfg.words("audits", "size,regularity");
    let samples: usize = cfg.get("samples", "100000")?;
    let triples: usize = cfg.get("triples", "20000")?;
    let seed: u64 = cfg.get("seed", "7")?;
    let mut r = CsvReport::new(["audit", "empirical", "declared", "passed"]);
    r.comment(format!("kernel={} curve={} delta={}", k.name, k.curve.name, num(k.delta)));
    let mut o = Outcome::new();
    for a in &audits {
        match a.as_str() {
            "size" => {
                let s = audit_size(&k, samples, seed)?;
                r.row(["size".into(), num(s.empirical), num(s.declared), s.passed.to_string()]);
                if let Some((x, y)) = s.witness {
                    r.comment(format!("size witness x={} y={}", num(x[0]), num(y[0])));
                }
                o.check(s.passed, || "size bound exceeded".into());
            }
            "regularity" => {
                let g = audit_regularity(&k, triples, seed)?;
                let declared = opt(g.declared);
                let passed = g.passed.map(|p| p.to_string()).unwrap_or_else(|| "not-claimed".into());
                r.row(["regularity_y".into(), num(g.a_y), declared.clone(), passed.clone()]);
                r.row(["regularity_x".into(), num(g.a_x), declared, passed]);
                o.check(g.passed != Some(false), || "regularity bound exceeded".into());
            }
            other => {
                return Err(ConfigError::BadValue {
                    key: "audits".into(),
                    value: other.into(),
                    reason: "expected size or regularity".into(),
                }
                .into())
            }
        }
    }
    o.write(out, "kernel_audit.csv", &r)?;
    Ok(o)
}

/// Relative tolerance against the closed form for the Hilbert kernel.
const HORMANDER_TOLERANCE: f64 = 0.02;

fn hormander(cfg: &Config, out: &Path) -> RunResult {
    let k = kernel(cfg, "hilbert")?;
    let a: f64 = cfg.get("a", "1")?;
    let ys = cfg.list("y", "0")?;
    let zs = cfg.list("z", "1")?;
    if ys.len() != zs.len() || !(a > 0.0) {
        return Err(ConfigError::Invalid("y and z need equal lengths and a must be positive".into()).into());
    }
    let b = if cfg.is_set("box") {
        interval(cfg, "box", "")?
    } else {
        cfg.str("box", "-1024a..1024a");
        Aabb::new([-1024.0 * a], [1024.0 * a])
    };
    let n: usize = cfg.get("grid", "1048576")?;
    let adjoint: bool = cfg.get("adjoint", "false")?;
    let pairs: Vec<([f64; 1], [f64; 1])> = ys.iter().zip(&zs).map(|(y, z)| ([a * y], [a * z])).collect();
    let rep = hormander_constant(&k, &pairs, &b, n, adjoint)?;
    let exact = (k.name == "hilbert").then(hilbert_hormander_exact);
    let mut r = CsvReport::new(["y", "z", "value", "tail_bound", "exact", "relative_error"]);
    r.comment(format!(
        "kernel={} box={}..{} grid={n} adjoint={adjoint}",
        k.name,
        num(b.lo[0]),
        num(b.hi[0])
    ));
    let mut o = Outcome::new();
    for (((y, z), v), t) in pairs.iter().zip(&rep.values).zip(&rep.tail_bounds) {
        let rel = exact.map(|e| (v - e).abs() / e);
        r.row([num(y[0]), num(z[0]), num(*v), num(*t), opt(exact), opt(rel)]);
        o.check(v.is_finite(), || format!("non-finite integral for y={} z={}", y[0], z[0]));
        if let Some(rel) = rel {
            o.check(rel <= HORMANDER_TOLERANCE, || {
                format!("y={} z={}: relative error {rel} above {HORMANDER_TOLERANCE}", y[0], z[0])
            });
        }
    }
    o.write(out, "hormander.csv", &r)?;
    Ok(o)
}

fn apply_inputs(cfg: &Config, default_eps: &str) -> Result<(KernelSpec<1>, GridFunction<1>, GridGeometry<1>, Vec<f64>), RunError> {
    let k = kernel(cfg, "two-line-hilbert")?;
    let input = grid(cfg, "box", "n", "-8..8", "1024")?;
    let f = input_function(cfg, input, "indicator", "-1..1")?;
    let out_box = cfg.str("out_box", &cfg.str("box", "-8..8"));
    let out_n = cfg.str("out_n", &cfg.str("n", "1024"));
    let output = grid(cfg, "out_box", "out_n", &out_box, &out_n)?;
    let eps = cfg.list("epsilon", default_eps)?;
    Ok((k, f, output, eps))
}

fn convergence_table(rep: &czo_core::operator::ConvergenceReport) -> CsvReport {
    let mut r = CsvReport::new(["epsilon", "sup_difference_to_next", "unreliable", "below_recommended"]);
    r.comment(format!("monotone_after_two={}", rep.monotone_after_two));
    for (i, e) in rep.epsilons.iter().enumerate() {
        r.row([
            num(*e),
            rep.sup_differences.get(i).map(|d| num(*d)).unwrap_or_default(),
            rep.unreliable[i].to_string(),
            rep.below_recommended[i].to_string(),
        ]);
    }
    r
}

fn apply(cfg: &Config, out: &Path) -> RunResult {
    let (k, f, output, eps) = apply_inputs(cfg, "0.1")?;
    let (tf, rep) = estimate_t0(&k, &f, &eps, &output)?;
    let mut o = Outcome::new();
    let mut table = grid_table(&tf, "value");
    table.comment(format!("kernel={} epsilon={}", k.name, num(*eps.last().expect("nonempty"))));
    if rep.below_recommended.iter().any(|b| *b) {
        table.comment("warning: epsilon below four input cell widths");
    }
    o.write(out, "apply.csv", &table)?;
    write_grid(&out.join("apply_output.grid"), &tf)?;
    o.files.push("apply_output.grid".into());
    if eps.len() > 1 {
        o.write(out, "convergence.csv", &convergence_table(&rep))?;
    }
    Ok(o)
}

fn t0_convergence(cfg: &Config, out: &Path) -> RunResult {
    let (k, f, output, eps) = apply_inputs(cfg, "0.5,0.25,0.125,0.0625")?;
    let (tf, rep) = estimate_t0(&k, &f, &eps, &output)?;
    let mut o = Outcome::new();
    let mut table = convergence_table(&rep);
    table.comment(format!("kernel={} input_h={}", k.name, num(f.geometry.h())));
    o.write(out, "convergence.csv", &table)?;
    o.write(out, "t0.csv", &grid_table(&tf, "value"))?;
    Ok(o)
}

fn default_kernel_for(curve: &str) -> &'static str {
    match curve {
        "diagonal" => "hilbert",
        "diamond" => "diamond-model",
        _ => "two-line-hilbert",
    }
}

fn recover(cfg: &Config, out: &Path) -> RunResult {
    let c = curve(cfg, "two-lines")?;
    let k = kernel(cfg, default_kernel_for(&c.name))?;
    if k.curve.name != c.name {
        return Err(ConfigError::Invalid(format!("kernel {} is singular on {}, not {}", k.name, k.curve.name, c.name)).into());
    }
    let words = cfg.words("b", "1,sin");
    if words.len() != c.branch_count() {
        return Err(ConfigError::Invalid(format!("{} multipliers for {} branches", words.len(), c.branch_count())).into());
    }
    let mults: Vec<Multiplier> = words.iter().map(|w| Multiplier::parse(w)).collect::<Result<_, _>>()?;
    let geo = grid(cfg, "box", "n", "-4..4", "256")?;
    let depth: u32 = cfg.get("max_depth", "8")?;
    let epsilon: f64 = cfg.get("epsilon", "0.5")?;
    let cap: f64 = cfg.get("cap", "1.000000001")?;
    let h = geo.h();

    let fns: Vec<Box<dyn Fn(&[f64; 1]) -> f64>> = mults
        .iter()
        .map(|m| {
            let m = *m;
            Box::new(move |p: &[f64; 1]| m.eval(p[0])) as Box<dyn Fn(&[f64; 1]) -> f64>
        })
        .collect();
    let refs: Vec<&dyn Fn(&[f64; 1]) -> f64> = fns.iter().map(|f| f.as_ref()).collect();
    let declared = MultiplierField::from_fns(&c, geo, &refs)?;
    let part = build_partition(&c, &geo.bounds, depth)?;
    let plan = TruncatedOperator::new(&k, geo, geo, epsilon)?;
    // T1 = T_ε + M_b and T2 = T_ε share the kernel; T1 - T2 = M_b.
    let t1 = OperatorHandle::Combination(vec![
        (1.0, OperatorHandle::Truncated { plan: &plan, epsilon }),
        (1.0, OperatorHandle::Multiplier { curve: &c, field: &declared }),
    ]);
    let t2 = OperatorHandle::Truncated { plan: &plan, epsilon };
    let difference = OperatorHandle::Combination(vec![(1.0, t1), (-1.0, t2)]);
    let rec = recover_multipliers(&difference, &c, &part, &geo, &geo)?;
    let bound = multiplier_bound_check(&c, &rec, cap)?;

    let mut header = vec!["x".to_string()];
    for i in 0..c.branch_count() {
        header.extend([format!("declared_b{i}"), format!("recovered_b{i}"), format!("covered_b{i}")]);
    }
    let mut r = CsvReport::new(header);
    let mut errors = vec![0.0f64; c.branch_count()];
    for cell in 0..geo.len() {
        let mut row = vec![num(geo.midpoint(cell)[0])];
        for i in 0..c.branch_count() {
            let (d, v, cov) = (declared.values[i][cell], rec.values[i][cell], rec.covered[i][cell]);
            if cov {
                errors[i] = errors[i].max((d - v).abs());
            }
            row.extend([num(d), num(v), cov.to_string()]);
        }
        r.row(row);
    }
    let mut o = Outcome::new();
    for (i, e) in errors.iter().enumerate() {
        r.comment(format!("branch={i} sup_error={} limit={} bound={}", num(*e), num(2.0 * h), num(bound.per_branch[i])));
        o.check(*e <= 2.0 * h, || format!("branch {i}: recovery error {e} above 2h"));
    }
    r.comment(format!(
        "curve={} kernel={} epsilon={} leftover_measure={} cap={} bound_passed={}",
        c.name,
        k.name,
        num(epsilon),
        num(part.leftover_measure),
        num(cap),
        bound.passed
    ));
    o.check(bound.passed, || "multiplier bound exceeded".into());
    o.write(out, "recover.csv", &r)?;
    Ok(o)
}

fn decompose(cfg: &Config, out: &Path) -> RunResult {
    let geo = grid(cfg, "box", "n", "-2..2", "64")?;
    let f = input_function(cfg, geo, "indicator", "0..1")?;
    let lambda: f64 = cfg.get("lambda", "0.3")?;
    let rt = root(cfg, "-2..2")?;
    let d = cz_decompose(&f, lambda, &rt)?;
    let inv = d.check_invariants(&f, 1e-12)?;
    let mut cubes = CsvReport::new(["lo", "hi", "depth", "abs_average"]);
    cubes.comment(format!("lambda={} root={}..{}", num(lambda), num(rt.corner[0]), num(rt.corner[0] + rt.side)));
    cubes.comment(format!("invariants={inv:?}"));
    for q in &d.cubes {
        cubes.row([
            num(q.cube.corner[0]),
            num(q.cube.corner[0] + q.cube.side),
            q.depth.to_string(),
            num(q.abs_average),
        ]);
    }
    let mut o = Outcome::new();
    o.check(inv.all_hold(), || format!("decomposition invariants failed: {inv:?}"));
    o.write(out, "cubes.csv", &cubes)?;
    o.write(out, "good.csv", &grid_table(&d.good, "g"))?;
    o.write(out, "bad.csv", &grid_table(&d.bad_sum(), "b"))?;
    Ok(o)
}

fn weaktype(cfg: &Config, out: &Path) -> RunResult {
    let k = kernel(cfg, "two-line-hilbert")?;
    let geo = grid(cfg, "box", "n", "-8..8", "256")?;
    let names = cfg.words("family", "standard");
    let support = cfg.range("support", "-1..1")?;
    let fam = functions::family(&names, support)?;
    let samples: Vec<GridFunction<1>> = fam
        .iter()
        .map(|f| f.sample(geo))
        .collect::<Result<_, _>>()
        .map_err(ConfigError::Invalid)?;
    let epsilon: f64 = cfg.get("epsilon", "0.25")?;
    let th = theta(cfg, &k.curve)?;
    let rt = root(cfg, "-8..8")?;
    let rep = weak_type_experiment(&k, &samples, epsilon, th, &rt)?;
    let mut r = CsvReport::new([
        "function",
        "lambda",
        "cubes",
        "superlevel_measure",
        "ratio",
        "B_star_measure",
        "bad_off_B_star",
    ]);
    r.comment(format!(
        "kernel={} epsilon={} theta={} n={} max_ratio={}",
        k.name,
        num(epsilon),
        num(th),
        geo.cells_per_axis,
        num(rep.max_ratio)
    ));
    for row in &rep.rows {
        r.row([
            row.function.to_string(),
            num(row.lambda),
            row.cubes.to_string(),
            num(row.superlevel_measure),
            num(row.ratio),
            num(row.b_star_measure),
            num(row.bad_off_b_star),
        ]);
    }
    let mut o = Outcome::new();
    o.check(rep.max_ratio.is_finite(), || "weak-type ratio is not finite".into());
    o.write(out, "weaktype.csv", &r)?;
    Ok(o)
}

fn qtheta(cfg: &Config, out: &Path) -> RunResult {
    let c = curve(cfg, "two-lines")?;
    let th = theta(cfg, &c)?;
    let count: usize = cfg.get("cubes", "10")?;
    let probes: usize = cfg.get("probes", "1000")?;
    let mc: usize = cfg.get("mc", "1000000")?;
    let seed: u64 = cfg.get("seed", "7")?;
    let centers = interval(cfg, "box", "-4..4")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = CsvReport::new([
        "corner",
        "side",
        "measure_estimate",
        "half_width",
        "measure_bound",
        "min_separation_ratio",
        "passed",
    ]);
    r.comment(format!("curve={} theta={}", c.name, num(th)));
    let mut o = Outcome::new();
    for i in 0..count {
        let side = rng.random_range(0.1..2.0);
        let center = centers.sample(&mut rng)[0];
        let q = Cube::new([center - side / 2.0], side);
        let rep = check_qtheta(&c, &q, th, probes, mc, seed.wrapping_add(i as u64 + 1))?;
        r.row([
            num(q.corner[0]),
            num(side),
            num(rep.measure_estimate),
            num(rep.measure_half_width),
            num(rep.measure_bound),
            num(rep.min_separation_ratio),
            rep.passed().to_string(),
        ]);
        if let Some((x, y)) = rep.separation_witness {
            r.comment(format!("cube {i} separation witness x={} y={}", num(x[0]), num(y[0])));
        }
        o.check(rep.passed(), || format!("cube {i} failed the Q_theta checks"));
    }
    o.write(out, "qtheta.csv", &r)?;
    Ok(o)
}
