//! Verification suites behind the `halfplane` binary. Each suite returns a
//! report of named checks; the binary prints it as JSON lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::amalgam::{decompose, g0z_factor, word_length, AmalgamWord, Side};
use crate::bttree::{act, gl2o_generators, iwahori_generators, orbits, BallTree, BoundaryEdge};
use crate::cheese::{hole_permutation, restriction_map, CheeseRegion, DiscKind};
use crate::cocycle::{
    build_alpha, cocycle_defect, phi_z, random_point, triviality_decision, z_membership_defect,
    Decision, SampleGrid,
};
use crate::matrix::{Mat2, Point};
use crate::measures::{FiniteMeasure, Perm, PermAction, Ring};
use crate::padic::{max_precision, ExtStructure, PadicError};
use crate::quatchar::{
    enumerate_characters, gl2_character_count, iwahori_character_count, jz_inverse, mu_log,
    quaternion_finite_check, stabilizer_and_jz, theorem_a_transport, unit_group_structure,
    DEFAULT_MAX_LEVEL,
};
use crate::unitcalc::UnitClass;

pub const CONFIG_ENV: &str = "HALFPLANE_CONFIG";
pub const MAX_DEPTH: u32 = 4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("precision {0} outside 8..={1}")]
    Precision(u32, u32),
    #[error("depth {0} exceeds {MAX_DEPTH}")]
    Depth(u32),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {msg}")]
    File { path: String, msg: String },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: u32,
    pub precision: u32,
    pub depth: u32,
    pub d: Option<u64>,
    pub e: Option<u64>,
    pub level: u32,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 2,
            precision: 20,
            depth: 1,
            d: None,
            e: None,
            level: 1,
            samples: 100,
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn q(&self) -> u64 {
        self.p as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(2..=36).contains(&self.p) || !(2..self.p).take_while(|k| k * k <= self.p).all(|k| !self.p.is_multiple_of(k)) {
            return Err(ConfigError::NotPrime(self.p));
        }
        let max = max_precision(self.p);
        if self.precision < 8 || self.precision > max {
            return Err(ConfigError::Precision(self.precision, max));
        }
        if self.depth > MAX_DEPTH {
            return Err(ConfigError::Depth(self.depth));
        }
        if self.level == 0 || self.level > DEFAULT_MAX_LEVEL {
            return Err(ConfigError::Invalid(format!("level {} outside 1..={DEFAULT_MAX_LEVEL}", self.level)));
        }
        if self.samples == 0 {
            return Err(ConfigError::Invalid("samples must be positive".into()));
        }
        Ok(())
    }

    fn ext(&self) -> Result<ExtStructure, PadicError> {
        ExtStructure::new(self.p, self.precision)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Tree,
    Measures,
    Cheese,
    Units,
    Cocycle,
    Chars,
    Amalgam,
    TheoremA,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Tree,
        Suite::Measures,
        Suite::Cheese,
        Suite::Units,
        Suite::Cocycle,
        Suite::Chars,
        Suite::Amalgam,
        Suite::TheoremA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Tree => "tree",
            Suite::Measures => "measures",
            Suite::Cheese => "cheese",
            Suite::Units => "units",
            Suite::Cocycle => "cocycle",
            Suite::Chars => "chars",
            Suite::Amalgam => "amalgam",
            Suite::TheoremA => "theorem-a",
        }
    }
}

impl FromStr for Suite {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Suite, ConfigError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ConfigError::UnknownSuite(s.to_string()))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub suite: Suite,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub tables: BTreeMap<String, Value>,
}

impl Report {
    fn new(suite: Suite, config: &RunConfig) -> Report {
        Report {
            suite,
            config: config.clone(),
            checks: Vec::new(),
            tables: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: Value) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    /// Record a computation that errored as a failed check.
    fn attempt<T, E: fmt::Display>(&mut self, name: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(x) => Some(x),
            Err(e) => {
                self.check(name, false, json!({ "error": e.to_string() }));
                None
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Checks whose name starts with `prefix`.
    pub fn group(&self, prefix: &str) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).collect()
    }

    /// One JSON object per line: header, checks, tables, then a footer.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        let mut push = |v: Value| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        push(json!({ "suite": self.suite, "config": self.config }));
        for c in &self.checks {
            push(serde_json::to_value(c).expect("checks serialize"));
        }
        for (name, rows) in &self.tables {
            push(json!({ "table": name, "rows": rows }));
        }
        push(json!({
            "passed": self.passed(),
            "checks": self.checks.len(),
            "failed": self.failures().len(),
        }));
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Report, ConfigError> {
        let bad = |m: &str| ConfigError::Invalid(format!("malformed report: {m}"));
        let mut lines = text.lines().map(serde_json::from_str::<Value>);
        let head = lines.next().ok_or_else(|| bad("empty"))?.map_err(|e| bad(&e.to_string()))?;
        let suite: Suite = serde_json::from_value(head["suite"].clone()).map_err(|e| bad(&e.to_string()))?;
        let config: RunConfig = serde_json::from_value(head["config"].clone()).map_err(|e| bad(&e.to_string()))?;
        let mut report = Report::new(suite, &config);
        for line in lines {
            let v = line.map_err(|e| bad(&e.to_string()))?;
            if v.get("name").is_some() {
                report.checks.push(serde_json::from_value(v).map_err(|e| bad(&e.to_string()))?);
            } else if let Some(t) = v.get("table").and_then(Value::as_str) {
                report.tables.insert(t.to_string(), v["rows"].clone());
            }
        }
        Ok(report)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{} {}.{}\n", if c.passed { "PASS" } else { "FAIL" }, self.suite, c.name));
        }
        s.push_str(&format!(
            "{}: {}/{} checks passed\n",
            self.suite,
            self.checks.len() - self.failures().len(),
            self.checks.len()
        ));
        s
    }
}

pub fn run_suite(suite: Suite, config: &RunConfig) -> Result<Report, ConfigError> {
    config.validate()?;
    let mut r = Report::new(suite, config);
    match suite {
        Suite::Tree => tree_suite(config, &mut r),
        Suite::Measures => measures_suite(config, &mut r)?,
        Suite::Cheese => cheese_suite(config, &mut r)?,
        Suite::Units => units_suite(config, &mut r),
        Suite::Cocycle => cocycle_suite(config, &mut r)?,
        Suite::Chars => chars_suite(config, &mut r),
        Suite::Amalgam => amalgam_suite(config, &mut r),
        Suite::TheoremA => theorem_a_suite(config, &mut r)?,
    }
    Ok(r)
}

fn tree_suite(cfg: &RunConfig, r: &mut Report) {
    let (p, q) = (cfg.p, cfg.q());
    let Some(k) = r.attempt("ext", cfg.ext()) else { return };
    let mut counts = Vec::new();
    for n in 0..=cfg.depth {
        let Some(t) = r.attempt("count", BallTree::ball(p, n, MAX_DEPTH)) else { return };
        let Some(b) = r.attempt("count", t.boundary()) else { return };
        let expected = (q + 1) * q.pow(n);
        r.check(format!("count.n{n}"), b.len() as u64 == expected, json!({ "n": n, "boundary": b.len(), "expected": expected }));
        counts.push(json!({ "n": n, "boundary": b.len() }));
        if n < MAX_DEPTH {
            fibre_check(r, p, n);
        }
        if n <= 2 {
            let o = orbits(&gl2o_generators(&k), &b, &k);
            if let Some(o) = r.attempt(&format!("orbit.gl2o.n{n}"), o) {
                r.check(format!("orbit.gl2o.n{n}"), o.len() == 1, json!({ "n": n, "orbits": o.len() }));
            }
        }
        if n <= 1 {
            iwahori_orbit_check(r, &k, n);
        }
    }
    r.tables.insert("counts".into(), Value::Array(counts));
}

fn fibre_check(r: &mut Report, p: u32, n: u32) {
    let name = format!("fibres.n{n}");
    let trees = BallTree::ball(p, n, MAX_DEPTH).and_then(|s| Ok((s, BallTree::ball(p, n + 1, MAX_DEPTH)?)));
    let Some((small, big)) = r.attempt(&name, trees) else { return };
    let mut fibres: BTreeMap<BoundaryEdge, usize> = BTreeMap::new();
    let edges = big.boundary();
    let Some(edges) = r.attempt(&name, edges) else { return };
    for e in edges {
        match big.tree.iota(&small.tree, &e) {
            Ok(f) => *fibres.entry(f).or_default() += 1,
            Err(err) => {
                r.check(name, false, json!({ "error": err.to_string() }));
                return;
            }
        }
    }
    let sizes: BTreeSet<usize> = fibres.values().copied().collect();
    let targets = small.boundary().map(|b| b.len()).unwrap_or(0);
    r.check(
        name,
        fibres.len() == targets && sizes == BTreeSet::from([p as usize]),
        json!({ "n": n, "targets": fibres.len(), "sizes": sizes }),
    );
}

fn iwahori_orbit_check(r: &mut Report, k: &ExtStructure, n: u32) {
    let p = k.p();
    let name = format!("orbit.iwahori.n{n}");
    let Some(s) = r.attempt(&name, BallTree::double_ball(p, n, MAX_DEPTH)) else { return };
    let Some(edges) = r.attempt(&name, s.boundary()) else { return };
    let Some(o) = r.attempt(&name, orbits(&iwahori_generators(k), &edges, k)) else { return };
    let sizes: Vec<usize> = o.iter().map(Vec::len).collect();
    let want = (p as usize).pow(n + 1);
    let w = Mat2::w(k);
    let swapped = o.len() == 2 && {
        let moved: Result<BTreeSet<_>, _> = o[0]
            .iter()
            .map(|e| Ok::<_, crate::bttree::TreeError>((act(&w, &e.inside, k)?, act(&w, &e.outside, k)?)))
            .collect();
        let other: BTreeSet<_> = o[1].iter().map(|e| (e.inside, e.outside)).collect();
        moved.map(|m| m == other).unwrap_or(false)
    };
    r.check(
        name,
        sizes == vec![want, want] && swapped,
        json!({ "n": n, "sizes": sizes, "w_swaps": swapped }),
    );
}

/// Transitive actions of size <= 12: cyclic, dihedral, symmetric and
/// seeded random two-generator actions.
pub fn transitive_family(samples: usize, seed: u64) -> Vec<(String, PermAction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in 1..=12usize {
        let rot = Perm::new((0..n).map(|i| (i + 1) % n).collect()).expect("rotation");
        let refl = Perm::new((0..n).map(|i| (n - i) % n).collect()).expect("reflection");
        let mut swap: Vec<usize> = (0..n).collect();
        if n > 1 {
            swap.swap(0, 1);
        }
        let swap = Perm::new(swap).expect("transposition");
        let mk = |g: Vec<Perm>| PermAction::new(n, g).expect("valid action");
        out.push((format!("cyclic{n}"), mk(vec![rot.clone()])));
        if n >= 3 {
            out.push((format!("dihedral{n}"), mk(vec![rot.clone(), refl])));
        }
        if n >= 3 {
            out.push((format!("symmetric{n}"), mk(vec![rot, swap])));
        }
        let mut found = 0;
        let mut tries = 0;
        while found < samples.min(4) && tries < 200 {
            tries += 1;
            let gens: Vec<Perm> = (0..2)
                .map(|_| {
                    let mut v: Vec<usize> = (0..n).collect();
                    v.shuffle(&mut rng);
                    Perm::new(v).expect("shuffle")
                })
                .collect();
            let a = mk(gens);
            if a.is_transitive() {
                out.push((format!("random{n}.{found}"), a));
                found += 1;
            }
        }
    }
    out
}

/// All invariant measures mod d by exhaustive backtracking over values,
/// assigning points in breadth-first order along the generators.
pub fn fixed_points_by_search(action: &PermAction, d: u64, m0: bool) -> BTreeSet<Vec<i64>> {
    let n = action.size();
    let gens = action.generators();
    let mut order = Vec::new();
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        order.push(s);
        let mut i = order.len() - 1;
        while i < order.len() {
            let x = order[i];
            for g in gens {
                for y in [g.apply(x), g.inverse().apply(x)] {
                    if !seen[y] {
                        seen[y] = true;
                        order.push(y);
                    }
                }
            }
            i += 1;
        }
    }
    let mut out = BTreeSet::new();
    let mut vals: Vec<Option<i64>> = vec![None; n];
    fn go(
        i: usize,
        order: &[usize],
        gens: &[Perm],
        d: u64,
        m0: bool,
        vals: &mut Vec<Option<i64>>,
        out: &mut BTreeSet<Vec<i64>>,
    ) {
        if i == order.len() {
            let v: Vec<i64> = vals.iter().map(|x| x.expect("assigned")).collect();
            if !m0 || v.iter().sum::<i64>().rem_euclid(d as i64) == 0 {
                out.insert(v);
            }
            return;
        }
        let x = order[i];
        for c in 0..d as i64 {
            vals[x] = Some(c);
            let ok = gens.iter().all(|g| {
                (0..vals.len()).all(|y| match (vals[y], vals[g.apply(y)]) {
                    (Some(a), Some(b)) => a == b,
                    _ => true,
                })
            });
            if ok {
                go(i + 1, order, gens, d, m0, vals, out);
            }
        }
        vals[x] = None;
    }
    go(0, &order, gens, d, m0, &mut vals, &mut out);
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn measures_suite(cfg: &RunConfig, r: &mut Report) -> Result<(), ConfigError> {
    let dmax = cfg.d.unwrap_or(12);
    if dmax < 2 {
        return Err(ConfigError::Invalid(format!("d = {dmax} must be at least 2")));
    }
    let mut family = transitive_family(cfg.samples, cfg.seed);
    if let Ok(k) = cfg.ext() {
        for n in 0..=cfg.depth.min(2) {
            let x = BallTree::ball(cfg.p, n, MAX_DEPTH).ok().and_then(|t| CheeseRegion::from_subtree(&t.tree).ok());
            let Some(x) = x else { continue };
            if x.len() > 12 {
                continue;
            }
            let gens: Result<Vec<_>, _> = gl2o_generators(&k).iter().map(|g| hole_permutation(&x, g, &k)).collect();
            if let Some(gens) = r.attempt("holes", gens) {
                family.push((format!("holes.n{n}"), PermAction::new(x.len(), gens).expect("hole action")));
            }
        }
    }
    let mut rows = Vec::new();
    for (name, action) in &family {
        let n = action.size();
        let mut bad = Vec::new();
        for d in 2..=dmax {
            let inv = action.invariant_submodule(Ring::ZMod(d), true);
            let h = gcd(d, n as u64);
            let sigma = FiniteMeasure::counting(Ring::ZMod(d), n).scale((d / h) as i64).reduce_mod(d);
            let in_group = inv.elements(n).contains(&sigma);
            let brute = fixed_points_by_search(action, d, true);
            let solver: BTreeSet<Vec<i64>> = inv.elements(n).iter().map(|m| m.values().to_vec()).collect();
            let ok = inv.is_cyclic() && inv.order() == Some(h) && in_group && brute == solver;
            if !ok {
                bad.push(json!({ "d": d, "order": inv.order(), "expected": h, "oracle": brute.len() }));
            }
        }
        rows.push(json!({ "action": name, "size": n }));
        r.check(format!("invariants.{name}"), bad.is_empty(), json!({ "size": n, "d_max": dmax, "failures": bad }));
    }
    // the trivial group fixes every measure
    for n in [1usize, 3, 5] {
        let a = PermAction::new(n, vec![]).expect("trivial action");
        let d = dmax.min(5);
        let full = a.invariant_submodule(Ring::ZMod(d), false).order();
        let m0 = a.invariant_submodule(Ring::ZMod(d), true).order();
        r.check(
            format!("trivial.n{n}"),
            full == Some(d.pow(n as u32)) && m0 == Some(d.pow(n as u32 - 1)),
            json!({ "n": n, "d": d, "full": full, "m0": m0 }),
        );
    }
    r.tables.insert("actions".into(), Value::Array(rows));
    Ok(())
}

fn omega(p: u32, n: u32) -> Result<CheeseRegion, String> {
    let t = BallTree::ball(p, n, MAX_DEPTH).map_err(|e| e.to_string())?;
    CheeseRegion::from_subtree(&t.tree).map_err(|e| e.to_string())
}

fn gl2o_action(x: &CheeseRegion, k: &ExtStructure) -> Result<PermAction, String> {
    let gens: Result<Vec<_>, _> = gl2o_generators(k).iter().map(|g| hole_permutation(x, g, k)).collect();
    PermAction::new(x.len(), gens.map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn cheese_suite(cfg: &RunConfig, r: &mut Report) -> Result<(), ConfigError> {
    let (p, q) = (cfg.p, cfg.q());
    let moduli: Vec<u64> = match cfg.d {
        Some(d) if d % (q + 1) != 0 || d % q == 0 => {
            return Err(ConfigError::Invalid(format!("d = {d} must be a multiple of q + 1 prime to p")));
        }
        Some(d) => vec![d],
        None => (1..=4).map(|j| j * (q + 1)).filter(|d| d % q != 0).collect(),
    };
    let Some(k) = r.attempt("ext", cfg.ext()) else { return Ok(()) };
    let mut sizes = Vec::new();
    for n in 0..=cfg.depth.min(3) {
        let Some(x) = r.attempt(&format!("holes.n{n}"), omega(p, n)) else { continue };
        let interior = x.holes().iter().filter(|h| h.kind == DiscKind::Interior).count();
        let expected = (q + 1) * q.pow(n);
        r.check(
            format!("holes.n{n}"),
            x.len() as u64 == expected && interior + 1 == x.len(),
            json!({ "n": n, "holes": x.len(), "expected": expected }),
        );
        sizes.push(json!({ "n": n, "holes": x.len() }));
        if n <= 2 {
            if let Some(a) = r.attempt(&format!("transitive.n{n}"), gl2o_action(&x, &k)) {
                r.check(format!("transitive.n{n}"), a.is_transitive(), json!({ "n": n }));
            }
        }
    }
    for n in 1..=cfg.depth.clamp(1, 2) {
        for &d in &moduli {
            let name = format!("restriction.n{n}.d{d}");
            let data = omega(p, n).and_then(|x| {
                let y = omega(p, n - 1)?;
                let iota = restriction_map(&x, &y).map_err(|e| e.to_string())?;
                let ax = gl2o_action(&x, &k)?;
                let ay = gl2o_action(&y, &k)?;
                Ok((x, y, iota, ax, ay))
            });
            let Some((x, y, iota, ax, ay)) = r.attempt(&name, data) else { continue };
            let c = (d / (q + 1)) as i64;
            let gx = FiniteMeasure::counting(Ring::ZMod(d), x.len()).scale(c).reduce_mod(d);
            let gy = FiniteMeasure::counting(Ring::ZMod(d), y.len()).scale(c).reduce_mod(d);
            let ix = ax.invariant_submodule(Ring::ZMod(d), true);
            let iy = ay.invariant_submodule(Ring::ZMod(d), true);
            let pushed = gx.pushforward(&iota, y.len()).map(|m| m.reduce_mod(d));
            let image_ok = pushed.as_ref().map(|m| *m == gy.scale(q as i64).reduce_mod(d)).unwrap_or(false);
            let gen_x = ix.elements(x.len()).contains(&gx) && ix.order() == Some(q + 1);
            let gen_y = iy.elements(y.len()).contains(&gy) && iy.order() == Some(q + 1);
            let auto = gcd(q, q + 1) == 1;
            r.check(
                name,
                image_ok && gen_x && gen_y && auto,
                json!({
                    "n": n,
                    "d": d,
                    "pushforward": pushed.map(|m| m.values().to_vec()).unwrap_or_default(),
                    "generator_ok": gen_x && gen_y,
                }),
            );
        }
    }
    r.tables.insert("holes".into(), Value::Array(sizes));
    Ok(())
}

fn units_suite(cfg: &RunConfig, r: &mut Report) {
    let p = cfg.p;
    let q = cfg.q();
    let n_digits = cfg.precision as i64;
    let Some(k) = r.attempt("ext", cfg.ext()) else { return };
    let mut rng = cfg.rng(4);
    if let Some(x) = r.attempt("round_trip", omega(p, 1)) {
        let mut failures = 0;
        for _ in 0..cfg.samples {
            let mut vals: Vec<i64> = (0..x.len()).map(|_| rng.gen_range(-4..=4)).collect();
            let s: i64 = vals.iter().sum();
            vals[0] -= s;
            let nu = FiniteMeasure::from_values(Ring::Z, vals);
            let back = UnitClass::from_measure(&x, &nu, &k).and_then(|u| u.mu(&x, &k));
            if back.ok() != Some(nu) {
                failures += 1;
            }
        }
        r.check("round_trip", failures == 0, json!({ "samples": cfg.samples, "failures": failures }));
        if let Some(y) = r.attempt("functoriality", omega(p, 0)) {
            let iota = restriction_map(&x, &y);
            if let Some(iota) = r.attempt("functoriality", iota) {
                let mut checked = 0;
                let mut bad = 0;
                for h in x.holes().iter().filter(|h| h.kind == DiscKind::Interior) {
                    let u = UnitClass::linear(&k, h.center.to_padic(&k));
                    let lhs = u.mu(&y, &k);
                    let rhs = u.mu(&x, &k).map(|m| m.pushforward(&iota, y.len()));
                    checked += 1;
                    match (lhs, rhs) {
                        (Ok(a), Ok(Ok(b))) if a == b => {}
                        _ => bad += 1,
                    }
                }
                r.check("functoriality", bad == 0 && checked > 0, json!({ "generators": checked, "failures": bad }));
            }
        }
    }
    for m in [q - 1, q + 1, q * q - 1] {
        let mut worst = i64::MAX;
        let mut errors = 0;
        for _ in 0..cfg.samples {
            let u = k.random_small_unit(&mut rng, 2, 1);
            match u.root_small_unit(m).and_then(|x| x.pow(m as i64)) {
                Ok(v) => worst = worst.min(v.agreement(&u)),
                Err(_) => errors += 1,
            }
        }
        r.check(
            format!("roots.m{m}"),
            errors == 0 && worst >= n_digits - 4,
            json!({ "m": m, "min_digits": worst.min(n_digits), "errors": errors }),
        );
    }
    let bound = p as f64 / (p as f64 - 1.0);
    let mut rows = Vec::new();
    let mut ok = true;
    for v in 1..=4i64 {
        let (mut tried, mut accepted) = (0, 0);
        let mut correct = true;
        for _ in 0..cfg.samples.min(25) {
            let u = k.random_small_unit(&mut rng, 2, v);
            if u.sub(&k.one()).valuation() != Some(v) {
                continue;
            }
            tried += 1;
            match u.root_small_unit(p as u64) {
                Ok(x) => {
                    accepted += 1;
                    correct &= x.pow(p as i64).map(|y| y.agrees(&u, n_digits - 4)).unwrap_or(false);
                }
                Err(PadicError::RootDomain { .. }) => {}
                Err(_) => correct = false,
            }
        }
        let expect_accept = (v as f64) > bound;
        ok &= correct && tried > 0 && accepted == if expect_accept { tried } else { 0 };
        rows.push(json!({ "v": v, "tried": tried, "accepted": accepted, "expect_accept": expect_accept }));
    }
    r.check("pth_root_guard", ok, json!({ "p": p, "rows": rows }));
}

fn cocycle_suite(cfg: &RunConfig, r: &mut Report) -> Result<(), ConfigError> {
    check_de(cfg)?;
    for n in 0..=cfg.depth.min(2) {
        cocycle_case(cfg, n, r);
    }
    Ok(())
}

fn check_de(cfg: &RunConfig) -> Result<(), ConfigError> {
    let q = cfg.q();
    if cfg.d.is_some_and(|d| d != q + 1) || cfg.e.is_some_and(|e| e != q - 1) {
        return Err(ConfigError::Invalid(format!("the cocycle pipeline uses d = {}, e = {}", q + 1, q - 1)));
    }
    Ok(())
}

fn alpha_grid(cfg: &RunConfig, n: u32, k: &ExtStructure) -> Result<SampleGrid, String> {
    let t = BallTree::ball(cfg.p, n, MAX_DEPTH).map_err(|e| e.to_string())?;
    let count = cfg.samples.clamp(4, 20);
    Ok(SampleGrid::random(&t.tree, k, count, count, &mut cfg.rng(100 + n as u64)))
}

fn cocycle_case(cfg: &RunConfig, n: u32, r: &mut Report) {
    let pre = format!("n{n}");
    let digits = cfg.precision as i64 - 6;
    let Some(k) = r.attempt(&format!("{pre}.build"), cfg.ext()) else { return };
    let Some(grid) = r.attempt(&format!("{pre}.build"), alpha_grid(cfg, n, &k)) else { return };
    let Some(b) = r.attempt(&format!("{pre}.build"), build_alpha(&k, n, &grid)) else { return };
    r.check(
        format!("{pre}.build"),
        true,
        json!({ "d": b.d, "e": b.e, "holes": b.cheese.len(), "step4_checked": b.step4.checked, "step4_min_valuation": b.step4.min_valuation }),
    );
    let t = b.tree.clone();
    let mut rng = cfg.rng(200 + n as u64);
    let (mut min_z, mut min_c, mut errors) = (i64::MAX, i64::MAX, Vec::new());
    for _ in 0..cfg.samples {
        let g1 = Mat2::random_gl2o(&k, &mut rng);
        let g2 = Mat2::random_gl2o(&k, &mut rng);
        let z = random_point(&t, &k, &mut rng);
        match z_membership_defect(&b.alpha, &b.u, b.d, b.e, &g1, &z, &k) {
            Ok(v) => min_z = min_z.min(v),
            Err(e) => errors.push(e.to_string()),
        }
        match cocycle_defect(&b.alpha, &g1, &g2, &z, &k) {
            Ok(v) => min_c = min_c.min(v),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let cap = |v: i64| v.min(cfg.precision as i64);
    r.check(
        format!("{pre}.z_membership"),
        errors.is_empty() && min_z >= digits,
        json!({ "samples": cfg.samples, "min_digits": cap(min_z), "required": digits, "errors": errors }),
    );
    r.check(
        format!("{pre}.cocycle_identity"),
        errors.is_empty() && min_c >= digits,
        json!({ "samples": cfg.samples, "min_digits": cap(min_c), "required": digits }),
    );
    let z = k.zeta();
    let qn = b.q_pow_n(&k);
    let mut table = Vec::new();
    let mut ok = true;
    let mut srng = cfg.rng(300 + n as u64);
    for _ in 0..cfg.samples.max(20) {
        let x = k.random_unit(&mut srng, 2);
        let row = jz_inverse(&k, &x)
            .and_then(|(a, c)| stabilizer_and_jz(&z, &a, &c))
            .map_err(|e| e.to_string())
            .and_then(|(g, j)| {
                let phi = phi_z(&b.alpha, &g, &z, &k).map_err(|e| e.to_string())?;
                let want = j.teichmuller().and_then(|t| t.pow(qn)).map_err(|e| e.to_string())?;
                Ok((mu_log(&k, &phi), mu_log(&k, &want)))
            });
        match row {
            Ok((a, w)) => {
                ok &= a.is_some() && a == w;
                table.push(json!({ "phi": a, "jz_qn": w }));
            }
            Err(e) => {
                ok = false;
                table.push(json!({ "error": e }));
            }
        }
    }
    r.check(format!("{pre}.phi_z"), ok, json!({ "stabilizer_samples": table.len(), "q_pow_n": qn }));
    r.tables.insert(format!("{pre}.phi_z"), Value::Array(table));
    match triviality_decision(&b.alpha, &b.u, b.d, b.e, &b.cheese, &grid, &k) {
        Ok(t) => r.check(
            format!("{pre}.nontrivial"),
            t.decision == Decision::Nontrivial,
            json!({ "decision": format!("{:?}", t.decision), "reason": t.reason }),
        ),
        Err(e) => r.check(format!("{pre}.nontrivial"), false, json!({ "error": e.to_string() })),
    }
    r.tables.insert(format!("{pre}.u"), json!({ "u": b.u.to_string(), "nu": b.nu.values() }));
}

fn chars_suite(cfg: &RunConfig, r: &mut Report) {
    let (p, q) = (cfg.p, cfg.q());
    let mut rows = Vec::new();
    for level in 1..=cfg.level {
        let name = format!("q{level}");
        let Some(s) = r.attempt(&name, unit_group_structure(p, level, DEFAULT_MAX_LEVEL)) else { continue };
        let t = enumerate_characters(&s);
        let pp = t.p_prime(p);
        let fixed_pp = t.sigma_fixed().into_iter().filter(|i| pp.contains(i)).count() as u64;
        let mut ok = t.characters.len() as u64 + t.missing == s.q_group.order();
        ok &= pp.len() as u64 == q * q - 1 && fixed_pp == q - 1;
        ok &= (t.missing == 0) == (t.extension_degree == 1);
        if level == 1 {
            ok &= t.characters.len() as u64 == q * q - 1 && t.missing == 0;
        }
        r.check(
            name,
            ok,
            json!({
                "level": level,
                "invariants": s.q_group.invariants,
                "characters": t.characters.len(),
                "missing": t.missing,
                "extension_degree": t.extension_degree,
                "p_prime": pp.len(),
                "sigma_fixed_p_prime": fixed_pp,
            }),
        );
        rows.push(json!({ "level": level, "order": s.q_group.order(), "characters": t.characters.len(), "orbits": t.orbits.len() }));
    }
    for kk in 1..=2u32 {
        let c = iwahori_character_count(p, kk);
        r.check(
            format!("iwahori.k{kk}"),
            c.p_prime_characters == (q - 1) * (q - 1) && c.w_fixed_p_prime == Some(q - 1),
            serde_json::to_value(&c).unwrap_or(Value::Null),
        );
    }
    let c = gl2_character_count(p, 2);
    r.check("gl2.k2", c.p_prime_characters == q - 1, serde_json::to_value(&c).unwrap_or(Value::Null));
    for m in 1..=cfg.level {
        let name = format!("riehm.m{m}");
        if let Some(rep) = r.attempt(&name, quaternion_finite_check(p, m)) {
            r.check(
                name,
                rep.equal,
                json!({ "group": rep.group_order, "commutator": rep.commutator_order, "kernel": rep.kernel_order }),
            );
        }
    }
    r.tables.insert("quotients".into(), Value::Array(rows));
}

fn amalgam_suite(cfg: &RunConfig, r: &mut Report) {
    let Some(k) = r.attempt("ext", cfg.ext()) else { return };
    let digits = cfg.precision as i64 - 8;
    let same = |a: &Mat2, b: &Mat2, d: i64| {
        a.entries()
            .iter()
            .zip(b.entries().iter())
            .all(|(x, y)| x.sub(y).valuation().is_none_or(|v| v >= d))
    };
    let mut rng = cfg.rng(7);
    let mut bad = Vec::new();
    for i in 0..cfg.samples {
        let len = rng.gen_range(0..=6usize);
        let first = if rng.gen_bool(0.5) { Side::A } else { Side::B };
        let ds: Vec<u64> = (0..len).map(|_| rng.gen_range(0..k.p() as u64)).collect();
        let word = AmalgamWord::from_digits(&k, first, &ds, Mat2::random_iwahori(&k, &mut rng));
        let g = word.multiply();
        let ok = match (decompose(&g, &k), word_length(&g, &k)) {
            (Ok(back), Ok(l)) => {
                back.signature() == word.signature() && l as usize == len && same(&back.multiply(), &g, digits)
            }
            _ => false,
        };
        if !ok {
            bad.push(json!({ "sample": i, "word": word.to_string() }));
        }
    }
    r.check("round_trip", bad.is_empty(), json!({ "samples": cfg.samples, "failures": bad }));
    let mut bad = 0;
    let mut min_det_digits = i64::MAX;
    let z = Point::Finite(k.zeta());
    for _ in 0..20 {
        let len = rng.gen_range(1..=4usize);
        let ds: Vec<u64> = (0..len).map(|_| rng.gen_range(0..k.p() as u64)).collect();
        let g = AmalgamWord::from_digits(&k, Side::A, &ds, Mat2::random_iwahori(&k, &mut rng)).multiply();
        let ok = g0z_factor(&g, &k).is_ok_and(|(h, s)| {
            let det = s.det();
            min_det_digits = min_det_digits.min(det.precision() as i64);
            let fixes = h
                .mobius(&z)
                .ok()
                .and_then(|w| w.finite().map(|x| x.agrees(&k.zeta(), digits)))
                .unwrap_or(false);
            fixes && det.agrees(&k.one(), det.precision() as i64) && det.precision() >= 10
        });
        bad += usize::from(!ok);
    }
    r.check("g0z_sl2", bad == 0, json!({ "samples": 20, "failures": bad, "min_det_digits": min_det_digits }));
}

fn theorem_a_suite(cfg: &RunConfig, r: &mut Report) -> Result<(), ConfigError> {
    check_de(cfg)?;
    let n = cfg.depth.min(2);
    let Some(k) = r.attempt("build", cfg.ext()) else { return Ok(()) };
    let Some(grid) = r.attempt("build", alpha_grid(cfg, n, &k)) else { return Ok(()) };
    let Some(b) = r.attempt("build", build_alpha(&k, n, &grid)) else { return Ok(()) };
    r.check("build", true, json!({ "n": n, "holes": b.cheese.len() }));
    let z = k.zeta();
    let qn = b.q_pow_n(&k);
    let mut rng = cfg.rng(11);
    let mut table = Vec::new();
    let mut ok = true;
    for _ in 0..cfg.samples.clamp(20, 100) {
        let x = k.random_unit(&mut rng, 2);
        let res = jz_inverse(&k, &x).and_then(|(a, c)| stabilizer_and_jz(&z, &a, &c));
        let Ok((g, j)) = res else {
            ok = false;
            continue;
        };
        let phi = phi_z(&b.alpha, &g, &z, &k).ok().and_then(|v| mu_log(&k, &v));
        let want = j.teichmuller().and_then(|t| t.pow(qn)).ok().and_then(|v| mu_log(&k, &v));
        ok &= phi.is_some() && phi == want;
        table.push(json!({ "jz": mu_log(&k, &j.teichmuller().unwrap_or(k.one())), "phi": phi, "expected": want }));
    }
    r.check("phi_z", ok, json!({ "rows": table.len(), "q_pow_n": qn }));
    r.tables.insert("phi_z".into(), Value::Array(table));
    let tr = theorem_a_transport(&b.alpha, &k, cfg.level, false);
    let tc = theorem_a_transport(&b.alpha, &k, cfg.level, true);
    if let (Some(tr), Some(tc)) = (r.attempt("transport", tr), r.attempt("transport_conjugate", tc)) {
        let same_orbit = tr.sigma_orbit.contains(&tc.label) || tc.sigma_orbit.contains(&tr.label);
        let q = cfg.q();
        r.check(
            "transport",
            !tr.character.is_trivial() && (q * q - 1).is_multiple_of(tr.order) && same_orbit,
            json!({
                "level": tr.level,
                "group": tr.group.invariants,
                "order": tr.order,
                "character": tr.character.exponents,
                "orbit_size": tr.sigma_orbit.len(),
                "conjugate_in_orbit": same_orbit,
            }),
        );
    }
    Ok(())
}
