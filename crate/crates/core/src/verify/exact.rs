use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::oracle::{brute_force_excursions, reflection_counts};
use super::{scale_count, Mode, VerifyError, VerifyReport};
use crate::excursion::{
    count_excursions_with, excursion_field_with, induce_walk, induced_steps, sandwich_from, Completion,
    ExcursionTally, InducedWalk,
};
use crate::rng::derive_seed;
use crate::walk::{generate_walk, Extrema, Trajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactParams {
    /// All `2^len` paths of this length, checked at every `n <= len`.
    pub exhaustive_len: u32,
    pub oracle_paths: u64,
    pub oracle_len: u64,
    pub oracle_depths: Vec<u64>,
    pub inequality_paths: u64,
    pub inequality_len: u64,
    pub inequality_depths: Vec<u64>,
    /// Depth pairs `(k, k')` with `2k <= k'` are drawn from this set.
    pub monotone_depths: Vec<u64>,
    pub induced_depths: Vec<u64>,
    pub reflection_depths: Vec<u64>,
    pub reflection_levels: Vec<u64>,
    pub reflection_n_max: u32,
}

impl Default for ExactParams {
    fn default() -> Self {
        ExactParams {
            exhaustive_len: 12,
            oracle_paths: 1000,
            oracle_len: 1000,
            oracle_depths: vec![1, 2, 3, 4],
            inequality_paths: 10_000,
            inequality_len: 1000,
            inequality_depths: vec![2, 4, 8],
            monotone_depths: vec![2, 4, 8, 16],
            induced_depths: vec![1, 2, 3, 4, 8],
            reflection_depths: vec![1, 2, 3],
            reflection_levels: vec![0, 1, 2],
            reflection_n_max: 16,
        }
    }
}

impl ExactParams {
    pub fn scaled(mut self, scale: f64) -> Self {
        self.oracle_paths = scale_count(self.oracle_paths, scale, 10);
        self.inequality_paths = scale_count(self.inequality_paths, scale, 10);
        self
    }
}

#[derive(Clone, Copy)]
enum Corpus {
    Exhaustive(u32),
    Random {
        seed: u64,
        task: &'static str,
        paths: u64,
        len: u64,
    },
}

impl Corpus {
    fn size(&self) -> u64 {
        match *self {
            Corpus::Exhaustive(len) => 1 << len,
            Corpus::Random { paths, .. } => paths,
        }
    }

    fn path(&self, i: u64) -> Trajectory {
        match *self {
            Corpus::Exhaustive(len) => Trajectory::from_bits(i, len),
            Corpus::Random { seed, task, len, .. } => generate_walk(derive_seed(seed, task, i), len),
        }
    }

    /// Horizons checked on each path.
    fn horizons(&self, len: u64) -> Vec<u64> {
        match self {
            Corpus::Exhaustive(_) => (0..=len).collect(),
            Corpus::Random { .. } => vec![len],
        }
    }
}

fn locate(traj: &Trajectory, n: u64) -> String {
    if traj.len() <= 64 {
        format!("positions {:?}, n={n}", traj.positions_to(n).unwrap())
    } else {
        format!("walk seed {:#018x}, n={n}", traj.seed())
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    instances: u64,
    violations: u64,
    first: Option<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.violations += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.instances += o.instances;
        self.violations += o.violations;
        self.first = self.first.or(o.first);
        self
    }
}

#[derive(Debug, Default)]
struct Ledger(BTreeMap<&'static str, Tally>);

impl Ledger {
    fn at(&mut self, name: &'static str) -> &mut Tally {
        self.0.entry(name).or_default()
    }

    fn merge(mut self, o: Ledger) -> Ledger {
        for (k, v) in o.0 {
            let mine = self.0.remove(k).unwrap_or_default();
            self.0.insert(k, mine.merge(v));
        }
        self
    }

    fn report(&self, name: &'static str) -> VerifyReport {
        let t = self.0.get(name).cloned().unwrap_or_default();
        let mut r = VerifyReport::new(name, Mode::Exact);
        r.instances = t.instances;
        r.violations = t.violations;
        r.counterexample = t.first;
        r.finish()
    }
}

/// Run `f` over every path of the corpora; violations keep corpus order.
fn sweep<F>(corpora: &[Corpus], f: F) -> Ledger
where
    F: Fn(&Corpus, &Trajectory, &mut Ledger) + Sync,
{
    corpora
        .iter()
        .map(|c| {
            (0..c.size())
                .into_par_iter()
                .map(|i| {
                    let mut l = Ledger::default();
                    f(c, &c.path(i), &mut l);
                    l
                })
                .reduce(Ledger::default, Ledger::merge)
        })
        .fold(Ledger::default(), Ledger::merge)
}

fn extent(pos: &[i64]) -> (i64, i64) {
    (*pos.iter().min().unwrap(), *pos.iter().max().unwrap())
}

fn walk_checks(traj: &Trajectory, l: &mut Ledger) {
    let n = traj.len();
    let pos = traj.positions_to(n).unwrap();
    let (mn, mx) = extent(&pos);
    let t = l.at("walk_invariants");
    t.record(pos[0] == 0 && pos.windows(2).all(|w| (w[1] - w[0]).abs() == 1), || {
        format!("{}: increments not +-1", locate(traj, n))
    });
    let bad = (0..=n).find(|&i| traj.position_at(i).unwrap() != pos[i as usize]);
    t.record(bad.is_none(), || format!("{}: position_at({}) disagrees", locate(traj, n), bad.unwrap()));
    let e = Extrema::scan(&traj.words(), n);
    t.record((e.pos, e.min, e.max) == (pos[n as usize], mn, mx), || {
        format!("{}: extrema {e:?}", locate(traj, n))
    });
    t.record(traj.running_extrema(n).unwrap() == (mn, mx), || {
        format!("{}: running extrema", locate(traj, n))
    });
    t.record(traj.range_size(n).unwrap() == (mx - mn + 1) as u64, || {
        format!("{}: range size", locate(traj, n))
    });
    let field = traj.local_times(n).unwrap();
    let mut visits: BTreeMap<i64, u64> = BTreeMap::new();
    for &s in &pos {
        *visits.entry(s).or_default() += 1;
    }
    let same = (mn..=mx).all(|x| field.get(x) == visits.get(&x).copied().unwrap_or(0));
    t.record(
        same && field.total() == n + 1
            && field.max() == *visits.values().max().unwrap()
            && field.support_size() == (mx - mn + 1) as u64,
        || format!("{}: local times", locate(traj, n)),
    );
}

/// Path, increment, extrema and local-time consistency.
pub fn walk_invariants(p: &ExactParams, seed: u64) -> VerifyReport {
    let corpora = [
        Corpus::Exhaustive(p.exhaustive_len),
        Corpus::Random {
            seed,
            task: "exact-walks",
            paths: p.oracle_paths,
            len: p.oracle_len,
        },
    ];
    sweep(&corpora, |_, traj, l| walk_checks(traj, l)).report("walk_invariants")
}

fn oracle_checks(c: &Corpus, traj: &Trajectory, depths: &[u64], l: &mut Ledger) {
    let full = traj.positions_to(traj.len()).unwrap();
    let (mn, mx) = extent(&full);
    for n in c.horizons(traj.len()) {
        let local = traj.local_times(n).unwrap();
        for &k in depths {
            for completion in [Completion::Reached, Completion::Returned] {
                let field = excursion_field_with(traj, k, n, completion).unwrap();
                let t = l.at("oracle_equivalence");
                for x in mn..=mx {
                    let want = brute_force_excursions(&full, k, x, n as usize, completion);
                    let single = count_excursions_with(traj, k, x, n, completion).unwrap();
                    let got = field.get(x);
                    t.record(got == want && single == want, || {
                        format!(
                            "{}: k={k}, x={x}, {completion:?}: oracle {want}, field {got}, single-site {single}",
                            locate(traj, n)
                        )
                    });
                }
                let stray = field
                    .counts
                    .iter()
                    .find(|&(&x, &v)| x < mn || x > mx || v > local.get(x) || v == 0);
                t.record(stray.is_none(), || {
                    format!("{}: k={k}: tally entry {stray:?} outside support or above local time", locate(traj, n))
                });
            }
        }
    }
}

/// Fast tallies against the literal definition.
pub fn oracle_equivalence(p: &ExactParams, seed: u64) -> VerifyReport {
    let corpora = [
        Corpus::Exhaustive(p.exhaustive_len),
        Corpus::Random {
            seed,
            task: "exact-oracle",
            paths: p.oracle_paths,
            len: p.oracle_len,
        },
    ];
    sweep(&corpora, |c, traj, l| oracle_checks(c, traj, &p.oracle_depths, l)).report("oracle_equivalence")
}

/// Exact comparison of `P(T(k, 0, n) >= a)` with `P(max S >= threshold)` for
/// every listed `(k, a)` and every `n <= n_max`.
pub fn reflection_identity_check(
    depths: &[u64],
    levels: &[u64],
    n_max: u32,
    completion: Completion,
) -> Result<VerifyReport, VerifyError> {
    let name = match completion {
        Completion::Returned => "reflection_identity",
        Completion::Reached => "reflection_shifted_reached",
    };
    let mut r = VerifyReport::new(name, Mode::Exact).param("n_max", f64::from(n_max));
    for &k in depths {
        for &a in levels {
            for c in reflection_counts(k, a, n_max, completion)? {
                r.instances += 1;
                if c.excursions != c.maxima {
                    r.violations += 1;
                    r.counterexample.get_or_insert_with(|| {
                        format!(
                            "k={k}, a={a}, n={}: {} paths with T >= a, {} with max >= {}",
                            c.n, c.excursions, c.maxima, c.threshold
                        )
                    });
                }
                if c.n == n_max {
                    r.stat(&format!("P(k={k},a={a},n={n_max})"), c.excursions as f64 / c.total as f64);
                }
            }
        }
    }
    Ok(r.finish())
}

fn induced_checks(c: &Corpus, traj: &Trajectory, depths: &[u64], l: &mut Ledger) {
    let pos = traj.positions_to(traj.len()).unwrap();
    for n in c.horizons(traj.len()) {
        for &k in depths {
            let y = induce_walk(traj, k, n).unwrap();
            let field = excursion_field_with(traj, k, n, Completion::Reached).unwrap();
            let t = l.at("induced_walk_identity");
            let ki = k as i64;
            let shape = y.times[0] == 0
                && y.times.windows(2).all(|w| w[0] < w[1])
                && y.positions.windows(2).all(|w| (w[1] - w[0]).abs() == 1)
                && y.times.iter().zip(&y.positions).all(|(&t, &v)| pos[t as usize] == v * ki)
                && y.times.last().is_some_and(|&t| t <= n);
            t.record(shape, || format!("{}: k={k}: malformed induced walk", locate(traj, n)));
            let visits: u64 = y.local.values().sum();
            let below = y.down.iter().all(|(&x, &d)| d <= y.local_time(x));
            t.record(visits == y.steps() + 1 && below, || {
                format!("{}: k={k}: induced local times", locate(traj, n))
            });
            t.record(induced_steps(&traj.words(), n, k) == y.steps(), || {
                format!("{}: k={k}: byte-skipping step count", locate(traj, n))
            });
            let js: BTreeSet<i64> = y.down.keys().copied().chain(field.counts.keys().map(|x| x.div_euclid(ki))).collect();
            let bad = js.into_iter().find(|&j| field.get(j * ki) != y.down_steps(j));
            t.record(bad.is_none(), || {
                let j = bad.unwrap();
                format!(
                    "{}: k={k}: T(k, {}, n) = {} but l(j={j}) = {}",
                    locate(traj, n),
                    j * ki,
                    field.get(j * ki),
                    y.down_steps(j)
                )
            });
            if k == 1 {
                t.record(y.positions == pos[..=n as usize], || format!("{}: Y^(1) differs from S", locate(traj, n)));
            }
        }
    }
}

/// Shape of the induced walk and `T(k, kj, n) = l^(k)(j, n)`.
pub fn induced_walk_identity(p: &ExactParams, seed: u64) -> VerifyReport {
    let corpora = [
        Corpus::Exhaustive(p.exhaustive_len),
        Corpus::Random {
            seed,
            task: "exact-induced",
            paths: p.oracle_paths,
            len: p.oracle_len,
        },
    ];
    sweep(&corpora, |c, traj, l| induced_checks(c, traj, &p.induced_depths, l)).report("induced_walk_identity")
}

const INEQUALITIES: [&str; 7] = [
    "sandwich_lower",
    "sandwich_lower_aligned",
    "sandwich_upper",
    "prop51_lower",
    "prop51_upper",
    "lemma52",
    "time_monotonicity",
];

fn tallies_at(traj: &Trajectory, depths: &BTreeSet<u64>, n: u64) -> BTreeMap<u64, ExcursionTally> {
    depths
        .iter()
        .map(|&d| (d, excursion_field_with(traj, d, n, Completion::Reached).unwrap()))
        .collect()
}

fn monotone(l: &mut Ledger, traj: &Trajectory, before: &BTreeMap<u64, ExcursionTally>, after: &BTreeMap<u64, ExcursionTally>) {
    let t = l.at("time_monotonicity");
    for (d, b) in before {
        let a = &after[d];
        let bad = b.counts.iter().find(|&(&x, &v)| a.get(x) < v);
        t.record(bad.is_none(), || {
            let (x, v) = bad.unwrap();
            format!("{}: k={d}, x={x}: T fell from {v} at n={} to {}", locate(traj, a.n), b.n, a.get(*x))
        });
    }
}

fn inequality_checks(c: &Corpus, traj: &Trajectory, p: &ExactParams, depths: &BTreeSet<u64>, l: &mut Ledger) {
    let pos = traj.positions_to(traj.len()).unwrap();
    let mut prev: Option<BTreeMap<u64, ExcursionTally>> = None;
    if let Corpus::Random { .. } = c {
        prev = Some(tallies_at(traj, depths, traj.len() / 2));
    }
    for n in c.horizons(traj.len()) {
        let tallies = tallies_at(traj, depths, n);
        if let Some(before) = &prev {
            monotone(l, traj, before, &tallies);
        }
        let (mn, mx) = extent(&pos[..=n as usize]);
        let mut induced: BTreeMap<u64, InducedWalk> = BTreeMap::new();
        for &k in &p.inequality_depths {
            for d in [2 * k, k / 2] {
                induced.entry(d).or_insert_with(|| induce_walk(traj, d, n).unwrap());
            }
            let (tally, double, half) = (&tallies[&k], &induced[&(2 * k)], &induced[&(k / 2)]);
            for x in mn..=mx {
                let s = sandwich_from(k, x, tally, double, half);
                let lower_ok = s.lower <= s.mid as i64;
                let what = |side: &str| {
                    format!(
                        "{}: k={k}, x={x}: {side} (lower {}, T {}, upper {})",
                        locate(traj, n),
                        s.lower,
                        s.mid,
                        s.upper
                    )
                };
                l.at("sandwich_lower").record(lower_ok, || what("l^(2k)(ceil(x/2k), n) - 1 > T(k, x, n)"));
                let r = x.rem_euclid(2 * k as i64);
                if r == 0 || r >= k as i64 {
                    l.at("sandwich_lower_aligned").record(lower_ok, || what("lower side"));
                }
                l.at("sandwich_upper").record(s.mid <= s.upper, || what("T(k, x, n) > L^(k/2)(floor(x/(k/2)), n)"));
            }
            let sum = tally.plain_sum();
            let (t2k, thalf) = (tallies[&(2 * k)].weighted_total(), tallies[&(k / 2)].weighted_total());
            l.at("prop51_lower").record(t2k <= 2 * sum, || {
                format!("{}: k={k}: T(2k, n) = {t2k} > 2 sum_x T(k, x, n) = {}", locate(traj, n), 2 * sum)
            });
            l.at("prop51_upper").record(sum <= thalf, || {
                format!("{}: k={k}: sum_x T(k, x, n) = {sum} > T(k/2, n) = {thalf}", locate(traj, n))
            });
        }
        for &k in &p.monotone_depths {
            for &k2 in p.monotone_depths.iter().filter(|&&k2| k2 >= 2 * k) {
                let (a, b) = (tallies[&k].weighted_total(), tallies[&k2].weighted_total());
                l.at("lemma52").record(b <= 3 * a, || {
                    format!("{}: T({k2}, n) = {b} > 3 T({k}, n) = {}", locate(traj, n), 3 * a)
                });
            }
        }
        prev = Some(tallies);
        if let Corpus::Random { .. } = c {
            prev = None;
        }
    }
}

/// The induced-walk sandwich, the two-sided sum bound, factor-3 depth
/// monotonicity and monotonicity in time.
pub fn inequality_suite(p: &ExactParams, seed: u64) -> Vec<VerifyReport> {
    let mut depths: BTreeSet<u64> = p.monotone_depths.iter().copied().collect();
    for &k in &p.inequality_depths {
        assert!(k >= 2, "inequality depths start at 2");
        depths.extend([k, 2 * k, k / 2]);
    }
    let corpora = [
        Corpus::Exhaustive(p.exhaustive_len),
        Corpus::Random {
            seed,
            task: "exact-inequalities",
            paths: p.inequality_paths,
            len: p.inequality_len,
        },
    ];
    let ledger = sweep(&corpora, |c, traj, l| inequality_checks(c, traj, p, &depths, l));
    INEQUALITIES
        .iter()
        .map(|&name| {
            let mut r = ledger.report(name);
            r.note = match name {
                "sandwich_lower" => Some("literal lower side, index ceil(x / 2k)".into()),
                "sandwich_lower_aligned" => Some("lower side restricted to x mod 2k in {0} or [k, 2k)".into()),
                "lemma52" => Some("pairs 2k <= k' from the monotone depth set".into()),
                _ => None,
            };
            r
        })
        .collect()
}

pub fn exact_suite(p: &ExactParams, seed: u64) -> Result<Vec<VerifyReport>, VerifyError> {
    let mut out = vec![walk_invariants(p, seed), oracle_equivalence(p, seed)];
    for completion in [Completion::Returned, Completion::Reached] {
        out.push(reflection_identity_check(
            &p.reflection_depths,
            &p.reflection_levels,
            p.reflection_n_max,
            completion,
        )?);
    }
    out.push(induced_walk_identity(p, seed));
    out.extend(inequality_suite(p, seed));
    for r in &mut out {
        r.seed = Some(seed);
    }
    Ok(out)
}
