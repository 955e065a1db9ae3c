//! Independent oracles and generators shared by the integration tests.
//!
//! The reference evaluator below is a direct transcription of the recursive
//! definitions with no memoization and no shared code with the library's
//! evaluator; it works on plain `Vec<Vec<f64>>` columns.

#![allow(dead_code)]

pub mod exhaustive;

use prstl::formula::{Comparator, EventFormula, InstanceFormula, TimeBound};
use rand::Rng;

/// Predicate columns, `cols[p][t]`.
#[derive(Clone, Debug)]
pub struct RefTable {
    pub names: Vec<String>,
    pub cols: Vec<Vec<f64>>,
}

impl RefTable {
    pub fn new(names: &[&str], cols: Vec<Vec<f64>>) -> Self {
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            cols,
        }
    }

    pub fn last(&self) -> usize {
        self.cols[0].len() - 1
    }

    fn get(&self, name: &str, t: usize) -> Option<f64> {
        let p = self.names.iter().position(|n| n == name)?;
        self.cols[p].get(t).copied()
    }

    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            names: self.names.clone(),
            cols: self.cols.iter().map(|c| c[offset..].to_vec()).collect(),
        }
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self {
            names: self.names.clone(),
            cols: self.cols.iter().map(|c| c[..len].to_vec()).collect(),
        }
    }
}

/// Window `[t+a, t+b]`; relaxed truncates at the last index and reports an
/// empty window as `None`.
fn window(b: &TimeBound, t: usize, table: &RefTable, relaxed: bool) -> Option<(usize, usize)> {
    let lo = t + b.start as usize;
    let hi = t + b.end as usize;
    if relaxed {
        if lo > table.last() {
            return None;
        }
        Some((lo, hi.min(table.last())))
    } else {
        Some((lo, hi))
    }
}

/// Reference probability. `None` means a missing entry or an empty window.
pub fn ref_prob(f: &EventFormula, t: usize, table: &RefTable, relaxed: bool) -> Option<f64> {
    match f {
        EventFormula::Pred(name) => table.get(name, t),
        EventFormula::Not(g) => Some(1.0 - ref_prob(g, t, table, relaxed)?),
        EventFormula::And(a, b) => {
            Some(ref_prob(a, t, table, relaxed)? * ref_prob(b, t, table, relaxed)?)
        }
        EventFormula::AndInstance(e, i) => {
            if ref_holds(i, t, table, relaxed)? {
                ref_prob(e, t, table, relaxed)
            } else {
                Some(0.0)
            }
        }
        EventFormula::Eventually(b, g) => {
            let (lo, hi) = window(b, t, table, relaxed)?;
            let mut miss = 1.0;
            for k in lo..=hi {
                miss *= 1.0 - ref_prob(g, k, table, relaxed)?;
            }
            Some(1.0 - miss)
        }
        EventFormula::Globally(b, g) => {
            let (lo, hi) = window(b, t, table, relaxed)?;
            let mut acc = 1.0;
            for k in lo..=hi {
                acc *= ref_prob(g, k, table, relaxed)?;
            }
            Some(acc)
        }
    }
}

/// Reference truth of an instance formula.
pub fn ref_holds(f: &InstanceFormula, t: usize, table: &RefTable, relaxed: bool) -> Option<bool> {
    match f {
        InstanceFormula::True => Some(true),
        InstanceFormula::Not(g) => Some(!ref_holds(g, t, table, relaxed)?),
        InstanceFormula::And(a, b) => {
            Some(ref_holds(a, t, table, relaxed)? && ref_holds(b, t, table, relaxed)?)
        }
        InstanceFormula::Until(b, l, r) => {
            let (lo, hi) = window(b, t, table, relaxed)?;
            for k in lo..=hi {
                if ref_holds(r, k, table, relaxed)? {
                    return Some(true);
                }
                if k == hi || !ref_holds(l, k, table, relaxed)? {
                    return Some(false);
                }
            }
            Some(false)
        }
        InstanceFormula::Prob {
            cmp,
            threshold,
            event,
        } => {
            let p = ref_prob(event, t, table, relaxed)?;
            Some(match cmp {
                Comparator::Lt => p < *threshold,
                Comparator::Le => p <= *threshold,
                Comparator::Ge => p >= *threshold,
                Comparator::Gt => p > *threshold,
                Comparator::Eq => p == *threshold,
            })
        }
    }
}

/// Structural horizon, written from the rules: predicates and `true` need
/// nothing, boolean operators take the max, `lhs U[a,b] rhs` needs
/// `b + max(hrz(lhs) - 1, hrz(rhs))`, and `F`/`G` are `true U` forms.
pub fn ref_hrz_event(f: &EventFormula) -> i64 {
    match f {
        EventFormula::Pred(_) => 0,
        EventFormula::Not(g) => ref_hrz_event(g),
        EventFormula::And(a, b) => ref_hrz_event(a).max(ref_hrz_event(b)),
        EventFormula::AndInstance(e, i) => ref_hrz_event(e).max(ref_hrz_instance(i)),
        EventFormula::Eventually(b, g) | EventFormula::Globally(b, g) => {
            b.end as i64 + (0i64 - 1).max(ref_hrz_event(g))
        }
    }
}

pub fn ref_hrz_instance(f: &InstanceFormula) -> i64 {
    match f {
        InstanceFormula::True => 0,
        InstanceFormula::Not(g) => ref_hrz_instance(g),
        InstanceFormula::And(a, b) => ref_hrz_instance(a).max(ref_hrz_instance(b)),
        InstanceFormula::Until(b, l, r) => {
            b.end as i64 + (ref_hrz_instance(l) - 1).max(ref_hrz_instance(r))
        }
        InstanceFormula::Prob { event, .. } => ref_hrz_event(event),
    }
}

pub const PREDICATES: [&str; 2] = ["a", "b"];

fn bound<R: Rng>(rng: &mut R, zero_start: bool, max_end: u32) -> (u32, u32) {
    let start = if zero_start { 0 } else { rng.gen_range(0..=2) };
    (start, start + rng.gen_range(0..=max_end))
}

/// Random event formula over [`PREDICATES`].
pub fn random_event<R: Rng>(rng: &mut R, depth: u32, zero_start: bool) -> EventFormula {
    if depth == 0 || rng.gen_bool(0.25) {
        return EventFormula::pred(PREDICATES[rng.gen_range(0..PREDICATES.len())]);
    }
    match rng.gen_range(0..6) {
        0 => EventFormula::not(random_event(rng, depth - 1, zero_start)),
        1 => EventFormula::and(
            random_event(rng, depth - 1, zero_start),
            random_event(rng, depth - 1, zero_start),
        ),
        2 => EventFormula::and_instance(
            random_event(rng, depth - 1, zero_start),
            random_instance(rng, depth - 1, zero_start),
        ),
        3 => {
            let (a, b) = bound(rng, zero_start, 3);
            EventFormula::eventually(a, b, random_event(rng, depth - 1, zero_start))
        }
        _ => {
            let (a, b) = bound(rng, zero_start, 3);
            EventFormula::globally(a, b, random_event(rng, depth - 1, zero_start))
        }
    }
}

/// Random instance formula over [`PREDICATES`].
pub fn random_instance<R: Rng>(rng: &mut R, depth: u32, zero_start: bool) -> InstanceFormula {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.3) {
            InstanceFormula::True
        } else {
            random_prob(rng, 0, zero_start)
        };
    }
    match rng.gen_range(0..4) {
        0 => InstanceFormula::not(random_instance(rng, depth - 1, zero_start)),
        1 => InstanceFormula::and(
            random_instance(rng, depth - 1, zero_start),
            random_instance(rng, depth - 1, zero_start),
        ),
        2 => {
            let (a, b) = bound(rng, zero_start, 3);
            InstanceFormula::until(
                a,
                b,
                random_instance(rng, depth - 1, zero_start),
                random_instance(rng, depth - 1, zero_start),
            )
        }
        _ => random_prob(rng, depth - 1, zero_start),
    }
}

fn random_prob<R: Rng>(rng: &mut R, depth: u32, zero_start: bool) -> InstanceFormula {
    let cmp = [
        Comparator::Lt,
        Comparator::Le,
        Comparator::Ge,
        Comparator::Gt,
        Comparator::Eq,
    ][rng.gen_range(0..5)];
    // Thresholds on a coarse grid keep equality comparisons meaningful.
    let threshold = rng.gen_range(0..=4) as f64 / 4.0;
    InstanceFormula::prob(cmp, threshold, random_event(rng, depth, zero_start))
}

/// Random column of probabilities in `[0, 1]`; a quarter of the entries
/// are exactly 0 or 1.
pub fn random_column<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| match rng.gen_range(0..8) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen::<f64>(),
        })
        .collect()
}

pub fn random_table<R: Rng>(rng: &mut R, len: usize) -> RefTable {
    RefTable::new(
        &PREDICATES,
        PREDICATES.iter().map(|_| random_column(rng, len)).collect(),
    )
}

/// Library table with the same contents.
pub fn lib_table(table: &RefTable) -> prstl::semantics::PredicateTable {
    prstl::semantics::PredicateTable::new(table.names.clone(), table.cols.clone(), None).unwrap()
}

/// Worked example: probabilities of the single predicate `mu` over a six-step run.
pub const TABLE_MU: [f64; 6] = [0.8, 0.7, 0.5, 0.6, 0.6, 0.7];

/// Straightforward diffusion: every source cell spreads its mass equally over
/// all in-grid cells whose center lies within `radius` cells of its own.
pub fn ref_predict(mass: &[f64], width: usize, height: usize, radius: f64) -> Vec<f64> {
    if radius < 1.0 {
        return mass.to_vec();
    }
    let mut out = vec![0.0; mass.len()];
    let reach = radius.floor() as i64;
    for row in 0..height as i64 {
        for col in 0..width as i64 {
            let m = mass[(row * width as i64 + col) as usize];
            if m == 0.0 {
                continue;
            }
            let mut cells = Vec::new();
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (r, c) = (row + dy, col + dx);
                    let inside = r >= 0 && c >= 0 && r < height as i64 && c < width as i64;
                    if inside && ((dx * dx + dy * dy) as f64) <= radius * radius + 1e-9 {
                        cells.push((r * width as i64 + c) as usize);
                    }
                }
            }
            for &cell in &cells {
                out[cell] += m / cells.len() as f64;
            }
        }
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}
