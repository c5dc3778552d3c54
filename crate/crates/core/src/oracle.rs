//! Brute-force ground truth at explicit-floor granularity.
//!
//! For tiny parameters every floor of the final stage is materialized and
//! sets become plain sorted `u64` index sets. Shifted intersections,
//! union expressions and witness classification are direct index counts.
//! None of the interval-sweep machinery of [`crate::construction`] is
//! reused here; the recursion is recomputed in fixed-width arithmetic so
//! the two implementations can check each other.

use std::collections::BTreeSet;

use num_traits::{One, ToPrimitive, Zero};

use crate::construction::{ConstructionParams, CutRule, LevelSet, Tower};
use crate::dynamics::{self, ShiftedTerm, SidonWitness};
use crate::error::Error;
use crate::rng::SplitMix64;
use crate::{Int, Rat, Result};

/// A fully materialized tower: all floors of stage `K`, plus the per-stage
/// column offsets needed to map lower-stage floors upward.
#[derive(Debug, Clone)]
pub struct ExplicitTower {
    final_stage: u32,
    /// `heights[j-1] = h_j` for `j = 1..=K`.
    heights: Vec<u64>,
    /// Floor width at the final stage.
    width: Rat,
    /// `cuts[j-1] = r_j` for `j = 1..K`.
    cuts: Vec<u64>,
    /// `offsets[j-1][c-1] = L(j,c)` for `j = 1..K`.
    offsets: Vec<Vec<u64>>,
}

impl ExplicitTower {
    pub fn final_stage(&self) -> u32 {
        self.final_stage
    }

    pub fn floor_count(&self) -> u64 {
        self.heights[self.final_stage as usize - 1]
    }

    pub fn height(&self, j: u32) -> u64 {
        self.heights[j as usize - 1]
    }

    pub fn cuts(&self, j: u32) -> u64 {
        self.cuts[j as usize - 1]
    }

    pub fn width(&self) -> &Rat {
        &self.width
    }

    pub fn offsets(&self, j: u32) -> &[u64] {
        &self.offsets[j as usize - 1]
    }

    /// Measure of an explicit floor set at the final stage.
    pub fn measure(&self, set: &BTreeSet<u64>) -> Rat {
        &self.width * Rat::from_integer(Int::from(set.len() as u64))
    }

    /// Maps a stage-`from` floor set to the final stage by walking the
    /// parent maps: floor `f` of stage `j` appears at `L(j,c) + f` for
    /// every column `c`.
    pub fn lift_floors(&self, from: u32, floors: &BTreeSet<u64>) -> BTreeSet<u64> {
        let mut current: BTreeSet<u64> = floors.clone();
        for j in from..self.final_stage {
            let mut next = BTreeSet::new();
            for off in &self.offsets[j as usize - 1] {
                for f in &current {
                    next.insert(off + f);
                }
            }
            current = next;
        }
        current
    }

    /// All floors of the stage-`j` tower, at final-stage indices.
    pub fn tower_floors(&self, j: u32) -> BTreeSet<u64> {
        self.lift_floors(j, &(0..self.height(j)).collect())
    }

    fn check_headroom(&self, set: &BTreeSet<u64>, shift: i64) -> Result<()> {
        let h = self.floor_count() as i64;
        for f in set {
            let moved = *f as i64 + shift;
            if moved < 0 || moved >= h {
                return Err(Error::HeadroomViolation {
                    stage: self.final_stage,
                    start: moved.to_string(),
                    end: (moved + 1).to_string(),
                    height: h.to_string(),
                });
            }
        }
        Ok(())
    }

    /// `mu(T^a A intersect B)` by direct floor counting: for `a >= 0` this
    /// is `w_K * |{f in A : f + a in B}|`, and negative `a` counts
    /// `{f in B : f - a in A}` instead. The shifted copy must stay inside
    /// the materialized tower.
    pub fn shifted_intersection_measure(
        &self,
        a_set: &BTreeSet<u64>,
        b_set: &BTreeSet<u64>,
        a: i64,
    ) -> Result<Rat> {
        let (source, target, step) = if a >= 0 {
            (a_set, b_set, a)
        } else {
            (b_set, a_set, -a)
        };
        self.check_headroom(source, step)?;
        let hits = source
            .iter()
            .filter(|f| target.contains(&(**f + step as u64)))
            .count();
        Ok(&self.width * Rat::from_integer(Int::from(hits as u64)))
    }

    /// Measure of a union of multi-shift intersections of one base set:
    /// each term is `{x : T^t x in A for every time t}` after the same
    /// global normalization the interval engine applies (all times raised
    /// by `c = -min(0, min t)`).
    pub fn expr_union_measure(&self, base: &BTreeSet<u64>, terms: &[Vec<i64>]) -> Result<Rat> {
        if terms.is_empty() {
            return Err(Error::EmptyInput(
                "expression needs at least one term".into(),
            ));
        }
        let c = -terms
            .iter()
            .flat_map(|t| t.iter().copied())
            .chain(std::iter::once(0))
            .min()
            .unwrap_or(0);
        let mut union: BTreeSet<u64> = BTreeSet::new();
        for term in terms {
            let mut members: Option<BTreeSet<u64>> = None;
            for t in term {
                let shift = t + c;
                self.check_headroom(base, shift)?;
                let image: BTreeSet<u64> = base.iter().map(|f| f + shift as u64).collect();
                members = Some(match members {
                    None => image,
                    Some(prev) => prev.intersection(&image).copied().collect(),
                });
            }
            if let Some(m) = members {
                union.extend(m);
            }
        }
        Ok(self.measure(&union))
    }

    /// Classifies `X_j intersect T^{-m} X_j` by the stage-`j` columns, by
    /// direct floor counting at the final stage.
    pub fn sidon_witness(&self, j: u32, m: u64) -> Result<SidonWitness> {
        if j + 1 > self.final_stage {
            return Err(Error::StageOutOfRange {
                requested: j + 1,
                available: self.final_stage,
            });
        }
        let h_j = self.height(j);
        let h_next = self.height(j + 1);
        if m <= h_j || m > h_next {
            return Err(Error::ShiftOutOfWindow {
                stage: j,
                m: m.to_string(),
                low: h_j.to_string(),
                high: h_next.to_string(),
            });
        }
        let tower = self.tower_floors(j);
        self.check_headroom(&tower, m as i64)?;
        let preimage: BTreeSet<u64> = tower
            .iter()
            .filter(|f| tower.contains(&(**f + m)))
            .copied()
            .collect();
        if preimage.is_empty() {
            return Ok(SidonWitness::Empty);
        }
        let mut hit_columns = Vec::new();
        for c in 1..=self.cuts(j) {
            let base = self.offsets[j as usize - 1][c as usize - 1];
            let column: BTreeSet<u64> = self.lift_floors(j + 1, &(base..base + h_j).collect());
            if preimage.intersection(&column).next().is_some() {
                hit_columns.push(c);
            }
        }
        match hit_columns.len() {
            0 => unreachable!("nonempty preimage must meet some column"),
            1 => Ok(SidonWitness::Column(hit_columns[0])),
            _ => Ok(SidonWitness::Violation(hit_columns)),
        }
    }
}

/// Materializes the tower up to stage `k`; refuses when `h_k` exceeds the
/// floor budget.
pub fn build_explicit(params: &ConstructionParams, k: u32, budget: u64) -> Result<ExplicitTower> {
    params.validate()?;
    if k < 1 {
        return Err(Error::InvalidParams(
            "final stage must be at least 1".into(),
        ));
    }
    let mut heights: Vec<u64> = vec![1];
    let mut cuts: Vec<u64> = Vec::new();
    let mut offsets: Vec<Vec<u64>> = Vec::new();
    let mut width = params.base_width.clone();
    for j in 1..k {
        let h = *heights.last().expect("nonempty");
        let (r, spacers) = stage_rule(params, j, h, budget)?;
        let mut offs = Vec::with_capacity(r as usize);
        let mut acc: u64 = 0;
        for s in &spacers {
            offs.push(acc);
            acc = acc.checked_add(h).and_then(|v| v.checked_add(*s)).ok_or(
                Error::FloorBudgetExceeded {
                    budget,
                    stage: j + 1,
                    floors: "overflow".into(),
                },
            )?;
        }
        if acc > budget {
            return Err(Error::FloorBudgetExceeded {
                budget,
                stage: j + 1,
                floors: acc.to_string(),
            });
        }
        heights.push(acc);
        cuts.push(r);
        offsets.push(offs);
        width /= Rat::from_integer(Int::from(r));
    }
    Ok(ExplicitTower {
        final_stage: k,
        heights,
        width,
        cuts,
        offsets,
    })
}

fn stage_rule(
    params: &ConstructionParams,
    j: u32,
    height: u64,
    budget: u64,
) -> Result<(u64, Vec<u64>)> {
    match &params.rule {
        CutRule::Sidon { d } => {
            let d = d.to_u64().ok_or_else(|| {
                Error::InvalidParams("oracle requires d to fit in 64 bits".into())
            })?;
            let r = 1u64 << j;
            let mut spacers = Vec::with_capacity(r as usize);
            let mut power = Int::one();
            for _ in 0..r {
                power *= d;
                let s =
                    (&power * Int::from(height))
                        .to_u64()
                        .ok_or(Error::FloorBudgetExceeded {
                            budget,
                            stage: j + 1,
                            floors: "overflow".into(),
                        })?;
                spacers.push(s);
            }
            Ok((r, spacers))
        }
        CutRule::Explicit { stages } => {
            let spec = stages.get(j as usize - 1).ok_or(Error::StageOutOfRange {
                requested: j,
                available: stages.len() as u32,
            })?;
            let spacers = spec
                .spacers
                .iter()
                .map(|s| {
                    s.to_u64().ok_or(Error::FloorBudgetExceeded {
                        budget,
                        stage: j + 1,
                        floors: "overflow".into(),
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            Ok((spec.cuts, spacers))
        }
    }
}

/// The two built-in tiny explicit parameter sets used for equivalence
/// checking: final heights 801 and 1904, well under the floor budget, and
/// last spacers large enough that witness windows stay computable.
pub fn builtin_tiny_parameter_sets() -> Vec<(&'static str, ConstructionParams)> {
    use crate::construction::StageSpec;
    let int = Int::from;
    vec![
        (
            "mixed-cuts-h801",
            ConstructionParams::explicit(vec![
                StageSpec {
                    cuts: 3,
                    spacers: vec![int(2), int(0), int(5)],
                },
                StageSpec {
                    cuts: 2,
                    spacers: vec![int(3), int(17)],
                },
                StageSpec {
                    cuts: 3,
                    spacers: vec![int(0), int(7), int(61)],
                },
                StageSpec {
                    cuts: 2,
                    spacers: vec![int(25), int(400)],
                },
            ]),
        ),
        (
            "doubling-geometric-h1904",
            ConstructionParams::explicit(vec![
                StageSpec {
                    cuts: 2,
                    spacers: vec![int(2), int(4)],
                },
                StageSpec {
                    cuts: 4,
                    spacers: vec![int(16), int(32), int(64), int(128)],
                },
                StageSpec {
                    cuts: 2,
                    spacers: vec![int(272), int(1088)],
                },
            ]),
        ),
    ]
}

/// Knobs for the engine-vs-oracle equivalence battery.
#[derive(Debug, Clone)]
pub struct EquivalenceOptions {
    /// Number of randomized level sets (paired up for shift sweeps).
    pub random_sets: u32,
    /// Random union-expression cases per level set.
    pub expr_cases_per_set: u32,
    pub seed: u64,
    /// Oracle floor budget.
    pub budget: u64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            random_sets: 100,
            expr_cases_per_set: 2,
            seed: 0x5eed,
            budget: 100_000,
        }
    }
}

/// Outcome of the equivalence battery; `mismatches` is empty on success.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub final_stage: u32,
    pub floor_count: u64,
    pub shift_comparisons: u64,
    pub expr_comparisons: u64,
    pub witness_comparisons: u64,
    pub refusal_checks: u64,
    pub mismatches: Vec<String>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn random_level_set(
    tower: &Tower,
    rng: &mut SplitMix64,
    max_stage: u32,
) -> Result<(LevelSet, u32, BTreeSet<u64>)> {
    let stage = 1 + (rng.next_u64() % max_stage as u64) as u32;
    let h = tower
        .height(stage)?
        .to_u64()
        .expect("tiny parameters fit u64");
    let pieces = 1 + rng.next_u64() % 5;
    let mut ranges = Vec::new();
    let mut floors: BTreeSet<u64> = BTreeSet::new();
    for _ in 0..pieces {
        let start = rng.next_u64() % h;
        let len = 1 + rng.next_u64() % 8;
        let end = (start + len).min(h);
        if start < end {
            ranges.push((Int::from(start), Int::from(end)));
            floors.extend(start..end);
        }
    }
    if ranges.is_empty() {
        ranges.push((Int::zero(), Int::one()));
        floors.insert(0);
    }
    Ok((tower.level_set(stage, ranges)?, stage, floors))
}

/// Runs the full engine-vs-oracle comparison on one tiny parameter set:
/// exhaustive shifted-intersection sweeps over paired random sets (every
/// shift with headroom at the oracle's final stage, plus identical-refusal
/// probes just outside), random union expressions, and exhaustive witness
/// classification for every stage whose admissible window fits.
pub fn equivalence_battery(
    params: &ConstructionParams,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceReport> {
    let tower = Tower::new(params.clone())?;
    let final_stage = tower.max_set_stage();
    let ex = build_explicit(params, final_stage, opts.budget)?;
    let h_k = ex.floor_count();
    let mut rng = SplitMix64::new(opts.seed);
    let mut report = EquivalenceReport {
        final_stage,
        floor_count: h_k,
        shift_comparisons: 0,
        expr_comparisons: 0,
        witness_comparisons: 0,
        refusal_checks: 0,
        mismatches: Vec::new(),
    };

    // stages below the final one host the random sets
    let source_stage_cap = final_stage - 1;
    let mut sets = Vec::with_capacity(opts.random_sets as usize);
    for _ in 0..opts.random_sets {
        let (set, stage, floors) = random_level_set(&tower, &mut rng, source_stage_cap)?;
        let lifted_floors = ex.lift_floors(stage, &floors);
        let max_floor = *max_lifted_floor(&lifted_floors);
        sets.push((set, lifted_floors, max_floor));
    }

    // Exhaustive shift sweeps over disjoint pairs. The engine sizes its
    // work stage by the larger of the two lifted sets, so the common
    // feasible band is governed by max(a_max, b_max).
    for pair in sets.chunks(2) {
        let [(a, a_fl, a_max), (b, b_fl, b_max)] = pair else {
            continue;
        };
        let common = (h_k - 1 - a_max.max(b_max)) as i64;
        for shift in -common..=common {
            let engine = dynamics::intersect_shifted_measure(&tower, a, b, &Int::from(shift))?;
            let oracle = ex.shifted_intersection_measure(a_fl, b_fl, shift)?;
            report.shift_comparisons += 1;
            if engine != oracle {
                report.mismatches.push(format!(
                    "shifted intersection mismatch at shift {shift}: engine {engine}, oracle {oracle}"
                ));
            }
        }
        // both sides must refuse the first shift that moves the taller set
        // out of the final stage
        let probe = if a_max >= b_max {
            common + 1
        } else {
            -(common + 1)
        };
        let engine = dynamics::intersect_shifted_measure(&tower, a, b, &Int::from(probe));
        let oracle = ex.shifted_intersection_measure(a_fl, b_fl, probe);
        report.refusal_checks += 1;
        if engine.is_ok() || oracle.is_ok() {
            report.mismatches.push(format!(
                "refusal mismatch at shift {probe}: engine ok = {}, oracle ok = {}",
                engine.is_ok(),
                oracle.is_ok()
            ));
        }
    }

    // random union expressions with a shared zero time
    for (set, floors, max_floor) in &sets {
        let headroom = (h_k - 1 - max_floor) as i64;
        let window = (headroom / 2).max(1);
        for _ in 0..opts.expr_cases_per_set {
            let terms: Vec<Vec<i64>> = (0..1 + rng.next_u64() % 3)
                .map(|_| {
                    let mut times = vec![0i64];
                    for _ in 0..rng.next_u64() % 3 {
                        let t = (rng.next_u64() % (2 * window as u64 + 1)) as i64 - window;
                        times.push(t);
                    }
                    times
                })
                .collect();
            let engine_terms: Vec<ShiftedTerm> =
                terms.iter().map(|t| ShiftedTerm::from_i64(t)).collect();
            let engine = dynamics::expr_union_measure(&tower, set, &engine_terms)?;
            let oracle = ex.expr_union_measure(floors, &terms)?;
            report.expr_comparisons += 1;
            if engine != oracle {
                report.mismatches.push(format!(
                    "expression mismatch for terms {terms:?}: engine {engine}, oracle {oracle}"
                ));
            }
        }
    }

    // exhaustive witness classification for stages whose window fits
    for j in 1..final_stage {
        let h_j = ex.height(j);
        let h_next = ex.height(j + 1);
        let x_j = tower.tower_set(j)?;
        let feasible = tower.choose_work_stage(&[&x_j], &Int::from(h_next)).is_ok();
        if !feasible {
            // identical refusal at the top of the window
            let engine = dynamics::sidon_witness(&tower, j, &Int::from(h_next));
            let oracle = ex.sidon_witness(j, h_next);
            report.refusal_checks += 1;
            if engine.is_ok() != oracle.is_ok() {
                report.mismatches.push(format!(
                    "witness refusal mismatch at stage {j}: engine ok = {}, oracle ok = {}",
                    engine.is_ok(),
                    oracle.is_ok()
                ));
            }
            continue;
        }
        for m in (h_j + 1)..=h_next {
            let engine = dynamics::sidon_witness(&tower, j, &Int::from(m))?;
            let oracle = ex.sidon_witness(j, m)?;
            report.witness_comparisons += 1;
            if engine != oracle {
                report.mismatches.push(format!(
                    "witness mismatch at stage {j}, m = {m}: engine {engine:?}, oracle {oracle:?}"
                ));
            }
        }
    }

    Ok(report)
}

fn max_lifted_floor(floors: &BTreeSet<u64>) -> &u64 {
    floors.iter().next_back().expect("nonempty set")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::StageSpec;

    fn int(v: i64) -> Int {
        Int::from(v)
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(int(n), int(d))
    }

    fn two_stage_params() -> ConstructionParams {
        ConstructionParams::explicit(vec![
            StageSpec {
                cuts: 2,
                spacers: vec![int(1), int(2)],
            },
            StageSpec {
                cuts: 2,
                spacers: vec![int(0), int(1)],
            },
        ])
    }

    #[test]
    fn build_trivial_tower() {
        let params = ConstructionParams::explicit(vec![StageSpec {
            cuts: 2,
            spacers: vec![int(0), int(0)],
        }]);
        let t = build_explicit(&params, 2, 100_000).unwrap();
        assert_eq!(t.floor_count(), 2);
        assert_eq!(t.width(), &rat(1, 2));
    }

    #[test]
    fn build_two_stage_tower() {
        let t = build_explicit(&two_stage_params(), 3, 100_000).unwrap();
        assert_eq!(t.height(2), 5); // 2*1 + 3
        assert_eq!(t.height(3), 11); // 2*5 + 1
        assert_eq!(t.width(), &rat(1, 4));
    }

    #[test]
    fn build_sidon_over_budget() {
        let params = ConstructionParams::sidon(11);
        let t = build_explicit(&params, 2, 100_000).unwrap();
        assert_eq!(t.floor_count(), 134);
        assert!(matches!(
            build_explicit(&params, 3, 100_000),
            Err(Error::FloorBudgetExceeded { .. })
        ));
    }

    #[test]
    fn sliding_window_measure() {
        let t = build_explicit(&two_stage_params(), 3, 100_000).unwrap();
        // h_3 = 11; a block [0, 6) slides against itself while its image
        // keeps headroom inside the materialized tower
        let block: BTreeSet<u64> = (0..6).collect();
        for a in 0..=5i64 {
            assert_eq!(
                t.shifted_intersection_measure(&block, &block, a).unwrap(),
                &rat(1, 4) * Rat::from_integer(Int::from(6 - a))
            );
        }
        // zero shift is plain intersection
        let all: BTreeSet<u64> = (0..t.floor_count()).collect();
        let evens: BTreeSet<u64> = (0..t.floor_count()).step_by(2).collect();
        assert_eq!(
            t.shifted_intersection_measure(&evens, &all, 0).unwrap(),
            t.measure(&evens)
        );
    }

    #[test]
    fn lift_floors_uses_column_offsets() {
        let t = build_explicit(&two_stage_params(), 3, 100_000).unwrap();
        // stage-2 floor 0 appears at L(2,1)=0 and L(2,2)=5 in stage 3
        let lifted = t.lift_floors(2, &BTreeSet::from([0u64]));
        assert_eq!(lifted, BTreeSet::from([0u64, 5]));
        // stage-1 floor 0 sits at 0 and 2 in stage 2, hence {0,2,5,7} in stage 3
        assert_eq!(t.tower_floors(1), BTreeSet::from([0u64, 2, 5, 7]));
    }

    #[test]
    fn headroom_is_enforced() {
        let t = build_explicit(&two_stage_params(), 3, 100_000).unwrap();
        let all: BTreeSet<u64> = (0..t.floor_count()).collect();
        assert!(matches!(
            t.shifted_intersection_measure(&all, &all, 11),
            Err(Error::HeadroomViolation { .. })
        ));
    }
}
