//! Tower recursion and the exact level-set algebra.
//!
//! A stage-`j` tower is a stack of `h_j` disjoint floors of width `w_j`.
//! Stage `j+1` cuts the tower into `r_j` columns, inserts `s_j(i)` spacer
//! floors above column `i`, and restacks, so
//!
//! ```text
//! h_{j+1} = r_j * h_j + sum_i s_j(i)        w_{j+1} = w_j / r_j
//! ```
//!
//! Finite-measure sets are represented as [`LevelSet`]s: sorted disjoint
//! half-open ranges of floor levels at a fixed stage. All arithmetic is
//! arbitrary-precision; measures are exact rationals.

use std::sync::{Arc, Mutex};

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::{Int, Rat, Result};

/// Hard guard on materialized cut counts (offsets/spacers per stage).
const MAX_MATERIALIZED_CUTS: u64 = 1_000_000;

/// The cutting-and-stacking recipe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CutRule {
    /// Built-in Sidon-type family: `r_j = 2^j` cuts and geometrically
    /// growing spacers `s_j(i) = d^i * h_j`. The Sidon single-column
    /// property is expected for `d > 10` and checked, never assumed.
    Sidon { d: Int },
    /// Fully explicit cut counts and spacer vectors, one entry per stage.
    Explicit { stages: Vec<StageSpec> },
}

/// One stage of an explicit rule: `cuts = r_j`, `spacers = s_j(1..r_j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSpec {
    pub cuts: u64,
    pub spacers: Vec<Int>,
}

/// The rank-one recipe: floor width of stage 1 plus the cutting rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionParams {
    pub base_width: Rat,
    pub rule: CutRule,
}

impl ConstructionParams {
    pub fn sidon(d: impl Into<Int>) -> Self {
        ConstructionParams {
            base_width: Rat::one(),
            rule: CutRule::Sidon { d: d.into() },
        }
    }

    pub fn explicit(stages: Vec<StageSpec>) -> Self {
        ConstructionParams {
            base_width: Rat::one(),
            rule: CutRule::Explicit { stages },
        }
    }

    pub fn with_base_width(mut self, w: Rat) -> Self {
        self.base_width = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base_width.is_positive() {
            return Err(Error::InvalidParams(format!(
                "base_width must be positive, got {}",
                self.base_width
            )));
        }
        match &self.rule {
            CutRule::Sidon { d } => {
                if d < &Int::from(2u8) {
                    return Err(Error::InvalidParams(format!(
                        "Sidon rule requires d >= 2, got {d}"
                    )));
                }
            }
            CutRule::Explicit { stages } => {
                if stages.is_empty() {
                    return Err(Error::InvalidParams(
                        "explicit rule requires at least one stage".into(),
                    ));
                }
                for (idx, st) in stages.iter().enumerate() {
                    if st.cuts < 2 {
                        return Err(Error::InvalidParams(format!(
                            "stage {} has cut count {}, need >= 2",
                            idx + 1,
                            st.cuts
                        )));
                    }
                    if st.spacers.len() as u64 != st.cuts {
                        return Err(Error::InvalidParams(format!(
                            "stage {} has {} spacer entries for {} cuts",
                            idx + 1,
                            st.spacers.len(),
                            st.cuts
                        )));
                    }
                    if st.spacers.iter().any(|s| s.is_negative()) {
                        return Err(Error::InvalidParams(format!(
                            "stage {} has a negative spacer count",
                            idx + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// True when the rule is the Sidon family with `d > 10`, the regime the
    /// single-column property is asserted for. Smaller `d` is allowed (it
    /// enables oracle-scale tests) but should be flagged by front ends.
    pub fn sidon_hypothesis_satisfied(&self) -> bool {
        matches!(&self.rule, CutRule::Sidon { d } if d > &Int::from(10u8))
    }
}

/// Resource guards: maximum stage the engine will touch and maximum range
/// count a lifted set may reach. Both fail loudly instead of exhausting
/// memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerCaps {
    pub stage_cap: u32,
    pub range_cap: usize,
}

impl Default for TowerCaps {
    fn default() -> Self {
        TowerCaps {
            stage_cap: 12,
            range_cap: 10_000_000,
        }
    }
}

/// Geometry of one stage: height, floor width, cut count, spacer vector,
/// column base offsets `L(j,c)` inside stage `j+1`, and the return times
/// `m(j,i) = h_j + s_j(i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageGeometry {
    pub stage: u32,
    pub height: Int,
    pub width: Rat,
    pub cuts: u64,
    pub spacers: Vec<Int>,
    pub offsets: Vec<Int>,
    pub return_times: Vec<Int>,
}

impl StageGeometry {
    /// Height of the next stage: `r_j * h_j + sum_i s_j(i)`.
    pub fn stacked_height(&self) -> Int {
        let spacer_sum: Int = self.spacers.iter().sum();
        Int::from(self.cuts) * &self.height + spacer_sum
    }

    /// Floor width of the next stage: `w_j / r_j`.
    pub fn stacked_width(&self) -> Rat {
        &self.width / Rat::from_integer(Int::from(self.cuts))
    }
}

/// A finite-measure set: sorted, disjoint, non-adjacent half-open level
/// ranges `[a, b)` within `[0, h_stage)`. The canonical form makes
/// equality structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LevelSet {
    stage: u32,
    ranges: Vec<(Int, Int)>,
}

impl LevelSet {
    pub fn empty(stage: u32) -> Self {
        LevelSet {
            stage,
            ranges: Vec::new(),
        }
    }

    /// Canonicalizes arbitrary (possibly overlapping, unsorted) ranges.
    /// Empty input ranges are rejected by `Tower::level_set`; internal
    /// callers never produce them.
    pub(crate) fn from_raw(stage: u32, mut ranges: Vec<(Int, Int)>) -> Self {
        ranges.retain(|(a, b)| a < b);
        ranges.sort();
        let mut out: Vec<(Int, Int)> = Vec::with_capacity(ranges.len());
        for (a, b) in ranges {
            match out.last_mut() {
                Some((_, e)) if *e >= a => {
                    if b > *e {
                        *e = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        LevelSet { stage, ranges: out }
    }

    /// Canonicalizes ranges already sorted and pairwise disjoint (only
    /// adjacency merging is needed).
    pub(crate) fn from_sorted_disjoint(stage: u32, ranges: Vec<(Int, Int)>) -> Self {
        let mut out: Vec<(Int, Int)> = Vec::with_capacity(ranges.len());
        for (a, b) in ranges {
            debug_assert!(a < b);
            match out.last_mut() {
                Some((_, e)) if *e == a => *e = b,
                _ => out.push((a, b)),
            }
        }
        LevelSet { stage, ranges: out }
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn ranges(&self) -> &[(Int, Int)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Total number of levels covered, `sum (b - a)`.
    pub fn level_count(&self) -> Int {
        self.ranges.iter().map(|(a, b)| b - a).sum()
    }

    /// Largest covered level, `None` for the empty set.
    pub fn max_level(&self) -> Option<Int> {
        self.ranges.last().map(|(_, b)| b - Int::one())
    }

    /// Membership test for a single level.
    pub fn contains(&self, level: &Int) -> bool {
        let idx = self.ranges.partition_point(|(a, _)| a <= level);
        idx > 0 && level < &self.ranges[idx - 1].1
    }
}

fn check_same_stage(a: &LevelSet, b: &LevelSet) -> Result<()> {
    if a.stage != b.stage {
        return Err(Error::StageMismatch {
            left: a.stage,
            right: b.stage,
        });
    }
    Ok(())
}

/// Boolean combination of two canonical sets by a boundary sweep.
fn combine(a: &LevelSet, b: &LevelSet, keep: impl Fn(bool, bool) -> bool) -> Result<LevelSet> {
    check_same_stage(a, b)?;
    let mut bounds: Vec<Int> = Vec::with_capacity(2 * (a.ranges.len() + b.ranges.len()));
    for (s, e) in a.ranges.iter().chain(b.ranges.iter()) {
        bounds.push(s.clone());
        bounds.push(e.clone());
    }
    bounds.sort();
    bounds.dedup();
    let mut out: Vec<(Int, Int)> = Vec::new();
    let mut ia = 0;
    let mut ib = 0;
    for w in bounds.windows(2) {
        let x = &w[0];
        let y = &w[1];
        while ia < a.ranges.len() && &a.ranges[ia].1 <= x {
            ia += 1;
        }
        while ib < b.ranges.len() && &b.ranges[ib].1 <= x {
            ib += 1;
        }
        let in_a = ia < a.ranges.len() && &a.ranges[ia].0 <= x;
        let in_b = ib < b.ranges.len() && &b.ranges[ib].0 <= x;
        if keep(in_a, in_b) {
            match out.last_mut() {
                Some((_, e)) if e == x => *e = y.clone(),
                _ => out.push((x.clone(), y.clone())),
            }
        }
    }
    Ok(LevelSet {
        stage: a.stage,
        ranges: out,
    })
}

/// Set union; operands must share a stage.
pub fn union(a: &LevelSet, b: &LevelSet) -> Result<LevelSet> {
    combine(a, b, |x, y| x || y)
}

/// Set intersection; operands must share a stage.
pub fn intersect(a: &LevelSet, b: &LevelSet) -> Result<LevelSet> {
    combine(a, b, |x, y| x && y)
}

/// Set difference `a \ b`; operands must share a stage.
pub fn difference(a: &LevelSet, b: &LevelSet) -> Result<LevelSet> {
    combine(a, b, |x, y| x && !y)
}

/// Symmetric difference; operands must share a stage.
pub fn symmetric_difference(a: &LevelSet, b: &LevelSet) -> Result<LevelSet> {
    combine(a, b, |x, y| x != y)
}

/// Union of arbitrarily many sets at one stage.
pub fn union_all<'a>(sets: impl IntoIterator<Item = &'a LevelSet>) -> Result<Option<LevelSet>> {
    let mut acc: Option<LevelSet> = None;
    for s in sets {
        acc = Some(match acc {
            None => s.clone(),
            Some(prev) => union(&prev, s)?,
        });
    }
    Ok(acc)
}

/// A construction instance: parameters, resource caps, and a memoized
/// stage-geometry table. All operations are pure; the memo table is an
/// idempotent cache behind a mutex, so a `Tower` can be shared across
/// threads.
#[derive(Debug)]
pub struct Tower {
    params: ConstructionParams,
    caps: TowerCaps,
    cache: Mutex<Vec<Arc<StageGeometry>>>,
}

impl Tower {
    pub fn new(params: ConstructionParams) -> Result<Self> {
        Self::with_caps(params, TowerCaps::default())
    }

    pub fn with_caps(params: ConstructionParams, caps: TowerCaps) -> Result<Self> {
        params.validate()?;
        if caps.stage_cap < 1 {
            return Err(Error::InvalidParams("stage cap must be at least 1".into()));
        }
        Ok(Tower {
            params,
            caps,
            cache: Mutex::new(Vec::new()),
        })
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn caps(&self) -> &TowerCaps {
        &self.caps
    }

    /// Largest stage with full cutting data (`r_j`, spacers, offsets).
    pub fn max_geometry_stage(&self) -> u32 {
        match &self.params.rule {
            CutRule::Sidon { .. } => self.caps.stage_cap,
            CutRule::Explicit { stages } => (stages.len() as u32).min(self.caps.stage_cap),
        }
    }

    /// Largest stage at which level sets may live: one past the last
    /// cutting stage (its height and width are determined by it).
    pub fn max_set_stage(&self) -> u32 {
        match &self.params.rule {
            CutRule::Sidon { .. } => self.caps.stage_cap,
            CutRule::Explicit { stages } => (stages.len() as u32 + 1).min(self.caps.stage_cap),
        }
    }

    fn rule_stage(&self, j: u32, height: &Int) -> Result<(u64, Vec<Int>)> {
        match &self.params.rule {
            CutRule::Sidon { d } => {
                if j >= 64 {
                    return Err(Error::StageCapExceeded {
                        cap: self.caps.stage_cap,
                        context: format!("Sidon cut count 2^{j} cannot be materialized"),
                    });
                }
                let cuts = 1u64 << j;
                if cuts > MAX_MATERIALIZED_CUTS {
                    return Err(Error::StageCapExceeded {
                        cap: self.caps.stage_cap,
                        context: format!("Sidon cut count 2^{j} exceeds the materialization guard"),
                    });
                }
                let mut spacers = Vec::with_capacity(cuts as usize);
                let mut power = Int::one();
                for _ in 0..cuts {
                    power *= d;
                    spacers.push(&power * height);
                }
                Ok((cuts, spacers))
            }
            CutRule::Explicit { stages } => {
                let spec = stages.get(j as usize - 1).ok_or(Error::StageOutOfRange {
                    requested: j,
                    available: stages.len() as u32,
                })?;
                Ok((spec.cuts, spec.spacers.clone()))
            }
        }
    }

    /// Stage geometry, memoized. Stage indices start at 1.
    pub fn geometry(&self, j: u32) -> Result<Arc<StageGeometry>> {
        if j < 1 {
            return Err(Error::InvalidParams("stage indices start at 1".into()));
        }
        if j > self.max_geometry_stage() {
            return match &self.params.rule {
                CutRule::Explicit { stages } if j > stages.len() as u32 => {
                    Err(Error::StageOutOfRange {
                        requested: j,
                        available: stages.len() as u32,
                    })
                }
                _ => Err(Error::StageCapExceeded {
                    cap: self.caps.stage_cap,
                    context: format!("geometry of stage {j} requested"),
                }),
            };
        }
        let mut cache = self.cache.lock().expect("geometry cache poisoned");
        while cache.len() < j as usize {
            let next_stage = cache.len() as u32 + 1;
            let (height, width) = match cache.last() {
                None => (Int::one(), self.params.base_width.clone()),
                Some(prev) => (prev.stacked_height(), prev.stacked_width()),
            };
            let (cuts, spacers) = self.rule_stage(next_stage, &height)?;
            let mut offsets = Vec::with_capacity(cuts as usize);
            let mut return_times = Vec::with_capacity(cuts as usize);
            let mut offset = Int::zero();
            for s in &spacers {
                offsets.push(offset.clone());
                let m = &height + s;
                offset += &m;
                return_times.push(m);
            }
            cache.push(Arc::new(StageGeometry {
                stage: next_stage,
                height,
                width,
                cuts,
                spacers,
                offsets,
                return_times,
            }));
        }
        Ok(cache[j as usize - 1].clone())
    }

    /// Tower height `h_j`; defined one stage past the last cutting stage.
    pub fn height(&self, j: u32) -> Result<Int> {
        if j >= 2 && j == self.max_geometry_stage() + 1 && j <= self.max_set_stage() {
            return Ok(self.geometry(j - 1)?.stacked_height());
        }
        Ok(self.geometry(j)?.height.clone())
    }

    /// Floor width `w_j`; defined one stage past the last cutting stage.
    pub fn width(&self, j: u32) -> Result<Rat> {
        if j >= 2 && j == self.max_geometry_stage() + 1 && j <= self.max_set_stage() {
            return Ok(self.geometry(j - 1)?.stacked_width());
        }
        Ok(self.geometry(j)?.width.clone())
    }

    /// The full stage-`j` tower `X_j` as a level set: `[0, h_j)`.
    pub fn tower_set(&self, j: u32) -> Result<LevelSet> {
        let h = self.height(j)?;
        Ok(LevelSet {
            stage: j,
            ranges: vec![(Int::zero(), h)],
        })
    }

    /// Validated level-set constructor from raw ranges.
    pub fn level_set(&self, stage: u32, ranges: Vec<(Int, Int)>) -> Result<LevelSet> {
        let h = self.height(stage)?;
        for (a, b) in &ranges {
            if a.is_negative() || a >= b || b > &h {
                return Err(Error::InvalidParams(format!(
                    "range [{a}, {b}) is not a nonempty subrange of [0, {h}) at stage {stage}"
                )));
            }
        }
        Ok(LevelSet::from_raw(stage, ranges))
    }

    /// Exact measure `w_stage * level_count`.
    pub fn measure(&self, set: &LevelSet) -> Result<Rat> {
        Ok(self.width(set.stage)? * Rat::from_integer(set.level_count()))
    }

    /// Translates every range by `a` (may be negative); errors when any
    /// shifted range leaves `[0, h_stage)`.
    pub fn shift(&self, set: &LevelSet, a: &Int) -> Result<LevelSet> {
        let h = self.height(set.stage)?;
        let mut ranges = Vec::with_capacity(set.ranges.len());
        for (s, e) in &set.ranges {
            let ns = s + a;
            let ne = e + a;
            if ns.is_negative() || ne > h {
                return Err(Error::HeadroomViolation {
                    stage: set.stage,
                    start: ns.to_string(),
                    end: ne.to_string(),
                    height: h.to_string(),
                });
            }
            ranges.push((ns, ne));
        }
        Ok(LevelSet {
            stage: set.stage,
            ranges,
        })
    }

    /// Lifts a set to a higher stage: one-stage lifting maps each range to
    /// its `r_j` column copies at offsets `L(j,c)`; multi-stage lifting
    /// composes. Measure is preserved exactly.
    pub fn lift(&self, set: &LevelSet, target: u32) -> Result<LevelSet> {
        if target < set.stage {
            return Err(Error::InvalidParams(format!(
                "cannot lift from stage {} down to {}",
                set.stage, target
            )));
        }
        if target > self.max_set_stage() {
            return Err(Error::StageCapExceeded {
                cap: self.caps.stage_cap,
                context: format!("lift to stage {target} requested"),
            });
        }
        let mut current = set.clone();
        for j in set.stage..target {
            let geom = self.geometry(j)?;
            let new_len = current.ranges.len().saturating_mul(geom.cuts as usize);
            if new_len > self.caps.range_cap {
                return Err(Error::RangeCapExceeded {
                    cap: self.caps.range_cap,
                    stage: j + 1,
                });
            }
            let mut ranges = Vec::with_capacity(new_len);
            for off in &geom.offsets {
                for (a, b) in &current.ranges {
                    ranges.push((off + a, off + b));
                }
            }
            current = LevelSet::from_sorted_disjoint(j + 1, ranges);
        }
        Ok(current)
    }

    /// Maximum level the set reaches once lifted to stage `k`, without
    /// materializing the lift: each one-stage lift adds the last column
    /// offset `L(j, r_j)`. `None` for empty sets.
    pub fn lifted_max_level(&self, set: &LevelSet, k: u32) -> Result<Option<Int>> {
        let Some(mut level) = set.max_level() else {
            return Ok(None);
        };
        for j in set.stage..k {
            let geom = self.geometry(j)?;
            level += geom.offsets.last().expect("cuts >= 2");
        }
        Ok(Some(level))
    }

    /// Smallest work stage `K >= max(set stages)` whose tower keeps every
    /// lifted level plus `max_abs_shift` strictly inside `[0, h_K)`. At
    /// such a stage, iterating the transformation up to `max_abs_shift`
    /// times is an exact level translation on the lifted sets.
    pub fn choose_work_stage(&self, sets: &[&LevelSet], max_abs_shift: &Int) -> Result<u32> {
        if sets.is_empty() {
            return Err(Error::EmptyInput("choose_work_stage needs a set".into()));
        }
        if max_abs_shift.is_negative() {
            return Err(Error::InvalidParams(
                "max_abs_shift must be nonnegative".into(),
            ));
        }
        let start = sets.iter().map(|s| s.stage).max().expect("nonempty");
        if sets.iter().all(|s| s.is_empty()) {
            return Ok(start);
        }
        let top = self.max_set_stage();
        for k in start..=top {
            let mut max_level = Int::zero();
            for set in sets {
                if let Some(lvl) = self.lifted_max_level(set, k)? {
                    max_level = max_level.max(lvl);
                }
            }
            if &max_level + max_abs_shift < self.height(k)? {
                return Ok(k);
            }
        }
        Err(Error::StageCapExceeded {
            cap: top,
            context: format!("no stage up to {top} has headroom for shift {max_abs_shift}"),
        })
    }
}
