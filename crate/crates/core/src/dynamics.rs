//! Exact dynamics over the construction: measures of shifted-set
//! intersections, union expressions over shifted copies of one base set,
//! Sidon witness classification, mixing curves, and the summability
//! diagnostic on cut counts.
//!
//! Negative iterates are never materialized as sets. Every expression is
//! first translated in time by a global constant `c` so that all shifts
//! are nonnegative; measure is invariant under the translation, and at a
//! work stage with enough headroom every nonnegative shift is an exact
//! level translation.

use num_traits::{Signed, Zero};

use crate::construction::{intersect, symmetric_difference, union_all, LevelSet, Tower};
use crate::error::Error;
use crate::{Int, Rat, Result};

/// One expression term: the intersection of `T^t A` over `t` in `times`,
/// for a shared base set `A`. Times may repeat (intersection is
/// idempotent) and may be negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftedTerm {
    pub times: Vec<Int>,
}

impl ShiftedTerm {
    pub fn new(times: Vec<Int>) -> Self {
        ShiftedTerm { times }
    }

    pub fn from_i64(times: &[i64]) -> Self {
        ShiftedTerm {
            times: times.iter().map(|t| Int::from(*t)).collect(),
        }
    }
}

/// Which direction of the transformation the witness statistics probe.
/// `Inverse` negates every time in both displays, which is by definition
/// the statistics of the inverse transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn apply(&self, t: Int) -> Int {
        match self {
            Direction::Forward => t,
            Direction::Inverse => -t,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Inverse => "inverse",
        }
    }
}

/// Witness statistics of one stage: the two union-expression values, the
/// base measure, and the defect `mu(A delta union-of-expr1-terms)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    pub j: u32,
    pub direction: Direction,
    pub cuts: u64,
    pub mu_a: Rat,
    /// Measure of the union over `i` of `A ∩ T^{-m(j,i)}A ∩ T^{+m(j,i+1)}A`
    /// (times negated for the inverse direction).
    pub expr0: Rat,
    /// Measure of the union over `i` of `A ∩ T^{+m(j,i)}A ∩ T^{-m(j,i+1)}A`
    /// (times negated for the inverse direction).
    pub expr1: Rat,
    /// `mu(A delta U)` where `U` is the union of the `expr1` terms.
    pub union_defect: Rat,
}

/// Classification of `X_j ∩ T^{-m} X_j` by stage-`j` columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SidonWitness {
    /// The intersection is empty.
    Empty,
    /// The intersection is contained in column `c` (1-based).
    Column(u64),
    /// The intersection meets several columns: the single-column property
    /// fails at this `m`.
    Violation(Vec<u64>),
}

impl SidonWitness {
    pub fn is_violation(&self) -> bool {
        matches!(self, SidonWitness::Violation(_))
    }

    pub fn label(&self) -> String {
        match self {
            SidonWitness::Empty => "empty".into(),
            SidonWitness::Column(c) => format!("column {c}"),
            SidonWitness::Violation(cs) => format!(
                "violation {}",
                cs.iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            ),
        }
    }
}

/// `mu(T^a A ∩ B)`, exactly, for any integer `a`.
///
/// For `a < 0` the adjoint identity `mu(T^a A ∩ B) = mu(A ∩ T^{-a} B)`
/// moves the shift to the other operand, so only nonnegative shifts are
/// ever materialized.
pub fn intersect_shifted_measure(
    tower: &Tower,
    a_set: &LevelSet,
    b_set: &LevelSet,
    a: &Int,
) -> Result<Rat> {
    if a_set.is_empty() || b_set.is_empty() {
        return Ok(Rat::zero());
    }
    let (moved, fixed, step) = if a.is_negative() {
        (b_set, a_set, -a)
    } else {
        (a_set, b_set, a.clone())
    };
    let k = tower.choose_work_stage(&[moved, fixed], &step)?;
    let moved_k = tower.shift(&tower.lift(moved, k)?, &step)?;
    let fixed_k = tower.lift(fixed, k)?;
    tower.measure(&intersect(&moved_k, &fixed_k)?)
}

/// The union of the term intersections, materialized at a common work
/// stage after the global time normalization. Returns the translated set
/// together with the translation constant `c` and the work stage; the
/// returned set is the `T^c` image of the true union, so its measure is
/// the expression value.
pub fn expr_union_set(
    tower: &Tower,
    base: &LevelSet,
    terms: &[ShiftedTerm],
) -> Result<(LevelSet, Int, u32)> {
    if terms.is_empty() {
        return Err(Error::EmptyInput(
            "expression needs at least one term".into(),
        ));
    }
    for term in terms {
        if term.times.is_empty() {
            return Err(Error::EmptyInput(
                "expression term needs at least one time".into(),
            ));
        }
    }
    let zero = Int::zero();
    let min_time = terms
        .iter()
        .flat_map(|t| t.times.iter())
        .min()
        .cloned()
        .expect("terms nonempty");
    let c = if min_time < zero { -min_time } else { zero };
    let max_norm = terms
        .iter()
        .flat_map(|t| t.times.iter())
        .map(|t| t + &c)
        .max()
        .expect("terms nonempty");
    if base.is_empty() {
        return Ok((LevelSet::empty(base.stage()), c, base.stage()));
    }
    let k = tower.choose_work_stage(&[base], &max_norm)?;
    let base_k = tower.lift(base, k)?;
    let mut term_sets = Vec::with_capacity(terms.len());
    for term in terms {
        let mut shifts: Vec<Int> = term.times.iter().map(|t| t + &c).collect();
        shifts.sort();
        shifts.dedup();
        let mut acc: Option<LevelSet> = None;
        for s in &shifts {
            let image = tower.shift(&base_k, s)?;
            acc = Some(match acc {
                None => image,
                Some(prev) => intersect(&prev, &image)?,
            });
        }
        term_sets.push(acc.expect("term has at least one time"));
    }
    let union = union_all(term_sets.iter())?.expect("at least one term");
    Ok((union, c, k))
}

/// Exact measure of the union of term intersections.
pub fn expr_union_measure(tower: &Tower, base: &LevelSet, terms: &[ShiftedTerm]) -> Result<Rat> {
    let (set, _, _) = expr_union_set(tower, base, terms)?;
    tower.measure(&set)
}

fn display_terms(times: &[Int], direction: Direction, negate_first: bool) -> Vec<ShiftedTerm> {
    // terms i = 1..=r-2 with times (0, -m_i, +m_{i+1}) or (0, +m_i, -m_{i+1})
    (0..times.len() - 2)
        .map(|i| {
            let (first, second) = if negate_first {
                (-times[i].clone(), times[i + 1].clone())
            } else {
                (times[i].clone(), -times[i + 1].clone())
            };
            ShiftedTerm::new(vec![
                Int::zero(),
                direction.apply(first),
                direction.apply(second),
            ])
        })
        .collect()
}

/// Witness statistics at stage `j` for base set `A`.
///
/// Requires `r_j >= 3` (the displays sum over `i = 1..=r_j - 2`) and `A`
/// representable at a stage not above `j`.
pub fn witness_stats(
    tower: &Tower,
    base: &LevelSet,
    j: u32,
    direction: Direction,
) -> Result<WitnessReport> {
    if base.stage() > j {
        return Err(Error::InvalidParams(format!(
            "base set lives at stage {} which is above the witness stage {}",
            base.stage(),
            j
        )));
    }
    let geom = tower.geometry(j)?;
    if geom.cuts < 3 {
        return Err(Error::DegenerateCutCount {
            stage: j,
            cuts: geom.cuts,
        });
    }
    let mu_a = tower.measure(base)?;
    let terms0 = display_terms(&geom.return_times, direction, true);
    let terms1 = display_terms(&geom.return_times, direction, false);
    let expr0 = expr_union_measure(tower, base, &terms0)?;
    let (union1, c1, k1) = expr_union_set(tower, base, &terms1)?;
    let expr1 = tower.measure(&union1)?;
    let union_defect = if base.is_empty() {
        Rat::zero()
    } else {
        // compare T^c A with the translated union at the same stage
        let base_translated = tower.shift(&tower.lift(base, k1)?, &c1)?;
        tower.measure(&symmetric_difference(&base_translated, &union1)?)?
    };
    Ok(WitnessReport {
        j,
        direction,
        cuts: geom.cuts,
        mu_a,
        expr0,
        expr1,
        union_defect,
    })
}

/// Classifies `X_j ∩ T^{-m} X_j` for `h_j < m <= h_{j+1}`.
///
/// The intersection is computed as `T^{-m}(T^m X_j ∩ X_j)` at a work
/// stage with headroom for `m`, then tested against each lifted column
/// `[L(j,c), L(j,c) + h_j)`.
pub fn sidon_witness(tower: &Tower, j: u32, m: &Int) -> Result<SidonWitness> {
    let geom = tower.geometry(j)?;
    let h_next = tower.height(j + 1)?;
    if m <= &geom.height || m > &h_next {
        return Err(Error::ShiftOutOfWindow {
            stage: j,
            m: m.to_string(),
            low: geom.height.to_string(),
            high: h_next.to_string(),
        });
    }
    let x_j = tower.tower_set(j)?;
    let k = tower.choose_work_stage(&[&x_j], m)?;
    let x_k = tower.lift(&x_j, k)?;
    let overlap = intersect(&tower.shift(&x_k, m)?, &x_k)?;
    if overlap.is_empty() {
        return Ok(SidonWitness::Empty);
    }
    let preimage = tower.shift(&overlap, &-m.clone())?;
    let mut hit_columns = Vec::new();
    for c in 0..geom.cuts as usize {
        let column = tower.level_set(
            j + 1,
            vec![(geom.offsets[c].clone(), &geom.offsets[c] + &geom.height)],
        )?;
        let column_k = tower.lift(&column, k)?;
        if !intersect(&preimage, &column_k)?.is_empty() {
            hit_columns.push(c as u64 + 1);
        }
    }
    match hit_columns.len() {
        0 => unreachable!("nonempty subset of X_j meets some column"),
        1 => Ok(SidonWitness::Column(hit_columns[0])),
        _ => Ok(SidonWitness::Violation(hit_columns)),
    }
}

/// Exact decay curve `n -> mu(T^n A ∩ B)`, in input order.
pub fn mixing_curve(
    tower: &Tower,
    a_set: &LevelSet,
    b_set: &LevelSet,
    ns: &[Int],
) -> Result<Vec<(Int, Rat)>> {
    if ns.is_empty() {
        return Err(Error::EmptyInput(
            "mixing curve needs at least one n".into(),
        ));
    }
    ns.iter()
        .map(|n| {
            Ok((
                n.clone(),
                intersect_shifted_measure(tower, a_set, b_set, n)?,
            ))
        })
        .collect()
}

/// Partial sums of `sum_j 1/r_j` up to stage `j_max`: the summability
/// diagnostic on the cut counts.
pub fn spectral_condition_report(tower: &Tower, j_max: u32) -> Result<Vec<(u32, Rat)>> {
    if j_max < 1 {
        return Err(Error::InvalidParams("need at least one stage".into()));
    }
    let mut out = Vec::with_capacity(j_max as usize);
    let mut acc = Rat::zero();
    for j in 1..=j_max {
        let geom = tower.geometry(j)?;
        acc += Rat::new(Int::from(1u8), Int::from(geom.cuts));
        out.push((j, acc.clone()));
    }
    Ok(out)
}

/// How the admissible window `(h_j, h_{j+1}]` was covered by a scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanMode {
    /// Every admissible `m` was tested.
    Exhaustive,
    /// Structured sample: a window of `delta` around every return time
    /// `m(j,i)`, plus `random` seeded draws from the whole window.
    Sampled { delta: Int, random: u64, seed: u64 },
}

impl ScanMode {
    pub fn label(&self) -> String {
        match self {
            ScanMode::Exhaustive => "exhaustive".into(),
            ScanMode::Sampled {
                delta,
                random,
                seed,
            } => {
                format!("sampled(return-times +/- {delta}, {random} random draws, seed {seed})")
            }
        }
    }
}

/// Result of scanning the admissible window at stage `j`.
#[derive(Debug, Clone)]
pub struct SidonScan {
    pub j: u32,
    pub mode: ScanMode,
    /// `(m, witness)` for every tested shift, in increasing `m`.
    pub results: Vec<(Int, SidonWitness)>,
}

impl SidonScan {
    pub fn violations(&self) -> Vec<&Int> {
        self.results
            .iter()
            .filter(|(_, w)| w.is_violation())
            .map(|(m, _)| m)
            .collect()
    }
}

/// Scans the single-column property over `(h_j, h_{j+1}]`: exhaustively
/// when the window has at most `budget` shifts, otherwise over a
/// structured sample (return times plus or minus up to `h_j`, where
/// column re-alignments can occur, plus seeded random draws).
pub fn sidon_scan(
    tower: &Tower,
    j: u32,
    budget: &Int,
    random_samples: u64,
    seed: u64,
) -> Result<SidonScan> {
    use num_traits::One;

    let geom = tower.geometry(j)?;
    let h_j = geom.height.clone();
    let h_next = tower.height(j + 1)?;
    let window = &h_next - &h_j;
    let mut ms: Vec<Int> = Vec::new();
    let mode = if &window <= budget {
        let mut m = &h_j + Int::one();
        while m <= h_next {
            ms.push(m.clone());
            m += Int::one();
        }
        ScanMode::Exhaustive
    } else {
        for m_i in &geom.return_times {
            let mut delta = -h_j.clone();
            while delta <= h_j {
                let m = m_i + &delta;
                if m > h_j && m <= h_next {
                    ms.push(m);
                }
                delta += Int::one();
            }
        }
        let mut rng = crate::rng::SplitMix64::new(seed);
        for _ in 0..random_samples {
            let m = &h_j + Int::one() + rng.next_below(&window);
            ms.push(m);
        }
        ms.sort();
        ms.dedup();
        ScanMode::Sampled {
            delta: h_j.clone(),
            random: random_samples,
            seed,
        }
    };
    let results = ms
        .into_iter()
        .map(|m| Ok((m.clone(), sidon_witness(tower, j, &m)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SidonScan { j, mode, results })
}
