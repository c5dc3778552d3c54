//! The Poisson suspension over the construction: exact cylinder measures,
//! joint count distributions under shifts, mixing gaps, and a seeded
//! configuration sampler with a Monte Carlo cross-check.
//!
//! Probabilities produced by pure products are held exactly as
//! `coeff * exp(-rate)` pairs; only differences and CDF walks go through
//! the high-precision evaluator, with an explicit precision.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::construction::{intersect, union_all, LevelSet, Tower};
use crate::error::Error;
use crate::hp;
use crate::rng::{derive_stream, SplitMix64};
use crate::{Int, Rat, Result};

/// A probability held exactly as `coeff * exp(-rate)`, both rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPoissonValue {
    pub coeff: Rat,
    pub rate: Rat,
}

impl ExactPoissonValue {
    pub fn one() -> Self {
        ExactPoissonValue {
            coeff: Rat::one(),
            rate: Rat::zero(),
        }
    }

    pub fn zero() -> Self {
        ExactPoissonValue {
            coeff: Rat::zero(),
            rate: Rat::zero(),
        }
    }

    pub fn new(coeff: Rat, rate: Rat) -> Self {
        debug_assert!(!coeff.is_negative() && !rate.is_negative());
        ExactPoissonValue { coeff, rate }
    }

    /// High-precision rational approximation of the value, relative error
    /// below `10^-sig` (exact zero for zero coefficient).
    pub fn eval(&self, sig: u32) -> Rat {
        if self.coeff.is_zero() {
            return Rat::zero();
        }
        &self.coeff * hp::exp_neg(&self.rate, sig)
    }

    /// Decimal rendering at `sig` significant digits.
    pub fn render(&self, sig: u32) -> String {
        hp::render_sig(&self.eval(sig + 10), sig)
    }
}

impl std::ops::Mul<&ExactPoissonValue> for &ExactPoissonValue {
    type Output = ExactPoissonValue;

    fn mul(self, rhs: &ExactPoissonValue) -> ExactPoissonValue {
        ExactPoissonValue {
            coeff: &self.coeff * &rhs.coeff,
            rate: &self.rate + &rhs.rate,
        }
    }
}

/// Caps on exact Poisson computations: factor and count caps keep the
/// atom-composition enumeration trivially small, and the sampler refuses
/// rates beyond the CDF-inversion regime.
#[derive(Debug, Clone)]
pub struct PoissonCaps {
    pub max_factors: usize,
    pub max_count: u32,
    pub rate_cap: Rat,
}

impl Default for PoissonCaps {
    fn default() -> Self {
        PoissonCaps {
            max_factors: 4,
            max_count: 8,
            rate_cap: Rat::from_integer(Int::from(30u8)),
        }
    }
}

/// A cylinder event: exactly `k_i` points in `A_i`, for pairwise disjoint
/// `A_i`.
#[derive(Debug, Clone)]
pub struct CylinderSpec {
    pub parts: Vec<(LevelSet, u32)>,
}

impl CylinderSpec {
    pub fn new(parts: Vec<(LevelSet, u32)>) -> Self {
        CylinderSpec { parts }
    }
}

/// `mu_o(⋂ C(A_i, k_i)) = prod mu(A_i)^{k_i} / k_i! * exp(-mu(A_i))`,
/// exactly. Parts must be pairwise disjoint after lifting to a common
/// stage; an empty spec is the whole space (probability one).
pub fn cylinder_measure(
    tower: &Tower,
    spec: &CylinderSpec,
    caps: &PoissonCaps,
) -> Result<ExactPoissonValue> {
    if spec.parts.is_empty() {
        return Ok(ExactPoissonValue::one());
    }
    for (_, k) in &spec.parts {
        if *k > caps.max_count {
            return Err(Error::CountCapExceeded {
                count: *k,
                cap: caps.max_count,
            });
        }
    }
    let top = spec
        .parts
        .iter()
        .map(|(a, _)| a.stage())
        .max()
        .expect("nonempty");
    let lifted: Vec<LevelSet> = spec
        .parts
        .iter()
        .map(|(a, _)| tower.lift(a, top))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..lifted.len() {
        for j in (i + 1)..lifted.len() {
            let overlap = intersect(&lifted[i], &lifted[j])?;
            if !overlap.is_empty() {
                return Err(Error::OverlappingParts {
                    left: i,
                    right: j,
                    measure: tower.measure(&overlap)?.to_string(),
                });
            }
        }
    }
    let mut value = ExactPoissonValue::one();
    for ((_, k), set) in spec.parts.iter().zip(lifted.iter()) {
        let mu = tower.measure(set)?;
        let mut coeff = Rat::one();
        for i in 1..=*k {
            coeff = coeff * &mu / Rat::from_integer(Int::from(i));
        }
        value = &value * &ExactPoissonValue { coeff, rate: mu };
    }
    Ok(value)
}

/// One joint factor: the event "exactly `count` points in the
/// `T^shift`-image of `set`".
#[derive(Debug, Clone)]
pub struct JointFactor {
    pub set: LevelSet,
    pub shift: Int,
    pub count: u32,
}

/// A conjunction of joint factors (sets may overlap after shifting).
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub factors: Vec<JointFactor>,
}

impl JointSpec {
    pub fn new(factors: Vec<JointFactor>) -> Self {
        JointSpec { factors }
    }

    /// The count vector this event asks about, one entry per factor.
    pub fn counts(&self) -> Vec<u32> {
        self.factors.iter().map(|f| f.count).collect()
    }
}

/// Joint count distribution over the factor sets, with the atom measures
/// that produced it. Probabilities are exact `coeff * exp(-rate)` values
/// sharing the rate `mu(union of shifted sets)`.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    pub work_stage: u32,
    pub translation: Int,
    /// `mu(⋂_{u in mask} S_u)` for every nonempty subset mask, exact.
    pub intersection_measures: BTreeMap<u16, Rat>,
    /// Inclusion-exclusion atom measures for every nonempty mask, exact.
    pub atom_measures: BTreeMap<u16, Rat>,
    /// `P(N(S_1) = v_1, ..., N(S_n) = v_n)` for every vector `v` below the
    /// requested counts, componentwise.
    pub probabilities: BTreeMap<Vec<u32>, ExactPoissonValue>,
}

impl JointDistribution {
    pub fn probability(&self, counts: &[u32]) -> Option<&ExactPoissonValue> {
        self.probabilities.get(counts)
    }
}

/// Materializes the shifted factor sets at a common work stage after the
/// global time normalization (counts are invariant under a common shift).
fn shifted_factor_sets(tower: &Tower, spec: &JointSpec) -> Result<(Vec<LevelSet>, Int, u32)> {
    let zero = Int::zero();
    let min_shift = spec
        .factors
        .iter()
        .map(|f| f.shift.clone())
        .min()
        .unwrap_or_else(Int::zero);
    let c = if min_shift < zero { -min_shift } else { zero };
    let max_norm = spec
        .factors
        .iter()
        .map(|f| &f.shift + &c)
        .max()
        .unwrap_or_else(Int::zero);
    let sets: Vec<&LevelSet> = spec.factors.iter().map(|f| &f.set).collect();
    let k = tower.choose_work_stage(&sets, &max_norm)?;
    let shifted = spec
        .factors
        .iter()
        .map(|f| tower.shift(&tower.lift(&f.set, k)?, &(&f.shift + &c)))
        .collect::<Result<Vec<_>>>()?;
    Ok((shifted, c, k))
}

/// Inclusion-exclusion over subset intersection measures: the atom for
/// mask `V` is `sum_{W superset V} (-1)^{|W|-|V|} mu_W`. A negative
/// result can only come from inconsistent inputs, which for measures
/// computed by the level-set engine means an exactness bug; the caller
/// must abort, never clamp.
fn atoms_from_intersections(
    n: usize,
    intersection_measures: &BTreeMap<u16, Rat>,
) -> Result<BTreeMap<u16, Rat>> {
    let full: u16 = (1u16 << n) - 1;
    let mut atom_measures = BTreeMap::new();
    for mask in 1..=full {
        let mut lambda = Rat::zero();
        for sup in mask..=full {
            if sup & mask == mask {
                let extra = (sup & !mask).count_ones();
                let term = &intersection_measures[&sup];
                if extra % 2 == 0 {
                    lambda += term;
                } else {
                    lambda -= term;
                }
            }
        }
        if lambda.is_negative() {
            return Err(Error::NegativeAtomMeasure {
                mask,
                measure: lambda.to_string(),
            });
        }
        atom_measures.insert(mask, lambda);
    }
    Ok(atom_measures)
}

/// Enumerates atom-count assignments and buckets the Poisson coefficients
/// by resulting count vector.
fn compose_atoms(
    masks: &[u16],
    atom_measures: &BTreeMap<u16, Rat>,
    counts: &[u32],
    idx: usize,
    used: &mut Vec<u32>,
    weight: Rat,
    coeffs: &mut BTreeMap<Vec<u32>, Rat>,
) {
    if idx == masks.len() {
        *coeffs.entry(used.clone()).or_insert_with(Rat::zero) += weight;
        return;
    }
    let mask = masks[idx];
    let lambda = &atom_measures[&mask];
    // largest count this atom can take without overshooting any factor
    let mut cap = u32::MAX;
    for (u, k) in counts.iter().enumerate() {
        if mask & (1 << u) != 0 {
            cap = cap.min(k - used[u]);
        }
    }
    let mut term = weight;
    let mut taken = 0u32;
    for n_v in 0..=cap {
        if n_v > 0 {
            if lambda.is_zero() {
                break; // zero-measure atoms only allow count zero
            }
            term = term * lambda / Rat::from_integer(Int::from(n_v));
            for (u, used_u) in used.iter_mut().enumerate() {
                if mask & (1 << u) != 0 {
                    *used_u += 1;
                }
            }
            taken = n_v;
        }
        compose_atoms(
            masks,
            atom_measures,
            counts,
            idx + 1,
            used,
            term.clone(),
            coeffs,
        );
    }
    for (u, used_u) in used.iter_mut().enumerate() {
        if mask & (1 << u) != 0 {
            *used_u -= taken;
        }
    }
}

/// Exact joint count distribution for up to `max_factors` possibly
/// overlapping shifted sets.
///
/// All subset intersection measures are computed exactly; the atom
/// measures come out of inclusion-exclusion, where a negative atom is an
/// exactness bug and aborts; each probability is the sum over atom-count
/// assignments consistent with the requested counts, so every value is
/// `coeff * exp(-mu(union))` with a rational `coeff`.
pub fn joint_count_distribution(
    tower: &Tower,
    spec: &JointSpec,
    caps: &PoissonCaps,
) -> Result<JointDistribution> {
    let n = spec.factors.len();
    if n == 0 {
        return Err(Error::EmptyInput(
            "joint spec needs at least one factor".into(),
        ));
    }
    if n > caps.max_factors {
        return Err(Error::FactorCapExceeded {
            factors: n,
            cap: caps.max_factors,
        });
    }
    for f in &spec.factors {
        if f.count > caps.max_count {
            return Err(Error::CountCapExceeded {
                count: f.count,
                cap: caps.max_count,
            });
        }
    }
    let (shifted, translation, work_stage) = shifted_factor_sets(tower, spec)?;

    let full: u16 = (1u16 << n) - 1;
    let mut intersection_measures: BTreeMap<u16, Rat> = BTreeMap::new();
    for mask in 1..=full {
        let members: Vec<&LevelSet> = (0..n)
            .filter(|u| mask & (1 << u) != 0)
            .map(|u| &shifted[u])
            .collect();
        let mut acc = members[0].clone();
        for s in &members[1..] {
            acc = intersect(&acc, s)?;
        }
        intersection_measures.insert(mask, tower.measure(&acc)?);
    }

    let atom_measures = atoms_from_intersections(n, &intersection_measures)?;
    let total_rate: Rat = atom_measures.values().sum();

    let counts = spec.counts();
    let masks: Vec<u16> = atom_measures.keys().copied().collect();
    let mut coeffs: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
    let mut used = vec![0u32; n];
    compose_atoms(
        &masks,
        &atom_measures,
        &counts,
        0,
        &mut used,
        Rat::one(),
        &mut coeffs,
    );

    // complete the map over every vector below the requested counts
    let mut probabilities: BTreeMap<Vec<u32>, ExactPoissonValue> = BTreeMap::new();
    let mut vector = vec![0u32; n];
    loop {
        let coeff = coeffs.get(&vector).cloned().unwrap_or_else(Rat::zero);
        probabilities.insert(
            vector.clone(),
            ExactPoissonValue {
                coeff,
                rate: total_rate.clone(),
            },
        );
        // odometer increment bounded by counts
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            if vector[pos] < counts[pos] {
                vector[pos] += 1;
                break;
            }
            vector[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }

    Ok(JointDistribution {
        work_stage,
        translation,
        intersection_measures,
        atom_measures,
        probabilities,
    })
}

/// The mixing gap `|mu_o(shifted C ∩ C') - mu_o(C) mu_o(C')|` at shift
/// `n`, with its exact constituents.
#[derive(Debug, Clone)]
pub struct MixingGap {
    pub joint: ExactPoissonValue,
    pub product: ExactPoissonValue,
    /// High-precision value of `|joint - product|`.
    pub gap: Rat,
}

/// Computes the mixing gap between cylinder `c_spec` shifted by `n` and
/// cylinder `c_prime`, evaluating the difference at relative precision
/// `10^-sig`.
pub fn mixing_gap(
    tower: &Tower,
    c_spec: &CylinderSpec,
    c_prime: &CylinderSpec,
    n: &Int,
    caps: &PoissonCaps,
    sig: u32,
) -> Result<MixingGap> {
    let mu_c = cylinder_measure(tower, c_spec, caps)?;
    let mu_cp = cylinder_measure(tower, c_prime, caps)?;
    let mut factors = Vec::with_capacity(c_spec.parts.len() + c_prime.parts.len());
    for (set, count) in &c_spec.parts {
        factors.push(JointFactor {
            set: set.clone(),
            shift: n.clone(),
            count: *count,
        });
    }
    for (set, count) in &c_prime.parts {
        factors.push(JointFactor {
            set: set.clone(),
            shift: Int::zero(),
            count: *count,
        });
    }
    let joint = if factors.is_empty() {
        ExactPoissonValue::one()
    } else {
        let spec = JointSpec::new(factors);
        let dist = joint_count_distribution(tower, &spec, caps)?;
        dist.probability(&spec.counts())
            .cloned()
            .unwrap_or_else(ExactPoissonValue::zero)
    };
    let product = &mu_c * &mu_cp;
    let gap = (joint.eval(sig) - product.eval(sig)).abs();
    Ok(MixingGap {
        joint,
        product,
        gap,
    })
}

/// A sampled Poisson configuration: finitely many points (floor levels,
/// multiset) inside a finite-measure window at a fixed stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub stage: u32,
    pub window: LevelSet,
    /// Sorted point levels; duplicates allowed (two points on one floor).
    pub points: Vec<Int>,
    /// The seed that produced this configuration.
    pub seed_trace: u64,
}

/// A reusable sampler for one window: the window measure and the
/// high-precision `exp(-mu)` are computed once, so per-sample work is a
/// short CDF walk plus uniform level draws.
#[derive(Debug, Clone)]
pub struct ConfigurationSampler {
    window: LevelSet,
    mu: Rat,
    exp_neg_mu: Rat,
}

impl ConfigurationSampler {
    pub fn new(tower: &Tower, window: &LevelSet, caps: &PoissonCaps) -> Result<Self> {
        let mu = tower.measure(window)?;
        if !mu.is_positive() {
            return Err(Error::EmptyInput(
                "sampling window must have positive measure".into(),
            ));
        }
        if mu > caps.rate_cap {
            return Err(Error::RateCapExceeded {
                rate: mu.to_string(),
                cap: caps.rate_cap.to_string(),
            });
        }
        let exp_neg_mu = hp::exp_neg(&mu, 50);
        Ok(ConfigurationSampler {
            window: window.clone(),
            mu,
            exp_neg_mu,
        })
    }

    pub fn measure(&self) -> &Rat {
        &self.mu
    }

    /// Poisson count by CDF inversion against a 128-bit uniform draw.
    fn draw_count(&self, rng: &mut SplitMix64) -> u32 {
        let u = rng.unit_rational();
        let mut cumulative = self.exp_neg_mu.clone();
        let mut pmf = self.exp_neg_mu.clone();
        let mut k = 0u32;
        while cumulative <= u && k <= 10_000 {
            k += 1;
            pmf = pmf * &self.mu / Rat::from_integer(Int::from(k));
            cumulative += &pmf;
        }
        k
    }

    /// Uniform level inside the window, by global level index; the draw
    /// depends only on the canonical range list, not on how the window
    /// was originally split.
    fn draw_level(&self, rng: &mut SplitMix64) -> Int {
        let total = self.window.level_count();
        let mut idx = rng.next_below(&total);
        for (a, b) in self.window.ranges() {
            let len = b - a;
            if idx < len {
                return a + idx;
            }
            idx -= len;
        }
        unreachable!("index within total level count")
    }

    /// Sorted point multiset for one sample stream.
    pub fn draw_points(&self, rng: &mut SplitMix64) -> Vec<Int> {
        let count = self.draw_count(rng);
        let mut points: Vec<Int> = (0..count).map(|_| self.draw_level(rng)).collect();
        points.sort();
        points
    }

    pub fn sample(&self, seed: u64) -> Configuration {
        let mut rng = SplitMix64::new(seed);
        let points = self.draw_points(&mut rng);
        Configuration {
            stage: self.window.stage(),
            window: self.window.clone(),
            points,
            seed_trace: seed,
        }
    }
}

/// Samples a configuration over `window`: the point count is Poisson with
/// mean `mu(window)` and each point is uniform over the window's levels.
/// Deterministic given `seed`.
pub fn sample_configuration(
    tower: &Tower,
    window: &LevelSet,
    seed: u64,
    caps: &PoissonCaps,
) -> Result<Configuration> {
    Ok(ConfigurationSampler::new(tower, window, caps)?.sample(seed))
}

/// Applies `n >= 0` steps of the transformation to a configuration:
/// every point and the window move up by `n` levels. The window shift
/// enforces the headroom contract.
pub fn evolve_configuration(
    tower: &Tower,
    config: &Configuration,
    n: &Int,
) -> Result<Configuration> {
    if n.is_negative() {
        return Err(Error::InvalidParams(
            "evolution steps must be nonnegative".into(),
        ));
    }
    let window = tower.shift(&config.window, n)?;
    let points = config.points.iter().map(|p| p + n).collect();
    Ok(Configuration {
        stage: config.stage,
        window,
        points,
        seed_trace: config.seed_trace,
    })
}

/// Monte Carlo estimate of a joint event's probability.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub successes: u64,
    pub samples: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
    pub workers: usize,
}

/// Estimates the probability of the joint event by sampling
/// configurations over the union of the shifted factor sets.
///
/// Per-sample streams are derived from `(seed, index)` by counter, so the
/// success count — and hence the estimate — is bit-identical for any
/// worker count.
pub fn monte_carlo_joint(
    tower: &Tower,
    spec: &JointSpec,
    samples: u64,
    seed: u64,
    workers: usize,
    caps: &PoissonCaps,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    if spec.factors.is_empty() {
        return Err(Error::EmptyInput(
            "joint spec needs at least one factor".into(),
        ));
    }
    let workers = workers.max(1);
    let (shifted, _, _) = shifted_factor_sets(tower, spec)?;
    let window = union_all(shifted.iter())?.expect("at least one factor");
    let counts = spec.counts();

    if window.is_empty() {
        // no point can ever land in any factor set
        let all_zero = counts.iter().all(|k| *k == 0);
        let successes = if all_zero { samples } else { 0 };
        return Ok(McEstimate {
            successes,
            samples,
            estimate: successes as f64 / samples as f64,
            std_error: 0.0,
            seed,
            workers,
        });
    }

    let sampler = ConfigurationSampler::new(tower, &window, caps)?;
    let is_hit = |index: u64| -> bool {
        let mut rng = derive_stream(seed, index);
        let points = sampler.draw_points(&mut rng);
        shifted
            .iter()
            .zip(counts.iter())
            .all(|(set, want)| points.iter().filter(|p| set.contains(p)).count() as u32 == *want)
    };

    let successes: u64 = if workers == 1 {
        (0..samples).filter(|i| is_hit(*i)).count() as u64
    } else {
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(workers);
            for w in 0..workers as u64 {
                let is_hit = &is_hit;
                handles.push(scope.spawn(move || {
                    let mut acc = 0u64;
                    let mut i = w;
                    while i < samples {
                        if is_hit(i) {
                            acc += 1;
                        }
                        i += workers as u64;
                    }
                    acc
                }));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .sum()
        })
    };

    let estimate = successes as f64 / samples as f64;
    let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    Ok(McEstimate {
        successes,
        samples,
        estimate,
        std_error,
        seed,
        workers,
    })
}
