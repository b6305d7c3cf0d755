//! Exact binomial machinery for the Preference Proportion Test.
//!
//! The test is one-sided: under the null the annotator prefers the gold
//! transcript with probability `theta_null`; a language is flagged when the
//! number of gold preferences falls at or below the critical value `k`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::records::{Choice, PreferenceRecord};

/// Largest trial count evaluated with exact rational arithmetic.
pub const EXACT_LIMIT: u64 = 64;

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

fn check_open_unit(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("{name} = {p} must lie in (0, 1)")));
    }
    Ok(())
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`; `k = -1` gives 0.
///
/// Exact for `n <= 64`: the f64 `p` is converted to the rational it
/// represents, the sum is evaluated over big integers and rounded once.
/// Larger `n` sums PMF terms in log space.
pub fn binom_cdf(k: i64, n: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("number of trials must be positive".into()));
    }
    check_probability("p", p)?;
    if k < -1 || k > n as i64 {
        return Err(Error::Domain(format!("k = {k} outside [-1, {n}]")));
    }
    if k == -1 {
        return Ok(0.0);
    }
    let k = k as u64;
    if k == n {
        return Ok(1.0);
    }
    if n <= EXACT_LIMIT {
        Ok(exact_cdf(k, n, p))
    } else {
        Ok(log_space_cdf(k, n, p))
    }
}

fn exact_cdf(k: u64, n: u64, p: f64) -> f64 {
    let p = BigRational::from_float(p).expect("finite probability");
    let q = BigRational::one() - &p;
    // p = a/d, q = b/d with a common denominator d
    let d = p.denom() * q.denom() / num_integer_gcd(p.denom(), q.denom());
    let a = p.numer() * (&d / p.denom());
    let b = q.numer() * (&d / q.denom());

    let mut sum = BigInt::zero();
    let mut binom = BigInt::one();
    let mut a_pow = BigInt::one();
    let b_pows: Vec<BigInt> = {
        let mut v = Vec::with_capacity(n as usize + 1);
        let mut acc = BigInt::one();
        for _ in 0..=n {
            v.push(acc.clone());
            acc *= &b;
        }
        v
    };
    for i in 0..=k {
        sum += &binom * &a_pow * &b_pows[(n - i) as usize];
        binom = binom * (n - i) / (i + 1);
        a_pow *= &a;
    }
    let denom = num_traits::pow(d, n as usize);
    BigRational::new(sum, denom).to_f64().expect("cdf fits in f64").min(1.0)
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut x, mut y) = (a.clone(), b.clone());
    while !y.is_zero() {
        let r = &x % &y;
        x = y;
        y = r;
    }
    x
}

/// Log-space summation used above the exact limit. Exposed so the two
/// routes can be compared; prefer [`binom_cdf`].
pub fn log_space_cdf(k: u64, n: u64, p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return 0.0; // k < n here
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let terms: Vec<f64> = (0..=k)
        .map(|i| ln_binomial(n, i) + i as f64 * lp + (n - i) as f64 * lq)
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

/// Largest `k` with `P(X <= k) <= alpha` under `Binomial(n, theta_null)`, or
/// -1 when even `k = 0` exceeds `alpha`.
pub fn critical_value(n: u64, alpha: f64, theta_null: f64) -> Result<i64> {
    check_open_unit("alpha", alpha)?;
    check_probability("theta_null", theta_null)?;
    if n == 0 {
        return Err(Error::Domain("number of trials must be positive".into()));
    }
    for k in 0..=n as i64 {
        if binom_cdf(k, n, theta_null)? > alpha {
            return Ok(k - 1);
        }
    }
    Ok(n as i64)
}

fn default_alpha() -> f64 {
    0.05
}
fn default_theta_null() -> f64 {
    0.5
}
fn default_theta_alt() -> f64 {
    0.2
}
fn default_trials() -> u64 {
    20
}
fn default_min_decided() -> u64 {
    15
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// False-positive tolerance.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Gold-preference rate under the null (no preference).
    #[serde(default = "default_theta_null")]
    pub theta_null: f64,
    /// Gold-preference rate under the alternative the test is powered for.
    #[serde(default = "default_theta_alt")]
    pub theta_alt: f64,
    /// Planned number of annotated samples per language.
    #[serde(default = "default_trials")]
    pub n_trials: u64,
    /// Fewest non-abstaining decisions needed before a verdict is issued.
    #[serde(default = "default_min_decided")]
    pub min_decided: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            theta_null: default_theta_null(),
            theta_alt: default_theta_alt(),
            n_trials: default_trials(),
            min_decided: default_min_decided(),
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        check_open_unit("alpha", self.alpha)?;
        check_open_unit("theta_null", self.theta_null)?;
        check_open_unit("theta_alt", self.theta_alt)?;
        if self.theta_alt > self.theta_null {
            return Err(Error::Domain(format!(
                "theta_alt = {} exceeds theta_null = {}; the test is one-sided",
                self.theta_alt, self.theta_null
            )));
        }
        if self.n_trials == 0 {
            return Err(Error::Domain("n_trials must be positive".into()));
        }
        Ok(())
    }

    pub fn effect_size(&self) -> f64 {
        self.theta_null - self.theta_alt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub n: u64,
    pub k: i64,
    pub power: f64,
    pub type1: f64,
}

pub fn power_row(config: &TestConfig, n: u64) -> Result<PowerRow> {
    let k = critical_value(n, config.alpha, config.theta_null)?;
    Ok(PowerRow {
        n,
        k,
        power: binom_cdf(k, n, config.theta_alt)?,
        type1: binom_cdf(k, n, config.theta_null)?,
    })
}

pub fn sample_size_table(config: &TestConfig, n_values: &[u64]) -> Result<Vec<PowerRow>> {
    config.validate()?;
    if n_values.is_empty() {
        return Err(Error::Domain("no sample sizes given".into()));
    }
    n_values.iter().map(|&n| power_row(config, n)).collect()
}

/// Smallest `n` in `1..=max_n` whose power reaches `target`.
pub fn min_sample_size(config: &TestConfig, target_power: f64, max_n: u64) -> Result<Option<PowerRow>> {
    config.validate()?;
    for n in 1..=max_n {
        let row = power_row(config, n)?;
        if row.power >= target_power {
            return Ok(Some(row));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceCounts {
    pub gold_preferred: u64,
    pub model_preferred: u64,
    pub abstain_good: u64,
    pub abstain_poor: u64,
}

impl PreferenceCounts {
    pub fn abstentions(&self) -> u64 {
        self.abstain_good + self.abstain_poor
    }

    pub fn decided(&self) -> u64 {
        self.gold_preferred + self.model_preferred
    }

    pub fn total(&self) -> u64 {
        self.decided() + self.abstentions()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pass,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub language_code: String,
    pub n_annotated: u64,
    pub gold_preferred: u64,
    pub model_preferred: u64,
    pub abstain_good: u64,
    pub abstain_poor: u64,
    pub abstentions: u64,
    /// Gold preferences plus abstentions: the count compared to `k`.
    pub effective_gold: u64,
    pub critical_value: i64,
    pub decision: Decision,
    pub config: TestConfig,
}

/// Runs the test on one language's counts.
///
/// Abstentions count toward neither side of the binomial but the critical
/// value is taken for all annotated trials, and abstentions are added to the
/// gold count before comparing. A language is therefore only flagged on
/// explicit model preferences.
pub fn ppt_verdict(language_code: &str, counts: PreferenceCounts, config: &TestConfig) -> Result<Verdict> {
    config.validate()?;
    if counts.decided() < config.min_decided {
        return Err(Error::InsufficientAnnotations {
            decided: counts.decided(),
            required: config.min_decided.max(1),
        });
    }
    let n = counts.total();
    if n == 0 {
        return Err(Error::InsufficientAnnotations { decided: 0, required: 1 });
    }
    let k = critical_value(n, config.alpha, config.theta_null)?;
    let effective_gold = counts.gold_preferred + counts.abstentions();
    let decision = if (effective_gold as i64) <= k {
        Decision::Flag
    } else {
        Decision::Pass
    };
    Ok(Verdict {
        language_code: language_code.to_string(),
        n_annotated: n,
        gold_preferred: counts.gold_preferred,
        model_preferred: counts.model_preferred,
        abstain_good: counts.abstain_good,
        abstain_poor: counts.abstain_poor,
        abstentions: counts.abstentions(),
        effective_gold,
        critical_value: k,
        decision,
        config: *config,
    })
}

fn choices_by_item(records: &[PreferenceRecord], side: &str) -> Result<HashMap<String, Choice>> {
    let mut out = HashMap::with_capacity(records.len());
    for r in records {
        if out.insert(r.task_id.clone(), r.choice).is_some() {
            return Err(Error::MismatchedItems(format!("{side} has two records for {:?}", r.task_id)));
        }
    }
    Ok(out)
}

/// Share of items on which two annotators made the same choice.
pub fn agreement(a: &[PreferenceRecord], b: &[PreferenceRecord]) -> Result<f64> {
    let left = choices_by_item(a, "first set")?;
    let right = choices_by_item(b, "second set")?;
    if left.is_empty() {
        return Err(Error::MismatchedItems("no items".into()));
    }
    let mut missing: BTreeMap<&str, &str> = BTreeMap::new();
    for id in left.keys() {
        if !right.contains_key(id) {
            missing.insert(id, "second set");
        }
    }
    for id in right.keys() {
        if !left.contains_key(id) {
            missing.insert(id, "first set");
        }
    }
    if let Some((id, side)) = missing.into_iter().next() {
        return Err(Error::MismatchedItems(format!("{id:?} missing from {side}")));
    }
    let same = left.iter().filter(|(id, c)| right[*id] == **c).count();
    Ok(same as f64 / left.len() as f64)
}
