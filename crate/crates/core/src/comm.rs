//! The Conway-Maxwell multinomial (COMM) distribution.
//!
//! Over the compositions `D = {k : k_i >= 0, sum k_i = m}` of `m` into `r`
//! parts,
//!
//! ```text
//! P{X = k} = C(m; k)^nu prod_i p_i^k_i / G(p, nu)
//! ```
//!
//! where `C(m; k)` is the multinomial coefficient. With `r = 2` this is the
//! COMB distribution.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cmp::CmpParams;
use crate::error::{domain, Error, Result};
use crate::special::{ln_factorial, ln_multinomial, ln_normal_pdf, log_sum_exp, xlogx};

/// Default cap on `|D|`.
pub const DEFAULT_CAP: u128 = 10_000_000;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommParams {
    m: usize,
    p: Vec<f64>,
    nu: f64,
}

/// A member of `D`: non-negative counts summing to `m`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Composition(Vec<usize>);

impl Composition {
    pub fn new(counts: Vec<usize>, m: usize) -> Result<Self> {
        if counts.len() < 2 {
            return domain("a composition needs at least two categories");
        }
        let total: usize = counts.iter().sum();
        if total != m {
            return domain(format!("counts {counts:?} sum to {total}, expected {m}"));
        }
        Ok(Self(counts))
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn m(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn r(&self) -> usize {
        self.0.len()
    }

    /// `sum_i ln(k_i!)`
    pub fn ln_factorials(&self) -> f64 {
        self.0.iter().map(|&k| ln_factorial(k)).sum()
    }
}

/// `|D| = C(m + r - 1, r - 1)`, saturating at `u128::MAX`.
pub fn composition_count(m: usize, r: usize) -> u128 {
    if r == 0 {
        return u128::from(m == 0);
    }
    let n = (m + r - 1) as u128;
    let k = (r - 1).min(m) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at each step
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Compositions of `m` into `r` parts in colexicographic order, starting at
/// `(m, 0, ..., 0)` and ending at `(0, ..., 0, m)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<usize>>,
}

impl Compositions {
    pub fn new(m: usize, r: usize) -> Self {
        let current = (r > 0).then(|| {
            let mut v = vec![0; r];
            v[0] = m;
            v
        });
        Self { current }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let r = out.len();
        // Find the first nonzero part that is not the last one, move one unit
        // to its right neighbour and gather the remainder into part 0.
        if let Some(i) = (0..r.saturating_sub(1)).find(|&i| out[i] > 0) {
            let mut next = out.clone();
            let v = next[i];
            next[i] = 0;
            next[i + 1] += 1;
            next[0] = v - 1;
            self.current = Some(next);
        }
        Some(out)
    }
}

fn check_cap(m: usize, r: usize, cap: u128) -> Result<()> {
    let required = composition_count(m, r);
    if required > cap {
        return Err(Error::CapExceeded {
            what: "composition enumeration",
            required,
            cap,
        });
    }
    Ok(())
}

/// Log-sum-exp of `f` over `D`, reduced chunk by chunk and then pairwise
/// over the chunk results, so the value is fixed by the enumeration order.
fn log_sum_over_d(m: usize, r: usize, f: impl Fn(&[usize]) -> f64) -> f64 {
    let mut partials = Vec::new();
    let mut chunk = Vec::with_capacity(CHUNK);
    for k in Compositions::new(m, r) {
        chunk.push(f(&k));
        if chunk.len() == CHUNK {
            partials.push(log_sum_exp(&chunk));
            chunk.clear();
        }
    }
    if !chunk.is_empty() {
        partials.push(log_sum_exp(&chunk));
    }
    log_sum_exp(&partials)
}

impl CommParams {
    pub fn new(m: usize, p: Vec<f64>, nu: f64) -> Result<Self> {
        if m == 0 {
            return domain("m must be at least 1");
        }
        if p.len() < 2 {
            return domain("need at least two categories");
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return domain(format!("probabilities must lie in [0, 1]: {p:?}"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        if !nu.is_finite() {
            return domain(format!("nu must be finite, got {nu}"));
        }
        Ok(Self { m, p, nu })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn ln_weight(&self, k: &[usize]) -> f64 {
        let mut w = self.nu * ln_multinomial(k);
        for (&ki, &pi) in k.iter().zip(&self.p) {
            if ki > 0 {
                w += ki as f64 * pi.ln();
            }
        }
        w
    }

    /// `ln G(p, nu)` by enumerating `D`, erroring when `|D| > cap`.
    pub fn log_normalizer(&self, cap: u128) -> Result<f64> {
        check_cap(self.m, self.r(), cap)?;
        Ok(log_sum_over_d(self.m, self.r(), |k| self.ln_weight(k)))
    }

    pub fn build(&self, cap: u128) -> Result<Comm> {
        Ok(Comm {
            log_normalizer: self.log_normalizer(cap)?,
            params: self.clone(),
        })
    }
}

/// A COMM distribution with its normalizer evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Comm {
    params: CommParams,
    log_normalizer: f64,
}

impl Comm {
    pub fn params(&self) -> &CommParams {
        &self.params
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    fn check(&self, k: &Composition) -> Result<()> {
        if k.r() != self.params.r() || k.m() != self.params.m {
            return domain(format!(
                "composition {:?} is not in D(m = {}, r = {})",
                k.counts(),
                self.params.m,
                self.params.r()
            ));
        }
        Ok(())
    }

    pub fn ln_pmf(&self, k: &Composition) -> Result<f64> {
        self.check(k)?;
        Ok(self.params.ln_weight(k.counts()) - self.log_normalizer)
    }

    pub fn pmf(&self, k: &Composition) -> Result<f64> {
        self.ln_pmf(k).map(f64::exp)
    }

    /// `(composition, probability)` over all of `D` in colexicographic order.
    pub fn pmf_table(&self) -> Vec<(Composition, f64)> {
        Compositions::new(self.params.m, self.params.r())
            .map(|k| {
                let p = (self.params.ln_weight(&k) - self.log_normalizer).exp();
                (Composition(k), p)
            })
            .collect()
    }
}

/// Sufficient statistics of a COMM sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommSufficientStats {
    /// `sum_j sum_i ln(k_ij!)`
    pub s0: f64,
    /// `sum_j k_ij` for the first `r - 1` categories.
    pub s: Vec<f64>,
    pub n: usize,
}

pub fn sufficient_stats(samples: &[Composition]) -> Result<CommSufficientStats> {
    let first = match samples.first() {
        Some(f) => f,
        None => return domain("no samples"),
    };
    let (m, r) = (first.m(), first.r());
    let mut s0 = 0.0;
    let mut s = vec![0.0; r - 1];
    for k in samples {
        if k.m() != m || k.r() != r {
            return domain(format!(
                "sample {:?} does not match shape (m = {m}, r = {r})",
                k.counts()
            ));
        }
        s0 += k.ln_factorials();
        for (acc, &ki) in s.iter_mut().zip(k.counts()) {
            *acc += ki as f64;
        }
    }
    Ok(CommSufficientStats {
        s0,
        s,
        n: samples.len(),
    })
}

/// Conjugate hyperparameters for the COMM natural parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommHyperparams {
    pub a: Vec<f64>,
    pub b: f64,
    pub c: f64,
}

impl CommHyperparams {
    pub fn flat(r: usize) -> Self {
        Self {
            a: vec![0.0; r.saturating_sub(1)],
            b: 0.0,
            c: 0.0,
        }
    }

    /// `a += k*`, `b += ln(k_1! ... k_r!)`, `c += 1`.
    pub fn update(&self, k: &Composition) -> Result<Self> {
        if self.a.len() + 1 != k.r() {
            return domain(format!(
                "hyperparameter a has length {}, composition has {} parts",
                self.a.len(),
                k.r()
            ));
        }
        let a = self
            .a
            .iter()
            .zip(k.counts())
            .map(|(a, &ki)| a + ki as f64)
            .collect();
        Ok(Self {
            a,
            b: self.b + k.ln_factorials(),
            c: self.c + 1.0,
        })
    }
}

fn natural_ln_weight(psi: &[f64], nu: f64, k: &[usize]) -> f64 {
    let linear: f64 = psi.iter().zip(k).map(|(p, &ki)| p * ki as f64).sum();
    linear - nu * k.iter().map(|&ki| ln_factorial(ki)).sum::<f64>()
}

/// `ln G(psi, nu) = ln sum_D exp(psi . k* - nu sum_i ln k_i!)` with
/// `psi_i = ln(p_i / p_r)`.
pub fn log_partition(m: usize, psi: &[f64], nu: f64, cap: u128) -> Result<f64> {
    let r = psi.len() + 1;
    check_cap(m, r, cap)?;
    Ok(log_sum_over_d(m, r, |k| natural_ln_weight(psi, nu, k)))
}

/// Log of the unnormalized conjugate posterior with independent standard
/// normal tempering on every `psi_i` and on `nu - 1`.
pub fn log_posterior_kernel(
    psi: &[f64],
    nu: f64,
    m: usize,
    hyper: &CommHyperparams,
    cap: u128,
) -> Result<f64> {
    if psi.len() != hyper.a.len() {
        return domain("psi and a must have the same length");
    }
    let prior: f64 =
        psi.iter().map(|&x| ln_normal_pdf(x, 0.0, 1.0)).sum::<f64>() + ln_normal_pdf(nu, 1.0, 1.0);
    let linear: f64 = psi.iter().zip(&hyper.a).map(|(p, a)| p * a).sum();
    let ln_g = if hyper.c == 0.0 {
        0.0
    } else {
        log_partition(m, psi, nu, cap)?
    };
    Ok(prior + linear - hyper.b * nu - hyper.c * ln_g)
}

/// Jensen lower bound on `ln G(psi, nu)` for a distribution `q` over `D`
/// (given in colexicographic order):
/// `psi . E[Q*] - nu E[sum ln Q_i!] - sum q ln q`.
pub fn jensen_lower_bound(psi: &[f64], nu: f64, m: usize, q: &[f64]) -> Result<f64> {
    let r = psi.len() + 1;
    if composition_count(m, r) != q.len() as u128 {
        return domain(format!(
            "q has {} entries, |D| = {}",
            q.len(),
            composition_count(m, r)
        ));
    }
    if q.iter().any(|&x| x.is_nan() || x < 0.0) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return domain("q must be a probability vector");
    }
    let mut bound = 0.0;
    for (k, &qk) in Compositions::new(m, r).zip(q) {
        if qk > 0.0 {
            bound += qk * natural_ln_weight(psi, nu, &k);
        }
        bound -= xlogx(qk);
    }
    Ok(bound)
}

/// Conditioning independent `CMP(lambda_i, nu)` variables on their total
/// `m` gives `COMM(m, lambda / sum lambda, nu)`.
pub fn comm_from_cmp_conditional(lambdas: &[f64], nu: f64, m: usize) -> Result<CommParams> {
    if lambdas.iter().any(|&l| l.is_nan() || l <= 0.0) {
        return domain(format!("rates must be positive: {lambdas:?}"));
    }
    for &l in lambdas {
        CmpParams::new(l, nu)?;
    }
    if nu < 0.0 || (nu == 0.0 && lambdas.iter().any(|&l| l >= 1.0)) {
        let lambda = lambdas.iter().copied().fold(0.0, f64::max);
        return Err(Error::Divergent { lambda, nu });
    }
    let total: f64 = lambdas.iter().sum();
    let mut p: Vec<f64> = lambdas.iter().map(|l| l / total).collect();
    // absorb rounding so the vector passes the sum-to-one check
    let drift: f64 = 1.0 - p.iter().sum::<f64>();
    let last = p.len() - 1;
    p[last] += drift;
    CommParams::new(m, p, nu)
}

/// Probability of one specific arrangement realizing category counts `k`
/// under the unique exchangeable law with sum distribution `sum_dist`:
/// `P{S = k} / C(m; k)`.
pub fn exchangeable_sequence_prob(
    sum_dist: &BTreeMap<Composition, f64>,
    k: &Composition,
) -> Result<f64> {
    let total: f64 = sum_dist.values().sum();
    if sum_dist.values().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-10 {
        return domain(format!(
            "sum distribution must be a probability vector (total {total})"
        ));
    }
    if let Some(first) = sum_dist.keys().next() {
        if first.m() != k.m() || first.r() != k.r() {
            return domain(format!("composition {:?} is not in D", k.counts()));
        }
    }
    let pk = sum_dist.get(k).copied().unwrap_or(0.0);
    Ok(pk * (-ln_multinomial(k.counts())).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::CombParams;
    use approx::assert_abs_diff_eq;

    fn comp(v: &[usize]) -> Composition {
        Composition::new(v.to_vec(), v.iter().sum()).unwrap()
    }

    #[test]
    fn colex_order() {
        let all: Vec<_> = Compositions::new(2, 3).collect();
        assert_eq!(
            all,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![0, 2, 0],
                vec![1, 0, 1],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
    }

    #[test]
    fn enumeration_count() {
        for m in 0..9 {
            for r in 1..6 {
                let n = Compositions::new(m, r).count() as u128;
                assert_eq!(n, composition_count(m, r), "m={m} r={r}");
            }
        }
        assert_eq!(composition_count(5, 3), 21);
    }

    #[test]
    fn normalizer_examples() {
        let c = CommParams::new(2, vec![0.5, 0.5], 1.0).unwrap();
        assert_abs_diff_eq!(c.log_normalizer(DEFAULT_CAP).unwrap(), 0.0, epsilon = 1e-14);
        // frozen from exhaustive 40-digit enumeration over the 10 compositions
        let c = CommParams::new(3, vec![0.2, 0.3, 0.5], 1.4)
            .unwrap()
            .build(DEFAULT_CAP)
            .unwrap();
        assert_abs_diff_eq!(c.log_normalizer(), 0.440_059_193_095_585_6, epsilon = 1e-13);
        assert_abs_diff_eq!(
            c.pmf(&comp(&[1, 1, 1])).unwrap(),
            0.237_365_570_786_670_2,
            epsilon = 1e-13
        );
    }

    #[test]
    fn two_categories_match_comb() {
        let c = CommParams::new(2, vec![0.5, 0.5], 2.0)
            .unwrap()
            .build(DEFAULT_CAP)
            .unwrap();
        let b = CombParams::new(2, 0.5, 2.0).unwrap();
        for k in 0..=2 {
            assert_abs_diff_eq!(
                c.pmf(&comp(&[k, 2 - k])).unwrap(),
                b.pmf(k).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn cap_errors_with_size() {
        let c = CommParams::new(50, vec![0.25; 4], 1.0).unwrap();
        match c.log_normalizer(1000) {
            Err(Error::CapExceeded { required, cap, .. }) => {
                assert_eq!(required, composition_count(50, 4));
                assert_eq!(cap, 1000);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn pmf_rejects_foreign_composition() {
        let c = CommParams::new(3, vec![0.2, 0.3, 0.5], 1.0)
            .unwrap()
            .build(DEFAULT_CAP)
            .unwrap();
        assert!(c.pmf(&comp(&[1, 1])).is_err());
        assert!(c.pmf(&comp(&[1, 1, 2])).is_err());
        assert!(Composition::new(vec![1, 1], 3).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(CommParams::new(3, vec![0.5, 0.6], 1.0).is_err());
        assert!(CommParams::new(3, vec![1.0], 1.0).is_err());
        assert!(CommParams::new(3, vec![-0.1, 1.1], 1.0).is_err());
    }

    #[test]
    fn sufficient_stat_examples() {
        let s = sufficient_stats(&[comp(&[2, 1, 0])]).unwrap();
        assert_abs_diff_eq!(s.s0, 2f64.ln(), epsilon = 1e-14);
        assert_eq!(s.s, vec![2.0, 1.0]);

        let n = 4;
        let s = sufficient_stats(&vec![comp(&[0, 0, 5]); n]).unwrap();
        assert_abs_diff_eq!(s.s0, n as f64 * 120f64.ln(), epsilon = 1e-12);
        assert_eq!(s.s, vec![0.0, 0.0]);

        let s = sufficient_stats(&[comp(&[1, 1, 1]), comp(&[3, 0, 0])]).unwrap();
        assert_abs_diff_eq!(s.s0, 6f64.ln(), epsilon = 1e-14);
        assert_eq!(s.s, vec![4.0, 1.0]);

        assert!(sufficient_stats(&[comp(&[1, 2]), comp(&[1, 1, 1])]).is_err());
        assert!(sufficient_stats(&[]).is_err());
    }

    #[test]
    fn conjugate_update_examples() {
        let h = CommHyperparams::flat(3).update(&comp(&[2, 1, 0])).unwrap();
        assert_eq!(h.a, vec![2.0, 1.0]);
        assert_abs_diff_eq!(h.b, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(h.c, 1.0);

        let base = CommHyperparams {
            a: vec![0.5, 1.5],
            b: 0.25,
            c: 2.0,
        };
        let h = base.update(&comp(&[0, 0, 4])).unwrap();
        assert_eq!(h.a, base.a);
        assert_abs_diff_eq!(h.b, 0.25 + 24f64.ln(), epsilon = 1e-14);
        assert_eq!(h.c, 3.0);

        let x = comp(&[2, 1, 1]);
        let y = comp(&[0, 3, 1]);
        let xy = base.update(&x).unwrap().update(&y).unwrap();
        let yx = base.update(&y).unwrap().update(&x).unwrap();
        assert_eq!(xy.a, yx.a);
        assert_abs_diff_eq!(xy.b, yx.b, epsilon = 1e-14);
        assert_eq!(xy.c, yx.c);

        assert!(CommHyperparams::flat(2).update(&comp(&[1, 1, 1])).is_err());
    }

    #[test]
    fn conditional_parameters() {
        let c = comm_from_cmp_conditional(&[1.0, 1.0, 1.0], 1.0, 3).unwrap();
        for &p in c.p() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert!(comm_from_cmp_conditional(&[1.0, 0.0], 1.0, 3).is_err());
        assert!(comm_from_cmp_conditional(&[1.0, 2.0], -0.5, 3).is_err());
    }

    #[test]
    fn arrangement_probability_examples() {
        let mut point = BTreeMap::new();
        point.insert(comp(&[3, 0, 0]), 1.0);
        assert_abs_diff_eq!(
            exchangeable_sequence_prob(&point, &comp(&[3, 0, 0])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(
            exchangeable_sequence_prob(&point, &comp(&[2, 1, 0])).unwrap(),
            0.0
        );

        let uniform: BTreeMap<_, _> = Compositions::new(2, 2)
            .map(|k| (Composition(k), 1.0 / 3.0))
            .collect();
        assert_abs_diff_eq!(
            exchangeable_sequence_prob(&uniform, &comp(&[1, 1])).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-15
        );

        let bad: BTreeMap<_, _> = [(comp(&[1, 1]), 0.7)].into_iter().collect();
        assert!(exchangeable_sequence_prob(&bad, &comp(&[1, 1])).is_err());
        assert!(exchangeable_sequence_prob(&uniform, &comp(&[1, 1, 0])).is_err());
    }

    #[test]
    fn jensen_bound_uniform_q() {
        let (m, r) = (4, 3);
        let n = composition_count(m, r) as usize;
        let q = vec![1.0 / n as f64; n];
        for &(a, b, nu) in &[(0.0, 0.0, 0.0), (0.4, -1.1, 1.3), (2.0, 0.5, -0.7)] {
            let psi = [a, b];
            let lower = jensen_lower_bound(&psi, nu, m, &q).unwrap();
            let exact = log_partition(m, &psi, nu, DEFAULT_CAP).unwrap();
            assert!(exact >= lower - 1e-12);
        }
        assert!(jensen_lower_bound(&[0.0, 0.0], 1.0, m, &q[1..]).is_err());
    }
}
