//! Conditional probability tables `P(a,b|x,y)` over n-round binary strings.
//!
//! Each of `a`, `b`, `x`, `y` is an n-bit string stored as an unsigned integer
//! with round 1 in the most significant bit. The flat index of an entry is
//! `a·2^(3n) + b·2^(2n) + x·2^n + y`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Field, Mode, Rational};

pub const MAX_ROUNDS: usize = 5;

/// Flat index of entry `(a, b, x, y)` of an n-round table.
#[inline]
pub fn flat_index(n: usize, a: usize, b: usize, x: usize, y: usize) -> usize {
    (((a << n | b) << n | x) << n) | y
}

/// Inverse of [`flat_index`].
#[inline]
pub fn split_index(n: usize, idx: usize) -> (usize, usize, usize, usize) {
    let mask = (1 << n) - 1;
    (idx >> (3 * n), (idx >> (2 * n)) & mask, (idx >> n) & mask, idx & mask)
}

/// Bit mask selecting round `round` (1-based) of an n-bit string.
#[inline]
pub fn round_mask(n: usize, round: usize) -> usize {
    1 << (n - round)
}

/// Bit of round `round` (1-based).
#[inline]
pub fn round_bit(n: usize, s: usize, round: usize) -> usize {
    (s >> (n - round)) & 1
}

fn check_rounds(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ROUNDS {
        return Err(Error::RoundsOutOfRange(n, MAX_ROUNDS));
    }
    Ok(())
}

fn check_round(n: usize, round: usize) -> Result<()> {
    if round == 0 || round > n {
        return Err(Error::InvalidRound { round, n });
    }
    Ok(())
}

/// Dense n-round table of `2^(4n)` entries in canonical flat order.
#[derive(Clone, PartialEq)]
pub struct Behavior<T> {
    rounds: usize,
    entries: Vec<T>,
}

impl<T> fmt::Debug for Behavior<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Behavior").field("rounds", &self.rounds).field("entries", &self.entries.len()).finish()
    }
}

impl<T: Field> Behavior<T> {
    pub fn from_entries(rounds: usize, entries: Vec<T>) -> Result<Self> {
        check_rounds(rounds)?;
        if entries.len() != 1 << (4 * rounds) {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for n = {rounds}, expected {}",
                entries.len(),
                1usize << (4 * rounds)
            )));
        }
        Ok(Behavior { rounds, entries })
    }

    pub fn from_fn(rounds: usize, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Result<Self> {
        check_rounds(rounds)?;
        let entries = (0..1usize << (4 * rounds))
            .map(|idx| {
                let (a, b, x, y) = split_index(rounds, idx);
                f(a, b, x, y)
            })
            .collect();
        Ok(Behavior { rounds, entries })
    }

    /// Every entry `1/4^n`.
    pub fn uniform(rounds: usize) -> Result<Self> {
        let w = T::one().div_ref(&T::from_int(1 << (2 * rounds)));
        Self::from_fn(rounds, |_, _, _, _| w.clone())
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> &T {
        &self.entries[flat_index(self.rounds, a, b, x, y)]
    }

    fn strings(&self) -> usize {
        1 << self.rounds
    }

    /// Total mass at inputs `(x, y)`.
    pub fn mass(&self, x: usize, y: usize) -> T {
        let s = self.strings();
        let mut acc = T::zero();
        for a in 0..s {
            for b in 0..s {
                acc += self.get(a, b, x, y);
            }
        }
        acc
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|e| !e.is_negative())
    }

    /// Every input pair carries mass exactly one.
    pub fn is_normalized(&self) -> bool {
        let s = self.strings();
        (0..s).all(|x| (0..s).all(|y| self.mass(x, y) == T::one()))
    }

    pub fn scaled(&self, w: &T) -> Self {
        Behavior { rounds: self.rounds, entries: self.entries.iter().map(|e| e.mul_ref(w)).collect() }
    }

    pub fn add_scaled(&mut self, other: &Self, w: &T) {
        assert_eq!(self.rounds, other.rounds);
        for (e, o) in self.entries.iter_mut().zip(&other.entries) {
            e.add_mul_assign(o, w);
        }
    }

    /// Entry-wise image under an index permutation: `new[i] = old[source(i)]`.
    fn permuted(&self, source: impl Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize)) -> Self {
        let n = self.rounds;
        let entries = (0..self.entries.len())
            .map(|idx| {
                let (a, b, x, y) = split_index(n, idx);
                let (a2, b2, x2, y2) = source(a, b, x, y);
                self.entries[flat_index(n, a2, b2, x2, y2)].clone()
            })
            .collect();
        Behavior { rounds: n, entries }
    }

    /// Flips the outputs `a_i, b_i` of every round `i` with `mask` bit set.
    pub fn flip_outputs(&self, mask: usize) -> Self {
        self.permuted(|a, b, x, y| (a ^ mask, b ^ mask, x, y))
    }

    pub fn to_json(&self) -> BehaviorFile {
        BehaviorFile {
            n: self.rounds,
            mode: T::MODE,
            entries: self.entries.iter().map(Field::to_text).collect(),
        }
    }

    pub fn from_json(file: &BehaviorFile) -> Result<Self> {
        if file.mode != T::MODE {
            return Err(Error::InvalidArgument(format!("behavior file is in {} mode, expected {}", file.mode, T::MODE)));
        }
        let entries = file.entries.iter().map(|s| T::parse_text(s)).collect::<Result<Vec<_>, _>>()?;
        Self::from_entries(file.n, entries)
    }
}

/// On-disk form of a behavior.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BehaviorFile {
    pub n: usize,
    pub mode: Mode,
    pub entries: Vec<String>,
}

/// Validated noise parameter `v ∈ [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParameter<T>(T);

impl<T: Field> NoiseParameter<T> {
    pub fn new(v: T) -> Result<Self> {
        if v > T::one() || v < -T::one() {
            return Err(Error::NoiseOutOfRange(v.to_text(), -1));
        }
        Ok(NoiseParameter(v))
    }

    /// Restricted to `[0, 1]`, the range of the guessing problem.
    pub fn nonnegative(v: T) -> Result<Self> {
        if v > T::one() || v.is_negative() {
            return Err(Error::NoiseOutOfRange(v.to_text(), 0));
        }
        Ok(NoiseParameter(v))
    }

    pub fn value(&self) -> &T {
        &self.0
    }
}

/// Whether `(a, b, x, y)` wins the CHSH game, i.e. `a ⊕ b = x ∧ y`.
#[inline]
pub fn chsh_wins(a: usize, b: usize, x: usize, y: usize) -> bool {
    (a ^ b) == (x & y)
}

/// Single-round entry of the noisy PR box: `(3+v)/8` on CHSH-winning entries, `(1-v)/8` otherwise.
pub fn pr_entry<T: Field>(v: &T, a: usize, b: usize, x: usize, y: usize) -> T {
    let eight = T::from_int(8);
    if chsh_wins(a & 1, b & 1, x & 1, y & 1) {
        (T::from_int(3) + v.clone()) / eight
    } else {
        (T::one() - v.clone()) / eight
    }
}

pub fn pr_box<T: Field>(v: &NoiseParameter<T>) -> Behavior<T> {
    let v = v.value();
    Behavior::from_fn(1, |a, b, x, y| pr_entry(v, a, b, x, y)).expect("n = 1")
}

/// `∏_i PR_v(a_i, b_i | x_i, y_i)` without building the factors.
pub fn pr_product<T: Field>(n: usize, v: &NoiseParameter<T>) -> Result<Behavior<T>> {
    let win = pr_entry(v.value(), 0, 0, 0, 0);
    let lose = pr_entry(v.value(), 0, 1, 0, 0);
    let mask = (1 << n) - 1;
    // entries depend only on the number of lost rounds
    let mut by_losses = Vec::with_capacity(n + 1);
    for losses in 0..=n {
        let mut e = T::one();
        for k in 0..n {
            e = e.mul_ref(if k < losses { &lose } else { &win });
        }
        by_losses.push(e);
    }
    Behavior::from_fn(n, |a, b, x, y| by_losses[((a ^ b ^ (x & y)) & mask).count_ones() as usize].clone())
}

/// Concatenates independent factors; round order follows the factor order.
pub fn product<T: Field>(factors: &[Behavior<T>]) -> Result<Behavior<T>> {
    let (first, rest) = factors.split_first().ok_or(Error::EmptyProduct)?;
    let total: usize = factors.iter().map(|f| f.rounds).sum();
    check_rounds(total)?;
    let mut acc = first.clone();
    for f in rest {
        let (n1, n2) = (acc.rounds, f.rounds);
        let n = n1 + n2;
        let m2 = (1 << n2) - 1;
        acc = Behavior::from_fn(n, |a, b, x, y| {
            let lhs = acc.get(a >> n2, b >> n2, x >> n2, y >> n2);
            let rhs = f.get(a & m2, b & m2, x & m2, y & m2);
            lhs.mul_ref(rhs)
        })?;
    }
    Ok(acc)
}

/// The deterministic single-round behaviors `D_1..D_4`:
/// `D_1: a=0,b=0`, `D_2: a=x,b=0`, `D_3: a=0,b=y`, `D_4: a=x,b=y⊕1`.
pub fn deterministic_box<T: Field>(kind: u8) -> Result<Behavior<T>> {
    let rule: fn(usize, usize) -> (usize, usize) = match kind {
        1 => |_, _| (0, 0),
        2 => |x, _| (x, 0),
        3 => |_, y| (0, y),
        4 => |x, y| (x, y ^ 1),
        _ => return Err(Error::InvalidArgument(format!("deterministic box kind {kind} not in 1..=4"))),
    };
    Behavior::from_fn(1, |a, b, x, y| if rule(x, y) == (a, b) { T::one() } else { T::zero() })
}

/// CHSH value `Σ_{x,y} (-1)^{xy} (P(a=b|xy) - P(a≠b|xy))` of a single-round behavior.
pub fn chsh_value<T: Field>(beh: &Behavior<T>) -> Result<T> {
    if beh.rounds != 1 {
        return Err(Error::DimensionMismatch("CHSH value needs a single-round behavior".into()));
    }
    let mut acc = T::zero();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let p = beh.get(a, b, x, y);
                    if chsh_wins(a, b, x, y) {
                        acc += p;
                    } else {
                        acc -= p;
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Marginal table of selected output rounds at a fixed input pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<T> {
    pub keep_a: Vec<usize>,
    pub keep_b: Vec<usize>,
    /// Indexed by the kept `a` bits (in `keep_a` order, first most significant)
    /// followed by the kept `b` bits.
    pub values: Vec<T>,
}

impl<T: Field> Marginal<T> {
    pub fn get(&self, a_bits: usize, b_bits: usize) -> &T {
        &self.values[(a_bits << self.keep_b.len()) | b_bits]
    }
}

fn gather(n: usize, s: usize, rounds: &[usize]) -> usize {
    rounds.iter().fold(0, |acc, &r| (acc << 1) | round_bit(n, s, r))
}

fn check_round_set(n: usize, rounds: &[usize]) -> Result<()> {
    let mut seen = 0usize;
    for &r in rounds {
        check_round(n, r)?;
        if seen & (1 << r) != 0 {
            return Err(Error::InvalidArgument(format!("round {r} listed twice")));
        }
        seen |= 1 << r;
    }
    Ok(())
}

/// Sums out every output round not listed in `keep_a` / `keep_b` (1-based rounds) at inputs `(x, y)`.
pub fn marginal<T: Field>(beh: &Behavior<T>, keep_a: &[usize], keep_b: &[usize], x: usize, y: usize) -> Result<Marginal<T>> {
    let n = beh.rounds;
    check_round_set(n, keep_a)?;
    check_round_set(n, keep_b)?;
    if x >> n != 0 || y >> n != 0 {
        return Err(Error::InvalidArgument(format!("inputs ({x}, {y}) exceed {n} bits")));
    }
    let mut values = vec![T::zero(); 1 << (keep_a.len() + keep_b.len())];
    let s = 1 << n;
    for a in 0..s {
        let ka = gather(n, a, keep_a);
        for b in 0..s {
            let kb = gather(n, b, keep_b);
            values[(ka << keep_b.len()) | kb] += beh.get(a, b, x, y);
        }
    }
    Ok(Marginal { keep_a: keep_a.to_vec(), keep_b: keep_b.to_vec(), values })
}

/// The per-round symmetries that map feasible attacks to feasible attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `a_i → ā_i`, `b_i → b̄_i` (and `α_i → ᾱ_i` on decompositions).
    T1,
    /// `a_i → a_i ⊕ x_i`, `y_i → ȳ_i`.
    T2,
    /// `b_i → b_i ⊕ y_i`, `x_i → x̄_i`.
    T3,
}

impl<T: Field> Behavior<T> {
    /// Image under transform `kind` at round `round` (1-based). Every transform is an involution.
    pub fn transform(&self, kind: Transform, round: usize) -> Result<Self> {
        let n = self.rounds;
        check_round(n, round)?;
        let m = round_mask(n, round);
        Ok(match kind {
            Transform::T1 => self.flip_outputs(m),
            Transform::T2 => self.permuted(|a, b, x, y| (a ^ (x & m), b, x, y ^ m)),
            Transform::T3 => self.permuted(|a, b, x, y| (a, b ^ (y & m), x ^ m, y)),
        })
    }
}

/// One term `P(α) · P_α` of an attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackComponent<T> {
    pub weight: T,
    /// Eve's guess for Alice's n-bit output.
    pub guess: usize,
    pub behavior: Behavior<T>,
}

/// A convex decomposition `Σ_α P(α) P_α = target` labelled by Eve's guesses.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackDecomposition<T> {
    pub rounds: usize,
    pub components: Vec<AttackComponent<T>>,
    pub target: Behavior<T>,
}

impl<T: Field> AttackDecomposition<T> {
    pub fn weighted_average(&self) -> Behavior<T> {
        let mut acc = Behavior::from_fn(self.rounds, |_, _, _, _| T::zero()).expect("validated rounds");
        for c in &self.components {
            acc.add_scaled(&c.behavior, &c.weight);
        }
        acc
    }

    /// Eve's success probability `Σ_α P(α) Σ_b P_α(a=α, b | x*, y*)`.
    pub fn guessing_objective(&self, x_star: usize, y_star: usize) -> T {
        let s = 1 << self.rounds;
        let mut acc = T::zero();
        for c in &self.components {
            let mut hit = T::zero();
            for b in 0..s {
                hit += c.behavior.get(c.guess, b, x_star, y_star);
            }
            acc.add_mul_assign(&c.weight, &hit);
        }
        acc
    }

    /// Checks the weight, normalization and reconstruction invariants.
    pub fn validate(&self) -> Result<()> {
        let mut total = T::zero();
        for (k, c) in self.components.iter().enumerate() {
            if c.weight.is_negative() {
                return Err(Error::InvalidArgument(format!("component {k} has negative weight")));
            }
            if c.behavior.rounds != self.rounds || !c.behavior.is_normalized() || !c.behavior.is_nonnegative() {
                return Err(Error::InvalidArgument(format!("component {k} is not a normalized behavior")));
            }
            total += &c.weight;
        }
        if total != T::one() {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        if self.weighted_average() != self.target {
            return Err(Error::InvalidArgument("weighted average differs from the target".into()));
        }
        Ok(())
    }

    pub fn transform(&self, kind: Transform, round: usize) -> Result<Self> {
        check_round(self.rounds, round)?;
        let m = round_mask(self.rounds, round);
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(AttackComponent {
                    weight: c.weight.clone(),
                    guess: if kind == Transform::T1 { c.guess ^ m } else { c.guess },
                    behavior: c.behavior.transform(kind, round)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AttackDecomposition { rounds: self.rounds, components, target: self.target.transform(kind, round)? })
    }
}

/// The two-component single-round attack reaching `1 - v/2`:
/// `P_{α=0} = (1-v)/4 (D_1+D_2+D_3+D_4) + v PR_1` and `P_{α=1}` its output flip, each with weight 1/2.
pub fn single_round_attack<T: Field>(v: &NoiseParameter<T>) -> Result<AttackDecomposition<T>> {
    let v = NoiseParameter::nonnegative(v.value().clone())?;
    let vv = v.value();
    let local_w = (T::one() - vv.clone()) / T::from_int(4);
    let mut p0 = pr_box(&NoiseParameter::new(T::one())?).scaled(vv);
    for k in 1..=4 {
        p0.add_scaled(&deterministic_box(k)?, &local_w);
    }
    let half = T::one() / T::from_int(2);
    let p1 = p0.flip_outputs(1);
    Ok(AttackDecomposition {
        rounds: 1,
        components: vec![
            AttackComponent { weight: half.clone(), guess: 0, behavior: p0 },
            AttackComponent { weight: half, guess: 1, behavior: p1 },
        ],
        target: pr_box(&v),
    })
}

/// Expands a reduced behavior into the symmetric decomposition with uniform
/// weights `1/2^n` and `P_α(a,b|x,y) = P0(a⊕α, b⊕α | x,y)`.
pub fn reduced_lift<T: Field>(p0: &Behavior<T>) -> AttackDecomposition<T> {
    let n = p0.rounds;
    let w = T::one() / T::from_int(1 << n);
    let components: Vec<_> = (0..1usize << n)
        .map(|alpha| AttackComponent { weight: w.clone(), guess: alpha, behavior: p0.flip_outputs(alpha) })
        .collect();
    let mut target = Behavior::from_fn(n, |_, _, _, _| T::zero()).expect("valid rounds");
    for c in &components {
        target.add_scaled(&c.behavior, &c.weight);
    }
    AttackDecomposition { rounds: n, components, target }
}

/// Converts a vector of unnormalized components `P̃_α` (α-major, `2^(5n)` entries)
/// into a decomposition. Zero-mass components get the uniform behavior.
pub fn decomposition_from_unnormalized<T: Field>(n: usize, values: &[T], target: Behavior<T>) -> Result<AttackDecomposition<T>> {
    let block = 1usize << (4 * n);
    if values.len() != block << n {
        return Err(Error::DimensionMismatch(format!("{} values for {} components", values.len(), 1 << n)));
    }
    let components = values
        .chunks(block)
        .enumerate()
        .map(|(alpha, chunk)| {
            let raw = Behavior::from_entries(n, chunk.to_vec())?;
            let mass = raw.mass(0, 0);
            let behavior = if mass.is_zero() { Behavior::uniform(n)? } else { raw.scaled(&(T::one() / mass.clone())) };
            Ok(AttackComponent { weight: mass, guess: alpha, behavior })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackDecomposition { rounds: n, components, target })
}

/// Convenience for exact single values in tests and examples.
pub fn exact_noise(p: i64, q: i64) -> Result<NoiseParameter<Rational>> {
    NoiseParameter::new(Rational::new(p, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn r(p: i64, q: i64) -> Rational {
        rat(p, q).unwrap()
    }

    #[test]
    fn index_layout() {
        assert_eq!(flat_index(1, 1, 0, 1, 0), 0b1010);
        assert_eq!(flat_index(2, 0b10, 0b01, 0b11, 0b00), 0b10_01_11_00);
        assert_eq!(split_index(2, 0b10_01_11_00), (0b10, 0b01, 0b11, 0b00));
        assert_eq!(round_bit(3, 0b100, 1), 1);
        assert_eq!(round_bit(3, 0b100, 3), 0);
    }

    #[test]
    fn pr_box_values() {
        let ideal = pr_box(&exact_noise(1, 1).unwrap());
        assert_eq!(*ideal.get(0, 0, 0, 0), r(1, 2));
        assert_eq!(*ideal.get(0, 1, 0, 0), r(0, 1));
        let noise = pr_box(&exact_noise(-1, 1).unwrap());
        assert!(noise.entries().iter().all(|e| *e == r(1, 4)));
        let half = pr_box(&exact_noise(0, 1).unwrap());
        // at x = y = 1 the winning pairs are a ≠ b
        assert_eq!(*half.get(0, 0, 1, 1), r(1, 8));
        assert_eq!(*half.get(0, 1, 1, 1), r(3, 8));
        assert_eq!(*half.get(0, 0, 0, 1), r(3, 8));
        assert!(NoiseParameter::new(r(11, 10)).is_err());
        assert!(NoiseParameter::new(r(-11, 10)).is_err());
        assert!(NoiseParameter::nonnegative(r(-1, 10)).is_err());
    }

    #[test]
    fn pr_box_normalized_and_nonnegative_exactly_on_range() {
        // the table formula stays nonnegative down to v = -3; the [-1, 1] range is enforced by validation
        for k in -32..=12 {
            let v = r(k, 10);
            let beh = Behavior::from_fn(1, |a, b, x, y| pr_entry(&v, a, b, x, y)).unwrap();
            assert!(beh.is_normalized());
            assert_eq!(beh.is_nonnegative(), (-30..=10).contains(&k), "v = {v}");
            assert_eq!(NoiseParameter::new(v.clone()).is_ok(), (-10..=10).contains(&k));
        }
    }

    #[test]
    fn product_entries() {
        let p1 = pr_box(&exact_noise(1, 1).unwrap());
        let pp = product(&[p1.clone(), p1]).unwrap();
        assert_eq!(*pp.get(0, 0, 0, 0), r(1, 4));
        let h = pr_box(&exact_noise(1, 2).unwrap());
        let hh = product(&[h.clone(), h.clone()]).unwrap();
        assert_eq!(*hh.get(0, 0, 0, 0), r(49, 256));
        assert_eq!(hh, pr_product(2, &exact_noise(1, 2).unwrap()).unwrap());
        assert!(matches!(product::<Rational>(&[]), Err(Error::EmptyProduct)));
        let m = marginal(&hh, &[1], &[1], 0b10, 0b11).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(m.get(a, b), h.get(a, b, 1, 1));
            }
        }
    }

    #[test]
    fn pr_product_matches_factorwise_product() {
        for n in 1..=3 {
            let v = exact_noise(1, 3).unwrap();
            let factors = vec![pr_box(&v); n];
            assert_eq!(product(&factors).unwrap(), pr_product(n, &v).unwrap());
        }
    }

    #[test]
    fn deterministic_boxes() {
        let d1 = deterministic_box::<Rational>(1).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(*d1.get(0, 0, x, y), r(1, 1));
            }
        }
        let d4 = deterministic_box::<Rational>(4).unwrap();
        assert_eq!(*d4.get(1, 1, 1, 0), r(1, 1));
        let d2 = deterministic_box::<Rational>(2).unwrap();
        assert_eq!(*d2.get(1, 0, 1, 1), r(1, 1));
        assert!(deterministic_box::<Rational>(5).is_err());
        for k in 1..=4 {
            let d = deterministic_box::<Rational>(k).unwrap();
            assert!(d.is_normalized());
            assert_eq!(chsh_value(&d).unwrap(), r(2, 1));
        }
        assert_eq!(chsh_value(&pr_box(&exact_noise(1, 1).unwrap())).unwrap(), r(4, 1));
    }

    #[test]
    fn single_round_attack_components() {
        let ideal = single_round_attack(&exact_noise(1, 1).unwrap()).unwrap();
        assert_eq!(ideal.components[0].behavior, pr_box(&exact_noise(1, 1).unwrap()));
        assert_eq!(ideal.guessing_objective(0, 0), r(1, 2));
        let half = single_round_attack(&exact_noise(1, 2).unwrap()).unwrap();
        assert_eq!(half.guessing_objective(0, 0), r(3, 4));
        for k in 0..=10 {
            let v = exact_noise(k, 10).unwrap();
            let att = single_round_attack(&v).unwrap();
            att.validate().unwrap();
            assert_eq!(att.weighted_average(), pr_box(&v));
            assert_eq!(att.guessing_objective(0, 0), Rational::one() - r(k, 20));
        }
        assert!(single_round_attack(&exact_noise(-1, 2).unwrap()).is_err());
    }

    #[test]
    fn marginals() {
        let v = exact_noise(2, 7).unwrap();
        let p = pr_box(&v);
        for x in 0..2 {
            for y in 0..2 {
                let full = marginal(&p, &[], &[], x, y).unwrap();
                assert_eq!(full.values, vec![r(1, 1)]);
                let alice = marginal(&p, &[1], &[], x, y).unwrap();
                assert_eq!(alice.values, vec![r(1, 2), r(1, 2)]);
            }
        }
        let pp = product(&[p.clone(), p.clone()]).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let m = marginal(&pp, &[1], &[1], x, y).unwrap();
                let direct = marginal(&p, &[1], &[1], x >> 1, y >> 1).unwrap();
                assert_eq!(m.values, direct.values);
            }
        }
        assert!(marginal(&pp, &[3], &[], 0, 0).is_err());
        assert!(marginal(&pp, &[1, 1], &[], 0, 0).is_err());
        assert!(marginal(&pp, &[1], &[], 4, 0).is_err());
    }

    #[test]
    fn transforms_are_involutions_and_fix_pr_boxes() {
        let v = exact_noise(3, 5).unwrap();
        let pp = pr_product(2, &v).unwrap();
        let skew = Behavior::<Rational>::from_fn(2, |a, b, x, y| Rational::from_integer((a * 7 + b * 3 + x * 5 + y + 1) as i64)).unwrap();
        for kind in [Transform::T1, Transform::T2, Transform::T3] {
            for round in 1..=2 {
                assert_eq!(pp.transform(kind, round).unwrap(), pp);
                let once = skew.transform(kind, round).unwrap();
                assert_ne!(once, skew);
                assert_eq!(once.transform(kind, round).unwrap(), skew);
            }
            assert!(pp.transform(kind, 3).is_err());
            assert!(pp.transform(kind, 0).is_err());
        }
    }

    #[test]
    fn reduced_lift_objective_and_average() {
        let ideal = pr_box(&exact_noise(1, 1).unwrap());
        let lifted = reduced_lift(&ideal);
        assert_eq!(lifted.components.len(), 2);
        assert_eq!(lifted.components[1].behavior, ideal.flip_outputs(1));
        let avg = lifted.weighted_average();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(marginal(&avg, &[1], &[], x, y).unwrap().values, vec![r(1, 2), r(1, 2)]);
            }
        }
        let skew = Behavior::<Rational>::from_fn(2, |a, b, x, y| r(((a ^ b) + x + 2 * y + 1) as i64, 97)).unwrap();
        let lifted = reduced_lift(&skew);
        let direct: Rational = (0..4).map(|b| skew.get(0, b, 0, 0).clone()).sum();
        assert_eq!(lifted.guessing_objective(0, 0), direct);
    }

    #[test]
    fn json_round_trip() {
        let p = pr_box(&exact_noise(1, 3).unwrap());
        let file = p.to_json();
        assert_eq!(file.entries[0], "5/12");
        let text = serde_json::to_string(&file).unwrap();
        let back: BehaviorFile = serde_json::from_str(&text).unwrap();
        assert_eq!(Behavior::<Rational>::from_json(&back).unwrap(), p);
        assert!(Behavior::<f64>::from_json(&back).is_err());
    }
}
