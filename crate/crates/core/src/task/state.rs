use std::hash::{Hash, Hasher};

/// Total assignment: a bitset over propositional variables and a value per
/// numeric variable.
///
/// Equality and hashing compare the numeric vector bitwise, so `0.0` and
/// `-0.0` are different states and `NaN` equals itself.
#[derive(Debug, Clone)]
pub struct State {
    bits: Box<[u64]>,
    num_props: usize,
    values: Box<[f64]>,
}

impl State {
    pub fn new(num_props: usize, values: Vec<f64>) -> Self {
        State { bits: vec![0; num_props.div_ceil(64)].into_boxed_slice(), num_props, values: values.into_boxed_slice() }
    }

    pub fn num_props(&self) -> usize {
        self.num_props
    }

    #[inline]
    pub fn holds(&self, var: usize) -> bool {
        self.bits[var / 64] >> (var % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, var: usize, value: bool) {
        let mask = 1u64 << (var % 64);
        if value {
            self.bits[var / 64] |= mask;
        } else {
            self.bits[var / 64] &= !mask;
        }
    }

    #[inline]
    pub fn value(&self, var: usize) -> f64 {
        self.values[var]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn set_value(&mut self, var: usize, value: f64) {
        self.values[var] = value;
    }

    /// Indices of true propositional variables, ascending.
    pub fn true_props(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
            && self.values.len() == other.values.len()
            && self.values.iter().zip(other.values.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for State {}

impl Hash for State {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits.hash(state);
        for v in self.values.iter() {
            v.to_bits().hash(state);
        }
    }
}
