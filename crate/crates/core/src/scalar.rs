//! Exact scalars used for node labels and order positions.
//!
//! Everything in the crate is generic over [`Scalar`]. Only exact ordered
//! fields qualify: betweenness and insert-between must never round, so
//! floating point types are deliberately not implemented.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseScalarError {
    #[error("rational `{0}` is not of the form num/den")]
    Shape(String),
    #[error("rational `{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("rational `{0}` has an unparsable component")]
    Component(String),
}

pub trait Scalar:
    Num + Clone + Ord + Hash + Debug + Display + Send + Sync + 'static
{
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_index(i: usize) -> Self {
        Self::from_ratio(i as i64, 1)
    }

    /// The midpoint; strictly between `self` and `other` when they differ.
    fn midpoint(&self, other: &Self) -> Self {
        let two = Self::one() + Self::one();
        (self.clone() + other.clone()) / two
    }

    /// Canonical `num/den` text, always with an explicit denominator.
    fn to_text(&self) -> String;

    fn parse_text(s: &str) -> Result<Self, ParseScalarError>;
}

impl<T> Scalar for Ratio<T>
where
    T: Integer + Signed + Clone + Hash + Debug + Display + FromStr + FromPrimitive + Send + Sync + 'static,
{
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Ratio::new(
            T::from_i64(num).expect("numerator fits"),
            T::from_i64(den).expect("denominator fits"),
        )
    }

    fn to_text(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn parse_text(s: &str) -> Result<Self, ParseScalarError> {
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None if !t.is_empty() => (t, "1"),
            None => return Err(ParseScalarError::Shape(s.to_string())),
        };
        let num: T = n
            .parse()
            .map_err(|_| ParseScalarError::Component(s.to_string()))?;
        let den: T = d
            .parse()
            .map_err(|_| ParseScalarError::Component(s.to_string()))?;
        if den.is_zero() {
            return Err(ParseScalarError::ZeroDenominator(s.to_string()));
        }
        Ok(Ratio::new(num, den))
    }
}

/// Sorts and dedups a label list, then reports whether every label was distinct.
pub fn all_distinct<Q: Scalar>(labels: &[Q]) -> bool {
    let mut v: Vec<&Q> = labels.iter().collect();
    v.sort();
    v.windows(2).all(|w| w[0] != w[1])
}
