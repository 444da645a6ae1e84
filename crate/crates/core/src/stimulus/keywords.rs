use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StimulusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallSign {
    Dog,
    Cat,
}

impl CallSign {
    pub const ALL: [CallSign; 2] = [CallSign::Dog, CallSign::Cat];

    pub fn as_str(&self) -> &'static str {
        match self {
            CallSign::Dog => "dog",
            CallSign::Cat => "cat",
        }
    }
}

impl FromStr for CallSign {
    type Err = StimulusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dog" => Ok(CallSign::Dog),
            "cat" => Ok(CallSign::Cat),
            other => Err(StimulusError::IllegalKeyword(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Pink,
    White,
    Black,
    Blue,
}

impl Color {
    pub const ALL: [Color; 6] = [Color::Red, Color::Green, Color::Pink, Color::White, Color::Black, Color::Blue];

    pub fn as_str(&self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Pink => "pink",
            Color::White => "white",
            Color::Black => "black",
            Color::Blue => "blue",
        }
    }

    pub fn index(&self) -> usize {
        Color::ALL.iter().position(|c| c == self).unwrap()
    }
}

impl FromStr for Color {
    type Err = StimulusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Color::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or(StimulusError::IllegalKeyword(s))
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Number keyword. Seven is absent from the set (it is the only disyllabic one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Number(u8);

impl Number {
    pub const LEGAL: [u8; 8] = [1, 2, 3, 4, 5, 6, 8, 9];

    pub fn new(n: u8) -> Result<Self, StimulusError> {
        if Number::LEGAL.contains(&n) {
            Ok(Number(n))
        } else {
            Err(StimulusError::IllegalKeyword(n.to_string()))
        }
    }

    pub fn all() -> impl Iterator<Item = Number> {
        Number::LEGAL.into_iter().map(Number)
    }

    pub fn value(&self) -> u8 {
        self.0
    }

    pub fn index(&self) -> usize {
        Number::LEGAL.iter().position(|&n| n == self.0).unwrap()
    }
}

impl TryFrom<u8> for Number {
    type Error = StimulusError;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        Number::new(n)
    }
}

impl From<Number> for u8 {
    fn from(n: Number) -> u8 {
        n.0
    }
}

impl FromStr for Number {
    type Err = StimulusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n: u8 = s.trim().parse().map_err(|_| StimulusError::IllegalKeyword(s.to_string()))?;
        Number::new(n)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identity of a corpus sentence, e.g. `dog_pink_5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceId {
    pub call_sign: CallSign,
    pub color: Color,
    pub number: Number,
}

impl SentenceId {
    pub fn new(call_sign: CallSign, color: Color, number: Number) -> Self {
        SentenceId { call_sign, color, number }
    }

    /// All 48 sentences for `call_sign`, colours outermost.
    pub fn all_for(call_sign: CallSign) -> Vec<SentenceId> {
        Color::ALL
            .into_iter()
            .flat_map(|color| Number::all().map(move |number| SentenceId::new(call_sign, color, number)))
            .collect()
    }

    pub fn shares_keyword_with(&self, other: &SentenceId) -> bool {
        self.color == other.color || self.number == other.number
    }
}

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{}", self.call_sign.as_str(), self.color, self.number)
    }
}

impl FromStr for SentenceId {
    type Err = StimulusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('_');
        let (Some(c), Some(col), Some(num), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(StimulusError::IllegalKeyword(s.to_string()));
        };
        Ok(SentenceId::new(c.parse()?, col.parse()?, num.parse()?))
    }
}
