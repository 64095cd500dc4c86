use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the two teams in a question. Also used as an argument's stance:
/// `Side::A` is "pro A".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    /// +1 for A, -1 for B. Positive margins mean team A wins.
    pub fn sign(self) -> f64 {
        match self {
            Side::A => 1.0,
            Side::B => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::A => "A",
            Side::B => "B",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Side::A),
            "B" | "b" => Ok(Side::B),
            other => Err(format!("expected A or B, got `{other}`")),
        }
    }
}

/// Direction of a belief. Tied to the sign of the margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lean {
    A,
    B,
    #[serde(rename = "UNDECIDED")]
    Undecided,
}

impl Lean {
    pub fn from_margin(margin: f64) -> Lean {
        if margin > 0.0 {
            Lean::A
        } else if margin < 0.0 {
            Lean::B
        } else {
            Lean::Undecided
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            Lean::A => Some(Side::A),
            Lean::B => Some(Side::B),
            Lean::Undecided => None,
        }
    }
}

impl From<Side> for Lean {
    fn from(side: Side) -> Lean {
        match side {
            Side::A => Lean::A,
            Side::B => Lean::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confidence {
    High,
    Low,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::High => "High",
            Confidence::Low => "Low",
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Confidence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "High" | "high" | "HIGH" => Ok(Confidence::High),
            "Low" | "low" | "LOW" => Ok(Confidence::Low),
            other => Err(format!("expected High or Low, got `{other}`")),
        }
    }
}
