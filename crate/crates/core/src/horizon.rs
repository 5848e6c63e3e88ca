//! Look-back and look-ahead windows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Window over which a price change is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Horizon {
    #[serde(rename = "1d")]
    Day,
    #[serde(rename = "3d")]
    ThreeDays,
    #[serde(rename = "1w")]
    Week,
    #[serde(rename = "1m")]
    Month,
    #[serde(rename = "3m")]
    Quarter,
}

impl Horizon {
    /// Windows measured backwards from a day (`x`).
    pub const BEFORE: [Horizon; 3] = [Horizon::Day, Horizon::ThreeDays, Horizon::Week];
    /// Windows measured forwards from a day (`y`).
    pub const AFTER: [Horizon; 5] = [
        Horizon::Day,
        Horizon::ThreeDays,
        Horizon::Week,
        Horizon::Month,
        Horizon::Quarter,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Index into the three look-back slots, `None` for month/quarter.
    pub fn before_index(self) -> Option<usize> {
        match self {
            Horizon::Day | Horizon::ThreeDays | Horizon::Week => Some(self as usize),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Horizon::Day => "1d",
            Horizon::ThreeDays => "3d",
            Horizon::Week => "1w",
            Horizon::Month => "1m",
            Horizon::Quarter => "3m",
        }
    }

    pub fn long_label(self) -> &'static str {
        match self {
            Horizon::Day => "1 day",
            Horizon::ThreeDays => "3 days",
            Horizon::Week => "1 week",
            Horizon::Month => "1 month",
            Horizon::Quarter => "3 months",
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Horizon::AFTER
            .into_iter()
            .find(|h| h.label() == s)
            .ok_or_else(|| format!("unknown horizon `{s}`"))
    }
}

/// Calendar-day lengths of every horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowLengths {
    pub day: u32,
    pub three_days: u32,
    pub week: u32,
    pub month: u32,
    pub quarter: u32,
    /// Trailing window used for the moving average of look-back changes.
    pub moving_average: u32,
}

impl Default for WindowLengths {
    fn default() -> Self {
        Self {
            day: 1,
            three_days: 3,
            week: 7,
            month: 30,
            quarter: 90,
            moving_average: 30,
        }
    }
}

impl WindowLengths {
    pub fn days(&self, h: Horizon) -> u32 {
        match h {
            Horizon::Day => self.day,
            Horizon::ThreeDays => self.three_days,
            Horizon::Week => self.week,
            Horizon::Month => self.month,
            Horizon::Quarter => self.quarter,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for h in Horizon::AFTER {
            if self.days(h) == 0 {
                return Err(format!("window {h} must be at least one day"));
            }
        }
        if self.moving_average == 0 {
            return Err("moving_average window must be at least one day".into());
        }
        Ok(())
    }
}
