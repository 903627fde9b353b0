//! Unit conversions used at the configuration and reporting boundaries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Dbm,
    Watt,
    Db,
    Linear,
    Nats,
    Bits,
}

impl Unit {
    fn dimension(self) -> u8 {
        match self {
            Unit::Dbm | Unit::Watt => 0,
            Unit::Db | Unit::Linear => 1,
            Unit::Nats | Unit::Bits => 2,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Dbm => "dBm",
            Unit::Watt => "W",
            Unit::Db => "dB",
            Unit::Linear => "linear",
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        })
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dbm" => Ok(Unit::Dbm),
            "w" | "watt" | "watts" => Ok(Unit::Watt),
            "db" => Ok(Unit::Db),
            "linear" | "lin" => Ok(Unit::Linear),
            "nats" | "nat" => Ok(Unit::Nats),
            "bits" | "bit" => Ok(Unit::Bits),
            _ => Err(Error::Units {
                from: s.to_string(),
                to: "a known unit".into(),
            }),
        }
    }
}

pub fn dbm_to_watt(x: f64) -> f64 {
    10f64.powf((x - 30.0) / 10.0)
}

pub fn watt_to_dbm(x: f64) -> f64 {
    10.0 * x.log10() + 30.0
}

pub fn db_to_linear(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}

pub fn convert_units(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::Units {
            from: from.to_string(),
            to: to.to_string(),
        });
    }
    Ok(match (from, to) {
        (a, b) if a == b => value,
        (Unit::Dbm, Unit::Watt) => dbm_to_watt(value),
        (Unit::Watt, Unit::Dbm) => watt_to_dbm(value),
        (Unit::Db, Unit::Linear) => db_to_linear(value),
        (Unit::Linear, Unit::Db) => 10.0 * value.log10(),
        (Unit::Nats, Unit::Bits) => nats_to_bits(value),
        (Unit::Bits, Unit::Nats) => value * std::f64::consts::LN_2,
        _ => unreachable!("same-dimension pairs are exhaustive"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((convert_units(30.0, Unit::Dbm, Unit::Watt).unwrap() - 1.0).abs() < 1e-15);
        assert!((convert_units(46.0, Unit::Dbm, Unit::Watt).unwrap() - 39.8107).abs() < 1e-4);
        assert!((convert_units(1.0, Unit::Nats, Unit::Bits).unwrap() - 1.0 / 2f64.ln()).abs() < 1e-15);
        assert!((convert_units(20.0, Unit::Db, Unit::Linear).unwrap() - 100.0).abs() < 1e-12);
        assert!(matches!(convert_units(1.0, Unit::Dbm, Unit::Bits), Err(Error::Units { .. })));
    }

    #[test]
    fn round_trips_and_parsing() {
        for x in [-50.0, 0.0, 17.3, 46.0] {
            let w = convert_units(x, Unit::Dbm, Unit::Watt).unwrap();
            assert!((convert_units(w, Unit::Watt, Unit::Dbm).unwrap() - x).abs() < 1e-12);
        }
        assert_eq!("dBm".parse::<Unit>().unwrap(), Unit::Dbm);
        assert_eq!("W".parse::<Unit>().unwrap(), Unit::Watt);
        assert!("furlong".parse::<Unit>().is_err());
    }
}
