//! The bijection between AZRP and ASEP configurations,
//! `(x_1, ..., x_N) -> (x_1 + 1, ..., x_N + N)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Configuration, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDirection {
    ToAsep,
    ToAzrp,
}

/// Applies the bijection in the given direction. The input must lie in the
/// source physical region (weakly increasing for `ToAsep`, strictly
/// increasing for `ToAzrp`).
pub fn azrp_asep_maps(direction: MapDirection, x: &Configuration) -> Result<Configuration> {
    let (source, sign) = match direction {
        MapDirection::ToAsep => (ModelKind::Azrp, 1),
        MapDirection::ToAzrp => (ModelKind::Asep, -1),
    };
    if !x.is_physical(source) {
        return Err(Error::InvalidConfiguration(format!(
            "{x} is not in the {source} physical region"
        )));
    }
    let out: Vec<i64> = x
        .positions()
        .iter()
        .enumerate()
        .map(|(i, &v)| v + sign * (i as i64 + 1))
        .collect();
    let target = match direction {
        MapDirection::ToAsep => ModelKind::Asep,
        MapDirection::ToAzrp => ModelKind::Azrp,
    };
    debug_assert!(target.is_physical(&out));
    Ok(Configuration::new(out))
}

pub fn to_asep(x: &Configuration) -> Result<Configuration> {
    azrp_asep_maps(MapDirection::ToAsep, x)
}

pub fn to_azrp(x: &Configuration) -> Result<Configuration> {
    azrp_asep_maps(MapDirection::ToAzrp, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(v: &[i64]) -> Configuration {
        Configuration::new(v.to_vec())
    }

    #[test]
    fn examples() {
        assert_eq!(to_asep(&cfg(&[0, 0, 0])).unwrap(), cfg(&[1, 2, 3]));
        assert_eq!(to_asep(&cfg(&[-2, 0, 0, 5])).unwrap(), cfg(&[-1, 2, 3, 9]));
        assert!(to_asep(&cfg(&[1, 0])).is_err());
        assert!(to_azrp(&cfg(&[1, 1])).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(start in -50i64..50, gaps in proptest::collection::vec(0i64..4, 0..7)) {
            let mut v = vec![start];
            for g in gaps {
                let last = *v.last().unwrap();
                v.push(last + g);
            }
            let x = Configuration::new(v);
            let there = to_asep(&x).unwrap();
            prop_assert!(there.is_physical(ModelKind::Asep));
            prop_assert_eq!(to_azrp(&there).unwrap(), x);
        }
    }
}
