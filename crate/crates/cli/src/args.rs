//! Value parsers for list and grid arguments.

use std::fmt;
use std::str::FromStr;

use kda_core::GridSpec;
use serde::{Serialize, Serializer};

/// Comma-separated integers or inclusive ranges: `1..4`, `1,3,5`, `2..4,10`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntList(pub Vec<usize>);

impl FromStr for IntList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("'{t}' is not a non-negative integer"));
            match part.split_once("..") {
                Some((lo, hi)) => {
                    let (lo, hi) = (num(lo)?, num(hi)?);
                    if lo > hi {
                        return Err(format!("empty range {part}"));
                    }
                    out.extend(lo..=hi);
                }
                None => out.push(num(part)?),
            }
        }
        Ok(IntList(out))
    }
}

impl fmt::Display for IntList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for IntList {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Comma-separated items parsed with their own `FromStr`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<T>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<T>, String>>()
            .map(List)
    }
}

impl<T: fmt::Display> Serialize for List<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|t| t.to_string()))
    }
}

/// `lo,hi,n` for a square grid or `xmin,xmax,ymin,ymax,nx,ny`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct GridArg(pub GridSpec);

impl FromStr for GridArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let f = |t: &str| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
        let n = |t: &str| t.parse::<usize>().map_err(|_| format!("'{t}' is not a point count"));
        let spec = match parts.as_slice() {
            [lo, hi, k] => GridSpec::square(f(lo)?, f(hi)?, n(k)?),
            [x0, x1, y0, y1, nx, ny] => GridSpec {
                x_min: f(x0)?,
                x_max: f(x1)?,
                y_min: f(y0)?,
                y_max: f(y1)?,
                nx: n(nx)?,
                ny: n(ny)?,
            },
            _ => return Err("grid takes lo,hi,n or xmin,xmax,ymin,ymax,nx,ny".into()),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(GridArg(spec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_lists() {
        assert_eq!("1..4".parse::<IntList>().unwrap().0, vec![1, 2, 3, 4]);
        assert_eq!("2, 5..6,9".parse::<IntList>().unwrap().0, vec![2, 5, 6, 9]);
        assert_eq!("".parse::<IntList>().unwrap().0, Vec::<usize>::new());
        assert!("4..1".parse::<IntList>().is_err());
        assert!("a".parse::<IntList>().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!("-4,4,11".parse::<GridArg>().unwrap().0, GridSpec::square(-4.0, 4.0, 11));
        let g = "0,1,-2,2,3,5".parse::<GridArg>().unwrap().0;
        assert_eq!((g.y_min, g.ny), (-2.0, 5));
        assert!("1,0,5".parse::<GridArg>().is_err());
        assert!("1,2".parse::<GridArg>().is_err());
    }
}
