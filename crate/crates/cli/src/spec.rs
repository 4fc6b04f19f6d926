//! Field specs written as `name(arg, ...)`, e.g. `random-band(4, 7, 1.0)`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use burgerlab_core::generators::{gradient_of, named_scalar, random_band_limited, single_mode, white_noise};
use burgerlab_core::io::load_field;
use burgerlab_core::{Field, Force, TorusGrid};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Zero,
    /// `amp · sin(k x_0)` in the first component.
    SingleMode { k: f64, amp: f64 },
    RandomBand { k_max: usize, seed: u64, amp: f64 },
    /// Gradient of a named scalar, optionally scaled.
    GradientOf { name: String, scale: f64 },
    WhiteNoise { seed: u64 },
    /// Named scalar potential, optionally scaled.
    Named { name: String, scale: f64 },
    /// `−A sin(m x)` on the 1-D torus.
    NegSine { amp: f64, mode: u32 },
    File(PathBuf),
}

fn split_call(s: &str) -> std::result::Result<(&str, Vec<&str>), String> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("missing ')' in '{s}'"))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((s[..open].trim(), args))
        }
    }
}

fn num<T: FromStr>(spec: &str, arg: &str) -> std::result::Result<T, String> {
    arg.parse()
        .map_err(|_| format!("bad number '{arg}' in '{spec}'"))
}

impl FromStr for FieldSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, args) = split_call(s)?;
        let arity = |lo: usize, hi: usize| {
            if args.len() < lo || args.len() > hi {
                Err(format!("'{name}' takes {lo}..={hi} arguments, got {}", args.len()))
            } else {
                Ok(())
            }
        };
        let spec = match name {
            "zero" => {
                arity(0, 0)?;
                FieldSpec::Zero
            }
            "single-mode" => {
                arity(2, 2)?;
                FieldSpec::SingleMode {
                    k: num(s, args[0])?,
                    amp: num(s, args[1])?,
                }
            }
            "random-band" => {
                arity(3, 3)?;
                FieldSpec::RandomBand {
                    k_max: num(s, args[0])?,
                    seed: num(s, args[1])?,
                    amp: num(s, args[2])?,
                }
            }
            "gradient-of" => {
                arity(1, 2)?;
                FieldSpec::GradientOf {
                    name: args[0].to_string(),
                    scale: args.get(1).map_or(Ok(1.0), |a| num(s, a))?,
                }
            }
            "white-noise" => {
                arity(1, 1)?;
                FieldSpec::WhiteNoise {
                    seed: num(s, args[0])?,
                }
            }
            "named" => {
                arity(1, 2)?;
                FieldSpec::Named {
                    name: args[0].to_string(),
                    scale: args.get(1).map_or(Ok(1.0), |a| num(s, a))?,
                }
            }
            "neg-sine" => {
                arity(2, 2)?;
                FieldSpec::NegSine {
                    amp: num(s, args[0])?,
                    mode: num(s, args[1])?,
                }
            }
            "file" => {
                arity(1, 1)?;
                FieldSpec::File(PathBuf::from(args[0]))
            }
            other => {
                return Err(format!(
                    "unknown generator '{other}' (expected zero, single-mode, random-band, \
                     gradient-of, white-noise, named, neg-sine or file)"
                ))
            }
        };
        Ok(spec)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Zero => write!(f, "zero"),
            FieldSpec::SingleMode { k, amp } => write!(f, "single-mode({k}, {amp})"),
            FieldSpec::RandomBand { k_max, seed, amp } => {
                write!(f, "random-band({k_max}, {seed}, {amp})")
            }
            FieldSpec::GradientOf { name, scale } => write!(f, "gradient-of({name}, {scale})"),
            FieldSpec::WhiteNoise { seed } => write!(f, "white-noise({seed})"),
            FieldSpec::Named { name, scale } => write!(f, "named({name}, {scale})"),
            FieldSpec::NegSine { amp, mode } => write!(f, "neg-sine({amp}, {mode})"),
            FieldSpec::File(p) => write!(f, "file({})", p.display()),
        }
    }
}

impl Serialize for FieldSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FieldSpec {
    /// Seed carried by the spec, if any.
    pub fn seed(&self) -> Option<u64> {
        match self {
            FieldSpec::RandomBand { seed, .. } | FieldSpec::WhiteNoise { seed } => Some(*seed),
            _ => None,
        }
    }

    /// Makes a relative file path absolute against `base`.
    pub fn resolve(&mut self, base: &Path) {
        if let FieldSpec::File(p) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Problems that can be detected without building the field.
    pub fn violations(&self, grid: Option<&TorusGrid>, components: usize, what: &str) -> Vec<String> {
        let mut v = Vec::new();
        let dim = grid.map(|g| g.dim());
        match self {
            FieldSpec::GradientOf { name, .. } if Some(components) != dim => v.push(format!(
                "{what}: gradient-of({name}) gives {} components, {components} needed",
                dim.unwrap_or(0)
            )),
            FieldSpec::Named { name, .. } if components != 1 => v.push(format!(
                "{what}: named({name}) is scalar, {components} components needed"
            )),
            FieldSpec::NegSine { .. } => {
                if dim != Some(1) || components != 1 {
                    v.push(format!("{what}: neg-sine needs a scalar field on a 1-D grid"));
                }
                if let Some(g) = grid {
                    if (g.length() - std::f64::consts::TAU).abs() > 1e-12 {
                        v.push(format!("{what}: neg-sine needs period length 2π"));
                    }
                }
            }
            FieldSpec::File(p) if !p.is_file() => {
                v.push(format!("{what}: file {} does not exist", p.display()))
            }
            _ => {}
        }
        if let (Some(g), FieldSpec::GradientOf { name, .. } | FieldSpec::Named { name, .. }) = (grid, self) {
            if let Err(e) = named_scalar(g, name) {
                v.push(format!("{what}: {e}"));
            }
        }
        v
    }

    pub fn build(&self, grid: &TorusGrid, components: usize) -> Result<Field> {
        let field = match self {
            FieldSpec::Zero => Field::zeros(grid, components),
            FieldSpec::SingleMode { k, amp } => single_mode(grid, components, 0, 0, *k, *amp)?,
            FieldSpec::RandomBand { k_max, seed, amp } => {
                random_band_limited(grid, components, *k_max, *amp, *seed)
            }
            FieldSpec::GradientOf { name, scale } => gradient_of(grid, name)?.scaled(*scale),
            FieldSpec::WhiteNoise { seed } => white_noise(grid, components, *seed),
            FieldSpec::Named { name, scale } => named_scalar(grid, name)?.scaled(*scale),
            FieldSpec::NegSine { amp, mode } => {
                let m = *mode as f64;
                Field::scalar_from_fn(grid, |x| -amp * (m * x[0]).sin())
            }
            FieldSpec::File(path) => {
                let (field, _) = load_field(path)?;
                if field.grid() != grid {
                    return Err(CliError::Config(vec![format!(
                        "{}: grid does not match the configured grid",
                        path.display()
                    )]));
                }
                field
            }
        };
        if field.num_components() != components {
            return Err(CliError::Config(vec![format!(
                "{self} has {} components, {components} needed",
                field.num_components()
            )]));
        }
        Ok(field)
    }

    pub fn build_force(&self, grid: &TorusGrid, components: usize) -> Result<Force> {
        Ok(match self {
            FieldSpec::Zero => Force::Zero,
            other => Force::Steady(other.build(grid, components)?),
        })
    }
}
