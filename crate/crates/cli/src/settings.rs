//! Subcommand key tables, config files and the canonical form.
//!
//! Config files are flat:
//!
//! ```text
//! config  = { line } ;
//! line    = [ pair ] , [ comment ] , newline ;
//! pair    = key , "=" , value ;
//! key     = letter , { letter | digit | "-" | "_" } ;
//! value   = { char - ( "#" | newline ) } ;   (* surrounding blanks trimmed *)
//! comment = "#" , { char - newline } ;
//! ```
//!
//! Keys are the long flag names of the subcommand. Flags given on the
//! command line override the file.

use std::collections::BTreeMap;
use std::path::Path;

use bifcurrents::families::Rect;
use bifcurrents::maps::parse_complex;
use bifcurrents::P1Point;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Value,
    Switch,
    /// A switch that may carry a path.
    OptionalValue,
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub kind: Kind,
    pub help: &'static str,
    pub hidden: bool,
    /// Left out of the cache key.
    pub volatile: bool,
    /// Names an input file whose contents enter the cache key.
    pub input: bool,
}

const fn value(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, default, kind: Kind::Value, help, hidden: false, volatile: false, input: false }
}

const fn input(name: &'static str, help: &'static str) -> Key {
    Key { input: true, ..value(name, None, help) }
}

const OUT: Key = Key { volatile: true, ..value("out", None, "output path") };
const JSON: Key = Key { kind: Kind::Switch, ..value("json", Some("false"), "print JSON") };
const SEED: Key = value("seed", Some("0"), "random seed");

#[derive(Debug)]
pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
}

pub const COMMANDS: &[Command] = &[
    Command {
        name: "green",
        about: "Escape rate G_F at a lift or g_F at a point of the sphere",
        keys: &[
            input("map", "builtin:… or a map file"),
            value("point", None, "affine point a+bi or inf"),
            value("lift", None, "homogeneous lift z0,z1"),
            value("tol", Some("1e-12"), "truncation tolerance"),
            JSON,
            OUT,
        ],
    },
    Command {
        name: "lyapunov",
        about: "Lyapunov exponent by closed form, ergodic average, cycles and integral formula",
        keys: &[
            input("map", "builtin:… or a map file"),
            value("method", Some("all"), "closed|ergodic|cycles|integral|all, comma separated"),
            value("samples", Some("200000"), "Monte-Carlo samples"),
            value("period", Some("5"), "cycle period"),
            SEED,
            JSON,
            OUT,
        ],
    },
    Command {
        name: "scan",
        about: "L(f_λ) on a parameter grid",
        keys: &[
            input("family", "quadratic, m2 or file:<path>"),
            value("box", None, "re0:re1:im0:im1 per parameter, comma separated"),
            value("res", None, "nodes per axis, e.g. 200x200"),
            value("method", Some("closed"), "closed|ergodic"),
            value("tol", Some("1e-12"), "closed-form tolerance"),
            value("samples", Some("20000"), "ergodic samples per cell"),
            SEED,
            OUT,
        ],
    },
    Command {
        name: "ddc",
        about: "Bifurcation measure of a one-parameter field",
        keys: &[input("in", "scalar field file"), OUT],
    },
    Command {
        name: "ma2",
        about: "Bifurcation measure of a two-parameter field",
        keys: &[input("in", "scalar field file"), value("smoothing", Some("2"), "Gaussian radius in cells"), OUT],
    },
    Command {
        name: "per",
        about: "Per(n, η) curves, optionally compared with a mass field",
        keys: &[
            input("family", "quadratic, m2 or file:<path>"),
            value("n", None, "period"),
            value("theta", None, "η = exp(2πiθ)"),
            value("eta", None, "multiplier a+bi"),
            value("box", None, "search box re0:re1:im0:im1 (two for m2)"),
            value("grid", Some("60"), "seed grid per axis"),
            value("sigma1-grid", Some("10"), "σ₁ slices per axis for m2"),
            input("mass", "mass field for the support comparison"),
            value("quantile", Some("0.99"), "support comparison quantile"),
            value("radius", Some("3"), "support comparison radius in cells"),
            JSON,
            OUT,
        ],
    },
    Command {
        name: "render",
        about: "16-bit grayscale PGM of a field",
        keys: &[
            input("in", "field file"),
            value("map", Some("log"), "log|linear"),
            value("floor", Some("1e-12"), "floor of the log mapping"),
            OUT,
        ],
    },
    Command {
        name: "verify",
        about: "Run the acceptance identity suite",
        keys: &[
            value("level", Some("quick"), "quick|full"),
            value("seed", Some("20240601"), "suite seed"),
            value("only", None, "comma-separated criterion ids"),
            Key { kind: Kind::OptionalValue, volatile: true, ..value("json", None, "write the JSON report (stdout without a path)") },
            Key { hidden: true, ..value("inject", None, "deliberate defect") },
        ],
    },
];

pub fn command(name: &str) -> &'static Command {
    COMMANDS.iter().find(|c| c.name == name).expect("known subcommand")
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::validation("config", format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        let ok = k.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok {
            return Err(CliError::validation("config", format!("line {}: bad key {k:?}", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Resolved key values of one invocation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub command: &'static Command,
    pub values: BTreeMap<String, String>,
}

impl Settings {
    /// Merges `file` (from a config) under `flags`, then fills defaults.
    pub fn resolve(
        command: &'static Command,
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
    ) -> Result<Settings, CliError> {
        let mut values = BTreeMap::new();
        for (k, v) in file.into_iter().chain(flags) {
            if k == "command" {
                if v != command.name {
                    return Err(CliError::validation("command", format!("config is for {v}, not {}", command.name)));
                }
                continue;
            }
            if !command.keys.iter().any(|key| key.name == k) {
                return Err(CliError::validation(&k, format!("unknown key for {}", command.name)));
            }
            values.insert(k, v);
        }
        for key in command.keys {
            if let (false, Some(d)) = (values.contains_key(key.name), key.default) {
                values.insert(key.name.to_string(), d.to_string());
            }
        }
        Ok(Settings { command, values })
    }

    /// `key = value` lines in key order, headed by the subcommand, with the
    /// SHA-256 of every named input file.
    pub fn canonical(&self) -> Result<String, CliError> {
        let mut out = format!("command = {}\n", self.command.name);
        for key in self.command.keys.iter().filter(|k| !k.volatile) {
            let Some(v) = self.values.get(key.name) else { continue };
            out.push_str(&format!("{} = {v}\n", key.name));
            if key.input {
                if let Some(path) = input_path(v) {
                    let bytes = std::fs::read(path).map_err(|e| CliError::validation(key.name, format!("{path}: {e}")))?;
                    out.push_str(&format!("{}.sha256 = {:x}\n", key.name, Sha256::digest(&bytes)));
                }
            }
        }
        Ok(out)
    }

    pub fn cache_key(&self) -> Result<String, CliError> {
        Ok(format!("{:x}", Sha256::digest(self.canonical()?.as_bytes())))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn required(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::validation(key, "required"))
    }

    pub fn switch(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(v) => Err(CliError::validation(key, format!("expected true or false, got {v:?}"))),
        }
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.required(key)?;
        v.parse().map_err(|_| CliError::validation(key, format!("cannot parse {v:?}")))
    }

    pub fn positive_f64(&self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.parse(key)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(CliError::validation(key, format!("must be positive, got {x}")));
        }
        Ok(x)
    }

    pub fn complex(&self, key: &str) -> Result<Complex64, CliError> {
        complex_literal(key, self.required(key)?)
    }

    pub fn boxes(&self, key: &str) -> Result<Vec<Rect>, CliError> {
        self.required(key)?
            .split(',')
            .map(|part| {
                let xs: Vec<f64> = part
                    .split(':')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CliError::validation(key, format!("bad box {part:?}")))?;
                match xs[..] {
                    [a, b, c, d] if a < b && c <= d && xs.iter().all(|x| x.is_finite()) => Ok(Rect::new(a, b, c, d)),
                    _ => Err(CliError::validation(key, format!("box {part:?} needs re0:re1:im0:im1 with re0 < re1, im0 <= im1"))),
                }
            })
            .collect()
    }

    pub fn resolution(&self, key: &str) -> Result<Vec<usize>, CliError> {
        let v = self.required(key)?;
        let shape: Vec<usize> = v
            .split('x')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::validation(key, format!("bad resolution {v:?}")))?;
        if shape.iter().any(|&n| n == 0) {
            return Err(CliError::validation(key, "resolution must be positive"));
        }
        Ok(shape)
    }

    pub fn point(&self, key: &str) -> Result<P1Point, CliError> {
        let v = self.required(key)?;
        if matches!(v.trim(), "inf" | "infinity" | "∞") {
            return Ok(P1Point::infinity());
        }
        Ok(P1Point::from_affine(complex_literal(key, v)?))
    }

    pub fn complex_list(&self, key: &str) -> Result<Vec<Complex64>, CliError> {
        self.required(key)?.split(',').map(|s| complex_literal(key, s)).collect()
    }
}

fn complex_literal(key: &str, v: &str) -> Result<Complex64, CliError> {
    parse_complex(v.trim()).map_err(|e| CliError::validation(key, format!("{v:?}: {e}")))
}

/// The file named by a map or family spec, if any.
pub fn input_path(spec: &str) -> Option<&str> {
    if spec.starts_with("builtin:") || spec == "quadratic" || spec == "m2" {
        return None;
    }
    Some(spec.strip_prefix("file:").unwrap_or(spec))
}

pub fn read_input(key: &str, spec: &str) -> Result<String, CliError> {
    let path = input_path(spec).unwrap_or(spec);
    std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::validation(key, format!("{path}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_grammar() {
        let m = parse_config("# header\nbox = -2:1:-1:1  # trailing\n\nres=10x10\n").unwrap();
        assert_eq!(m["box"], "-2:1:-1:1");
        assert_eq!(m["res"], "10x10");
        assert!(parse_config("no equals sign").is_err());
        assert!(parse_config("9lives = 1").is_err());
    }

    #[test]
    fn flags_override_file_and_defaults_fill() {
        let file = parse_config("family = quadratic\nseed = 4\n").unwrap();
        let flags = BTreeMap::from([("seed".to_string(), "9".to_string()), ("out".to_string(), "x".to_string())]);
        let s = Settings::resolve(command("scan"), file, flags).unwrap();
        assert_eq!(s.get("seed"), Some("9"));
        assert_eq!(s.get("method"), Some("closed"));
        let canon = s.canonical().unwrap();
        assert!(canon.starts_with("command = scan\nfamily = quadratic\n"));
        assert!(!canon.contains("out ="));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = parse_config("colour = blue\n").unwrap();
        assert!(Settings::resolve(command("ddc"), file, BTreeMap::new()).is_err());
        let wrong = parse_config("command = scan\n").unwrap();
        assert!(Settings::resolve(command("ddc"), wrong, BTreeMap::new()).is_err());
    }

    #[test]
    fn boxes_and_resolutions() {
        let flags = BTreeMap::from([
            ("box".to_string(), "-8:6:-7:7,-10:20:-15:15".to_string()),
            ("res".to_string(), "4x5x6x7".to_string()),
        ]);
        let s = Settings::resolve(command("scan"), BTreeMap::new(), flags).unwrap();
        assert_eq!(s.boxes("box").unwrap(), vec![Rect::new(-8.0, 6.0, -7.0, 7.0), Rect::new(-10.0, 20.0, -15.0, 15.0)]);
        assert_eq!(s.resolution("res").unwrap(), vec![4, 5, 6, 7]);
    }
}
