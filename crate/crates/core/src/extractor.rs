//! Extractor selection: one config type covering all thirteen methods, its
//! flat `name key=value ...` form, shipped presets and a single dispatch.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::cfar::{run_cfar, CfarParams, CfarVariant, CfarWindow};
use crate::error::{Error, Result};
use crate::scan::{raw_to_decibel, to_watts_squared, PointCloud, PolarScan, PowerUnit};
use crate::signal::{extract_c18, extract_kstrongest};
use crate::spatial::{extract_c19, extract_cfear, C19Config, CfearConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Cfar(CfarParams),
    KStrongest { k: usize, z_min_db: f64 },
    C18 { w_binom: f64, z_q: f64 },
    C19(C19Config),
    Cfear(CfearConfig),
}

/// A fully specified extractor.
///
/// The flat form is `name key=value ...`, optionally written
/// `extractor=name ...`. Keys are case-insensitive; omitted keys take the
/// F1 preset value.
///
/// ```
/// use radex::extractor::ExtractorConfig;
/// let cfg: ExtractorConfig = "tm T=100 N_T=30".parse().unwrap();
/// assert_eq!(cfg.to_string(), "tm T=100 N_T=30");
/// assert!("ca T=-1".parse::<ExtractorConfig>().is_err());
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractorConfig {
    pub method: Method,
    /// Reference window for the CFAR methods; ignored by the others.
    pub window: CfarWindow,
}

pub const METHOD_NAMES: [&str; 13] = [
    "ca", "cago", "caso", "is", "vi", "os", "tm", "msca", "bfar", "kstrongest", "c18", "c19", "cfear",
];

impl ExtractorConfig {
    pub fn new(method: Method) -> Self {
        ExtractorConfig {
            method,
            window: CfarWindow::default(),
        }
    }

    /// Short lowercase name used in the flat form.
    pub fn name(&self) -> &'static str {
        match &self.method {
            Method::Cfar(p) => match p.variant {
                CfarVariant::Ca => "ca",
                CfarVariant::Cago => "cago",
                CfarVariant::Caso => "caso",
                CfarVariant::Is { .. } => "is",
                CfarVariant::Vi { .. } => "vi",
                CfarVariant::Os { .. } => "os",
                CfarVariant::Tm { .. } => "tm",
                CfarVariant::Msca { .. } => "msca",
                CfarVariant::Bfar { .. } => "bfar",
            },
            Method::KStrongest { .. } => "kstrongest",
            Method::C18 { .. } => "c18",
            Method::C19(_) => "c19",
            Method::Cfear(_) => "cfear",
        }
    }

    /// Name as printed in comparison tables.
    pub fn label(&self) -> &'static str {
        match self.name() {
            "ca" => "CA-CFAR",
            "cago" => "CAGO-CFAR",
            "caso" => "CASO-CFAR",
            "is" => "IS-CFAR",
            "vi" => "VI-CFAR",
            "os" => "OS-CFAR",
            "tm" => "TM-CFAR",
            "msca" => "MSCA-CFAR",
            "bfar" => "BFAR",
            "kstrongest" => "K-strongest",
            "c18" => "C18",
            "c19" => "C19",
            _ => "CFEAR",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.method {
            Method::Cfar(p) => p.validate(&self.window),
            Method::KStrongest { k, z_min_db } => {
                if *k == 0 {
                    return Err(Error::InvalidParameter("K must be >= 1".into()));
                }
                if z_min_db.is_nan() {
                    return Err(Error::InvalidParameter("z_min must be a number".into()));
                }
                Ok(())
            }
            Method::C18 { w_binom, z_q } => {
                if !(*w_binom >= 1.0 && w_binom.is_finite()) {
                    return Err(Error::InvalidParameter(format!("w_binom must be >= 1, got {w_binom}")));
                }
                if !(*z_q > 0.0 && z_q.is_finite()) {
                    return Err(Error::InvalidParameter(format!("z_q must be positive, got {z_q}")));
                }
                Ok(())
            }
            Method::C19(c) => c.validate(),
            Method::Cfear(c) => c.validate(),
        }
    }

    /// Parameters in flat-form order, as `(key, value)` pairs.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        let mut out = match &self.method {
            Method::Cfar(p) => {
                let mut v = vec![("T", p.t)];
                match p.variant {
                    CfarVariant::Is { alpha, max_interferers } => {
                        v.push(("alpha", alpha));
                        v.push(("I", max_interferers as f64));
                    }
                    CfarVariant::Vi { v: vt, r } => {
                        v.push(("V", vt));
                        v.push(("R", r));
                    }
                    CfarVariant::Os { quantile } => v.push(("quantile", quantile)),
                    CfarVariant::Tm { trim } => v.push(("N_T", trim as f64)),
                    CfarVariant::Msca { m } => v.push(("M", m as f64)),
                    CfarVariant::Bfar { b_db } => v.push(("b", b_db)),
                    _ => {}
                }
                v
            }
            Method::KStrongest { k, z_min_db } => vec![("K", *k as f64), ("z_min", *z_min_db)],
            Method::C18 { w_binom, z_q } => vec![("w_binom", *w_binom), ("z_q", *z_q)],
            Method::C19(c) => vec![("l_max", c.l_max as f64), ("region_drop", c.region_drop)],
            Method::Cfear(c) => vec![
                ("K", c.k as f64),
                ("z_min", c.z_min_db),
                ("r", c.r),
                ("grid", c.grid_side),
                ("p_min", c.p_min as f64),
            ],
        };
        if matches!(self.method, Method::Cfar(_)) && self.window != CfarWindow::default() {
            out.push(("N", self.window.size as f64));
            out.push(("g", self.window.guard as f64));
        }
        out
    }

    /// Copy with one parameter replaced, validated.
    pub fn with_param(&self, key: &str, value: f64) -> Result<Self> {
        let mut pairs: Vec<(String, String)> =
            self.params().into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        match pairs.iter_mut().find(|(k, _)| k.eq_ignore_ascii_case(key)) {
            Some(slot) => slot.1 = value.to_string(),
            None => pairs.push((key.to_string(), value.to_string())),
        }
        Self::from_pairs(self.name(), &pairs)
    }

    /// Builds a config from a method name and parameter pairs; missing
    /// parameters take their F1 preset value.
    pub fn from_pairs(name: &str, pairs: &[(String, String)]) -> Result<Self> {
        let name = name.to_ascii_lowercase();
        let canonical = match name.as_str() {
            "k-strongest" | "kstr" | "k_strongest" => "kstrongest",
            other => other,
        };
        let mut cfg = preset_config(Preset::F1, canonical)
            .ok_or_else(|| Error::Parse(format!("unknown extractor '{name}'")))?;
        let mut seen = BTreeMap::new();
        for (key, raw) in pairs {
            let key = key.to_ascii_lowercase();
            if seen.insert(key.clone(), ()).is_some() {
                return Err(Error::Parse(format!("parameter '{key}' given twice")));
            }
            let value: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("parameter '{key}': '{raw}' is not a number")))?;
            cfg.set(&key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let name = self.name();
        let unknown = || Error::Parse(format!("extractor '{name}' has no parameter '{key}'"));
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("parameter '{key}' must be a non-negative integer, got {v}")))
            }
        };
        match (&mut self.method, key) {
            (Method::Cfar(_), "n") => self.window.size = count(value)?,
            (Method::Cfar(_), "g") => self.window.guard = count(value)?,
            (Method::Cfar(p), "t") => p.t = value,
            (Method::Cfar(p), k) => match (&mut p.variant, k) {
                (CfarVariant::Is { alpha, .. }, "alpha") => *alpha = value,
                (CfarVariant::Is { max_interferers, .. }, "i") => *max_interferers = count(value)?,
                (CfarVariant::Vi { v, .. }, "v") => *v = value,
                (CfarVariant::Vi { r, .. }, "r") => *r = value,
                (CfarVariant::Os { quantile }, "quantile" | "q") => *quantile = value,
                (CfarVariant::Tm { trim }, "n_t" | "nt") => *trim = count(value)?,
                (CfarVariant::Msca { m }, "m") => *m = count(value)?,
                (CfarVariant::Bfar { b_db }, "b" | "b_db") => *b_db = value,
                _ => return Err(unknown()),
            },
            (Method::KStrongest { k, .. }, "k") => *k = count(value)?,
            (Method::KStrongest { z_min_db, .. }, "z_min" | "z_min_db") => *z_min_db = value,
            (Method::C18 { w_binom, .. }, "w_binom" | "w_b") => *w_binom = value,
            (Method::C18 { z_q, .. }, "z_q") => *z_q = value,
            (Method::C19(c), "l_max") => c.l_max = count(value)?,
            (Method::C19(c), "region_drop") => c.region_drop = value,
            (Method::Cfear(c), "k") => c.k = count(value)?,
            (Method::Cfear(c), "z_min" | "z_min_db") => c.z_min_db = value,
            (Method::Cfear(c), "r") => c.r = value,
            (Method::Cfear(c), "grid" | "grid_side") => c.grid_side = value,
            (Method::Cfear(c), "p_min") => c.p_min = count(value)?,
            _ => return Err(unknown()),
        }
        Ok(())
    }
}

impl fmt::Display for ExtractorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for (k, v) in self.params() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for ExtractorConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let first = tokens.next().ok_or_else(|| Error::Parse("empty extractor spec".into()))?;
        let name = match first.split_once('=') {
            Some((k, v)) if k.eq_ignore_ascii_case("extractor") => v,
            Some(_) => return Err(Error::Parse(format!("expected an extractor name, got '{first}'"))),
            None => first,
        };
        let pairs = tokens
            .map(|t| {
                t.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Parse(format!("expected key=value, got '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(name, &pairs)
    }
}

/// Serialized as a flat table: `extractor = "ca"` plus one numeric entry per
/// parameter.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FlatValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Serialize for ExtractorConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map: BTreeMap<String, FlatValue> = BTreeMap::new();
        map.insert("extractor".into(), FlatValue::Text(self.name().into()));
        for (k, v) in self.params() {
            let value = if v.fract() == 0.0 && v.abs() < 1e15 {
                FlatValue::Int(v as i64)
            } else {
                FlatValue::Float(v)
            };
            map.insert(k.into(), value);
        }
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtractorConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map = BTreeMap::<String, FlatValue>::deserialize(d)?;
        let mut name = None;
        let mut pairs = Vec::new();
        for (k, v) in map {
            let text = match v {
                FlatValue::Int(i) => i.to_string(),
                FlatValue::Float(x) => x.to_string(),
                FlatValue::Text(t) => t,
            };
            if k.eq_ignore_ascii_case("extractor") {
                name = Some(text);
            } else {
                pairs.push((k, text));
            }
        }
        let name = name.ok_or_else(|| D::Error::custom("missing 'extractor' key"))?;
        ExtractorConfig::from_pairs(&name, &pairs).map_err(D::Error::custom)
    }
}

/// Shipped parameter sets. They were tuned on real sensor data for the two
/// firmware regimes and are starting points, not optima for synthetic scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    F1,
    F2,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" | "f1-defaults" => Ok(Preset::F1),
            "f2" | "f2-defaults" => Ok(Preset::F2),
            _ => Err(Error::Parse(format!("unknown preset '{s}' (expected f1-defaults or f2-defaults)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::F1 => "f1-defaults",
            Preset::F2 => "f2-defaults",
        })
    }
}

/// The preset entry for one method name, or `None` for an unknown name.
pub fn preset_config(preset: Preset, name: &str) -> Option<ExtractorConfig> {
    let f1 = preset == Preset::F1;
    let pick = |a: f64, b: f64| if f1 { a } else { b };
    let cfar = |t: f64, variant| Method::Cfar(CfarParams::new(t, variant));
    let method = match name {
        "ca" => cfar(pick(35.0, 55.0), CfarVariant::Ca),
        "cago" => cfar(pick(25.0, 50.0), CfarVariant::Cago),
        "caso" => cfar(pick(400.0, 3700.0), CfarVariant::Caso),
        "is" => cfar(
            pick(15.0, 5.0),
            CfarVariant::Is {
                alpha: pick(0.075, 0.003),
                max_interferers: 6,
            },
        ),
        "vi" => cfar(pick(400.0, 2000.0), CfarVariant::Vi { v: 5.0, r: 1.5 }),
        "os" => cfar(pick(120.0, 1000.0), CfarVariant::Os { quantile: 0.5 }),
        "tm" => cfar(
            pick(100.0, 1050.0),
            CfarVariant::Tm {
                trim: if f1 { 30 } else { 44 },
            },
        ),
        "msca" => cfar(
            pick(100.0, 400.0),
            CfarVariant::Msca {
                m: if f1 { 8 } else { 10 },
            },
        ),
        "bfar" => cfar(pick(15.0, 12.5), CfarVariant::Bfar { b_db: pick(19.13, 38.25) }),
        "kstrongest" => Method::KStrongest {
            k: if f1 { 5 } else { 3 },
            z_min_db: pick(31.875, 44.625),
        },
        "c18" => Method::C18 {
            w_binom: pick(10.0, 6.0),
            z_q: pick(2.75, 2.0),
        },
        "c19" => Method::C19(C19Config {
            l_max: if f1 { 400 } else { 300 },
            region_drop: 0.5,
        }),
        "cfear" => Method::Cfear(CfearConfig {
            k: 20,
            z_min_db: pick(31.875, 44.625),
            r: 0.5,
            grid_side: 0.5,
            p_min: 5,
        }),
        _ => return None,
    };
    Some(ExtractorConfig::new(method))
}

/// All thirteen extractors of a preset, in table order.
pub fn preset_configs(preset: Preset) -> Vec<ExtractorConfig> {
    METHOD_NAMES
        .iter()
        .map(|n| preset_config(preset, n).expect("every method has a preset"))
        .collect()
}

/// Runs an extractor on a Decibel (or raw half-dB) scan.
///
/// CFAR methods work on squared Watts; the others on dB. Point intensity is
/// always dB.
pub fn extract(scan: &PolarScan, cfg: &ExtractorConfig) -> Result<PointCloud> {
    cfg.validate()?;
    let converted;
    let db = match scan.unit() {
        PowerUnit::Decibel => scan,
        PowerUnit::RawHalfDb => {
            converted = raw_to_decibel(scan)?;
            &converted
        }
        found => {
            return Err(Error::WrongUnit {
                expected: PowerUnit::Decibel,
                found,
            })
        }
    };
    match &cfg.method {
        Method::Cfar(p) => run_cfar(&to_watts_squared(db)?, p, cfg.window),
        Method::KStrongest { k, z_min_db } => extract_kstrongest(db, *k, *z_min_db),
        Method::C18 { w_binom, z_q } => extract_c18(db, *w_binom, *z_q),
        Method::C19(c) => extract_c19(db, c),
        Method::Cfear(c) => extract_cfear(db, c),
    }
}

/// Reads a config file: JSON when the extension is `.json`, TOML otherwise.
pub fn read_extractor_config(path: impl AsRef<Path>) -> Result<ExtractorConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(toml::from_str(&text)?)
    }
}

pub fn write_extractor_config(cfg: &ExtractorConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = if path.extension().is_some_and(|e| e == "json") {
        serde_json::to_string_pretty(cfg)? + "\n"
    } else {
        toml::to_string(cfg)?
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Accepts either an inline `name K=V ...` spec or a path to a config file.
pub fn parse_extractor_arg(arg: &str) -> Result<ExtractorConfig> {
    let path = Path::new(arg);
    if path.is_file() {
        read_extractor_config(path)
    } else {
        arg.parse()
    }
}
