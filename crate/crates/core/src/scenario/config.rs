//! Scenario files: TOML with one section per regime.

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::numerics::Grid1D;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Classical,
    Madelung,
    Schrodinger,
    Spin,
    Ddw,
    Vacuum,
    SpaceIndependent,
    Confined,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Classical => "classical",
            Regime::Madelung => "madelung",
            Regime::Schrodinger => "schrodinger",
            Regime::Spin => "spin",
            Regime::Ddw => "ddw",
            Regime::Vacuum => "vacuum",
            Regime::SpaceIndependent => "space-independent",
            Regime::Confined => "confined",
        }
    }

    fn uses_grid(&self) -> bool {
        !matches!(self, Regime::Spin | Regime::Ddw)
    }

    fn needs_confining(&self) -> bool {
        matches!(self, Regime::Vacuum | Regime::SpaceIndependent | Regime::Confined)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Free,
    Harmonic,
    Quartic,
    /// Zero potential between hard walls at the grid ends.
    Box,
    Polynomial,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub k: Option<f64>,
    pub g: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    #[serde(default = "one")]
    pub mass: f64,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub p0: f64,
    pub dt: f64,
    pub steps: usize,
    pub curvature_limit: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchrodingerConfig {
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub center: f64,
    pub sigma: f64,
    #[serde(default)]
    pub p0: f64,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MadelungMode {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MadelungConfig {
    pub mode: MadelungMode,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub center: f64,
    pub sigma: f64,
    #[serde(default)]
    pub p0: f64,
    pub dt: f64,
    pub steps: usize,
    /// Allowed `L∞` density gap against the reference solver.
    pub cross_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinConfig {
    pub u: Vec<Vec<f64>>,
    pub theta: Option<Vec<Vec<f64>>>,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    /// Real and imaginary parts of the initial amplitudes. A random
    /// nodeless state is drawn from the seed when absent.
    pub initial_re: Option<Vec<f64>>,
    pub initial_im: Option<Vec<f64>>,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdwConfig {
    #[serde(default = "one")]
    pub eta: f64,
    pub mass: f64,
    pub length: f64,
    pub n: usize,
    #[serde(default = "one_usize")]
    pub mode: usize,
    pub amplitude: f64,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VacuumConfig {
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub f: f64,
    pub modes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceIndependentConfig {
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub f: f64,
    /// Vacuum modes superposed with equal weight.
    pub superpose: Vec<usize>,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfinedConfig {
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub f: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    pub c: Vec<f64>,
    pub r_min: Option<f64>,
    pub r_max: f64,
    pub n_r: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    /// Relative tolerance of the fitted decay rate.
    pub rate_tol: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_modes() -> usize {
    crate::quantum_fields::DEFAULT_MODES
}

fn default_tol() -> f64 {
    1e-10
}

fn default_iterations() -> usize {
    30
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub regime: Regime,
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Record failing invariants without a failing exit status.
    #[serde(default)]
    pub waive_invariants: bool,
    pub potential: Option<PotentialConfig>,
    pub grid: Option<GridConfig>,
    pub classical: Option<ClassicalConfig>,
    pub schrodinger: Option<SchrodingerConfig>,
    pub madelung: Option<MadelungConfig>,
    pub spin: Option<SpinConfig>,
    pub ddw: Option<DdwConfig>,
    pub vacuum: Option<VacuumConfig>,
    #[serde(rename = "space-independent")]
    pub space_independent: Option<SpaceIndependentConfig>,
    pub confined: Option<ConfinedConfig>,
}

fn config_err(key: &str, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Config(format!("{key}: {message}"))
}

fn positive(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(key, format!("must be positive and finite, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_err(key, format!("must be finite, got {v}")))
    }
}

fn steps(key: &str, n: usize) -> Result<(), ScenarioError> {
    if n == 0 {
        Err(config_err(key, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str, regime: Regime) -> Result<&'a T, ScenarioError> {
    s.as_ref().ok_or_else(|| config_err(name, format!("section required for regime `{}`", regime.as_str())))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks on every key the selected regime reads.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let r = self.regime;
        if r.uses_grid() {
            let g = section(&self.grid, "grid", r)?;
            finite("grid.q_min", g.q_min)?;
            finite("grid.q_max", g.q_max)?;
            if g.q_max <= g.q_min {
                return Err(config_err("grid.q_max", "must exceed grid.q_min"));
            }
            if g.n < 3 {
                return Err(config_err("grid.n", "must be at least 3"));
            }
            let p = section(&self.potential, "potential", r)?;
            self.potential_checked(p)?;
            if r.needs_confining() && matches!(p.kind, PotentialKind::Free | PotentialKind::Box) {
                return Err(config_err("potential.kind", "field regimes need a potential that grows at the ends"));
            }
        }
        match r {
            Regime::Classical => {
                let c = section(&self.classical, "classical", r)?;
                positive("classical.mass", c.mass)?;
                finite("classical.center", c.center)?;
                positive("classical.width", c.width)?;
                finite("classical.p0", c.p0)?;
                positive("classical.dt", c.dt)?;
                steps("classical.steps", c.steps)?;
                if let Some(l) = c.curvature_limit {
                    positive("classical.curvature_limit", l)?;
                }
            }
            Regime::Schrodinger => {
                let c = section(&self.schrodinger, "schrodinger", r)?;
                positive("schrodinger.a", c.a)?;
                positive("schrodinger.mass", c.mass)?;
                finite("schrodinger.center", c.center)?;
                positive("schrodinger.sigma", c.sigma)?;
                finite("schrodinger.p0", c.p0)?;
                positive("schrodinger.dt", c.dt)?;
                steps("schrodinger.steps", c.steps)?;
            }
            Regime::Madelung => {
                let c = section(&self.madelung, "madelung", r)?;
                positive("madelung.a", c.a)?;
                positive("madelung.mass", c.mass)?;
                finite("madelung.center", c.center)?;
                positive("madelung.sigma", c.sigma)?;
                finite("madelung.p0", c.p0)?;
                positive("madelung.dt", c.dt)?;
                steps("madelung.steps", c.steps)?;
                if let Some(t) = c.cross_tol {
                    positive("madelung.cross_tol", t)?;
                }
            }
            Regime::Spin => {
                let c = section(&self.spin, "spin", r)?;
                let n = c.u.len();
                if n < 2 || c.u.iter().any(|row| row.len() != n) {
                    return Err(config_err("spin.u", "must be a square matrix of size at least 2"));
                }
                if let Some(t) = &c.theta {
                    if t.len() != n || t.iter().any(|row| row.len() != n) {
                        return Err(config_err("spin.theta", format!("must be {n}×{n}")));
                    }
                }
                positive("spin.a", c.a)?;
                finite("spin.b", c.b)?;
                for (key, v) in [("spin.initial_re", &c.initial_re), ("spin.initial_im", &c.initial_im)] {
                    if let Some(v) = v {
                        if v.len() != n {
                            return Err(config_err(key, format!("needs {n} entries")));
                        }
                    }
                }
                if c.initial_im.is_some() && c.initial_re.is_none() {
                    return Err(config_err("spin.initial_re", "required when spin.initial_im is given"));
                }
                positive("spin.dt", c.dt)?;
                steps("spin.steps", c.steps)?;
            }
            Regime::Ddw => {
                let c = section(&self.ddw, "ddw", r)?;
                positive("ddw.eta", c.eta)?;
                finite("ddw.mass", c.mass)?;
                positive("ddw.length", c.length)?;
                if c.n < 4 {
                    return Err(config_err("ddw.n", "must be at least 4"));
                }
                if c.mode == 0 || c.mode >= c.n / 2 {
                    return Err(config_err("ddw.mode", format!("must lie in 1..{}", c.n / 2)));
                }
                finite("ddw.amplitude", c.amplitude)?;
                positive("ddw.dt", c.dt)?;
                steps("ddw.steps", c.steps)?;
            }
            Regime::Vacuum => {
                let c = section(&self.vacuum, "vacuum", r)?;
                positive("vacuum.eta", c.eta)?;
                positive("vacuum.f", c.f)?;
                if c.modes == 0 {
                    return Err(config_err("vacuum.modes", "must be at least 1"));
                }
            }
            Regime::SpaceIndependent => {
                let c = section(&self.space_independent, "space-independent", r)?;
                positive("space-independent.eta", c.eta)?;
                positive("space-independent.f", c.f)?;
                if c.superpose.is_empty() {
                    return Err(config_err("space-independent.superpose", "must name at least one mode"));
                }
                positive("space-independent.dt", c.dt)?;
                steps("space-independent.steps", c.steps)?;
            }
            Regime::Confined => {
                let c = section(&self.confined, "confined", r)?;
                positive("confined.eta", c.eta)?;
                positive("confined.f", c.f)?;
                if c.modes < 2 {
                    return Err(config_err("confined.modes", "must be at least 2"));
                }
                if c.c.is_empty() || c.c.len() > c.modes || c.c[0] != 1.0 {
                    return Err(config_err("confined.c", format!("must start with 1 and have at most {} entries", c.modes)));
                }
                if c.c.iter().any(|x| !x.is_finite()) {
                    return Err(config_err("confined.c", "entries must be finite"));
                }
                if let Some(r0) = c.r_min {
                    positive("confined.r_min", r0)?;
                }
                positive("confined.r_max", c.r_max)?;
                if c.n_r < 3 {
                    return Err(config_err("confined.n_r", "must be at least 3"));
                }
                positive("confined.tol", c.tol)?;
                if let Some(t) = c.rate_tol {
                    positive("confined.rate_tol", t)?;
                }
            }
        }
        Ok(())
    }

    fn potential_checked(&self, p: &PotentialConfig) -> Result<Potential, ScenarioError> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| config_err(key, "required for this potential kind"));
        Ok(match p.kind {
            PotentialKind::Free | PotentialKind::Box => Potential::free(),
            PotentialKind::Harmonic => {
                let k = need(p.k, "potential.k")?;
                positive("potential.k", k)?;
                Potential::harmonic(k)
            }
            PotentialKind::Quartic => {
                let g = need(p.g, "potential.g")?;
                positive("potential.g", g)?;
                Potential::quartic(g)
            }
            PotentialKind::Polynomial => {
                let c = p.coeffs.clone().ok_or_else(|| config_err("potential.coeffs", "required for this potential kind"))?;
                if c.is_empty() || c.iter().any(|x| !x.is_finite()) {
                    return Err(config_err("potential.coeffs", "must be a nonempty list of finite numbers"));
                }
                Potential::polynomial(c)
            }
        })
    }

    pub fn build_potential(&self) -> Result<Potential, ScenarioError> {
        self.potential_checked(section(&self.potential, "potential", self.regime)?)
    }

    pub fn build_grid(&self) -> Result<Grid1D, ScenarioError> {
        let g = section(&self.grid, "grid", self.regime)?;
        Grid1D::new(g.q_min, g.q_max, g.n).map_err(|e| config_err("grid", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VACUUM: &str = r#"
regime = "vacuum"
[potential]
kind = "harmonic"
k = 1.0
[grid]
q_min = -10.0
q_max = 10.0
n = 401
[vacuum]
modes = 3
"#;

    #[test]
    fn parses_and_defaults() {
        let c = ScenarioConfig::parse(VACUUM).unwrap();
        assert_eq!(c.regime, Regime::Vacuum);
        assert_eq!(c.vacuum.as_ref().unwrap().f, 1.0);
        assert_eq!(c.seed, 0);
        assert!(!c.waive_invariants);
    }

    #[test]
    fn errors_name_the_key() {
        let unknown = VACUUM.replace("modes = 3", "modes = 3\nbogus = 1");
        let e = ScenarioConfig::parse(&unknown).unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
        let bad = VACUUM.replace("n = 401", "n = 2");
        assert!(ScenarioConfig::parse(&bad).unwrap_err().to_string().contains("grid.n"));
        let missing = VACUUM.replace("k = 1.0", "");
        assert!(ScenarioConfig::parse(&missing).unwrap_err().to_string().contains("potential.k"));
        let boxed = VACUUM.replace("kind = \"harmonic\"", "kind = \"box\"");
        assert!(ScenarioConfig::parse(&boxed).unwrap_err().to_string().contains("potential.kind"));
        let no_section = VACUUM.replace("[vacuum]\nmodes = 3", "");
        assert!(ScenarioConfig::parse(&no_section).unwrap_err().to_string().contains("vacuum"));
    }
}
