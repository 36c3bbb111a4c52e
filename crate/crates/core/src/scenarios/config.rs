use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Single decaying atom.
    Ex1,
    /// Atom in a superposition of two positions.
    Ex2,
    /// Two-photon cascade.
    Ex3,
    /// Atom with a shell-shaped absorber in a position superposition.
    Ex4,
    /// The absorber setup read out by a late-time momentum measurement.
    Ex5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosteriorMode {
    /// Clicks are attributed to the branch that produced them.
    #[default]
    Paper,
    /// Every branch is weighted by its click density.
    Exact,
}

fn one() -> f64 {
    1.0
}

/// Physical parameters of one scenario. Units are carried in the key names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default = "one")]
    pub c_m_per_s: f64,
    #[serde(default = "one")]
    pub hbar_j_s: f64,
    pub plane_time_s: f64,
    #[serde(default)]
    pub mode: PosteriorMode,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_rad_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1_rad_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2_rad_per_s: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_im: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_outer_radius_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_inner_radius_m: Option<f64>,
    /// Displacement of the far object position; defaults to 100 outer radii.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_offset_m: Option<f64>,
}

fn need(v: Option<f64>, key: &str) -> Result<f64> {
    let v = v.ok_or_else(|| Error::Config(format!("missing key `{key}`")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn positive(v: Option<f64>, key: &str) -> Result<f64> {
    let v = need(v, key)?;
    if v <= 0.0 {
        return Err(Error::Config(format!("`{key}` must be positive, got {v}")));
    }
    Ok(v)
}

impl ScenarioConfig {
    /// Minimal config with every optional field unset.
    pub fn new(kind: ScenarioKind, plane_time_s: f64) -> Self {
        Self {
            kind,
            c_m_per_s: 1.0,
            hbar_j_s: 1.0,
            plane_time_s,
            mode: PosteriorMode::Paper,
            gamma_per_s: None,
            omega_rad_per_s: None,
            gamma1_per_s: None,
            gamma2_per_s: None,
            omega1_rad_per_s: None,
            omega2_rad_per_s: None,
            alpha_re: None,
            alpha_im: None,
            beta_re: None,
            beta_im: None,
            separation_m: None,
            shell_outer_radius_m: None,
            shell_inner_radius_m: None,
            object_offset_m: None,
        }
    }

    pub fn ex1(gamma: f64, omega: f64, plane_time: f64) -> Self {
        Self { gamma_per_s: Some(gamma), omega_rad_per_s: Some(omega), ..Self::new(ScenarioKind::Ex1, plane_time) }
    }

    pub fn ex2(gamma: f64, omega: f64, alpha: Complex64, beta: Complex64, d: f64, plane_time: f64) -> Self {
        Self {
            gamma_per_s: Some(gamma),
            omega_rad_per_s: Some(omega),
            separation_m: Some(d),
            ..Self::new(ScenarioKind::Ex2, plane_time).with_amplitudes(alpha, beta)
        }
    }

    pub fn ex3(gamma1: f64, gamma2: f64, omega1: f64, omega2: f64, plane_time: f64) -> Self {
        Self {
            gamma1_per_s: Some(gamma1),
            gamma2_per_s: Some(gamma2),
            omega1_rad_per_s: Some(omega1),
            omega2_rad_per_s: Some(omega2),
            ..Self::new(ScenarioKind::Ex3, plane_time)
        }
    }

    /// Absorber setup; `kind` selects position (`Ex4`) or momentum (`Ex5`) readout.
    #[allow(clippy::too_many_arguments)]
    pub fn absorber(
        kind: ScenarioKind,
        gamma: f64,
        omega: f64,
        alpha: Complex64,
        beta: Complex64,
        outer: f64,
        inner: f64,
        plane_time: f64,
    ) -> Self {
        Self {
            gamma_per_s: Some(gamma),
            omega_rad_per_s: Some(omega),
            shell_outer_radius_m: Some(outer),
            shell_inner_radius_m: Some(inner),
            ..Self::new(kind, plane_time).with_amplitudes(alpha, beta)
        }
    }

    pub fn with_amplitudes(mut self, alpha: Complex64, beta: Complex64) -> Self {
        self.alpha_re = Some(alpha.re);
        self.alpha_im = Some(alpha.im);
        self.beta_re = Some(beta.re);
        self.beta_im = Some(beta.im);
        self
    }

    pub fn with_mode(mut self, mode: PosteriorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c_m_per_s = c;
        self
    }

    pub fn amplitudes(&self) -> Result<(Complex64, Complex64)> {
        let a = Complex64::new(need(self.alpha_re, "alpha_re")?, self.alpha_im.unwrap_or(0.0));
        let b = Complex64::new(need(self.beta_re, "beta_re")?, self.beta_im.unwrap_or(0.0));
        let total = a.norm_sqr() + b.norm_sqr();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("|alpha|^2 + |beta|^2 = {total}, expected 1")));
        }
        Ok((a, b))
    }

    pub fn gamma(&self) -> Result<f64> {
        positive(self.gamma_per_s, "gamma_per_s")
    }

    pub fn omega(&self) -> Result<f64> {
        positive(self.omega_rad_per_s, "omega_rad_per_s")
    }

    pub fn cascade_rates(&self) -> Result<(f64, f64, f64, f64)> {
        Ok((
            positive(self.gamma1_per_s, "gamma1_per_s")?,
            positive(self.gamma2_per_s, "gamma2_per_s")?,
            positive(self.omega1_rad_per_s, "omega1_rad_per_s")?,
            positive(self.omega2_rad_per_s, "omega2_rad_per_s")?,
        ))
    }

    pub fn separation(&self) -> Result<f64> {
        positive(self.separation_m, "separation_m")
    }

    /// Outer and inner shell radii and the far offset.
    pub fn shell(&self) -> Result<(f64, f64, f64)> {
        let outer = positive(self.shell_outer_radius_m, "shell_outer_radius_m")?;
        let inner = positive(self.shell_inner_radius_m, "shell_inner_radius_m")?;
        if inner > outer {
            return Err(Error::Config(format!("inner shell radius {inner} exceeds outer radius {outer}")));
        }
        let offset = match self.object_offset_m {
            Some(v) => positive(Some(v), "object_offset_m")?,
            None => 100.0 * outer,
        };
        Ok((outer, inner, offset))
    }

    /// Checks that every field the scenario kind needs is present and sane.
    pub fn validate(&self) -> Result<()> {
        positive(Some(self.c_m_per_s), "c_m_per_s")?;
        positive(Some(self.hbar_j_s), "hbar_j_s")?;
        positive(Some(self.plane_time_s), "plane_time_s")?;
        match self.kind {
            ScenarioKind::Ex1 => {
                self.gamma()?;
                self.omega()?;
            }
            ScenarioKind::Ex2 => {
                self.gamma()?;
                self.omega()?;
                self.amplitudes()?;
                self.separation()?;
            }
            ScenarioKind::Ex3 => {
                self.cascade_rates()?;
            }
            ScenarioKind::Ex4 | ScenarioKind::Ex5 => {
                self.gamma()?;
                self.omega()?;
                self.amplitudes()?;
                self.shell()?;
            }
        }
        Ok(())
    }
}
