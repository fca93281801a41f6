//! The experiment config: TOML with sections `[domain]`, `[grid]`, `[problem]`,
//! `[kernel]`, `[reconstruction]` and `[sweep]`. Unknown keys are rejected and
//! missing keys take the defaults below.

use serde::{Deserialize, Serialize};
use std::path::Path;
use timecoef::heat_kernel::ParametrixConfig;
use timecoef::inverse::{Method, ReconstructionConfig};
use timecoef::stability::ExperimentPlan;
use timecoef::{DomainSpec, Error, GridSpec, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: DomainSection,
    pub grid: GridSection,
    pub problem: ProblemSection,
    pub kernel: KernelSection,
    /// Present when reconstruction is requested; `forward` then also checks
    /// the hypotheses at the observation point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionSection>,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub kind: DomainKind,
    /// `[L]` or `[Lx, Ly]`.
    pub lengths: Vec<f64>,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            kind: DomainKind::Interval,
            lengths: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    /// Ignored on the interval.
    pub ny: usize,
    pub nt: usize,
    pub final_time: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            nx: 41,
            ny: 21,
            nt: 40,
            final_time: 1.0,
        }
    }
}

/// Fields as expressions in `x`, `y` (rectangle only) and `t`; `rhs` may also
/// use `sigma` and `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub f: String,
    pub g: String,
    pub h: String,
    /// True coefficient `σ(t)`: drives `forward` (as 0 when absent) and gives
    /// the error column of `reconstruct`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    /// Semilinear right-hand side `F(x, y, t, sigma, u)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    /// Growth constants `[c, d]` of `u F ≤ c u² + d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<[f64; 2]>,
    /// Observation point as an index into the boundary list; chosen by
    /// largest `|g f|` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<usize>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            f: "1".into(),
            g: "1".into(),
            h: "1".into(),
            sigma: None,
            rhs: None,
            growth: None,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    /// `q(x, y, t)` for `kernel-verify`.
    pub q: String,
    pub levi_terms: usize,
    pub image_terms: usize,
    pub quad_nodes_space: usize,
    pub quad_nodes_time: usize,
    pub series_tol: f64,
    /// Defaults to the final time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_horizon: Option<f64>,
    pub residual_tol: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        let p = ParametrixConfig::default();
        KernelSection {
            q: "0".into(),
            levi_terms: p.levi_terms,
            image_terms: p.image_terms,
            quad_nodes_space: p.quad_nodes_space,
            quad_nodes_time: p.quad_nodes_time,
            series_tol: p.series_tol,
            time_horizon: None,
            residual_tol: p.residual_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    SequentialCollocation,
    VolterraFixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionSection {
    pub method: MethodName,
    pub rootfind_tol: f64,
    pub max_outer_iters: usize,
    pub picard_tol: f64,
    pub delta_floor: f64,
    /// Neumann record CSV; `--measured` takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<String>,
    /// Reference `σ₂(t)` of the Volterra route; defaults to the constant
    /// compatible with the data at `t = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// Sup-norm of uniform noise added to `∂_t ∂_ν u` before reconstructing.
    pub noise: f64,
    pub seed: u64,
    /// Gauss nodes per time cell of the Volterra quadrature.
    pub cell_nodes: usize,
}

impl Default for ReconstructionSection {
    fn default() -> Self {
        let c = ReconstructionConfig::default();
        ReconstructionSection {
            method: MethodName::SequentialCollocation,
            rootfind_tol: c.rootfind_tol,
            max_outer_iters: c.max_outer_iters,
            picard_tol: c.picard_tol,
            delta_floor: c.delta_floor,
            measured: None,
            reference: None,
            noise: 0.0,
            seed: 0,
            cell_nodes: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub family: String,
    /// Radius `M` of the `C¹` ball.
    pub radius: f64,
    pub pairs: usize,
    pub amplitudes: Vec<f64>,
    pub seed: u64,
    /// The `[grid]` spec and `levels − 1` successive refinements.
    pub levels: usize,
    pub c_cap: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let p = ExperimentPlan::default();
        SweepSection {
            family: p.family,
            radius: p.radius,
            pairs: p.pairs,
            amplitudes: p.amplitudes,
            seed: p.seed,
            levels: 2,
            c_cap: p.c_cap,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    /// Reads the config, applies the seed override and fills derived defaults.
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(s) = seed {
            cfg.sweep.seed = s;
            if let Some(r) = cfg.reconstruction.as_mut() {
                r.seed = s;
            }
        }
        cfg.kernel.time_horizon.get_or_insert(cfg.grid.final_time);
        cfg.domain()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        match (self.domain.kind, self.domain.lengths.as_slice()) {
            (DomainKind::Interval, &[l]) => DomainSpec::interval(l),
            (DomainKind::Rectangle, &[lx, ly]) => DomainSpec::rectangle(lx, ly),
            (kind, l) => Err(Error::InvalidInput(format!(
                "domain.lengths: {kind:?} needs {} length(s), got {}",
                if kind == DomainKind::Interval { 1 } else { 2 },
                l.len()
            ))),
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        let g = &self.grid;
        match self.domain.kind {
            DomainKind::Interval => GridSpec::interval(g.nx, g.nt, g.final_time),
            DomainKind::Rectangle => GridSpec::rectangle(g.nx, g.ny, g.nt, g.final_time),
        }
    }

    pub fn parametrix(&self) -> ParametrixConfig {
        let k = &self.kernel;
        ParametrixConfig {
            levi_terms: k.levi_terms,
            image_terms: k.image_terms,
            quad_nodes_space: k.quad_nodes_space,
            quad_nodes_time: k.quad_nodes_time,
            series_tol: k.series_tol,
            time_horizon: k.time_horizon.unwrap_or(self.grid.final_time),
            residual_tol: k.residual_tol,
        }
    }

    pub fn reconstruction(&self) -> ReconstructionSection {
        self.reconstruction.clone().unwrap_or_default()
    }

    pub fn reconstruction_config(&self) -> ReconstructionConfig {
        let r = self.reconstruction();
        ReconstructionConfig {
            method: match r.method {
                MethodName::SequentialCollocation => Method::SequentialCollocation,
                MethodName::VolterraFixedPoint => Method::VolterraFixedPoint,
            },
            rootfind_tol: r.rootfind_tol,
            max_outer_iters: r.max_outer_iters,
            picard_tol: r.picard_tol,
            delta_floor: r.delta_floor,
        }
    }

    pub fn plan(&self) -> ExperimentPlan {
        let s = &self.sweep;
        let mut grids = Vec::with_capacity(s.levels);
        let mut spec = self.grid_spec();
        for _ in 0..s.levels {
            grids.push(spec);
            spec = spec.refined();
        }
        ExperimentPlan {
            family: s.family.clone(),
            radius: s.radius,
            pairs: s.pairs,
            amplitudes: s.amplitudes.clone(),
            grids,
            seed: s.seed,
            c_cap: s.c_cap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert!(c.reconstruction.is_none());
    }

    #[test]
    fn unknown_key_is_reported_with_line() {
        let e = ExperimentConfig::parse("[grid]\nnx = 11\nnz = 3\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("nz") && e.contains("line 3"), "{e}");
    }

    #[test]
    fn empty_section_requests_reconstruction() {
        let c = ExperimentConfig::parse("[reconstruction]\n").unwrap();
        assert_eq!(c.reconstruction, Some(ReconstructionSection::default()));
        let c = ExperimentConfig::parse("[reconstruction]\nmethod = \"volterra_fixed_point\"\n").unwrap();
        assert_eq!(c.reconstruction_config().method, Method::VolterraFixedPoint);
    }

    #[test]
    fn echo_round_trips() {
        let text = "[problem]\nf = \"1 + x\"\nsigma = \"1 + 0.5*sin(2*PI*t)\"\n[sweep]\namplitudes = [0.1, 0.001]\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn lengths_must_match_kind() {
        let c = ExperimentConfig::parse("[domain]\nkind = \"rectangle\"\n").unwrap();
        assert!(c.domain().is_err());
    }

    #[test]
    fn plan_ladder_refines_the_grid() {
        let c = ExperimentConfig::parse("[grid]\nnx = 11\nnt = 10\n[sweep]\nlevels = 3\n").unwrap();
        let g = c.plan().grids;
        assert_eq!(
            g.iter().map(|s| (s.nx, s.nt)).collect::<Vec<_>>(),
            vec![(11, 10), (21, 20), (41, 40)]
        );
    }
}
