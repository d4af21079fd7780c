use serde::{Deserialize, Serialize};

use super::lmc::{barrier_height, lmc_curve, LmcCurve};
use crate::error::{Error, Result};
use crate::metrics::{layerwise_similarity_matrix, predictive_similarity, JsdMode, MetricKind, SimilarityMatrix};
use crate::pruning::{mean_defined, sparsity_sweep, Probe, SparsitySweepResult};
use crate::tensorio::Checkpoint;
use crate::toymodel::{capture_activations, predictions, Dataset};

/// Gap between the CKA and Procrustes static scores above which a pair is flagged.
pub const DEFAULT_DISAGREEMENT_THRESHOLD: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleConfig {
    pub levels: Vec<f64>,
    pub n_alphas: usize,
    pub jsd_mode: JsdMode,
    pub threshold: f64,
}

impl Default for TriangleConfig {
    fn default() -> Self {
        TriangleConfig {
            levels: (0..10).map(|i| i as f64 / 10.0).collect(),
            n_alphas: 11,
            jsd_mode: JsdMode::MeanDist,
            threshold: DEFAULT_DISAGREEMENT_THRESHOLD,
        }
    }
}

/// Static view: both similarity matrices and their summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticPanel {
    pub cka: SimilarityMatrix,
    pub procrustes: SimilarityMatrix,
    pub cka_mean: f64,
    pub procrustes_mean: f64,
    /// Present when both models expose the same layer names.
    pub cka_matched_mean: Option<f64>,
    pub procrustes_matched_mean: Option<f64>,
}

impl StaticPanel {
    pub fn new(cka: SimilarityMatrix, procrustes: SimilarityMatrix) -> Result<Self> {
        if cka.metric != MetricKind::Cka || procrustes.metric != MetricKind::Procrustes {
            return Err(Error::Validation("static panel needs one CKA and one Procrustes matrix".into()));
        }
        if cka.layers_a != procrustes.layers_a || cka.layers_b != procrustes.layers_b {
            return Err(Error::Validation("CKA and Procrustes matrices cover different layers".into()));
        }
        Ok(StaticPanel {
            cka_mean: cka.mean(),
            procrustes_mean: procrustes.mean(),
            cka_matched_mean: cka.matched_mean(),
            procrustes_matched_mean: procrustes.matched_mean(),
            cka,
            procrustes,
        })
    }

    /// Matched-layer mean when layers align, otherwise the full-matrix mean.
    pub fn cka_score(&self) -> f64 {
        self.cka_matched_mean.unwrap_or(self.cka_mean)
    }

    pub fn procrustes_score(&self) -> f64 {
        self.procrustes_matched_mean.unwrap_or(self.procrustes_mean)
    }
}

/// Functional view: interpolation path for same-architecture pairs, predictive
/// divergence otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionalPanel {
    Lmc { curve: LmcCurve, barrier: f64 },
    Jsd { score: f64, mode: JsdMode },
}

impl FunctionalPanel {
    pub fn kind(&self) -> &'static str {
        match self {
            FunctionalPanel::Lmc { .. } => "lmc",
            FunctionalPanel::Jsd { .. } => "jsd",
        }
    }

    pub fn barrier(&self) -> Option<f64> {
        match self {
            FunctionalPanel::Lmc { barrier, .. } => Some(*barrier),
            FunctionalPanel::Jsd { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    /// CKA static score used for cross-view correlation.
    pub static_score: f64,
    pub static_procrustes: f64,
    /// Mean cross-model similarity over positive sparsity levels.
    pub robustness_score: Option<f64>,
    pub disagreement: bool,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub model_a: String,
    pub model_b: String,
    pub arch_a: String,
    pub arch_b: String,
    pub probe_id: String,
    pub eval_id: String,
    pub static_panel: StaticPanel,
    pub functional: FunctionalPanel,
    pub sparsity: SparsitySweepResult,
    pub derived: Derived,
}

impl TriangleReport {
    pub fn pair_id(&self) -> String {
        format!("{}~{}", self.model_a, self.model_b)
    }

    /// Builds a report from precomputed panels and derives the summary scalars.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        (model_a, model_b): (&str, &str),
        (arch_a, arch_b): (&str, &str),
        (probe_id, eval_id): (&str, &str),
        static_panel: StaticPanel,
        functional: FunctionalPanel,
        sparsity: SparsitySweepResult,
        threshold: f64,
    ) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
        }
        let same_arch = arch_a == arch_b;
        if matches!(functional, FunctionalPanel::Lmc { .. }) != same_arch {
            return Err(Error::Validation(format!(
                "functional panel {:?} does not fit architectures {arch_a} and {arch_b}",
                functional.kind()
            )));
        }
        let n = sparsity.levels.len();
        if [sparsity.acc_a.len(), sparsity.acc_b.len(), sparsity.cross_sim.len()].iter().any(|&l| l != n) {
            return Err(Error::Validation("sparsity curves differ in length from the level grid".into()));
        }
        let positive: Vec<Option<f64>> = sparsity
            .levels
            .iter()
            .zip(&sparsity.cross_sim)
            .filter(|(&s, _)| s > 0.0)
            .map(|(_, &c)| c)
            .collect();
        let static_score = static_panel.cka_score();
        let static_procrustes = static_panel.procrustes_score();
        let derived = Derived {
            static_score,
            static_procrustes,
            robustness_score: mean_defined(&positive),
            disagreement: (static_score - static_procrustes).abs() > threshold,
            threshold,
        };
        Ok(TriangleReport {
            model_a: model_a.into(),
            model_b: model_b.into(),
            arch_a: arch_a.into(),
            arch_b: arch_b.into(),
            probe_id: probe_id.into(),
            eval_id: eval_id.into(),
            static_panel,
            functional,
            sparsity,
            derived,
        })
    }
}

/// Computes all three panels for one pair of checkpoints.
///
/// Activations for the static and sparsity views come from `probe`; accuracy
/// and predictions come from `eval`.
pub fn build_triangle_report(
    a: &Checkpoint,
    b: &Checkpoint,
    eval: &Dataset,
    probe: &Probe,
    cfg: &TriangleConfig,
) -> Result<TriangleReport> {
    let acts_a = capture_activations(a, probe.x.view(), &probe.id)?;
    let acts_b = capture_activations(b, probe.x.view(), &probe.id)?;
    let static_panel = StaticPanel::new(
        layerwise_similarity_matrix(&acts_a, &acts_b, MetricKind::Cka)?,
        layerwise_similarity_matrix(&acts_a, &acts_b, MetricKind::Procrustes)?,
    )?;
    let functional = if a.arch() == b.arch() {
        let curve = lmc_curve(a, b, eval, cfg.n_alphas)?;
        FunctionalPanel::Lmc { barrier: barrier_height(&curve), curve }
    } else {
        let pa = predictions(a, eval.x().view(), &eval.id)?;
        let pb = predictions(b, eval.x().view(), &eval.id)?;
        FunctionalPanel::Jsd { score: predictive_similarity(&pa, &pb, cfg.jsd_mode)?, mode: cfg.jsd_mode }
    };
    let sparsity = sparsity_sweep(a, b, eval, probe, &cfg.levels)?;
    TriangleReport::assemble(
        (&a.model_id, &b.model_id),
        (&a.arch().to_string(), &b.arch().to_string()),
        (&probe.id, &eval.id),
        static_panel,
        functional,
        sparsity,
        cfg.threshold,
    )
}
