//! Named experiment presets. Each one expands to a full config that is
//! written next to its outputs, so every run is reproducible from the
//! artifact directory alone.

use crate::config::{
    EmbeddingSpec, EnsembleSpec, ExperimentConfig, ExperimentKind, ProfileSpec, SweepSpec,
};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    build: fn() -> ExperimentConfig,
}

fn base(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        seed: 1,
        replicas: 1000,
        out_dir: None,
        workers: 0,
        profile: ProfileSpec::default(),
        ensemble: EnsembleSpec::default(),
        polynomial: None,
        sweep: SweepSpec::default(),
        norm_check: Default::default(),
        embedding: EmbeddingSpec::default(),
        er: Default::default(),
        structural_zero: Default::default(),
    }
}

fn clt_with(family: &str, n: usize, k: usize) -> ExperimentConfig {
    let mut cfg = base(ExperimentKind::Clt);
    cfg.profile.family = family.into();
    cfg.profile.n = n;
    cfg.sweep.k_values = vec![k];
    cfg
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "corollary-3.1",
        summary: "separable profile a_ij = sqrt(v_i w_j), CLT experiment",
        build: || clt_with("separable", 200, 2),
    },
    Preset {
        name: "corollary-3.2",
        summary: "sampled profile a_ij^2 = f(i/n, j/n), CLT experiment",
        build: || clt_with("sampled", 200, 2),
    },
    Preset {
        name: "corollary-3.3",
        summary: "entries bounded below (uniform in [n^-0.2, 1]), CLT experiment",
        build: || {
            let mut cfg = clt_with("bounded-below", 200, 2);
            cfg.profile.lo = (200f64).powf(-0.2);
            // the sampled profile is not symmetric, so the matrix must be iid
            cfg.ensemble.kind = "iid".into();
            cfg
        },
    },
    Preset {
        name: "corollary-3.4",
        summary: "periodic band, n=400 band=80, CLT experiment",
        build: || {
            let mut cfg = clt_with("band-periodic", 400, 2);
            cfg.profile.band = 80;
            cfg
        },
    },
    Preset {
        name: "corollary-3.5",
        summary: "non-periodic band, n=400 band=80, CLT experiment",
        build: || {
            let mut cfg = clt_with("band-nonperiodic", 400, 2);
            cfg.profile.band = 80;
            cfg
        },
    },
    Preset {
        name: "corollary-3.6",
        summary: "sample covariance via the (n+m) block embedding, n=100 m=150",
        build: || {
            let mut cfg = base(ExperimentKind::Embedding);
            cfg.embedding = EmbeddingSpec {
                kind: "covariance".into(),
                dims: vec![100, 150],
            };
            cfg.sweep.k_values = vec![2];
            cfg
        },
    },
    Preset {
        name: "corollary-3.7",
        summary: "two-factor matrix product via the cyclic block embedding, n=80",
        build: || {
            let mut cfg = base(ExperimentKind::Embedding);
            cfg.embedding = EmbeddingSpec {
                kind: "product".into(),
                dims: vec![80, 80],
            };
            cfg.ensemble.kind = "iid".into();
            cfg.sweep.k_values = vec![2];
            cfg
        },
    },
    Preset {
        name: "corollary-3.8",
        summary: "Erdős–Rényi adjacency concentration, n=500 p=0.3",
        build: || {
            let mut cfg = base(ExperimentKind::ErConcentration);
            cfg.profile.family = "erdos-renyi".into();
            cfg.profile.n = 500;
            cfg.profile.p = 0.3;
            cfg.profile.gamma = 0.25;
            cfg.profile.alpha = 0.35;
            cfg.sweep.k_values = vec![3];
            cfg
        },
    },
    Preset {
        name: "remark-4.2-i",
        summary: "two-shift cyclic block profile: structural-zero table",
        build: || {
            let mut cfg = base(ExperimentKind::StructuralZero);
            cfg.profile.family = "remark42-i".into();
            cfg.profile.n = 50;
            cfg.ensemble.kind = "iid".into();
            cfg
        },
    },
    Preset {
        name: "remark-4.2-ii",
        summary: "five-block cyclic profile: structural-zero table for k=1..7",
        build: || {
            let mut cfg = base(ExperimentKind::StructuralZero);
            cfg.profile.family = "remark42-ii".into();
            cfg.profile.n = 50;
            cfg.ensemble.kind = "iid".into();
            cfg
        },
    },
    Preset {
        name: "remark-4.2-iii",
        summary: "corner-block profile (not broadly connected, CLT still holds)",
        build: || {
            let mut cfg = clt_with("remark42-iii", 200, 2);
            cfg.ensemble.kind = "iid".into();
            cfg
        },
    },
    Preset {
        name: "remark-4.3",
        summary: "anti-diagonal band with width n/4, CLT experiment",
        build: || {
            let mut cfg = clt_with("anti-band-nonperiodic", 200, 2);
            cfg.profile.band_frac = Some(0.25);
            cfg
        },
    },
];

/// Looks a preset up by name; `corollary-3.4-band` style aliases with a
/// trailing descriptor are accepted.
pub fn find(name: &str) -> Option<ExperimentConfig> {
    let canonical = name.trim();
    PRESETS
        .iter()
        .find(|p| p.name == canonical || canonical.strip_prefix(p.name).is_some_and(|rest| rest.starts_with('-')))
        .map(|p| (p.build)())
}
