//! classify → reduce → certify, and the reduction report.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assertion::Assertion;
use crate::cluster::{classify, ClusterError, ClusterStats};
use crate::config::{Config, ConfigError};
use crate::corpus::Corpus;
use crate::embed::Embedder;
use crate::mcts::reduce_corpus;
use crate::rules::{certify, total_atoms, Certificate, RuleId};
use crate::sat;
use crate::util::mix_seed;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("clustering stage: {0}")]
    Cluster(#[from] ClusterError),
    #[error("report: cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RuleTally {
    /// Applications that changed the set on the kept trajectories.
    pub applications: usize,
    pub assertions_removed: usize,
    pub atoms_removed: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SatStatus {
    Verified,
    NotShown,
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDetail {
    pub index: usize,
    pub ids: Vec<String>,
    pub original_count: usize,
    pub reduced_count: usize,
    pub reduced_ids: Vec<String>,
    pub r_max: f64,
    pub iterations: usize,
    pub certificate: Certificate,
    pub sat: SatStatus,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub clusters_checked: usize,
    pub lassos_evaluated: usize,
    pub failures: usize,
    pub skipped: usize,
    pub sat_verified: usize,
    /// Rule applications rolled back during search.
    pub rollbacks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub beta: f64,
    pub threshold: f64,
    pub min_pts: usize,
    pub cluster_seed: u64,
    pub search_seed: u64,
    pub lasso_samples: usize,
    pub certify_samples: usize,
    pub final_certify_samples: usize,
    pub mcts_iterations: usize,
    pub patience: usize,
    pub coarse_partition: bool,
    pub embedder: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub corpus: String,
    pub original_count: usize,
    pub reduced_count: usize,
    pub reduction_ratio: f64,
    pub atoms_before: usize,
    pub atoms_after: usize,
    pub rules: BTreeMap<String, RuleTally>,
    pub clusters: Vec<ClusterDetail>,
    pub certificates: CertificateSummary,
    pub falsum_flags: Vec<String>,
    pub clustering: ClusterStats,
    pub config: ConfigEcho,
    /// Wall clock of clustering plus reduction, in seconds.
    pub processing_time_s: f64,
}

impl ReductionReport {
    /// The report with wall-clock fields zeroed.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.processing_time_s = 0.0;
        for c in &mut r.clusters {
            c.elapsed_s = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<28} {:>8} {:>10} {:>8} {:>10}", "corpus", "N orig", "N reduced", "ratio", "PT (s)");
        let _ = writeln!(
            s,
            "{:<28} {:>8} {:>10} {:>8} {:>10.2}",
            self.corpus,
            self.original_count,
            self.reduced_count,
            format_ratio(self.reduction_ratio),
            self.processing_time_s
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "atoms: {} -> {}", self.atoms_before, self.atoms_after);
        let _ = writeln!(s, "{:<6} {:>12} {:>10} {:>8}", "rule", "applications", "removed", "atoms");
        for (name, t) in &self.rules {
            let _ = writeln!(
                s,
                "{:<6} {:>12} {:>10} {:>8}",
                name, t.applications, t.assertions_removed, t.atoms_removed
            );
        }
        let c = &self.certificates;
        let _ = writeln!(
            s,
            "certificates: {} clusters, {} lassos, {} failures, {} skipped, {} sat-verified, {} rollbacks",
            c.clusters_checked,
            c.lassos_evaluated,
            c.failures,
            c.skipped,
            c.sat_verified,
            c.rollbacks.len()
        );
        if !self.falsum_flags.is_empty() {
            let _ = writeln!(s, "unsatisfiable assertions: {}", self.falsum_flags.join(", "));
        }
        let _ = writeln!(
            s,
            "clusters: {} ({} coarse groups, {} lasso acceptance calls)",
            self.clusters.len(),
            self.clustering.coarse_groups,
            self.clustering.lasso_acceptance_calls
        );
        s
    }

    /// Any certificate failure or rolled-back rule application.
    pub fn has_incidents(&self) -> bool {
        self.certificates.failures > 0 || !self.certificates.rollbacks.is_empty()
    }
}

/// `0.762` → `"76.2%"`.
pub fn format_ratio(ratio: f64) -> String {
    format!("{:.1}%", ratio * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

pub fn emit_report(report: &ReductionReport, format: ReportFormat, path: &Path) -> Result<(), PipelineError> {
    let body = match format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Text => report.to_text(),
    };
    std::fs::write(path, body).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sat_status(old: &[Assertion], new: &[Assertion]) -> SatStatus {
    match sat::set_equivalent(old, new) {
        Ok(true) => SatStatus::Verified,
        Ok(false) => SatStatus::NotShown,
        Err(_) => SatStatus::Refused,
    }
}

/// Cluster, reduce each cluster, and certify every cluster's output against
/// its input. A cluster whose final certificate fails is restored to its
/// original assertions and counted as a failure.
pub fn run_pipeline(
    corpus: &Corpus,
    cfg: &Config,
    embedder: &dyn Embedder,
) -> Result<(Corpus, ReductionReport), PipelineError> {
    cfg.validate()?;
    let start = Instant::now();
    let (clusters, stats) = classify(&corpus.assertions, cfg, embedder)?;
    let reduction = reduce_corpus(&corpus.assertions, &clusters, &cfg.search, cfg.workers);
    let processing_time_s = start.elapsed().as_secs_f64();

    let by_id: HashMap<&str, &Assertion> = corpus.assertions.iter().map(|a| (a.id.as_str(), a)).collect();
    let mut out = Vec::new();
    let mut details = Vec::new();
    let mut summary = CertificateSummary::default();
    let mut rules: BTreeMap<String, RuleTally> =
        RuleId::ALL.iter().map(|r| (r.short().to_string(), RuleTally::default())).collect();
    let mut falsum: Vec<String> = Vec::new();
    let mut offset = 0;
    for c in &reduction.clusters {
        let reduced = &reduction.assertions[offset..offset + c.reduced_count];
        offset += c.reduced_count;
        let original: Vec<Assertion> = c.ids.iter().map(|id| by_id[id.as_str()].clone()).collect();
        let seed = mix_seed(cfg.seed, &["final".to_string(), c.index.to_string()]);
        let cert = certify(&original, reduced, cfg.final_certify_samples, seed);
        let sat = sat_status(&original, reduced);
        summary.clusters_checked += 1;
        summary.lassos_evaluated += cert.samples;
        summary.skipped += usize::from(cert.skipped);
        summary.sat_verified += usize::from(sat == SatStatus::Verified);
        summary.rollbacks.extend(c.incidents.iter().cloned());
        let kept: Vec<Assertion> = if cert.passed {
            for s in c.steps.iter().filter(|s| s.changed()) {
                let t = rules.get_mut(s.rule.short()).expect("rule tally");
                t.applications += 1;
                t.assertions_removed += s.delta_assertions;
                t.atoms_removed += s.delta_atoms;
            }
            reduced.to_vec()
        } else {
            summary.failures += 1;
            tracing::error!(cluster = c.index, "final certificate failed; cluster left unreduced");
            original
        };
        for s in &c.steps {
            for id in &s.flagged_falsum {
                if !falsum.contains(id) {
                    falsum.push(id.clone());
                }
            }
        }
        details.push(ClusterDetail {
            index: c.index,
            ids: c.ids.clone(),
            original_count: c.original_count,
            reduced_count: kept.len(),
            reduced_ids: kept.iter().map(|a| a.id.clone()).collect(),
            r_max: c.r_max,
            iterations: c.iterations,
            certificate: cert,
            sat,
            elapsed_s: c.elapsed_s,
        });
        out.extend(kept);
    }
    falsum.sort();

    let report = ReductionReport {
        corpus: corpus.name.clone(),
        original_count: corpus.len(),
        reduced_count: out.len(),
        reduction_ratio: if corpus.is_empty() {
            0.0
        } else {
            1.0 - out.len() as f64 / corpus.len() as f64
        },
        atoms_before: total_atoms(&corpus.assertions),
        atoms_after: total_atoms(&out),
        rules,
        clusters: details,
        certificates: summary,
        falsum_flags: falsum,
        clustering: stats,
        config: ConfigEcho {
            alpha: cfg.alpha,
            beta: cfg.beta,
            threshold: cfg.threshold,
            min_pts: cfg.min_pts,
            cluster_seed: cfg.seed,
            search_seed: cfg.search.seed,
            lasso_samples: cfg.lasso_samples,
            certify_samples: cfg.search.certify_samples,
            final_certify_samples: cfg.final_certify_samples,
            mcts_iterations: cfg.search.iterations,
            patience: cfg.search.patience,
            coarse_partition: cfg.coarse_partition,
            embedder: embedder.describe(),
        },
        processing_time_s,
    };
    let mut reduced = Corpus::new(format!("{}-reduced", corpus.name), out);
    reduced
        .metadata
        .insert("source".into(), serde_json::Value::from(corpus.name.clone()));
    Ok((reduced, report))
}
