//! Replayable run artifacts: a construction request, the configuration it
//! ran under, the exact construction, and its verification report.
//!
//! Artifacts are deterministic: the same request and configuration always
//! serialize to the same bytes.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use crate::config::Config;
use crate::constructions::{
    ac_alternating_cdf_pair, alternating_pair, discrete_alternating_cdf_pair, matched_moment_pair,
    mixed_incomparable_demo, run_padded_alternating, smooth_vanishing_kernel,
    staged_vanishing_kernel, unimodal_alternating_pair, vanishing_moment_kernel_with_budget,
    AcCdfPair, AlternatingOptions, AlternatingPair, BumpMode, BumpSpec, ConstructionError,
    DiscreteCdfOptions, DiscreteCdfPair, MatchedPair, MixedDemo, SmoothKernel, StagedKernel,
    StagedOptions, UnimodalPair, VanishingKernel,
};
use crate::rational::{serde_rational, Rational};

pub const TOOL_NAME: &str = "momtail";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstructRequest {
    Kernel {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        n: u64,
        #[serde(default)]
        bump: BumpSpec,
    },
    SmoothKernel {
        a: f64,
        b: f64,
        n: usize,
        tolerance: f64,
    },
    Staged {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        stages: usize,
        #[serde(default)]
        bump: BumpSpec,
        #[serde(default)]
        options: StagedOptions,
    },
    Matched {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        stages: usize,
        #[serde(default)]
        bump: BumpSpec,
        #[serde(default)]
        options: StagedOptions,
    },
    Alternating {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        stages: usize,
        #[serde(default)]
        bump: BumpSpec,
        #[serde(default)]
        options: AlternatingOptions,
    },
    Unimodal {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        stages: usize,
        #[serde(default)]
        bump: BumpSpec,
        #[serde(default)]
        options: AlternatingOptions,
    },
    Mixed {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        stages: usize,
        #[serde(default)]
        bump: BumpSpec,
        #[serde(default)]
        options: AlternatingOptions,
    },
    /// Alternating pair with run padding, summarized run by run.
    Runs {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        stages: usize,
        #[serde(default)]
        bump: BumpSpec,
        #[serde(default)]
        options: AlternatingOptions,
    },
    DiscreteCdf {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(default)]
        options: DiscreteCdfOptions,
    },
    AcCdf {
        #[serde(with = "serde_rational")]
        a: Rational,
        k_max: u64,
        #[serde(default)]
        bump: BumpSpec,
    },
}

impl ConstructRequest {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstructRequest::Kernel { .. } => "kernel",
            ConstructRequest::SmoothKernel { .. } => "smooth-kernel",
            ConstructRequest::Staged { .. } => "staged",
            ConstructRequest::Matched { .. } => "matched",
            ConstructRequest::Alternating { .. } => "alternating",
            ConstructRequest::Unimodal { .. } => "unimodal",
            ConstructRequest::Mixed { .. } => "mixed",
            ConstructRequest::Runs { .. } => "runs",
            ConstructRequest::DiscreteCdf { .. } => "discrete-cdf",
            ConstructRequest::AcCdf { .. } => "ac-cdf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArtifact {
    pub tool: String,
    pub version: String,
    pub request: ConstructRequest,
    pub config: Config,
    pub construction: Value,
    pub verification: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothKernelReport {
    pub max_abs_residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPayload {
    pub pair: AlternatingPair,
    pub demo: MixedDemo,
}

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error("artifact payload does not decode: {0}")]
    Decode(#[from] serde_json::Error),
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("constructions serialize")
}

fn smooth_report(k: &SmoothKernel) -> SmoothKernelReport {
    let max_abs_residual = k.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    SmoothKernelReport {
        max_abs_residual,
        tolerance: k.tolerance,
    }
}

/// Runs the stored construction's own verifier on a decoded payload.
fn verify_payload(
    request: &ConstructRequest,
    config: &Config,
    construction: &Value,
) -> Result<Value, ArtifactError> {
    fn decode<T: DeserializeOwned>(v: &Value) -> Result<T, ArtifactError> {
        Ok(T::deserialize(v)?)
    }
    Ok(match request {
        ConstructRequest::Kernel { .. } => {
            to_value(&decode::<VanishingKernel>(construction)?.verify(config.positivity_cap)?)
        }
        ConstructRequest::SmoothKernel { .. } => {
            to_value(&smooth_report(&decode::<SmoothKernel>(construction)?))
        }
        ConstructRequest::Staged { .. } => {
            to_value(&decode::<StagedKernel>(construction)?.verify()?)
        }
        ConstructRequest::Matched { .. } => {
            to_value(&decode::<MatchedPair>(construction)?.verify()?)
        }
        ConstructRequest::Alternating { .. } => {
            to_value(&decode::<AlternatingPair>(construction)?.verify()?)
        }
        ConstructRequest::Unimodal { .. } => {
            to_value(&decode::<UnimodalPair>(construction)?.verify()?)
        }
        ConstructRequest::Mixed { .. } => {
            let p: MixedPayload = decode(construction)?;
            to_value(&p.demo.verify(&p.pair)?)
        }
        ConstructRequest::Runs { .. } => {
            let p: AlternatingPair = decode(construction)?;
            let pair = p.verify()?;
            let runs = run_padded_alternating(&p)?;
            serde_json::json!({ "pair": to_value(&pair), "runs": to_value(&runs) })
        }
        ConstructRequest::DiscreteCdf { .. } => {
            to_value(&decode::<DiscreteCdfPair>(construction)?.verify()?)
        }
        ConstructRequest::AcCdf { .. } => to_value(&decode::<AcCdfPair>(construction)?.verify()?),
    })
}

fn with_cap(options: &AlternatingOptions, config: &Config) -> AlternatingOptions {
    AlternatingOptions {
        ell_cap: config.ell_cap,
        ..options.clone()
    }
}

/// Builds the requested construction, verifies it, and packages both.
/// The configured `ell_cap` overrides the one in the request options.
pub fn build_artifact(
    request: &ConstructRequest,
    config: &Config,
) -> Result<RunArtifact, ArtifactError> {
    let construction = match request {
        ConstructRequest::Kernel { a, b, n, bump } => to_value(
            &vanishing_moment_kernel_with_budget(a, b, *n, bump, config.precision_bits)?,
        ),
        ConstructRequest::SmoothKernel { a, b, n, tolerance } => {
            let spec = BumpSpec {
                mode: BumpMode::SmoothQuadrature {
                    tolerance: *tolerance,
                },
                ..BumpSpec::default()
            };
            to_value(&smooth_vanishing_kernel(*a, *b, *n, &spec)?)
        }
        ConstructRequest::Staged {
            a,
            b,
            stages,
            bump,
            options,
        } => {
            let opts = StagedOptions {
                ell_cap: config.ell_cap,
                ..options.clone()
            };
            to_value(&staged_vanishing_kernel(a, b, *stages, bump, &opts)?)
        }
        ConstructRequest::Matched {
            a,
            b,
            stages,
            bump,
            options,
        } => {
            let opts = StagedOptions {
                ell_cap: config.ell_cap,
                ..options.clone()
            };
            to_value(&matched_moment_pair(a, b, *stages, bump, &opts)?)
        }
        ConstructRequest::Alternating {
            a,
            b,
            stages,
            bump,
            options,
        } => to_value(&alternating_pair(
            a,
            b,
            *stages,
            bump,
            &with_cap(options, config),
        )?),
        ConstructRequest::Unimodal {
            a,
            b,
            stages,
            bump,
            options,
        } => to_value(&unimodal_alternating_pair(
            a,
            b,
            *stages,
            bump,
            &with_cap(options, config),
        )?),
        ConstructRequest::Mixed {
            a,
            b,
            stages,
            bump,
            options,
        } => {
            let pair = alternating_pair(a, b, *stages, bump, &with_cap(options, config))?;
            let demo = mixed_incomparable_demo(&pair)?;
            to_value(&MixedPayload { pair, demo })
        }
        ConstructRequest::Runs {
            a,
            b,
            stages,
            bump,
            options,
        } => {
            let opts = AlternatingOptions {
                run_padded: true,
                ..with_cap(options, config)
            };
            to_value(&alternating_pair(a, b, *stages, bump, &opts)?)
        }
        ConstructRequest::DiscreteCdf { a, options } => {
            to_value(&discrete_alternating_cdf_pair(a, options)?)
        }
        ConstructRequest::AcCdf { a, k_max, bump } => {
            to_value(&ac_alternating_cdf_pair(a, *k_max, bump)?)
        }
    };
    let verification = verify_payload(request, config, &construction)?;
    Ok(RunArtifact {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        request: request.clone(),
        config: config.clone(),
        construction,
        verification,
    })
}

impl RunArtifact {
    /// Canonical bytes: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactCheck {
    /// The stored construction passes its own verifier.
    pub payload_verifies: bool,
    /// Re-verifying the stored construction reproduces the stored report.
    pub report_matches: bool,
    /// Rebuilding from the request reproduces the stored construction.
    pub rebuild_matches: bool,
    pub version_note: Option<String>,
    pub detail: Option<String>,
}

impl ArtifactCheck {
    pub fn passed(&self) -> bool {
        self.payload_verifies && self.report_matches && self.rebuild_matches
    }
}

/// Replays an artifact: re-verifies the stored construction and rebuilds
/// it from the recorded request and configuration.
pub fn verify_artifact(artifact: &RunArtifact) -> ArtifactCheck {
    let version_note = (artifact.version != TOOL_VERSION).then(|| {
        format!(
            "artifact written by version {}, checked with {TOOL_VERSION}",
            artifact.version
        )
    });
    let mut check = ArtifactCheck {
        payload_verifies: false,
        report_matches: false,
        rebuild_matches: false,
        version_note,
        detail: None,
    };
    match verify_payload(&artifact.request, &artifact.config, &artifact.construction) {
        Ok(report) => {
            check.payload_verifies = true;
            check.report_matches = report == artifact.verification;
            if !check.report_matches {
                check.detail = Some("verification report differs from the stored one".into());
            }
        }
        Err(e) => {
            check.detail = Some(format!("stored construction fails verification: {e}"));
            return check;
        }
    }
    match build_artifact(&artifact.request, &artifact.config) {
        Ok(fresh) => {
            check.rebuild_matches = fresh.construction == artifact.construction;
            if !check.rebuild_matches && check.detail.is_none() {
                check.detail = Some("rebuilt construction differs from the stored one".into());
            }
        }
        Err(e) => check.detail = Some(format!("rebuild failed: {e}")),
    }
    check
}
