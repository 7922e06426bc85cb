use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use momtail_core::artifact::MixedPayload;
use momtail_core::constructions::{
    AcCdfPair, AcCdfReport, AlternatingPair, CdfCheck, DiscreteCdfOptions, DiscreteCdfPair,
    DiscreteCdfReport, MatchedPair, RunReport, StagedKernel, UnimodalPair, VanishingKernel,
};
use momtail_core::filters::{self, MszVerdict};
use momtail_core::games;
use momtail_core::measures::{self, MomentEngine};
use momtail_core::rational::{format_rational, parse_rational, to_f64};
use momtail_core::tailorder::{self, Label, LabeledVerdict};
use momtail_core::{
    build_artifact, verify_artifact, BumpSpec, Config, ConstructRequest, DistGame, Measure,
    MixedProfile, PiecewiseDensity, RunArtifact, StructuredSet, TailVerdict,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::{
    Cli, Command, ConstructKind, ConstructOutput, FilterQuery, GameAction, Interval,
};
use crate::cache;
use crate::failure::{InputError, VerifyFailed};
use crate::output::{cdf_rows, density_rows, write_csv, write_dat, Table};

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => read_json::<Config>(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Moments {
            measure,
            k_max,
            out,
        } => moments(&config, &measure, k_max, out.as_deref()),
        Command::Compare {
            first,
            second,
            depth,
            certify,
        } => compare(
            &config,
            &first,
            &second,
            depth.unwrap_or(config.default_depth),
            certify.as_deref(),
        ),
        Command::Construct { kind, out } => construct(&config, kind, &out),
        Command::Filters { query } => filter_query(query),
        Command::Game { action } => game(&config, action),
        Command::Verify { artifact } => verify(&artifact),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn moments(config: &Config, path: &Path, k_max: u64, out: Option<&Path>) -> Result<()> {
    let mu: Measure = read_json(path)?;
    let rows = match cache::lookup(&mu, k_max) {
        Some(rows) => rows,
        None => {
            let rows = measures::moment_table(&mu, k_max, config.precision_bits)?;
            cache::store(&mu, &rows)?;
            rows
        }
    };
    let sink: Box<dyn Write> = match out {
        Some(p) => {
            Box::new(fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn density_of(mu: Measure, which: &str) -> Result<PiecewiseDensity> {
    match mu {
        Measure::Density(d) => Ok(d),
        _ => Err(InputError(format!(
            "{which} measure must be a piecewise density for this certificate"
        ))
        .into()),
    }
}

fn compare(
    config: &Config,
    first: &Path,
    second: &Path,
    depth: u64,
    certify: Option<&str>,
) -> Result<()> {
    let mu1: Measure = read_json(first)?;
    let mu2: Measure = read_json(second)?;
    let Some(method) = certify else {
        let verdict =
            tailorder::compare_empirical_with_budget(&mu1, &mu2, depth, config.precision_bits)?;
        // Separated alternating signs are exact; a constant prefix is not a proof.
        let label = match verdict {
            TailVerdict::AlternationWitness { .. } => Label::Proved,
            _ => Label::Heuristic,
        };
        return print_json(&LabeledVerdict { verdict, label });
    };
    let (name, arg) = method.split_once(':').unwrap_or((method, ""));
    match name {
        "piecewise" => {
            let verdict = tailorder::decide_piecewise(
                &density_of(mu1, "first")?,
                &density_of(mu2, "second")?,
            )?;
            print_json(&LabeledVerdict {
                verdict,
                label: Label::Proved,
            })
        }
        "cdf" => {
            let x0 = parse_rational(arg)?;
            print_json(&tailorder::certify_cdf_dominance(&mu1, &mu2, &x0)?)
        }
        "density" => {
            let x0 = parse_rational(arg)?;
            let (d1, d2) = (density_of(mu1, "first")?, density_of(mu2, "second")?);
            print_json(&tailorder::certify_density_dominance(
                &d1,
                &d2,
                &x0,
                config.positivity_cap,
            )?)
        }
        _ => Err(InputError(format!(
            "unknown certificate {method:?}; use piecewise, cdf:X0 or density:X0"
        ))
        .into()),
    }
}

fn bump(interval: &Interval) -> BumpSpec {
    BumpSpec::polynomial(interval.bump_degree)
}

fn request(kind: ConstructKind) -> ConstructRequest {
    match kind {
        ConstructKind::Kernel { interval, n } => ConstructRequest::Kernel {
            bump: bump(&interval),
            a: interval.a,
            b: interval.b,
            n,
        },
        ConstructKind::Staged { interval, stages } => ConstructRequest::Staged {
            bump: bump(&interval),
            a: interval.a,
            b: interval.b,
            stages,
            options: Default::default(),
        },
        ConstructKind::Matched { interval, stages } => ConstructRequest::Matched {
            bump: bump(&interval),
            a: interval.a,
            b: interval.b,
            stages,
            options: Default::default(),
        },
        ConstructKind::Alternating { interval, stages } => ConstructRequest::Alternating {
            bump: bump(&interval),
            a: interval.a,
            b: interval.b,
            stages,
            options: Default::default(),
        },
        ConstructKind::Unimodal { interval, stages } => ConstructRequest::Unimodal {
            bump: bump(&interval),
            a: interval.a,
            b: interval.b,
            stages,
            options: Default::default(),
        },
        ConstructKind::Mixed { interval, stages } => ConstructRequest::Mixed {
            bump: bump(&interval),
            a: interval.a,
            b: interval.b,
            stages,
            options: Default::default(),
        },
        ConstructKind::Runs { interval, stages } => ConstructRequest::Runs {
            bump: bump(&interval),
            a: interval.a,
            b: interval.b,
            stages,
            options: Default::default(),
        },
        ConstructKind::DiscreteCdf {
            a,
            truncation,
            k_max,
            moment_depth,
        } => ConstructRequest::DiscreteCdf {
            a,
            options: DiscreteCdfOptions {
                truncation,
                check_range: k_max,
                moment_depth,
            },
        },
        ConstructKind::AcCdf {
            a,
            k_max,
            bump_degree,
        } => ConstructRequest::AcCdf {
            a,
            k_max,
            bump: BumpSpec::polynomial(bump_degree),
        },
    }
}

fn construct(config: &Config, kind: ConstructKind, out: &ConstructOutput) -> Result<()> {
    let artifact = build_artifact(&request(kind), config)?;
    if let Some(path) = &out.csv {
        write_csv(path, &summary_table(&artifact)?)?;
    }
    if let Some(path) = &out.plot {
        let (header, rows) = plot_rows(&artifact)?;
        write_dat(path, &header, &rows)?;
    }
    match &out.out {
        Some(path) => {
            fs::write(path, artifact.to_json())
                .with_context(|| format!("cannot write {}", path.display()))?;
            print_json(&serde_json::json!({
                "kind": artifact.request.kind(),
                "artifact": path.display().to_string(),
                "verified": true,
            }))
        }
        None => {
            std::io::stdout().write_all(artifact.to_json().as_bytes())?;
            Ok(())
        }
    }
}

fn payload<T: DeserializeOwned>(artifact: &RunArtifact) -> Result<T> {
    Ok(T::deserialize(&artifact.construction)?)
}

fn report<T: DeserializeOwned>(value: &serde_json::Value) -> Result<T> {
    Ok(T::deserialize(value)?)
}

fn sign_table(orders: Vec<(u64, momtail_core::tailorder::Sign)>) -> Table {
    let mut t = Table::new(vec!["order", "sign_of_g_minus_f"]);
    for (k, s) in orders {
        t.push(vec![
            k.to_string(),
            serde_json::to_value(s)
                .unwrap()
                .as_str()
                .unwrap_or_default()
                .to_string(),
        ]);
    }
    t
}

fn cdf_table(checks: &[CdfCheck]) -> Table {
    let mut t = Table::new(vec![
        "k", "point", "expected", "f_lower", "f_upper", "g_lower", "g_upper", "holds",
    ]);
    for c in checks {
        let expected = serde_json::to_value(c.expected)
            .unwrap()
            .as_str()
            .unwrap_or_default()
            .to_string();
        t.push(vec![
            c.k.to_string(),
            format_rational(&c.point),
            expected,
            format_rational(&c.f_lower),
            format_rational(&c.f_upper),
            format_rational(&c.g_lower),
            format_rational(&c.g_upper),
            c.holds.to_string(),
        ]);
    }
    t
}

/// A compact per-construction table.
fn summary_table(artifact: &RunArtifact) -> Result<Table> {
    Ok(match &artifact.request {
        ConstructRequest::Kernel { .. } => {
            let k: VanishingKernel = payload(artifact)?;
            let eng = MomentEngine::new(k.density.breakpoints(), k.density.pieces());
            let last = k.vanished_orders.last().copied().unwrap_or(0) + 3;
            let mut t = Table::new(vec!["k", "moment"]);
            for order in 0..=last {
                t.push(vec![order.to_string(), format_rational(&eng.moment(order))]);
            }
            t
        }
        ConstructRequest::SmoothKernel { .. } => {
            let mut t = Table::new(vec!["field", "value"]);
            for (key, v) in artifact.verification.as_object().into_iter().flatten() {
                t.push(vec![key.clone(), v.to_string()]);
            }
            t
        }
        ConstructRequest::Staged { .. } => {
            let k: StagedKernel = payload(artifact)?;
            let mut t = Table::new(vec!["stage", "exponent", "ratio"]);
            for s in &k.stages {
                t.push(vec![
                    s.stage.to_string(),
                    s.exponent.to_string(),
                    format_rational(&s.ratio),
                ]);
            }
            t
        }
        ConstructRequest::Matched { .. } => {
            let p: MatchedPair = payload(artifact)?;
            let (e1, e2) = (
                MomentEngine::new(p.first.breakpoints(), p.first.pieces()),
                MomentEngine::new(p.second.breakpoints(), p.second.pieces()),
            );
            let mut t = Table::new(vec!["order", "moments_equal"]);
            for &k in &p.agreement_orders {
                t.push(vec![
                    k.to_string(),
                    (e1.moment(k) == e2.moment(k)).to_string(),
                ]);
            }
            t
        }
        ConstructRequest::Alternating { .. } => {
            sign_table(payload::<AlternatingPair>(artifact)?.claimed_orders())
        }
        ConstructRequest::Unimodal { .. } => {
            sign_table(payload::<UnimodalPair>(artifact)?.inner.claimed_orders())
        }
        ConstructRequest::Mixed { .. } => {
            sign_table(payload::<MixedPayload>(artifact)?.pair.claimed_orders())
        }
        ConstructRequest::Runs { .. } => {
            let runs: RunReport = report(&artifact.verification["runs"])?;
            let mut t = Table::new(vec![
                "start",
                "end",
                "sign_of_g_minus_f",
                "harmonic_sum",
                "harmonic_sum_approx",
                "at_least_half",
            ]);
            for r in &runs.runs {
                let sign = serde_json::to_value(r.sign)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string();
                t.push(vec![
                    r.start.to_string(),
                    r.end.to_string(),
                    sign,
                    format_rational(&r.harmonic_sum),
                    to_f64(&r.harmonic_sum).to_string(),
                    r.at_least_half.to_string(),
                ]);
            }
            t
        }
        ConstructRequest::DiscreteCdf { .. } => {
            cdf_table(&report::<DiscreteCdfReport>(&artifact.verification)?.cdf_checks)
        }
        ConstructRequest::AcCdf { .. } => {
            cdf_table(&report::<AcCdfReport>(&artifact.verification)?.cdf_checks)
        }
    })
}

type PlotData = (Vec<&'static str>, Vec<Vec<f64>>);

fn plot_rows(artifact: &RunArtifact) -> Result<PlotData> {
    Ok(match &artifact.request {
        ConstructRequest::Kernel { .. } => (
            vec!["x", "kernel"],
            density_rows(&[&payload::<VanishingKernel>(artifact)?.density]),
        ),
        ConstructRequest::SmoothKernel { .. } => {
            return Err(InputError("smooth kernels have no exact plot data".into()).into());
        }
        ConstructRequest::Staged { .. } => (
            vec!["x", "kernel"],
            density_rows(&[&payload::<StagedKernel>(artifact)?.density]),
        ),
        ConstructRequest::Matched { .. } => {
            let p: MatchedPair = payload(artifact)?;
            (
                vec!["x", "first", "second"],
                density_rows(&[&p.first, &p.second]),
            )
        }
        ConstructRequest::Alternating { .. } | ConstructRequest::Runs { .. } => {
            let p: AlternatingPair = payload(artifact)?;
            (vec!["x", "f", "g"], density_rows(&[&p.f, &p.g]))
        }
        ConstructRequest::Unimodal { .. } => {
            let p: UnimodalPair = payload(artifact)?;
            (vec!["x", "f", "g"], density_rows(&[&p.f, &p.g]))
        }
        ConstructRequest::Mixed { .. } => {
            let p: MixedPayload = payload(artifact)?;
            (
                vec!["x", "f", "g", "low", "high"],
                density_rows(&[&p.pair.f, &p.pair.g, &p.demo.low, &p.demo.high]),
            )
        }
        ConstructRequest::DiscreteCdf { .. } => {
            let p: DiscreteCdfPair = payload(artifact)?;
            let rows = p
                .plot_data()
                .iter()
                .map(|r| vec![r.x, r.f_cdf, r.g_lo, r.g_hi])
                .collect();
            (vec!["x", "f_cdf", "g_cdf_lower", "g_cdf_upper"], rows)
        }
        ConstructRequest::AcCdf { .. } => {
            let p: AcCdfPair = payload(artifact)?;
            (vec!["x", "f_cdf", "g_cdf"], cdf_rows(&[&p.f, &p.g]))
        }
    })
}

fn parse_set(expr: &str) -> Result<StructuredSet> {
    Ok(expr.parse::<StructuredSet>()?)
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum SequenceInput {
    Plain(Vec<u64>),
    WithRuns {
        prefix: Vec<u64>,
        runs: Option<Vec<(u64, u64)>>,
    },
}

fn filter_query(query: FilterQuery) -> Result<()> {
    match query {
        FilterQuery::Theta { expr } => {
            let s = parse_set(&expr)?;
            print_json(&serde_json::json!({ "set": s.to_string(), "theta": filters::theta(&s)? }))
        }
        FilterQuery::Frechet { expr } => {
            let s = parse_set(&expr)?;
            print_json(
                &serde_json::json!({ "set": s.to_string(), "in_frechet": filters::in_frechet(&s)? }),
            )
        }
        FilterQuery::Msz { expr } => {
            let s = parse_set(&expr)?;
            print_json(&serde_json::json!({
                "set": s.to_string(),
                "in_msz_filter": filters::in_msz_filter(&s)?,
                "msz_set": filters::is_msz_set(&s)?,
            }))
        }
        FilterQuery::MszSeq { file } => {
            let (prefix, runs) = match read_json::<SequenceInput>(&file)? {
                SequenceInput::Plain(p) => (p, None),
                SequenceInput::WithRuns { prefix, runs } => (prefix, runs),
            };
            let verdict: MszVerdict = filters::is_msz_sequence(&prefix, runs.as_deref())?;
            print_json(&verdict)
        }
        FilterQuery::Fip { exprs } => {
            let family = exprs
                .iter()
                .map(|e| parse_set(e))
                .collect::<Result<Vec<_>>>()?;
            print_json(&filters::has_fip(&family)?)
        }
    }
}

fn parse_profile(text: &str) -> Result<MixedProfile> {
    let trimmed = text.trim_start();
    let raw = if trimmed.starts_with('{') {
        text.to_string()
    } else {
        fs::read_to_string(text).with_context(|| format!("cannot read profile {text}"))?
    };
    let p: MixedProfile = serde_json::from_str(&raw)
        .context("profile must be {\"row\": [...], \"column\": [...]}")?;
    Ok(MixedProfile::new(p.row, p.column)?)
}

fn game(config: &Config, action: GameAction) -> Result<()> {
    match action {
        GameAction::Analyze { game } => {
            let g: DistGame = read_json(&game)?;
            let report = games::analyze_existence(&g, config.game_size_bound)?;
            print_json(&report)?;
            if !games::verify_report(&g, &report) {
                return Err(VerifyFailed("report does not replay".into()).into());
            }
            Ok(())
        }
        GameAction::Check { game, profile } => {
            let g: DistGame = read_json(&game)?;
            print_json(&games::check_lex_equilibrium(
                &g,
                &parse_profile(&profile)?,
            )?)
        }
        GameAction::Project { game, i, json } => {
            let g: DistGame = read_json(&game)?;
            if json {
                let m = games::project(&g, i)?;
                let strings: Vec<Vec<String>> = m
                    .iter()
                    .map(|r| r.iter().map(format_rational).collect())
                    .collect();
                print_json(&serde_json::json!({ "coordinate": i, "matrix": strings }))
            } else {
                print!("{}", games::render_table(&g, Some(i))?);
                Ok(())
            }
        }
        GameAction::Grid { game, max_den } => {
            let g: DistGame = read_json(&game)?;
            print_json(&games::grid_search(&g, max_den)?)
        }
        GameAction::Show { game } => {
            let g: DistGame = read_json(&game)?;
            print!("{}", games::render_table(&g, None)?);
            Ok(())
        }
    }
}

fn verify(path: &Path) -> Result<()> {
    let artifact: RunArtifact = read_json(path)?;
    let check = verify_artifact(&artifact);
    print_json(&check)?;
    if !check.passed() {
        return Err(VerifyFailed(
            check
                .detail
                .unwrap_or_else(|| "artifact does not replay".into()),
        )
        .into());
    }
    Ok(())
}
