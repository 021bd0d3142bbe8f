//! Subcommand implementations.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bcbound_core::admissibility::{
    check_capacity_comparison, check_degraded_source, check_ga_outer, check_markov_point,
    check_more_capable_case, check_new_outer, lossy_necessary_check, CheckConfig, CheckReport,
    DistortionSpec,
};
use bcbound_core::bounds::{AuxCards, InputSpec, RegionKind};
use bcbound_core::channel::{example_source, BroadcastChannel, SourcePair};
use bcbound_core::optimize::{sample_region, SearchConfig};
use bcbound_core::prob::Pmf;
use bcbound_core::region::{sample_directions, Status};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{CheckArg, Cli, Command, Common, GenArg, Inputs, RegionArg};
use crate::output::{emit, read_text, write_text, RunManifest};
use crate::CliError;

pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Region {
            kind,
            inputs,
            input,
            common,
        } => region(kind, &inputs, input, &common),
        Command::Check {
            which,
            inputs,
            d1,
            d2,
            common,
        } => check(which, &inputs, d1, d2, &common),
        Command::BlackwellDemo { alpha, common } => blackwell_demo(alpha, &common),
        Command::CommonPart { src, out } => common_part(&src, out.as_ref()),
        Command::Gen { what } => generate(what),
    }
}

/// Cardinality overrides from `--cards`.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CardOverrides {
    pub v0: Option<usize>,
    pub v1: Option<usize>,
    pub v2: Option<usize>,
    pub u: Option<usize>,
}

impl CardOverrides {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let mut c = Self::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--cards entry `{part}` is not key=value")))?;
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("--cards value `{v}` is not a positive integer")))?;
            let slot = match k.trim() {
                "v0" => &mut c.v0,
                "v1" => &mut c.v1,
                "v2" => &mut c.v2,
                "u" => &mut c.u,
                other => return Err(CliError::Usage(format!("unknown --cards key `{other}`"))),
            };
            *slot = Some(n);
        }
        Ok(c)
    }

    fn channel_cards(&self, nx: usize) -> AuxCards {
        let d = AuxCards::desk_default(nx);
        AuxCards {
            v0: self.v0.unwrap_or(d.v0),
            v1: self.v1.unwrap_or(d.v1),
            v2: self.v2.unwrap_or(d.v2),
        }
    }
}

fn set_threads(common: &Common) -> Result<(), CliError> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn search_config(common: &Common) -> SearchConfig {
    let mut s = SearchConfig {
        seed: common.seed,
        ..SearchConfig::default()
    };
    if let Some(r) = common.restarts {
        s.restarts = r;
    }
    s
}

fn cards(common: &Common) -> Result<CardOverrides, CliError> {
    common
        .cards
        .as_deref()
        .map_or(Ok(CardOverrides::default()), CardOverrides::parse)
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage(format!("{flag} is required for this command")))
}

fn load_channel(p: &Path, m: &mut RunManifest) -> Result<BroadcastChannel, CliError> {
    m.input(p);
    BroadcastChannel::from_json(&read_text(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn load_source(p: &Path, m: &mut RunManifest) -> Result<SourcePair, CliError> {
    m.input(p);
    SourcePair::from_json(&read_text(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn region(kind: RegionArg, inputs: &Inputs, input: Option<Vec<f64>>, common: &Common) -> Result<u8, CliError> {
    let started = Instant::now();
    set_threads(common)?;
    let name = format!("region {}", format!("{kind:?}").to_lowercase());
    let mut m = RunManifest::new(name);
    let over = cards(common)?;
    let search = search_config(common);
    let input_spec = |nx: usize| -> Result<InputSpec, CliError> {
        match &input {
            Some(p) if p.len() != nx => Err(CliError::Usage(format!(
                "--input has {} entries, channel has {nx} inputs",
                p.len()
            ))),
            Some(p) => Ok(InputSpec::Fixed(Pmf::new(p.clone())?)),
            None => Ok(InputSpec::Search),
        }
    };
    let kind = match kind {
        RegionArg::Cin | RegionArg::Cout | RegionArg::R10Channel | RegionArg::Cd => {
            let ch = load_channel(need(&inputs.ch, "--ch")?, &mut m)?;
            let nx = ch.nx();
            let input = input_spec(nx)?;
            let cards = over.channel_cards(nx);
            match kind {
                RegionArg::Cin => RegionKind::MartonInner {
                    channel: ch,
                    input,
                    cards,
                },
                RegionArg::Cout => RegionKind::NairOuter {
                    channel: ch,
                    input,
                    cards,
                },
                RegionArg::R10Channel => RegionKind::R10Channel {
                    channel: ch,
                    input,
                    cards,
                },
                _ => RegionKind::DegradedCD {
                    channel: ch,
                    input,
                    v_card: over.v0.unwrap_or(nx + 1),
                },
            }
        }
        RegionArg::Source | RegionArg::R10Source => {
            let src = load_source(need(&inputs.src, "--src")?, &mut m)?;
            let u_card = over.u.unwrap_or(src.n1() * src.n2());
            if kind == RegionArg::Source {
                RegionKind::SourceRegion { source: src, u_card }
            } else {
                RegionKind::R10SourceLossless { source: src, u_card }
            }
        }
    };
    let dim = kind.dim();
    let n_dirs = common.directions.unwrap_or(if dim == 10 { 200 } else { 50 });
    let dirs = sample_directions(dim, n_dirs, common.seed);
    let approx = sample_region(&kind, &dirs, &search)?;
    if let Some(p) = &common.csv {
        let f = File::create(p).map_err(|e| CliError::Io(p.clone(), e))?;
        approx
            .write_csv(BufWriter::new(f))
            .map_err(|e| CliError::Io(p.clone(), e))?;
    }
    m.flag("search", &search);
    m.flag("directions", n_dirs);
    m.flag("kind", kind_summary(&kind));
    m.flag("kappa", common.kappa);
    m.flag("tol", common.tol);
    emit(m, started, &approx, common.out.as_ref())?;
    Ok(0)
}

/// Cardinalities and input law of a region kind, for the manifest.
fn kind_summary(kind: &RegionKind) -> Value {
    let input = |i: &InputSpec| match i {
        InputSpec::Fixed(p) => json!(p.probs()),
        InputSpec::Search => json!("search"),
    };
    match kind {
        RegionKind::MartonInner { input: i, cards, .. }
        | RegionKind::NairOuter { input: i, cards, .. }
        | RegionKind::R10Channel { input: i, cards, .. } => {
            json!({"tag": format!("{:?}", kind.tag()), "input": input(i), "cards": cards})
        }
        RegionKind::DegradedCD { input: i, v_card, .. } => {
            json!({"tag": "DegradedCD", "input": input(i), "v_card": v_card})
        }
        RegionKind::SourceRegion { u_card, .. } | RegionKind::R10SourceLossless { u_card, .. } => {
            json!({"tag": format!("{:?}", kind.tag()), "u_card": u_card})
        }
        other => json!({"tag": format!("{:?}", other.tag())}),
    }
}

fn check_config(common: &Common, which: CheckArg, ch: &BroadcastChannel) -> Result<CheckConfig, CliError> {
    let over = cards(common)?;
    let ten = matches!(which, CheckArg::New | CheckArg::Lossy);
    Ok(CheckConfig {
        search: search_config(common),
        tol: common.tol,
        directions: Some(common.directions.unwrap_or(if ten { 200 } else { 50 })),
        cards: Some(over.channel_cards(ch.nx())),
        u_card: over.u,
        ..CheckConfig::default()
    })
}

fn check(which: CheckArg, inputs: &Inputs, d1: f64, d2: f64, common: &Common) -> Result<u8, CliError> {
    let started = Instant::now();
    set_threads(common)?;
    let name = format!("check {}", format!("{which:?}").to_lowercase());
    let mut m = RunManifest::new(name);
    let src = load_source(need(&inputs.src, "--src")?, &mut m)?;
    let ch = load_channel(need(&inputs.ch, "--ch")?, &mut m)?;
    let cfg = check_config(common, which, &ch)?;
    let kappa = common.kappa;
    let report = match which {
        CheckArg::Ga => check_ga_outer(&src, &ch, kappa, &cfg)?,
        CheckArg::New => check_new_outer(&src, &ch, kappa, &cfg)?,
        CheckArg::Capacity => check_capacity_comparison(&src, &ch, kappa, &cfg)?,
        CheckArg::Markov => check_markov_point(&src, &ch, kappa, &cfg)?,
        CheckArg::Degraded => check_degraded_source(&src, &ch, kappa, &cfg)?,
        CheckArg::MoreCapable => check_more_capable_case(&src, &ch, kappa, &cfg)?,
        CheckArg::Lossy => {
            let p = Pmf::new(src.probs().to_vec())?;
            let spec = DistortionSpec::hamming_pair(src.n1(), src.n2(), d1, d2);
            m.flag("d1", d1);
            m.flag("d2", d2);
            lossy_necessary_check(&p, &ch, kappa, &spec, &cfg)?
        }
    };
    m.flag("kappa", kappa);
    m.flag("config", &cfg);
    let code = report.status().exit_code() as u8;
    eprintln!("{}: {:?}", report.check, report.status());
    emit(m, started, &report, common.out.as_ref())?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct DemoReport {
    alpha: f64,
    beta: f64,
    source: SourcePair,
    common_part_entropy: f64,
    ga: DemoSection,
    new: DemoSection,
    /// The GA condition holds while the ten-coordinate condition is violated.
    strict_improvement: bool,
}

#[derive(Debug, Serialize)]
struct DemoSection {
    status: Status,
    exit_code: i32,
    margin: Option<f64>,
    critical_kappa: Option<f64>,
    direction: Option<Vec<f64>>,
    report: CheckReport,
}

impl From<CheckReport> for DemoSection {
    fn from(report: CheckReport) -> Self {
        Self {
            status: report.status(),
            exit_code: report.status().exit_code(),
            margin: report.margin(),
            critical_kappa: report.critical_kappa,
            direction: report.verdict.witness.as_ref().and_then(|w| w.direction.clone()),
            report,
        }
    }
}

fn blackwell_demo(alpha: f64, common: &Common) -> Result<u8, CliError> {
    let started = Instant::now();
    set_threads(common)?;
    let mut m = RunManifest::new("blackwell-demo");
    let ex = example_source(alpha)?;
    let ch = BroadcastChannel::blackwell();
    let h0 = ex.source.common_part().entropy();
    if h0 > 1e-12 {
        return Err(CliError::Usage(format!("example source has a common part of entropy {h0}")));
    }
    let ga_cfg = check_config(common, CheckArg::Ga, &ch)?;
    let new_cfg = check_config(common, CheckArg::New, &ch)?;
    let kappa = common.kappa;
    let ga = check_ga_outer(&ex.source, &ch, kappa, &ga_cfg)?;
    let sum_slack = ga
        .margins
        .iter()
        .find(|s| s.name.contains("via V1"))
        .map(|s| s.slack);
    eprintln!("alpha = {alpha}, beta = {:.10}", ex.beta);
    eprintln!("GA condition: {:?}, sum-rate slack {:?}", ga.status(), sum_slack);
    let new = check_new_outer(&ex.source, &ch, kappa, &new_cfg)?;
    eprintln!(
        "ten-coordinate condition: {:?}, margin {:?}",
        new.status(),
        new.margin()
    );
    if let Some(d) = new.verdict.witness.as_ref().and_then(|w| w.direction.as_ref()) {
        eprintln!("direction {d:?}");
    }
    let strict = ga.status().holds() && new.status() == Status::EvidenceViolated;
    m.flag("alpha", alpha);
    m.flag("kappa", kappa);
    m.flag("ga_config", &ga_cfg);
    m.flag("new_config", &new_cfg);
    let report = DemoReport {
        alpha,
        beta: ex.beta,
        source: ex.source,
        common_part_entropy: h0,
        ga: ga.into(),
        new: new.into(),
        strict_improvement: strict,
    };
    emit(m, started, &report, common.out.as_ref())?;
    Ok(0)
}

fn common_part(src_path: &Path, out: Option<&PathBuf>) -> Result<u8, CliError> {
    let started = Instant::now();
    let mut m = RunManifest::new("common-part");
    let src = load_source(src_path, &mut m)?;
    let cp = src.common_part();
    let labels: Vec<Vec<Option<usize>>> = (0..src.n1())
        .map(|a| (0..src.n2()).map(|b| (src.prob(a, b) > 0.0).then(|| cp.label(a, b)).flatten()).collect())
        .collect();
    let result = json!({
        "components": cp.num_values(),
        "entropy": cp.entropy(),
        "pmf": cp.pmf.probs(),
        "s1_label": cp.s1_label,
        "s2_label": cp.s2_label,
        "cell_label": labels,
    });
    emit(m, started, &result, out)?;
    Ok(0)
}

fn generate(what: GenArg) -> Result<u8, CliError> {
    let (text, out) = match what {
        GenArg::Blackwell { out } => (BroadcastChannel::blackwell().to_json(), out),
        GenArg::ExampleSource { alpha, out } => (example_source(alpha)?.source.to_json(), out),
        GenArg::CleanPipe { bits, out } => (BroadcastChannel::clean_pipe(bits)?.to_json(), out),
    };
    write_text(out.as_ref(), &text)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cards_parse() {
        let c = CardOverrides::parse("v0=4, v1=3,u=5").unwrap();
        assert_eq!(c.v0, Some(4));
        assert_eq!(c.v1, Some(3));
        assert_eq!(c.v2, None);
        assert_eq!(c.u, Some(5));
        assert_eq!(c.channel_cards(3), AuxCards { v0: 4, v1: 3, v2: 3 });
        assert!(CardOverrides::parse("w=3").is_err());
        assert!(CardOverrides::parse("v0=0").is_err());
        assert!(CardOverrides::parse("v0").is_err());
    }
}
