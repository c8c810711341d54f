//! Subcommand bodies. Each returns a [`Report`] held in memory; nothing
//! touches the filesystem until the whole run has succeeded.

use secrecy_lab::bounds::{
    dominance_check, lower_bound, lower_bound_no_jammer_csi, power_scaling_sweep, upper_bound, BoundEstimate,
    PowerScaling,
};
use secrecy_lab::channel::{ChannelModel, PowerConfig};
use secrecy_lab::delay::{base_key_rate, maximize_outage_rate_with_key, DelayConfig, DelayTriple, KeyMode};
use secrecy_lab::feedback::{
    maximize_rate, one_bit_lower_bound, rate_at, upper_bound_1bit, RateReport, RateSearch, Scheme, DEFAULT_T_MAX,
};
use secrecy_lab::multi::{lower_colluding, lower_noncolluding, upper_colluding, upper_noncolluding, MultiBound};
use secrecy_lab::protocol::{
    run_arq_session, run_delay_session, AdversaryStrategy, ArqConfig, DelaySessionConfig, JammingAccounting,
    SessionLog,
};
use secrecy_lab::rng::RngStream;

use crate::config::{bad, ConfigError, ExperimentConfig, DEFAULT_SEED};

const BOUND_COLUMNS: [&str; 8] = ["p", "pt", "pj", "bound_kind", "value_bits", "ci", "n_samples", "seed"];
const PILOT_CAP: usize = 200_000;

pub struct Report {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    warnings: Vec<String>,
    /// JSON-lines block events (simulate only).
    pub events: Option<Vec<u8>>,
}

impl Report {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            warnings: Vec::new(),
            events: None,
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg: &ExperimentConfig) -> anyhow::Result<String> {
        let mut head = format!(
            "# secrecy-lab {} {}\n# config: {}\n# seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            cfg.command.as_deref().unwrap_or(""),
            cfg.to_json_line(),
            cfg.seed.unwrap_or(DEFAULT_SEED),
        );
        for w in &self.warnings {
            head.push_str(&format!("# warning: {w}\n"));
        }
        let mut w = csv::Writer::from_writer(head.into_bytes());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn bound_row(p: f64, power: &PowerConfig, kind: &str, e: &BoundEstimate, seed: u64) -> Vec<String> {
    vec![
        num(p),
        num(power.pt),
        num(power.pj),
        kind.to_string(),
        num(e.value),
        num(e.ci_halfwidth),
        e.n_samples.to_string(),
        seed.to_string(),
    ]
}

struct Ctx {
    seed: u64,
    rng: RngStream,
}

fn context(cfg: &mut ExperimentConfig) -> Ctx {
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    Ctx {
        seed,
        rng: RngStream::new(seed, 0),
    }
}

fn power(cfg: &mut ExperimentConfig) -> anyhow::Result<PowerConfig> {
    let pt = *cfg.pt.get_or_insert(10.0);
    let pj = *cfg.pj.get_or_insert(1.0);
    Ok(PowerConfig::new(pt, pj)?)
}

fn samples(cfg: &mut ExperimentConfig, default: usize) -> anyhow::Result<usize> {
    let n = *cfg.samples.get_or_insert(default);
    if n == 0 {
        return bad("samples must be >= 1");
    }
    Ok(n)
}

pub fn execute(cfg: &mut ExperimentConfig, want_events: bool) -> anyhow::Result<Report> {
    match cfg.command.clone().as_deref() {
        Some("bounds") => bounds(cfg),
        Some("sweep") => sweep(cfg),
        Some("multi") => multi(cfg),
        Some("feedback") => feedback(cfg),
        Some("delay") => delay(cfg),
        Some("simulate") => simulate(cfg, want_events),
        Some("dominance") => dominance(cfg),
        Some("figures") => figures(cfg),
        other => bad(format!("unknown command {other:?}")),
    }
}

fn bounds(cfg: &mut ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let model = cfg.channel_model()?;
    let power = power(cfg)?;
    let n = samples(cfg, 1_000_000)?;
    let with_csi = *cfg.no_jammer_csi.get_or_insert(false);
    let mut rep = Report::new(&BOUND_COLUMNS);
    let lo = lower_bound(&model, &power, n, &ctx.rng)?;
    let hi = upper_bound(&model, &power, n, &ctx.rng)?;
    rep.push(bound_row(power.pt, &power, "lower", &lo, ctx.seed));
    rep.push(bound_row(power.pt, &power, "upper", &hi, ctx.seed));
    if with_csi {
        let e = lower_bound_no_jammer_csi(&model, &power, n, &ctx.rng)?;
        rep.push(bound_row(power.pt, &power, "lower_no_jammer_csi", &e, ctx.seed));
    }
    Ok(rep)
}

fn sweep(cfg: &mut ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let model = cfg.channel_model()?;
    let n = samples(cfg, 1_000_000)?;
    let grid = cfg.grid.get_or_insert_with(|| vec![1.0, 10.0, 100.0, 1000.0, 10000.0]).clone();
    let pt = *cfg.pt_scaling.get_or_insert(PowerScaling::linear());
    let pj = *cfg.pj_scaling.get_or_insert(PowerScaling::linear());
    let s = power_scaling_sweep(&model, pt, pj, &grid, n, &ctx.rng)?;
    let mut rep = Report::new(&BOUND_COLUMNS);
    // Already logged by the sweep itself.
    rep.warnings.extend(s.warning);
    for pt in &s.points {
        rep.push(bound_row(pt.p, &pt.power, "upper", &pt.estimate, ctx.seed));
    }
    Ok(rep)
}

fn multi(cfg: &mut ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let mm = cfg.multi_model()?;
    let power = power(cfg)?;
    let n = samples(cfg, 1_000_000)?;
    let mut cols = BOUND_COLUMNS.to_vec();
    cols.push("s_argmin");
    let mut rep = Report::new(&cols);
    let rows: [(&str, MultiBound); 4] = [
        ("lower_noncolluding", lower_noncolluding(&mm, &power, n, &ctx.rng)?),
        ("upper_noncolluding", upper_noncolluding(&mm, &power, n, &ctx.rng)?),
        ("lower_colluding", lower_colluding(&mm, &power, n, &ctx.rng)?),
        ("upper_colluding", upper_colluding(&mm, &power, n, &ctx.rng)?),
    ];
    for (kind, b) in rows {
        let mut row = bound_row(power.pt, &power, kind, &b.estimate, ctx.seed);
        row.push(b.s_argmin.map(|s| s.to_string()).unwrap_or_default());
        rep.push(row);
    }
    Ok(rep)
}

fn schemes(spec: &str) -> anyhow::Result<Vec<Scheme>> {
    if spec == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    spec.split(',').map(|s| Ok(s.trim().parse::<Scheme>()?)).collect()
}

fn rate_row(rep: &RateReport, seed: u64) -> Vec<String> {
    vec![
        rep.scheme.name().to_string(),
        num(rep.r),
        num(rep.estimate.value),
        num(rep.estimate.ci_halfwidth),
        num(rep.mean_t),
        num(rep.truncation_fraction),
        seed.to_string(),
    ]
}

fn feedback(cfg: &mut ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let model = cfg.channel_model()?;
    let power = power(cfg)?;
    let n = samples(cfg, 1_000_000)?;
    let renewals = *cfg.renewals.get_or_insert((n / 4).max(1000));
    let t_max = *cfg.t_max.get_or_insert(DEFAULT_T_MAX);
    let list = schemes(cfg.scheme.get_or_insert_with(|| "all".into()))?;
    let mut rep = Report::new(&["scheme", "r", "value_bits", "ci", "mean_T", "truncation_fraction", "seed"]);
    for scheme in list {
        let report = match cfg.rate {
            Some(r) => rate_at(&model, &power, r, scheme, renewals, t_max, &ctx.rng)?,
            None => {
                let mut search = RateSearch::auto(&model, &power, n.min(PILOT_CAP), &ctx.rng)?;
                search.t_max = t_max;
                maximize_rate(&model, &power, scheme, &search, renewals, &ctx.rng)?.report
            }
        };
        rep.push(rate_row(&report, ctx.seed));
    }
    Ok(rep)
}

fn key_mode(cfg: &mut ExperimentConfig) -> anyhow::Result<KeyMode> {
    Ok(cfg.key_mode.get_or_insert_with(|| "no_feedback".into()).parse()?)
}

fn delay(cfg: &mut ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let model = cfg.channel_model()?;
    let power = power(cfg)?;
    let n = samples(cfg, 200_000)?;
    let mode = key_mode(cfg)?;
    let alphas = cfg.alpha.get_or_insert_with(|| vec![0.2]).clone();
    let configs = alphas
        .iter()
        .map(|a| DelayConfig::new(*a, mode))
        .collect::<secrecy_lab::Result<Vec<_>>>()?;
    let base = base_key_rate(&model, &power, mode, n, &ctx.rng)?;
    let mut rep = Report::new(&["alpha", "gamma", "r_tilde", "r_s", "r_key", "p_success", "feasible", "seed"]);
    for (alpha, dc) in alphas.iter().zip(&configs) {
        let opt = maximize_outage_rate_with_key(&model, &power, dc, base, n, &ctx.rng)?;
        let t = opt.triple;
        rep.push(vec![
            num(*alpha),
            num(t.gamma),
            num(t.r_tilde),
            num(t.r_s),
            num(t.r_key),
            num(opt.success.p_success),
            opt.feasible.to_string(),
            ctx.seed.to_string(),
        ]);
    }
    Ok(rep)
}

fn adversary(spec: &str) -> anyhow::Result<AdversaryStrategy> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let parse_err = || ConfigError(format!("bad adversary spec {spec:?}"));
    Ok(match (kind, arg) {
        ("always_eavesdrop", None) => AdversaryStrategy::AlwaysEavesdrop,
        ("always_jam", None) => AdversaryStrategy::AlwaysJam,
        ("bernoulli", Some(q)) => AdversaryStrategy::Bernoulli {
            q: q.parse().map_err(|_| parse_err())?,
        },
        ("periodic", Some(k)) => AdversaryStrategy::Periodic {
            jam_every: k.parse().map_err(|_| parse_err())?,
        },
        ("trace", Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
            AdversaryStrategy::from_trace_text(&text)?
        }
        _ => return Err(parse_err().into()),
    })
}

fn accounting(spec: &str) -> anyhow::Result<JammingAccounting> {
    match spec {
        "worst_case" => Ok(JammingAccounting::WorstCase),
        "per_block" => Ok(JammingAccounting::PerBlock),
        other => bad(format!("unknown accounting {other:?}; expected worst_case or per_block")),
    }
}

fn required(v: Option<f64>, name: &str) -> anyhow::Result<f64> {
    match v {
        Some(x) => Ok(x),
        None => bad(format!("simulate --protocol delay needs --{}", name.replace('_', "-"))),
    }
}

fn simulate(cfg: &mut ExperimentConfig, want_events: bool) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let model: ChannelModel = cfg.channel_model()?;
    let power = power(cfg)?;
    let adv = adversary(cfg.adversary.get_or_insert_with(|| "always_eavesdrop".into()))?;
    let acc = accounting(cfg.accounting.get_or_insert_with(|| "worst_case".into()))?;
    let protocol = cfg.protocol.get_or_insert_with(|| "arq".into()).clone();
    let log: SessionLog = match protocol.as_str() {
        "arq" => {
            let scheme: Scheme = cfg.scheme.get_or_insert_with(|| "mrc".into()).parse()?;
            let Some(r) = cfg.rate else {
                return bad("simulate --protocol arq needs --rate");
            };
            let mut ac = ArqConfig::new(r, scheme, *cfg.blocks.get_or_insert(100_000));
            ac.t_max = *cfg.t_max.get_or_insert(DEFAULT_T_MAX);
            ac.accounting = acc;
            ac.keep_events = want_events;
            run_arq_session(&model, &power, &ac, &adv, &ctx.rng)?
        }
        "delay" => {
            let triple = DelayTriple {
                gamma: required(cfg.gamma, "gamma")?,
                r_tilde: required(cfg.r_tilde, "r_tilde")?,
                r_s: required(cfg.r_s, "r_s")?,
                r_key: *cfg.r_key.get_or_insert(0.0),
            };
            let dc = DelaySessionConfig {
                triple,
                m1: *cfg.m1.get_or_insert(100),
                m2: *cfg.m2.get_or_insert(100),
                accounting: acc,
                keep_events: want_events,
            };
            run_delay_session(&model, &power, &dc, &adv, &ctx.rng)?
        }
        other => return bad(format!("unknown protocol {other:?}; expected arq or delay")),
    };
    let mut rep = Report::new(&[
        "protocol",
        "adversary",
        "blocks",
        "empirical_rate",
        "empirical_ci",
        "conservative_rate",
        "conservative_ci",
        "truncations",
        "outage_frequency",
        "outage_ci",
        "seed",
    ]);
    let (freq, ci) = match &log.delay {
        Some(d) => (num(d.outage_frequency), num(d.outage_ci)),
        None => (String::new(), String::new()),
    };
    rep.push(vec![
        protocol,
        adv.name(),
        log.blocks.to_string(),
        num(log.empirical_rate),
        num(log.empirical_ci),
        num(log.conservative_rate),
        num(log.conservative_ci),
        log.truncations.to_string(),
        freq,
        ci,
        ctx.seed.to_string(),
    ]);
    if want_events {
        let mut buf = Vec::new();
        log.write_events_jsonl(&mut buf)?;
        rep.events = Some(buf);
    }
    Ok(rep)
}

fn dominance(cfg: &mut ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let model = cfg.channel_model()?;
    let power = power(cfg)?;
    let n = samples(cfg, 1_000_000)?;
    let d = dominance_check(&model, &power, n, &ctx.rng)?;
    let mut rep = Report::new(&["pt", "pj", "dominated", "max_cdf_gap", "eps_stat", "n_samples", "seed"]);
    rep.push(vec![
        num(power.pt),
        num(power.pj),
        d.dominated.to_string(),
        num(d.max_cdf_gap),
        num(d.eps_stat),
        d.n_samples.to_string(),
        ctx.seed.to_string(),
    ]);
    Ok(rep)
}

const FIG_PT_GRID: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
const FIG3_GRID: [f64; 5] = [1.0, 10.0, 100.0, 1000.0, 10000.0];

fn fig_row(rep: &mut Report, fig: &str, x: f64, series: &str, value: f64, ci: f64) {
    rep.push(vec![num(x), format!("{fig}/{series}"), num(value), num(ci)]);
}

/// Transmit-power sweep at unit jamming power: no-feedback and 1-bit
/// bounds plus the outage-constrained rate at `alpha = 0.2`.
fn pt_sweep_figure(
    rep: &mut Report,
    fig: &str,
    model: &ChannelModel,
    key_mode: KeyMode,
    n: usize,
    rng: &RngStream,
) -> anyhow::Result<()> {
    let renewals = (n / 4).max(1000);
    let dc = DelayConfig::new(0.2, key_mode)?;
    for pt in FIG_PT_GRID {
        let power = PowerConfig::new(pt, 1.0)?;
        let lo = lower_bound(model, &power, n, rng)?;
        let hi = upper_bound(model, &power, n, rng)?;
        let search = RateSearch::auto(model, &power, n.min(PILOT_CAP), rng)?;
        let one_bit = one_bit_lower_bound(model, &power, n, renewals, &search, rng)?;
        let one_bit_hi = upper_bound_1bit(model, &power, n, rng)?;
        let key = match key_mode {
            KeyMode::NoFeedback => lo.value,
            KeyMode::OneBit => one_bit.value(),
        };
        let d = maximize_outage_rate_with_key(model, &power, &dc, key, n, rng)?;
        fig_row(rep, fig, pt, "nofb_lower", lo.value, lo.ci_halfwidth);
        fig_row(rep, fig, pt, "nofb_upper", hi.value, hi.ci_halfwidth);
        fig_row(rep, fig, pt, "onebit_lower", one_bit.value(), one_bit.ci_halfwidth());
        fig_row(rep, fig, pt, "onebit_upper", one_bit_hi.value, one_bit_hi.ci_halfwidth);
        fig_row(rep, fig, pt, "outage_alpha_0.2", d.value.value, d.value.ci_halfwidth);
    }
    Ok(())
}

fn figures(cfg: &mut ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = context(cfg);
    let n = samples(cfg, 100_000)?;
    let which = cfg.figure.get_or_insert_with(|| "all".into()).clone();
    let selected: Vec<&str> = match which.as_str() {
        "all" => vec!["fig1", "fig2", "fig3"],
        f @ ("fig1" | "fig2" | "fig3") => vec![f],
        other => return bad(format!("unknown figure {other:?}; expected fig1, fig2, fig3 or all")),
    };
    let mut rep = Report::new(&["x", "series", "value_bits", "ci"]);
    for fig in selected {
        match fig {
            "fig1" => {
                let m = ChannelModel::exponential(5.0, 2.0, 2.0)?;
                pt_sweep_figure(&mut rep, fig, &m, KeyMode::NoFeedback, n, &ctx.rng)?;
            }
            "fig2" => {
                let m = ChannelModel::exponential(1.0, 2.0, 1.0)?;
                pt_sweep_figure(&mut rep, fig, &m, KeyMode::OneBit, n, &ctx.rng)?;
            }
            _ => {
                let m = ChannelModel::exponential(1.0, 2.0, 1.0)?;
                let s = power_scaling_sweep(&m, PowerScaling::linear(), PowerScaling::linear(), &FIG3_GRID, n, &ctx.rng)?;
                for pt in &s.points {
                    let lo = lower_bound(&m, &pt.power, n, &ctx.rng)?;
                    fig_row(&mut rep, fig, pt.p, "nofb_lower", lo.value, lo.ci_halfwidth);
                    fig_row(&mut rep, fig, pt.p, "nofb_upper", pt.estimate.value, pt.estimate.ci_halfwidth);
                }
            }
        }
    }
    Ok(rep)
}
