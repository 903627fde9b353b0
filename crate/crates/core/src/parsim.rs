//! Controller / parallel-processor execution of the two-layer solver with
//! exact accounting of the real numbers exchanged.
//!
//! Schedule of one outer round `r` at energy-efficiency factor `η`:
//!
//! 1. controller → all: `EtaBroadcast` (1 real);
//! 2. repeated inner rounds `t`: every user measures its received signal and
//!    interference over the air, and processor `j` broadcasts a
//!    `CrossTermReport` with `(s, |μ|², ‖w‖²)` for each own user (3 reals per
//!    user). From the `K` reports every node evaluates the same objective and
//!    reaches the same stop decision; if not stopping, each processor updates
//!    its cell's beamformers from the reports and its own CSI only;
//! 3. processor `j` → controller: `PowerReport` with `Σ_k ‖w_{j,k}‖²` (1 real);
//! 4. the controller updates the bracket and either starts round `r + 1` or
//!    sends `StopCommand` (no payload).
//!
//! CSI distribution at start-up is logged as `CsiShare` and kept out of the
//! recurring count `κ₁ (3 κ₂ Σ N_j + K + 1)`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner_solver::{coupling, mrt_cell, objective_from_terms, random_cell, update_cell, user_update, InitStrategy, InnerOptions};
use crate::model::{reception, BeamformerSet, ChannelSet, SystemConfig};
use crate::numerics::{norm_sqr, CVector};
use crate::outer_solver::{eta_upper_bound, f_value, EtaBisection, OuterOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    Controller,
    Processor(usize),
    /// Every processor and the controller.
    All,
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Node::Controller => write!(f, "controller"),
            Node::Processor(j) => write!(f, "processor:{j}"),
            Node::All => write!(f, "all"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    CsiShare,
    EtaBroadcast,
    CrossTermReport,
    PowerReport,
    StopCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    /// Channels from one BS to every user, `h[j][m][n]`.
    CsiShare(Vec<Vec<CVector>>),
    Eta(f64),
    /// Per own user: MSE weight, squared receive-filter magnitude, transmit power.
    CrossTerms { s: Vec<f64>, mu_abs2: Vec<f64>, power: Vec<f64> },
    Power(f64),
    /// Index of the last certified outer round, carried as metadata.
    Stop { certified_round: Option<usize> },
}

impl Payload {
    /// Number of reals this payload serializes to.
    pub fn real_count(&self) -> usize {
        match self {
            Payload::CsiShare(h) => h.iter().flatten().map(|v| 2 * v.len()).sum(),
            Payload::Eta(_) | Payload::Power(_) => 1,
            Payload::CrossTerms { s, mu_abs2, power } => s.len() + mu_abs2.len() + power.len(),
            Payload::Stop { .. } => 0,
        }
    }

    fn kind(&self) -> MessageKind {
        match self {
            Payload::CsiShare(_) => MessageKind::CsiShare,
            Payload::Eta(_) => MessageKind::EtaBroadcast,
            Payload::CrossTerms { .. } => MessageKind::CrossTermReport,
            Payload::Power(_) => MessageKind::PowerReport,
            Payload::Stop { .. } => MessageKind::StopCommand,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    /// Outer round; initialization messages use round 0.
    pub round: usize,
    /// Inner round within the outer round, for cross-term reports.
    pub inner: Option<usize>,
    pub from: Node,
    pub to: Node,
    pub kind: MessageKind,
    pub payload_real_count: usize,
    pub payload: Payload,
}

impl Message {
    fn new(round: usize, inner: Option<usize>, from: Node, to: Node, payload: Payload) -> Self {
        Self {
            round,
            inner,
            from,
            to,
            kind: payload.kind(),
            payload_real_count: payload.real_count(),
            payload,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub messages: Vec<Message>,
    /// Outer rounds.
    pub kappa1: usize,
    /// Cross-term rounds in each outer round.
    pub kappa2: Vec<usize>,
    /// Reals exchanged outside initialization.
    pub total_reals: u64,
    /// Reals spent on CSI distribution.
    pub init_reals: u64,
}

impl ProtocolTrace {
    /// One JSON object per message: round, from, to, kind, real_count.
    pub fn write_jsonl(&self, out: &mut impl Write) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            round: usize,
            inner: Option<usize>,
            from: String,
            to: String,
            kind: &'a MessageKind,
            real_count: usize,
        }
        for m in &self.messages {
            let line = Line {
                round: m.round,
                inner: m.inner,
                from: m.from.to_string(),
                to: m.to.to_string(),
                kind: &m.kind,
                real_count: m.payload_real_count,
            };
            serde_json::to_writer(&mut *out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// `κ₁ (3 κ₂ Σ N_j + K + 1)` for a constant number of inner rounds.
pub fn overhead_formula(kappa1: u64, kappa2: u64, cells: u64, total_users: u64) -> u64 {
    kappa1 * (3 * kappa2 * total_users + cells + 1)
}

/// Closed-form count with `κ₂` measured separately for each outer round.
pub fn overhead_closed_form(kappa2: &[usize], cells: usize, total_users: usize) -> u64 {
    kappa2
        .iter()
        .map(|&k2| overhead_formula(1, k2 as u64, cells as u64, total_users as u64))
        .sum()
}

/// Sum of payload reals over all non-initialization messages.
pub fn count_overhead(trace: &ProtocolTrace) -> Result<u64> {
    let mut total = 0u64;
    let mut last = None;
    for m in &trace.messages {
        if m.payload_real_count != m.payload.real_count() || m.kind != m.payload.kind() {
            return Err(Error::Protocol {
                round: m.round,
                reason: format!("{:?} from {} declares {} reals, payload has {}", m.kind, m.from, m.payload_real_count, m.payload.real_count()),
            });
        }
        if m.kind != MessageKind::CsiShare {
            total += m.payload_real_count as u64;
            last = Some(m);
        }
    }
    match last {
        None => Ok(0),
        Some(m) if m.kind == MessageKind::StopCommand => Ok(total),
        Some(m) => Err(Error::Protocol {
            round: m.round,
            reason: "trace ends without a stop command".into(),
        }),
    }
}

/// Message to withhold, for exercising the deadlock path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub round: usize,
    pub kind: MessageKind,
    pub from: Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsimOptions {
    pub outer: OuterOptions,
    /// Step processors on the rayon pool. Traces are identical either way.
    pub threaded: bool,
    pub fault: Option<Fault>,
}

impl ParsimOptions {
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self {
            outer: OuterOptions::for_config(cfg),
            threaded: false,
            fault: None,
        }
    }
}

#[derive(Default)]
struct Mailbox {
    log: Vec<Message>,
    /// Index of the first message not yet consumed by the current phase.
    cursor: usize,
    fault: Option<Fault>,
}

impl Mailbox {
    fn post(&mut self, m: Message) {
        if let Some(f) = self.fault {
            if f.round == m.round && f.kind == m.kind && f.from == m.from {
                return;
            }
        }
        self.log.push(m);
    }

    /// Messages of `kind` posted since the last collection, one per expected
    /// `(from, to)` pair, in the given order.
    fn collect(&mut self, round: usize, kind: MessageKind, routes: &[(Node, Node)]) -> Result<Vec<Payload>> {
        let fresh = &self.log[self.cursor..];
        let mut out = Vec::with_capacity(routes.len());
        for (from, to) in routes {
            match fresh.iter().find(|m| m.kind == kind && m.from == *from && m.to == *to && m.round == round) {
                Some(m) => out.push(m.payload.clone()),
                None => {
                    return Err(Error::Protocol {
                        round,
                        reason: format!("missing {kind:?} from {from} to {to}"),
                    })
                }
            }
        }
        self.cursor = self.log.len();
        Ok(out)
    }
}

/// The radio channel: turns every processor's transmitted beams into what
/// each user receives.
struct Air<'a> {
    h: &'a ChannelSet,
}

impl Air<'_> {
    fn measure(&self, cfg: &SystemConfig, beams: Vec<Vec<CVector>>) -> Vec<Vec<crate::model::Reception>> {
        let w = BeamformerSet { w: beams };
        (0..cfg.cells)
            .map(|j| (0..cfg.users[j]).map(|k| reception(self.h, &w, j, k)).collect())
            .collect()
    }
}

/// One cell's processor. It sees its own CSI row, the shared configuration
/// and message payloads, nothing else.
struct Processor {
    j: usize,
    csi: ChannelSet,
    w: Vec<CVector>,
    mu: Vec<Complex64>,
    s: Vec<f64>,
    certified: Option<Vec<CVector>>,
    last: Option<Vec<CVector>>,
    g_prev: Option<f64>,
    iters: usize,
}

/// What every node reconstructs from one round of cross-term reports.
struct SharedTerms {
    s: Vec<Vec<f64>>,
    mu_abs2: Vec<Vec<f64>>,
    power: Vec<Vec<f64>>,
}

impl SharedTerms {
    fn from_payloads(round: usize, payloads: &[Payload]) -> Result<Self> {
        let mut out = SharedTerms {
            s: Vec::new(),
            mu_abs2: Vec::new(),
            power: Vec::new(),
        };
        for p in payloads {
            match p {
                Payload::CrossTerms { s, mu_abs2, power } => {
                    out.s.push(s.clone());
                    out.mu_abs2.push(mu_abs2.clone());
                    out.power.push(power.clone());
                }
                other => {
                    return Err(Error::Protocol {
                        round,
                        reason: format!("expected cross terms, got {:?}", other.kind()),
                    })
                }
            }
        }
        Ok(out)
    }

    fn bs_powers(&self) -> Vec<f64> {
        self.power.iter().map(|p| p.iter().sum()).collect()
    }
}

impl Processor {
    fn new(cfg: &SystemConfig, j: usize, row: Vec<Vec<CVector>>) -> Self {
        let csi = ChannelSet {
            h: (0..cfg.cells)
                .map(|m| {
                    if m == j {
                        row.clone()
                    } else {
                        (0..cfg.cells)
                            .map(|c| vec![vec![Complex64::new(0.0, 0.0); cfg.antennas[m]]; cfg.users[c]])
                            .collect()
                    }
                })
                .collect(),
        };
        Self {
            j,
            csi,
            w: Vec::new(),
            mu: Vec::new(),
            s: Vec::new(),
            certified: None,
            last: None,
            g_prev: None,
            iters: 0,
        }
    }

    fn start_round(&mut self, cfg: &SystemConfig, init: &InitStrategy, warm_start: bool) {
        self.w = match (&self.certified, warm_start) {
            (Some(c), true) => c.clone(),
            _ => match init {
                InitStrategy::MrtFullPower => mrt_cell(cfg, &self.csi, self.j),
                InitStrategy::Random(seed) => random_cell(cfg, self.j, *seed),
                InitStrategy::Warm(w) => w.w[self.j].clone(),
            },
        };
        self.g_prev = None;
        self.iters = 0;
    }

    fn report(&mut self, cfg: &SystemConfig, own: &[crate::model::Reception]) -> Payload {
        let (mu, s): (Vec<_>, Vec<_>) = own.iter().enumerate().map(|(k, r)| user_update(r, cfg.noise[self.j][k])).unzip();
        self.mu = mu;
        self.s = s;
        Payload::CrossTerms {
            s: self.s.clone(),
            mu_abs2: self.mu.iter().map(|z| z.norm_sqr()).collect(),
            power: self.w.iter().map(|v| norm_sqr(v)).collect(),
        }
    }

    /// Same stopping rule as the centralized loop; returns whether to stop.
    fn decide(&mut self, cfg: &SystemConfig, eta: f64, shared: &SharedTerms, max_iters: usize, delta: f64) -> bool {
        let g = objective_from_terms(cfg, eta, &shared.s, &shared.power);
        let converged = self.g_prev.is_some_and(|p| (g - p).abs() <= delta);
        self.g_prev = Some(g);
        converged || self.iters >= max_iters
    }

    fn update(&mut self, cfg: &SystemConfig, eta: f64, shared: &SharedTerms, opts: &InnerOptions) -> Result<()> {
        let q = coupling(cfg, &shared.s, &shared.mu_abs2);
        self.w = update_cell(cfg, &self.csi, eta, self.j, &q, &self.mu, &self.s, opts)?.w;
        self.iters += 1;
        Ok(())
    }

    fn finish_round(&mut self, certified: bool) {
        if certified {
            self.certified = Some(self.w.clone());
        }
        self.last = Some(self.w.clone());
    }
}

fn for_each<F>(procs: &mut [Processor], threaded: bool, f: F) -> Result<()>
where
    F: Fn(&mut Processor) -> Result<()> + Sync + Send,
{
    if threaded {
        procs.par_iter_mut().try_for_each(f)
    } else {
        procs.iter_mut().try_for_each(f)
    }
}

/// Runs the protocol. In deterministic mode the report matches
/// [`crate::outer_solver::outer_solve`] exactly.
pub fn run_parallel(cfg: &SystemConfig, h: &ChannelSet, opts: &ParsimOptions) -> Result<(SolveReport, ProtocolTrace)> {
    cfg.validate()?;
    h.validate(cfg)?;
    opts.outer.validate()?;
    let inner = &opts.outer.inner;
    if inner.restarts != 1 {
        return Err(Error::Config("the protocol simulation supports a single inner start".into()));
    }
    if let InitStrategy::Warm(w) = &inner.init {
        w.validate(cfg)?;
        if !w.is_feasible(cfg, 1e-9) {
            return Err(Error::Config("warm-start beamformers violate a power budget".into()));
        }
    }
    let k = cfg.cells;
    let to_controller: Vec<(Node, Node)> = (0..k).map(|j| (Node::Processor(j), Node::Controller)).collect();
    let from_controller: Vec<(Node, Node)> = (0..k).map(|j| (Node::Controller, Node::Processor(j))).collect();
    let broadcasts: Vec<(Node, Node)> = (0..k).map(|j| (Node::Processor(j), Node::All)).collect();
    let mut mail = Mailbox {
        fault: opts.fault,
        ..Mailbox::default()
    };
    let air = Air { h };

    // Step 1: CSI distribution.
    for j in 0..k {
        mail.post(Message::new(0, None, Node::Controller, Node::Processor(j), Payload::CsiShare(h.h[j].clone())));
    }
    let mut procs = Vec::with_capacity(k);
    for (j, p) in mail.collect(0, MessageKind::CsiShare, &from_controller)?.into_iter().enumerate() {
        let Payload::CsiShare(row) = p else { unreachable!() };
        procs.push(Processor::new(cfg, j, row));
    }

    let mut bis = EtaBisection::new(eta_upper_bound(cfg, h)?, opts.outer.epsilon, opts.outer.max_iters);
    let mut kappa2 = Vec::new();
    let mut inner_iters = Vec::new();
    let mut certified_round = None;
    let mut round = 0;
    while let Some(eta) = bis.next_eta()? {
        mail.post(Message::new(round, None, Node::Controller, Node::All, Payload::Eta(eta)));
        let Payload::Eta(eta) = mail.collect(round, MessageKind::EtaBroadcast, &[(Node::Controller, Node::All)])?[0] else {
            unreachable!()
        };
        for p in procs.iter_mut() {
            p.start_round(cfg, &inner.init, opts.outer.warm_start);
        }

        let mut t = 0;
        let shared = loop {
            let received = air.measure(cfg, procs.iter().map(|p| p.w.clone()).collect());
            let reports: Vec<Payload> = if opts.threaded {
                procs.par_iter_mut().map(|p| p.report(cfg, &received[p.j])).collect()
            } else {
                procs.iter_mut().map(|p| p.report(cfg, &received[p.j])).collect()
            };
            for (j, payload) in reports.into_iter().enumerate() {
                mail.post(Message::new(round, Some(t), Node::Processor(j), Node::All, payload));
            }
            let shared = SharedTerms::from_payloads(round, &mail.collect(round, MessageKind::CrossTermReport, &broadcasts)?)?;
            t += 1;

            let stops: Vec<bool> = procs
                .iter_mut()
                .map(|p| p.decide(cfg, eta, &shared, inner.max_iters, inner.delta))
                .collect();
            if stops.iter().any(|&s| s != stops[0]) {
                return Err(Error::Protocol {
                    round,
                    reason: "processors disagree on the inner stop decision".into(),
                });
            }
            if stops[0] {
                break shared;
            }
            for_each(&mut procs, opts.threaded, |p| p.update(cfg, eta, &shared, inner))?;
        };
        kappa2.push(t);
        inner_iters.push(procs[0].iters);

        for p in &procs {
            mail.post(Message::new(round, None, Node::Processor(p.j), Node::Controller, Payload::Power(p.w.iter().map(|v| norm_sqr(v)).sum())));
        }
        let powers: Vec<f64> = mail
            .collect(round, MessageKind::PowerReport, &to_controller)?
            .iter()
            .map(|p| match p {
                Payload::Power(x) => *x,
                _ => unreachable!(),
            })
            .collect();
        let f = f_value(cfg, eta, &shared.s, &powers);
        let certified = bis.record(eta, f);
        // Processors reach the same verdict from the broadcast terms.
        let local = f_value(cfg, eta, &shared.s, &shared.bs_powers()) >= 0.0;
        if local != certified {
            return Err(Error::Protocol {
                round,
                reason: "processor and controller disagree on the certificate".into(),
            });
        }
        for p in procs.iter_mut() {
            p.finish_round(certified);
        }
        if certified {
            certified_round = Some(round);
        }
        round += 1;
    }
    let last_round = round.saturating_sub(1);
    for j in 0..k {
        mail.post(Message::new(last_round, None, Node::Controller, Node::Processor(j), Payload::Stop { certified_round }));
    }
    mail.collect(last_round, MessageKind::StopCommand, &from_controller)?;

    let w = BeamformerSet {
        w: procs
            .iter()
            .map(|p| p.certified.clone().or_else(|| p.last.clone()).unwrap_or_else(|| vec![vec![Complex64::new(0.0, 0.0); cfg.antennas[p.j]]; cfg.users[p.j]]))
            .collect(),
    };
    let report = SolveReport::from_solution(cfg, h, &bis, w, inner_iters)?;
    let init_reals = mail.log.iter().filter(|m| m.kind == MessageKind::CsiShare).map(|m| m.payload_real_count as u64).sum();
    let mut trace = ProtocolTrace {
        messages: mail.log,
        kappa1: kappa2.len(),
        kappa2,
        total_reals: 0,
        init_reals,
    };
    trace.total_reals = count_overhead(&trace)?;
    Ok((report, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::{random_instance, scalar};
    use crate::outer_solver::outer_solve;

    fn msg(round: usize, inner: Option<usize>, from: Node, payload: Payload) -> Message {
        Message::new(round, inner, from, Node::All, payload)
    }

    /// Synthetic full trace with the given κ₂ per round.
    fn synthetic(cells: usize, users: usize, kappa2: &[usize]) -> ProtocolTrace {
        let mut messages = vec![msg(0, None, Node::Controller, Payload::CsiShare(vec![vec![vec![Complex64::new(1.0, 0.0)]]]))];
        for (r, &k2) in kappa2.iter().enumerate() {
            messages.push(msg(r, None, Node::Controller, Payload::Eta(0.1)));
            for t in 0..k2 {
                for j in 0..cells {
                    let v = vec![0.0; users];
                    messages.push(msg(r, Some(t), Node::Processor(j), Payload::CrossTerms { s: v.clone(), mu_abs2: v.clone(), power: v }));
                }
            }
            for j in 0..cells {
                messages.push(msg(r, None, Node::Processor(j), Payload::Power(1.0)));
            }
        }
        messages.push(msg(kappa2.len() - 1, None, Node::Controller, Payload::Stop { certified_round: None }));
        ProtocolTrace {
            messages,
            kappa1: kappa2.len(),
            kappa2: kappa2.to_vec(),
            total_reals: 0,
            init_reals: 2,
        }
    }

    #[test]
    fn overhead_reference_values() {
        assert_eq!(overhead_formula(2, 5, 3, 3), 98);
        assert_eq!(overhead_formula(1, 1, 3, 3), 13);
        assert_eq!(count_overhead(&synthetic(3, 1, &[5, 5])).unwrap(), 98);
        assert_eq!(count_overhead(&synthetic(3, 1, &[1])).unwrap(), 13);
    }

    #[test]
    fn empty_and_incomplete_traces() {
        let mut t = synthetic(3, 1, &[1]);
        t.messages.truncate(1);
        assert_eq!(count_overhead(&t).unwrap(), 0);
        let mut t = synthetic(3, 1, &[2]);
        t.messages.pop();
        assert!(matches!(count_overhead(&t), Err(Error::Protocol { .. })));
        let mut t = synthetic(3, 1, &[2]);
        t.messages[1].payload_real_count = 7;
        assert!(matches!(count_overhead(&t), Err(Error::Protocol { .. })));
    }

    #[test]
    fn single_cell_matches_centralized() {
        let (cfg, h) = scalar(1, 1.3, 1.0, 4.0, 0.5, 0.5);
        let opts = ParsimOptions::for_config(&cfg);
        let (rep, trace) = run_parallel(&cfg, &h, &opts).unwrap();
        assert_eq!(rep, outer_solve(&cfg, &h, &opts.outer).unwrap());
        let kinds: std::collections::HashSet<_> = trace.messages.iter().map(|m| m.kind).collect();
        assert!(kinds.contains(&MessageKind::StopCommand));
        assert_eq!(trace.total_reals, overhead_closed_form(&trace.kappa2, 1, 1));
    }

    #[test]
    fn multicell_matches_centralized_and_formula() {
        for seed in 0..3 {
            let (cfg, h) = random_instance(50 + seed, 3, 2, 2, 2.0);
            let opts = ParsimOptions::for_config(&cfg);
            let (rep, trace) = run_parallel(&cfg, &h, &opts).unwrap();
            assert_eq!(rep, outer_solve(&cfg, &h, &opts.outer).unwrap());
            assert_eq!(count_overhead(&trace).unwrap(), overhead_closed_form(&trace.kappa2, 3, 6));
            assert_eq!(trace.kappa1, rep.outer_iters);
            let threaded = ParsimOptions { threaded: true, ..opts };
            let (rep2, trace2) = run_parallel(&cfg, &h, &threaded).unwrap();
            assert_eq!(rep, rep2);
            assert_eq!(trace, trace2);
        }
    }

    #[test]
    fn missing_message_names_round() {
        let (cfg, h) = random_instance(7, 2, 2, 1, 2.0);
        let opts = ParsimOptions {
            fault: Some(Fault {
                round: 2,
                kind: MessageKind::PowerReport,
                from: Node::Processor(1),
            }),
            ..ParsimOptions::for_config(&cfg)
        };
        match run_parallel(&cfg, &h, &opts) {
            Err(Error::Protocol { round, reason }) => {
                assert_eq!(round, 2);
                assert!(reason.contains("processor:1"));
            }
            other => panic!("expected protocol error, got {other:?}"),
        }
    }

    #[test]
    fn trace_jsonl_export() {
        let (cfg, h) = random_instance(8, 2, 2, 1, 2.0);
        let (_, trace) = run_parallel(&cfg, &h, &ParsimOptions::for_config(&cfg)).unwrap();
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), trace.messages.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["round", "from", "to", "kind", "real_count"] {
            assert!(first.get(key).is_some());
        }
    }
}
