//! ExtPub, ExtPri and GE-QR over the scheduler.

use super::config::{Groups, NetworkConfig, Partition, ProtocolKind};
use super::gadgets::{ExtPubGadgets, GeqrGadgets};
use super::model::{Draw, SourceModel};
use super::sched::{Adversary, Event, ProtocolRun, Scheduler, SideInfo};
use crate::bits::BitString;
use crate::error::{invalid, Error, Result};

/// Interactive rounds of ExtPub.
pub const EXT_PUB_ROUNDS: u32 = 3;

fn sent_in(events: &[Event], round: u32, sender: usize) -> Option<BitString> {
    events.iter().find(|e| e.round == round && e.sender == sender).map(|e| e.msg)
}

/// ExtPub state after round 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtPubRun {
    pub run: ProtocolRun,
    pub partition: Partition,
    /// `s_v` for every left vertex of `G`, from the round-1 transcript.
    pub s: Vec<BitString>,
    /// Left vertices of `G` whose neighbors are all honest in round 1.
    pub good_v: Vec<u32>,
    /// Honest `j ∈ B` with an `H`-neighbor in `good_v`.
    pub good_b: Vec<usize>,
    /// Committed `y¹_j`, `y²_j` in `B` order.
    pub y1: Vec<BitString>,
    pub y2: Vec<BitString>,
    pub slice: u32,
}

impl ExtPubRun {
    /// `2·|B|·⌊√k⌋`.
    pub fn y_width(&self) -> u32 {
        2 * self.partition.b.len() as u32 * self.slice
    }

    /// `y = (y¹, y²)`, first slice most significant.
    pub fn y(&self) -> Result<BitString> {
        let parts: Vec<BitString> = self.y1.iter().chain(&self.y2).copied().collect();
        BitString::concat_all(&parts)
    }

    /// `y` with both slices of `B`-position `pos` zeroed.
    pub fn y_without(&self, pos: usize) -> Result<BitString> {
        let zero = BitString::zeros(self.slice)?;
        let parts: Vec<BitString> = (0..2)
            .flat_map(|half| {
                let v = if half == 0 { &self.y1 } else { &self.y2 };
                v.iter().enumerate().map(move |(i, &s)| if i == pos { zero } else { s })
            })
            .collect();
        BitString::concat_all(&parts)
    }

    /// `(y¹_j, y²_j)` of `B`-position `pos` as one word.
    pub fn y_j(&self, pos: usize) -> Result<BitString> {
        self.y1[pos].concat(&self.y2[pos])
    }

    /// Round-1 messages of `A`, in `A` order.
    pub fn t1(&self) -> Vec<BitString> {
        self.run.round_events(1).map(|e| e.msg).collect()
    }
}

fn side<'a>(draw: &'a Draw, widths: &'a [u32]) -> SideInfo<'a> {
    SideInfo { values: &draw.e, widths }
}

/// Rounds 1–3 of ExtPub.
pub fn run_ext_pub(cfg: &NetworkConfig, gadgets: &ExtPubGadgets, model: &SourceModel, draw: &Draw, adv: &mut Adversary, seed: u64) -> Result<ExtPubRun> {
    let partition = cfg.partition()?;
    if model.players() != cfg.p || draw.x.len() != cfg.p {
        return invalid(format!("{} sources for {} players", draw.x.len(), cfg.p));
    }
    let (n, slice) = (cfg.n, cfg.slice_width());
    if gadgets.srext.out_width != 2 * slice {
        return invalid(format!("SRExt output {} is not 2·⌊√k⌋ = {}", gadgets.srext.out_width, 2 * slice));
    }
    let leak_widths = model.leak_widths();
    let mut sched = Scheduler::new(cfg.p, cfg.t, adv, side(draw, &leak_widths), seed);

    sched.round(&partition.a, |i, _| BitString::new(n, draw.x[i]))?;
    let events = sched.events().to_vec();
    let xa: Vec<u32> = partition.a.iter().map(|&i| sent_in(&events, 1, i).expect("A committed").value()).collect();
    let faulty_a: Vec<usize> = events.iter().filter(|e| e.faulty).map(|e| e.sender).collect();
    let g = &gadgets.disperser;
    let s: Vec<BitString> = (0..g.left())
        .map(|v| {
            let inputs: Vec<u32> = g.neighbors(v).iter().map(|&r| xa[r as usize]).collect();
            BitString::new(gadgets.iext.out_width, gadgets.iext.eval_raw(&inputs))
        })
        .collect::<Result<_>>()?;
    let good_v: Vec<u32> = (0..g.left()).filter(|&v| g.neighbors(v).iter().all(|&r| !faulty_a.contains(&partition.a[r as usize]))).collect();
    if gadgets.disperser_applies(cfg) && good_v.is_empty() {
        return Err(Error::Format(format!("good set V is empty with {} faulty A-players", faulty_a.len())));
    }

    let h = &gadgets.expander;
    let mut y_full = Vec::with_capacity(partition.b.len());
    for (pos, &j) in partition.b.iter().enumerate() {
        let seed_parts: Vec<BitString> = h.neighbors(pos as u32).iter().map(|&v| s[v as usize]).collect();
        let sj = BitString::concat_all(&seed_parts)?;
        y_full.push(gadgets.srext.eval(&[BitString::new(n, draw.x[j])?, sj])?);
    }
    let pos_of = |j: usize| partition.b.iter().position(|&b| b == j).expect("sender in B");
    let y1 = sched.round(&partition.b, |j, _| y_full[pos_of(j)].prefix(slice))?;
    let y2 = sched.round(&partition.b, |j, _| y_full[pos_of(j)].slice(slice + 1, slice))?;

    let run = sched.finish(seed, vec![None; cfg.p]);
    let good_b = partition
        .b
        .iter()
        .enumerate()
        .filter(|&(pos, &j)| !run.is_faulty(j) && h.neighbors(pos as u32).iter().any(|v| good_v.contains(v)))
        .map(|(_, &j)| j)
        .collect();
    Ok(ExtPubRun { run, partition, s, good_v, good_b, y1, y2, slice })
}

/// The local ExtPri step: honest `i ∈ C` outputs `OAExt(x_i, y)`; honest
/// `j ∈ B` outputs `OAExt(x_j, y_{−j})`, where `y_{−j}` holds zeros in `j`'s
/// slices. Everyone else outputs ⊥.
pub fn run_ext_pri(cfg: &NetworkConfig, gadgets: &ExtPubGadgets, pub_run: &mut ExtPubRun, draw: &Draw) -> Result<()> {
    let oa = &gadgets.oaext;
    let yw = pub_run.y_width();
    if oa.input_widths != [cfg.n, yw] {
        return invalid(format!("OAExt takes {:?}, protocol supplies [{}, {yw}]", oa.input_widths, cfg.n));
    }
    let y = pub_run.y()?;
    let mut outputs = vec![None; cfg.p];
    for &i in &pub_run.partition.c {
        if !pub_run.run.is_faulty(i) {
            outputs[i] = Some(oa.eval(&[BitString::new(cfg.n, draw.x[i])?, y])?);
        }
    }
    for (pos, &j) in pub_run.partition.b.iter().enumerate() {
        if !pub_run.run.is_faulty(j) {
            outputs[j] = Some(oa.eval(&[BitString::new(cfg.n, draw.x[j])?, pub_run.y_without(pos)?])?);
        }
    }
    pub_run.run.outputs = outputs;
    pub_run.run.local_steps = 1;
    Ok(())
}

/// ExtPub then ExtPri.
pub fn run_ext_net(cfg: &NetworkConfig, gadgets: &ExtPubGadgets, model: &SourceModel, draw: &Draw, adv: &mut Adversary, seed: u64) -> Result<ExtPubRun> {
    let mut r = run_ext_pub(cfg, gadgets, model, draw, adv, seed)?;
    run_ext_pri(cfg, gadgets, &mut r, draw)?;
    Ok(r)
}

/// A completed GE-QR run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeqrRun {
    pub run: ProtocolRun,
    pub groups: Groups,
    /// `(y_1, …, y_s)`.
    pub y: BitString,
    /// Bits of `y` from groups with a faulty member.
    pub rushed_bits: u32,
}

/// One round: groups publish their sources, `y_i` is the first `⌊k/s⌋` bits
/// of IExt over group `i`, honest `i ∈ B` output `QTExt(x_i, y)`.
pub fn run_geqr(cfg: &NetworkConfig, gadgets: &GeqrGadgets, model: &SourceModel, draw: &Draw, adv: &mut Adversary, seed: u64) -> Result<GeqrRun> {
    if cfg.protocol != ProtocolKind::Geqr {
        return Err(Error::Config("run_geqr needs protocol = geqr".into()));
    }
    let groups = cfg.groups()?;
    if draw.x.len() != cfg.p {
        return invalid(format!("{} sources for {} players", draw.x.len(), cfg.p));
    }
    let w = cfg.group_seed_width()?;
    if gadgets.iext.out_width < w {
        return invalid(format!("IExt output {} shorter than ⌊k/s⌋ = {w}", gadgets.iext.out_width));
    }
    let leak_widths = model.leak_widths();
    let mut sched = Scheduler::new(cfg.p, cfg.t, adv, side(draw, &leak_widths), seed);
    let senders: Vec<usize> = groups.groups.iter().flatten().copied().collect();
    sched.round(&senders, |i, _| BitString::new(cfg.n, draw.x[i]))?;
    let events = sched.events().to_vec();
    let mut parts = Vec::with_capacity(groups.groups.len());
    let mut rushed_bits = 0;
    for g in &groups.groups {
        let inputs: Vec<u32> = g.iter().map(|&i| sent_in(&events, 1, i).expect("group member committed").value()).collect();
        let full = BitString::new(gadgets.iext.out_width, gadgets.iext.eval_raw(&inputs))?;
        parts.push(full.prefix(w)?);
        if g.iter().any(|&i| sched.is_faulty(i)) {
            rushed_bits += w;
        }
    }
    let bound = w * cfg.t as u32;
    if rushed_bits > bound {
        return Err(Error::Format(format!("rushed {rushed_bits} bits of y, above ⌊k/s⌋·t = {bound}")));
    }
    let y = BitString::concat_all(&parts)?;
    let mut outputs = vec![None; cfg.p];
    for &i in &groups.b {
        if !sched.is_faulty(i) {
            outputs[i] = Some(gadgets.qtext.eval(&[BitString::new(cfg.n, draw.x[i])?, y])?);
        }
    }
    let run = sched.finish(seed, outputs);
    Ok(GeqrRun { run, groups, y, rushed_bits })
}
