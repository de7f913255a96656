use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::shamir::{reconstruct, share, Share};
use super::PrimeField;
use crate::{seed, Error, Result};

/// Protocol phases, in the order a session walks through them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Share,
    Mask,
    Aggregate,
    Unmask,
    Done,
}

/// Which of a participant's seeds a share belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    /// The seeds of the masks shared with every other participant.
    Pairwise,
    /// The participant's own self-mask seed.
    SelfMask,
}

/// One logged message of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub phase: Phase,
    pub from: Option<u64>,
    pub to: Option<u64>,
    pub message: String,
    pub field_elements: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone)]
struct HeldShares {
    self_share: Share,
    pair_shares: BTreeMap<u64, Share>,
}

/// One round of masked aggregation among a fixed participant set.
///
/// Key agreement is simulated: the seed of each unordered pair and each
/// self-mask seed are derived from the session seed. Every participant
/// Shamir-shares all of its seeds with the others, so the server can
/// remove the masks of dropped participants (from their pairwise seeds) and
/// of survivors (from their self seeds) once at least `t` participants
/// answer. Masks are expanded from seeds with ChaCha20.
#[derive(Debug, Clone)]
pub struct SecAggSession {
    field: PrimeField,
    ids: Vec<u64>,
    threshold: usize,
    pair_seeds: BTreeMap<(u64, u64), u64>,
    self_seeds: BTreeMap<u64, u64>,
    /// holder → owner → shares of the owner's seeds.
    held: BTreeMap<u64, BTreeMap<u64, HeldShares>>,
    revealed: BTreeMap<(u64, u64), SeedKind>,
    survivors: Option<BTreeSet<u64>>,
    masked: BTreeMap<u64, Vec<u64>>,
    vector_len: Option<usize>,
    phase: Phase,
    transcript: Vec<TranscriptEvent>,
}

/// `⌈2n/3⌉`.
pub fn default_threshold(n: usize) -> usize {
    (2 * n).div_ceil(3).max(1)
}

fn pair(a: u64, b: u64) -> (u64, u64) {
    (a.min(b), a.max(b))
}

/// Expand `seed` into `len` uniform field elements (ChaCha20 stream with
/// rejection sampling).
pub fn expand_mask(field: &PrimeField, seed: u64, len: usize) -> Vec<u64> {
    let p = field.modulus();
    let bits = 64 - p.leading_zeros();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let v = rng.next_u64() >> (64 - bits);
        if v < p {
            out.push(v);
        }
    }
    out
}

impl SecAggSession {
    /// Set up the session and run the sharing phase.
    pub fn new(ids: &[u64], threshold: usize, field: PrimeField, session_seed: u64) -> Result<Self> {
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ids.len() {
            return Err(Error::Protocol("duplicate participant id".into()));
        }
        let n = sorted.len();
        if n == 0 || threshold == 0 || threshold > n {
            return Err(Error::Field(format!(
                "threshold {threshold} invalid for {n} participants"
            )));
        }
        let p = field.modulus();
        let mut pair_seeds = BTreeMap::new();
        for (i, &a) in sorted.iter().enumerate() {
            for &b in &sorted[i + 1..] {
                let s = seed::derive(seed::derive(session_seed, "secagg-pair", a), "peer", b);
                pair_seeds.insert((a, b), s % p);
            }
        }
        let self_seeds: BTreeMap<u64, u64> = sorted
            .iter()
            .map(|&id| (id, seed::derive(session_seed, "secagg-self", id) % p))
            .collect();

        let mut session = SecAggSession {
            field,
            ids: sorted,
            threshold,
            pair_seeds,
            self_seeds,
            held: BTreeMap::new(),
            revealed: BTreeMap::new(),
            survivors: None,
            masked: BTreeMap::new(),
            vector_len: None,
            phase: Phase::Share,
            transcript: Vec::new(),
        };
        session.share_phase(session_seed)?;
        Ok(session)
    }

    fn share_phase(&mut self, session_seed: u64) -> Result<()> {
        let n = self.ids.len();
        for &owner in &self.ids.clone() {
            let mut rng = seed::child_rng(session_seed, "secagg-share", owner);
            let self_shares = share(&self.field, self.self_seeds[&owner], n, self.threshold, &mut rng)?;
            let mut pair_shares: BTreeMap<u64, Vec<Share>> = BTreeMap::new();
            for &other in self.ids.iter().filter(|&&o| o != owner) {
                let secret = self.pair_seeds[&pair(owner, other)];
                pair_shares.insert(other, share(&self.field, secret, n, self.threshold, &mut rng)?);
            }
            for (j, holder) in self.ids.clone().into_iter().enumerate() {
                let bundle = HeldShares {
                    self_share: self_shares[j],
                    pair_shares: pair_shares.iter().map(|(&o, s)| (o, s[j])).collect(),
                };
                self.held.entry(holder).or_default().insert(owner, bundle);
                self.log(Phase::Share, Some(owner), Some(holder), "seed shares", n);
            }
        }
        self.phase = Phase::Mask;
        Ok(())
    }

    fn log(&mut self, phase: Phase, from: Option<u64>, to: Option<u64>, message: &str, elements: usize) {
        self.transcript.push(TranscriptEvent {
            phase,
            from,
            to,
            message: message.into(),
            field_elements: elements,
            bytes: elements * 8,
        });
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn participants(&self) -> &[u64] {
        &self.ids
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn transcript(&self) -> &[TranscriptEvent] {
        &self.transcript
    }

    fn check_member(&self, id: u64) -> Result<()> {
        if self.self_seeds.contains_key(&id) {
            Ok(())
        } else {
            Err(Error::Protocol(format!("{id} is not a participant")))
        }
    }

    /// Participant side: add the self mask and the signed pairwise masks
    /// (`+` towards larger ids, `−` towards smaller ones).
    pub fn mask_input(&mut self, id: u64, input: &[u64]) -> Result<Vec<u64>> {
        self.check_member(id)?;
        if self.phase != Phase::Mask {
            return Err(Error::Protocol(format!("masking during {:?}", self.phase)));
        }
        if input.iter().any(|&v| v >= self.field.modulus()) {
            return Err(Error::Field("input element outside the field".into()));
        }
        let len = input.len();
        let mut y = input.to_vec();
        self.field
            .add_assign(&mut y, &expand_mask(&self.field, self.self_seeds[&id], len));
        for &other in self.ids.iter().filter(|&&o| o != id) {
            let mask = expand_mask(&self.field, self.pair_seeds[&pair(id, other)], len);
            if id < other {
                self.field.add_assign(&mut y, &mask);
            } else {
                self.field.sub_assign(&mut y, &mask);
            }
        }
        Ok(y)
    }

    /// Server side: receive one masked vector.
    pub fn submit(&mut self, id: u64, masked: Vec<u64>) -> Result<()> {
        self.check_member(id)?;
        if self.phase != Phase::Mask {
            return Err(Error::Protocol(format!("submission during {:?}", self.phase)));
        }
        if self.masked.contains_key(&id) {
            return Err(Error::Protocol(format!("{id} submitted twice")));
        }
        match self.vector_len {
            Some(len) if len != masked.len() => {
                return Err(Error::Protocol(format!(
                    "vector of length {} from {id}, expected {len}",
                    masked.len()
                )))
            }
            _ => self.vector_len = Some(masked.len()),
        }
        self.log(Phase::Mask, Some(id), None, "masked input", masked.len());
        self.masked.insert(id, masked);
        Ok(())
    }

    /// Server side: close the collection and announce who survived.
    pub fn close_collection(&mut self) -> Result<BTreeSet<u64>> {
        if self.phase != Phase::Mask {
            return Err(Error::Protocol(format!("aggregation during {:?}", self.phase)));
        }
        self.phase = Phase::Aggregate;
        let survivors: BTreeSet<u64> = self.masked.keys().copied().collect();
        if survivors.len() < self.threshold {
            self.phase = Phase::Done;
            return Err(Error::Abort(format!(
                "{} survivors, threshold {}",
                survivors.len(),
                self.threshold
            )));
        }
        self.survivors = Some(survivors.clone());
        Ok(survivors)
    }

    /// Holder side: reveal its share of `owner`'s seeds of the given kind.
    /// Honest holders reveal self-mask shares only for survivors, pairwise
    /// shares only for dropouts, and never both kinds for one owner.
    pub fn reveal(&mut self, holder: u64, owner: u64, kind: SeedKind) -> Result<Vec<(u64, Share)>> {
        self.check_member(holder)?;
        self.check_member(owner)?;
        if !matches!(self.phase, Phase::Aggregate | Phase::Unmask) {
            return Err(Error::Protocol(format!("unmasking during {:?}", self.phase)));
        }
        let survivors = self.survivors.as_ref().expect("set when collection closed");
        if !survivors.contains(&holder) {
            return Err(Error::Protocol(format!("{holder} dropped out")));
        }
        if let Some(&prev) = self.revealed.get(&(holder, owner)) {
            if prev != kind {
                return Err(Error::Protocol(format!(
                    "both seed kinds requested for participant {owner}"
                )));
            }
        }
        let owner_survived = survivors.contains(&owner);
        match kind {
            SeedKind::SelfMask if !owner_survived => {
                return Err(Error::Protocol(format!(
                    "self-mask shares requested for dropped participant {owner}"
                )))
            }
            SeedKind::Pairwise if owner_survived => {
                return Err(Error::Protocol(format!(
                    "pairwise shares requested for surviving participant {owner}"
                )))
            }
            _ => {}
        }
        self.revealed.insert((holder, owner), kind);
        self.phase = Phase::Unmask;
        let bundle = &self.held[&holder][&owner];
        let out: Vec<(u64, Share)> = match kind {
            SeedKind::SelfMask => vec![(owner, bundle.self_share)],
            SeedKind::Pairwise => bundle.pair_shares.iter().map(|(&o, &s)| (o, s)).collect(),
        };
        self.log(Phase::Unmask, Some(holder), None, "revealed shares", out.len());
        Ok(out)
    }

    /// Server side: collect shares from every survivor, rebuild the seeds
    /// and strip all masks from the sum of the submitted vectors.
    pub fn unmask(&mut self) -> Result<Vec<u64>> {
        let survivors = match self.phase {
            Phase::Mask => self.close_collection()?,
            Phase::Aggregate => self.survivors.clone().expect("announced"),
            other => return Err(Error::Protocol(format!("unmask during {other:?}"))),
        };
        let len = self.vector_len.unwrap_or(0);
        let mut sum = vec![0u64; len];
        for v in self.masked.values() {
            self.field.add_assign(&mut sum, v);
        }
        let dropouts: Vec<u64> = self
            .ids
            .iter()
            .copied()
            .filter(|id| !survivors.contains(id))
            .collect();

        for &u in &dropouts {
            let mut per_peer: BTreeMap<u64, Vec<Share>> = BTreeMap::new();
            for &h in &survivors {
                for (peer, s) in self.reveal(h, u, SeedKind::Pairwise)? {
                    per_peer.entry(peer).or_default().push(s);
                }
            }
            for &v in &survivors {
                let seed = reconstruct(&self.field, &per_peer[&v], self.threshold)?;
                let mask = expand_mask(&self.field, seed, len);
                // Survivor v added +mask if v < u, −mask otherwise.
                if v < u {
                    self.field.sub_assign(&mut sum, &mask);
                } else {
                    self.field.add_assign(&mut sum, &mask);
                }
            }
        }
        for &v in &survivors {
            let mut shares = Vec::with_capacity(survivors.len());
            for &h in &survivors {
                shares.extend(self.reveal(h, v, SeedKind::SelfMask)?.into_iter().map(|(_, s)| s));
            }
            let seed = reconstruct(&self.field, &shares, self.threshold)?;
            self.field
                .sub_assign(&mut sum, &expand_mask(&self.field, seed, len));
        }
        self.phase = Phase::Done;
        self.log(Phase::Done, None, None, "aggregate", len);
        Ok(sum)
    }

    /// Write the transcript as JSON lines.
    pub fn write_transcript<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.transcript {
            serde_json::to_writer(&mut w, e)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Run masking, collection and unmasking for one round. Participants in
/// `dropouts` go silent after the sharing phase; every other participant
/// must have an entry in `inputs`. Returns the field sum of the survivors'
/// inputs.
pub fn run_secagg_round(
    session: &mut SecAggSession,
    inputs: &BTreeMap<u64, Vec<u64>>,
    dropouts: &BTreeSet<u64>,
) -> Result<Vec<u64>> {
    for id in session.participants().to_vec() {
        if dropouts.contains(&id) {
            continue;
        }
        let input = inputs
            .get(&id)
            .ok_or_else(|| Error::Protocol(format!("no input for participant {id}")))?;
        let masked = session.mask_input(id, input)?;
        session.submit(id, masked)?;
    }
    session.unmask()
}
