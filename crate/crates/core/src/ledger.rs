//! Hash-chained permissioned ledger of training rounds.
//!
//! Each committed round becomes a block holding one record per submitted
//! update (accepted or rejected) plus a digest of the aggregate the round
//! produced. Blocks bind to their predecessor through a SHA-256 hash of a
//! canonical byte encoding, so any post-hoc edit of a committed block is
//! detectable by re-walking the chain. Model weights stay off-chain in a
//! content-addressed archive keyed by digest; the chain stores digests
//! only, which keeps blocks far under the size cap.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::codec::{ByteReader, ByteWriter};
use crate::contract::Verdict;
use crate::error::{Error, Result};
use crate::model::{LocalUpdate, ModelWeights};
use crate::transport::UpdateEncoding;
use crate::Scalar;

/// Version byte leading every canonical encoding.
pub const ENCODING_VERSION: u8 = 1;
/// Artifact tags keep digests of different payload kinds disjoint.
const TYPE_WEIGHTS: u8 = 1;
const TYPE_UPDATE: u8 = 2;
const TYPE_BLOCK: u8 = 3;

/// The genesis block links to an all-zero digest.
pub const GENESIS_PREV_HASH: [u8; 32] = [0u8; 32];

/// Default block size cap: 2 MiB.
pub const DEFAULT_MAX_BLOCK_BYTES: u64 = 2 * 1024 * 1024;

/// One node's submission as recorded on-chain: the weight digest pointing
/// into the archive, the self-reported anomaly score, the validation
/// verdict, and the wire bytes the submission cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRecord {
    pub node_id: u32,
    pub weights_digest: [u8; 32],
    pub anomaly_score: f64,
    pub verdict: Verdict,
    pub payload_bytes: u64,
}

/// One committed round.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    height: u64,
    prev_hash: [u8; 32],
    timestamp: u64,
    records: Vec<LedgerRecord>,
    aggregate_digest: [u8; 32],
    size_bytes: u64,
}

impl Block {
    /// Assembles a block, sorting records by node id, and fails on
    /// duplicate node ids, out-of-range anomaly scores, or a canonical
    /// encoding larger than `max_bytes`.
    pub fn build(
        height: u64,
        prev_hash: [u8; 32],
        timestamp: u64,
        mut records: Vec<LedgerRecord>,
        aggregate_digest: [u8; 32],
        max_bytes: u64,
    ) -> Result<Self> {
        records.sort_by_key(|r| r.node_id);
        for pair in records.windows(2) {
            if pair[0].node_id == pair[1].node_id {
                return Err(Error::DuplicateNode(pair[0].node_id));
            }
        }
        for r in &records {
            if !(r.anomaly_score.is_finite() && (0.0..=1.0).contains(&r.anomaly_score)) {
                return Err(Error::InvalidParameter(format!(
                    "record for node {} carries anomaly score {} outside [0, 1]",
                    r.node_id, r.anomaly_score
                )));
            }
        }
        let mut block = Self {
            height,
            prev_hash,
            timestamp,
            records,
            aggregate_digest,
            size_bytes: 0,
        };
        block.size_bytes = canonical_encode(&block).len() as u64;
        if block.size_bytes > max_bytes {
            return Err(Error::BlockOversize {
                size: block.size_bytes,
                cap: max_bytes,
            });
        }
        Ok(block)
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn prev_hash(&self) -> &[u8; 32] {
        &self.prev_hash
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn aggregate_digest(&self) -> &[u8; 32] {
        &self.aggregate_digest
    }

    /// Length of the canonical encoding, fixed at build time.
    pub fn size_bytes(&self) -> u64 {
        self.size_bytes
    }

    /// First internal inconsistency a validator can spot without chain
    /// context, if any: stale size, unsorted records, bad scores.
    pub fn integrity_violation(&self) -> Option<String> {
        if self.size_bytes != canonical_encode(self).len() as u64 {
            return Some("size does not match canonical encoding".into());
        }
        for pair in self.records.windows(2) {
            if pair[0].node_id >= pair[1].node_id {
                return Some(format!(
                    "records out of order at node id {}",
                    pair[1].node_id
                ));
            }
        }
        for r in &self.records {
            if !(r.anomaly_score.is_finite() && (0.0..=1.0).contains(&r.anomaly_score)) {
                return Some(format!(
                    "record for node {} carries an out-of-range anomaly score",
                    r.node_id
                ));
            }
        }
        None
    }
}

/// Canonical byte encoding of a block. Fixed field order: version, type
/// tag, height, previous hash, timestamp, aggregate digest, record count,
/// then per record node id, weight digest, anomaly score, decision byte,
/// reason byte, payload bytes. The derived `size_bytes` field is the
/// length of this encoding and is not itself encoded.
pub fn canonical_encode(block: &Block) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.put_u8(ENCODING_VERSION);
    w.put_u8(TYPE_BLOCK);
    w.put_u64(block.height);
    w.put_digest(&block.prev_hash);
    w.put_u64(block.timestamp);
    w.put_digest(&block.aggregate_digest);
    w.put_u32(block.records.len() as u32);
    for r in &block.records {
        w.put_u32(r.node_id);
        w.put_digest(&r.weights_digest);
        w.put_f64(r.anomaly_score);
        w.put_u8(r.verdict.decision_byte());
        w.put_u8(r.verdict.reason_byte());
        w.put_u64(r.payload_bytes);
    }
    w.into_bytes()
}

/// Inverse of [`canonical_encode`].
pub fn decode_block(bytes: &[u8]) -> Result<Block> {
    let mut r = ByteReader::new(bytes);
    let version = r.take_u8("version")?;
    if version != ENCODING_VERSION {
        return Err(Error::Decode {
            offset: 0,
            message: format!("unsupported encoding version {version}"),
        });
    }
    let tag = r.take_u8("type tag")?;
    if tag != TYPE_BLOCK {
        return Err(Error::Decode {
            offset: 1,
            message: format!("expected block tag, got {tag}"),
        });
    }
    let height = r.take_u64("height")?;
    let prev_hash = r.take_digest("previous hash")?;
    let timestamp = r.take_u64("timestamp")?;
    let aggregate_digest = r.take_digest("aggregate digest")?;
    let count = r.take_u32("record count")?;
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let node_id = r.take_u32("record node id")?;
        let weights_digest = r.take_digest("record weight digest")?;
        let anomaly_score = r.take_f64("record anomaly score")?;
        let decision = r.take_u8("record decision")?;
        let reason = r.take_u8("record reason")?;
        let payload_bytes = r.take_u64("record payload bytes")?;
        records.push(LedgerRecord {
            node_id,
            weights_digest,
            anomaly_score,
            verdict: Verdict::from_bytes(decision, reason)?,
            payload_bytes,
        });
    }
    r.expect_end()?;
    let size_bytes = bytes.len() as u64;
    Ok(Block {
        height,
        prev_hash,
        timestamp,
        records,
        aggregate_digest,
        size_bytes,
    })
}

/// SHA-256 over the canonical encoding.
pub fn block_hash(block: &Block) -> [u8; 32] {
    sha256(&canonical_encode(block))
}

pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().into()
}

/// Gas charged for a block: `gas_per_byte * size`.
pub fn gas_cost(block: &Block, gas_per_byte: f64) -> f64 {
    size_gas(block.size_bytes, gas_per_byte)
}

pub fn size_gas(size_bytes: u64, gas_per_byte: f64) -> f64 {
    gas_per_byte * size_bytes as f64
}

/// Canonical encoding of a weight vector (widened to 64-bit reals).
pub fn encode_weights<S: Scalar>(weights: &ModelWeights<S>) -> Vec<u8> {
    encode_weights_raw(&weights.vector().to_f64_vec())
}

fn encode_weights_raw(values: &[f64]) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.put_u8(ENCODING_VERSION);
    w.put_u8(TYPE_WEIGHTS);
    w.put_u32(values.len() as u32);
    for v in values {
        w.put_f64(*v);
    }
    w.into_bytes()
}

/// Content address of a weight vector: SHA-256 of its canonical encoding.
pub fn weights_digest<S: Scalar>(weights: &ModelWeights<S>) -> [u8; 32] {
    sha256(&encode_weights(weights))
}

/// Canonical encoding of a full update for the off-chain archive.
pub fn encode_update<S: Scalar>(update: &LocalUpdate<S>) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.put_u8(ENCODING_VERSION);
    w.put_u8(TYPE_UPDATE);
    w.put_u32(update.node_id);
    w.put_u32(update.round_index);
    w.put_f64(update.anomaly_score.as_f64());
    w.put_u8(match update.payload {
        UpdateEncoding::Dense { .. } => 0,
        UpdateEncoding::Sparse { .. } => 1,
    });
    w.put_u64(update.payload.payload_bytes());
    let values = update.weights.vector().to_f64_vec();
    w.put_u32(values.len() as u32);
    for v in &values {
        w.put_f64(*v);
    }
    w.into_bytes()
}

/// An archive entry decoded back to plain fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchivedUpdate {
    pub node_id: u32,
    pub round_index: u32,
    pub anomaly_score: f64,
    pub sparse_payload: bool,
    pub payload_bytes: u64,
    pub weights: Vec<f64>,
}

pub fn decode_update(bytes: &[u8]) -> Result<ArchivedUpdate> {
    let mut r = ByteReader::new(bytes);
    let version = r.take_u8("version")?;
    if version != ENCODING_VERSION {
        return Err(Error::Decode {
            offset: 0,
            message: format!("unsupported encoding version {version}"),
        });
    }
    let tag = r.take_u8("type tag")?;
    if tag != TYPE_UPDATE {
        return Err(Error::Decode {
            offset: 1,
            message: format!("expected update tag, got {tag}"),
        });
    }
    let node_id = r.take_u32("node id")?;
    let round_index = r.take_u32("round index")?;
    let anomaly_score = r.take_f64("anomaly score")?;
    let sparse_payload = match r.take_u8("payload kind")? {
        0 => false,
        1 => true,
        other => {
            return Err(Error::Decode {
                offset: r.offset() - 1,
                message: format!("unknown payload kind {other}"),
            })
        }
    };
    let payload_bytes = r.take_u64("payload bytes")?;
    let dim = r.take_u32("weight dimension")?;
    let mut weights = Vec::with_capacity(dim as usize);
    for _ in 0..dim {
        weights.push(r.take_f64("weight")?);
    }
    r.expect_end()?;
    Ok(ArchivedUpdate {
        node_id,
        round_index,
        anomaly_score,
        sparse_payload,
        payload_bytes,
        weights,
    })
}

/// Content-addressed store of full updates, keyed by weight digest. The
/// chain stores only digests; this sidecar holds the preimages so records
/// stay independently checkable.
#[derive(Debug, Clone, Default)]
pub struct UpdateArchive {
    entries: BTreeMap<[u8; 32], Vec<u8>>,
}

impl UpdateArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores an update under its weight digest and returns the digest.
    pub fn insert<S: Scalar>(&mut self, update: &LocalUpdate<S>) -> [u8; 32] {
        let digest = weights_digest(&update.weights);
        self.entries.insert(digest, encode_update(update));
        digest
    }

    /// Re-registers raw bytes under a caller-supplied digest (used when
    /// reloading an archive directory from disk).
    pub fn insert_raw(&mut self, digest: [u8; 32], bytes: Vec<u8>) {
        self.entries.insert(digest, bytes);
    }

    pub fn get(&self, digest: &[u8; 32]) -> Option<&[u8]> {
        self.entries.get(digest).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in digest order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8; 32], &[u8])> {
        self.entries.iter().map(|(d, b)| (d, b.as_slice()))
    }

    /// Decodes an entry and confirms its content address: the digest must
    /// equal the hash of the canonical encoding of the contained weights.
    pub fn verify_entry(digest: &[u8; 32], bytes: &[u8]) -> Result<ArchivedUpdate> {
        let update = decode_update(bytes)?;
        let recomputed = sha256(&encode_weights_raw(&update.weights));
        if recomputed != *digest {
            return Err(Error::Decode {
                offset: 0,
                message: "archived weights do not hash to the record digest".into(),
            });
        }
        Ok(update)
    }
}

/// Outcome of a chain audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainVerdict {
    Valid,
    Invalid { height: u64, cause: String },
}

impl ChainVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ChainVerdict::Valid)
    }
}

/// Append-only block chain starting from a genesis block at height 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    /// Genesis: height 0, all-zero previous hash, no records, digest of
    /// the initial shared model.
    pub fn genesis(epoch_offset: u64, aggregate_digest: [u8; 32]) -> Self {
        let genesis = Block::build(
            0,
            GENESIS_PREV_HASH,
            epoch_offset,
            Vec::new(),
            aggregate_digest,
            DEFAULT_MAX_BLOCK_BYTES,
        )
        .expect("empty genesis block is always under the cap");
        Self {
            blocks: vec![genesis],
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always has genesis")
    }

    pub fn tip_hash(&self) -> [u8; 32] {
        block_hash(self.tip())
    }

    /// Appends a block that must extend the tip: height one past the tip
    /// and previous hash equal to the tip hash. Anything else fails fast
    /// and leaves the chain unchanged.
    pub fn append_block(&mut self, block: Block) -> Result<()> {
        let tip_height = self.tip().height;
        if block.height != tip_height + 1 {
            return Err(Error::HeightMismatch {
                tip: tip_height,
                actual: block.height,
            });
        }
        if block.prev_hash != self.tip_hash() {
            return Err(Error::PrevHashMismatch {
                height: block.height,
            });
        }
        self.blocks.push(block);
        Ok(())
    }

    /// Full audit. Per block in ascending height order: positional height,
    /// internal integrity, record digests against the archive (when one is
    /// supplied), then the hash link to the predecessor. Reports the first
    /// failure; the archive pass for a block therefore runs before the
    /// link check that would implicate its successor.
    pub fn verify(&self, archive: Option<&UpdateArchive>) -> ChainVerdict {
        if self.blocks.is_empty() {
            return ChainVerdict::Invalid {
                height: 0,
                cause: "chain has no genesis block".into(),
            };
        }
        for (k, block) in self.blocks.iter().enumerate() {
            let invalid = |cause: String| ChainVerdict::Invalid {
                height: k as u64,
                cause,
            };
            if block.height != k as u64 {
                return invalid(format!(
                    "block at position {k} claims height {}",
                    block.height
                ));
            }
            if let Some(cause) = block.integrity_violation() {
                return invalid(cause);
            }
            if k == 0 && block.prev_hash != GENESIS_PREV_HASH {
                return invalid("genesis previous hash is not zero".into());
            }
            if let Some(archive) = archive {
                for r in &block.records {
                    match archive.get(&r.weights_digest) {
                        None => {
                            return invalid(format!(
                                "no archived update for node {}'s record digest",
                                r.node_id
                            ))
                        }
                        Some(bytes) => {
                            if let Err(e) = UpdateArchive::verify_entry(&r.weights_digest, bytes)
                            {
                                return invalid(format!(
                                    "archive entry for node {} fails verification: {e}",
                                    r.node_id
                                ));
                            }
                        }
                    }
                }
            }
            if k > 0 && block.prev_hash != block_hash(&self.blocks[k - 1]) {
                return invalid("hash link to predecessor is broken".into());
            }
        }
        ChainVerdict::Valid
    }
}

/// Renders the chain as text, one block per line. Field order mirrors the
/// canonical encoding, with digests hex-encoded and the block hash
/// appended so every line is self-checking:
/// `height timestamp prev agg size hash n (node digest anomaly decision reason payload)*`.
pub fn export_chain(chain: &Chain) -> String {
    let mut out = String::new();
    for block in &chain.blocks {
        out.push_str(&format!(
            "{} {} {} {} {} {} {}",
            block.height,
            block.timestamp,
            hex::encode(block.prev_hash),
            hex::encode(block.aggregate_digest),
            block.size_bytes,
            hex::encode(block_hash(block)),
            block.records.len(),
        ));
        for r in &block.records {
            out.push_str(&format!(
                " {} {} {} {} {} {}",
                r.node_id,
                hex::encode(r.weights_digest),
                r.anomaly_score,
                r.verdict.decision_byte(),
                r.verdict.reason_byte(),
                r.payload_bytes,
            ));
        }
        out.push('\n');
    }
    out
}

/// Parses an export back into blocks plus the per-line stored hashes.
/// Errors carry the 1-based line number.
pub fn parse_export(text: &str) -> Result<(Chain, Vec<[u8; 32]>)> {
    let mut blocks = Vec::new();
    let mut hashes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (block, hash) = parse_export_line(line).map_err(|message| Error::Export {
            line: line_no,
            message,
        })?;
        blocks.push(block);
        hashes.push(hash);
    }
    if blocks.is_empty() {
        return Err(Error::Export {
            line: 0,
            message: "export holds no blocks".into(),
        });
    }
    Ok((Chain { blocks }, hashes))
}

fn parse_export_line(line: &str) -> std::result::Result<(Block, [u8; 32]), String> {
    let mut tok = line.split_ascii_whitespace();
    let mut next = |what: &str| tok.next().ok_or(format!("missing field: {what}"));
    let height: u64 = next("height")?
        .parse()
        .map_err(|e| format!("height: {e}"))?;
    let timestamp: u64 = next("timestamp")?
        .parse()
        .map_err(|e| format!("timestamp: {e}"))?;
    let prev_hash = parse_digest(next("previous hash")?)?;
    let aggregate_digest = parse_digest(next("aggregate digest")?)?;
    let size_bytes: u64 = next("size")?.parse().map_err(|e| format!("size: {e}"))?;
    let stored_hash = parse_digest(next("block hash")?)?;
    let count: usize = next("record count")?
        .parse()
        .map_err(|e| format!("record count: {e}"))?;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let node_id: u32 = next("record node id")?
            .parse()
            .map_err(|e| format!("node id: {e}"))?;
        let weights_digest = parse_digest(next("record digest")?)?;
        let anomaly_score: f64 = next("record anomaly")?
            .parse()
            .map_err(|e| format!("anomaly: {e}"))?;
        let decision: u8 = next("record decision")?
            .parse()
            .map_err(|e| format!("decision: {e}"))?;
        let reason: u8 = next("record reason")?
            .parse()
            .map_err(|e| format!("reason: {e}"))?;
        let payload_bytes: u64 = next("record payload bytes")?
            .parse()
            .map_err(|e| format!("payload bytes: {e}"))?;
        records.push(LedgerRecord {
            node_id,
            weights_digest,
            anomaly_score,
            verdict: Verdict::from_bytes(decision, reason).map_err(|e| e.to_string())?,
            payload_bytes,
        });
    }
    if tok.next().is_some() {
        return Err("trailing fields".into());
    }
    Ok((
        Block {
            height,
            prev_hash,
            timestamp,
            records,
            aggregate_digest,
            size_bytes,
        },
        stored_hash,
    ))
}

fn parse_digest(raw: &str) -> std::result::Result<[u8; 32], String> {
    let bytes = hex::decode(raw).map_err(|e| format!("digest: {e}"))?;
    bytes
        .try_into()
        .map_err(|_| "digest is not 32 bytes".to_string())
}

/// Audits an exported chain: every line's stored hash must match its
/// re-encoded block (this pins the tip, which no link covers), then the
/// reassembled chain is verified as in [`Chain::verify`]. Unparseable
/// exports surface as errors with a line number.
pub fn verify_export(text: &str, archive: Option<&UpdateArchive>) -> Result<ChainVerdict> {
    let (chain, hashes) = parse_export(text)?;
    for (i, (block, stored)) in chain.blocks.iter().zip(&hashes).enumerate() {
        if block_hash(block) != *stored {
            return Ok(ChainVerdict::Invalid {
                height: i as u64,
                cause: "line hash does not match re-encoded block".into(),
            });
        }
    }
    Ok(chain.verify(archive))
}
