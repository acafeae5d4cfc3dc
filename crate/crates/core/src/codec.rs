//! Systematic random linear network coding over GF(2^q).
//!
//! A generation of `k` source packets is sent as the `k` packets themselves
//! followed by `n - k` random linear combinations. Coefficients come from a
//! ChaCha8 stream seeded with a 64-bit seed, one byte per coefficient masked
//! to `q` bits, so runs reproduce across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gf::{Field, Symbol};

/// Coding configuration shared by every formula in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    k: usize,
    n: usize,
    q: u8,
    packet_bytes: usize,
}

impl CodeParams {
    /// `k` information packets, block length `n`, field GF(2^q), packets of
    /// `packet_bytes` bytes.
    pub fn new(k: usize, n: usize, q: u8, packet_bytes: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        if n < k {
            return Err(invalid(format!("block length n={n} is smaller than k={k}")));
        }
        if !matches!(q, 1 | 4 | 8) {
            return Err(invalid(format!("unsupported field exponent q={q}")));
        }
        if packet_bytes == 0 {
            return Err(invalid("packet length must be positive"));
        }
        if !(8 * packet_bytes).is_multiple_of(q as usize) {
            return Err(invalid("8*L must be divisible by q"));
        }
        Ok(Self { k, n, q, packet_bytes })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    /// Packet length L in bytes.
    pub fn packet_bytes(&self) -> usize {
        self.packet_bytes
    }

    /// Coding rate r = k/n.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Symbols per packet, s = 8L/q.
    pub fn symbols(&self) -> usize {
        8 * self.packet_bytes / self.q as usize
    }

    /// Number of coded (redundant) packets, n - k.
    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    /// Same k, q and L with a different block length.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.k, n, self.q, self.packet_bytes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub payload: Vec<Symbol>,
    pub coeffs: Vec<Symbol>,
    pub systematic_index: Option<usize>,
}

impl Packet {
    /// Uncoded source packet `index` of a generation of `k`.
    pub fn systematic(index: usize, k: usize, payload: Vec<Symbol>) -> Self {
        let mut coeffs = vec![0; k];
        coeffs[index] = 1;
        Self { payload, coeffs, systematic_index: Some(index) }
    }

    pub fn is_systematic(&self) -> bool {
        self.systematic_index.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generation {
    pub packets: Vec<Packet>,
    pub seed: u64,
}

impl Generation {
    pub fn from_payloads(payloads: Vec<Vec<Symbol>>, seed: u64) -> Self {
        let k = payloads.len();
        let packets = payloads
            .into_iter()
            .enumerate()
            .map(|(i, p)| Packet::systematic(i, k, p))
            .collect();
        Self { packets, seed }
    }

    /// Uniformly random payloads drawn from `rng`.
    pub fn random<R: Rng>(params: &CodeParams, rng: &mut R, seed: u64) -> Self {
        let mask = ((1u16 << params.q()) - 1) as Symbol;
        let payloads = (0..params.k())
            .map(|_| (0..params.symbols()).map(|_| rng.random::<u8>() & mask).collect())
            .collect();
        Self::from_payloads(payloads, seed)
    }

    pub fn payloads(&self) -> Vec<Vec<Symbol>> {
        self.packets.iter().map(|p| p.payload.clone()).collect()
    }
}

/// Output of [`Codec::decode`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    /// Recovered payload per systematic index.
    pub payloads: Vec<Option<Vec<Symbol>>>,
    pub full_decode: bool,
    /// Rank of the received coefficient matrix.
    pub rank: usize,
}

impl DecodeResult {
    pub fn recovered_indices(&self) -> Vec<usize> {
        self.payloads
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().map(|_| i))
            .collect()
    }

    pub fn recovered_count(&self) -> usize {
        self.payloads.iter().filter(|p| p.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.recovered_count() == 0
    }
}

/// Encoder, decoder and relay re-encoder for one [`CodeParams`].
#[derive(Clone, Debug)]
pub struct Codec {
    params: CodeParams,
    field: Field,
}

impl Codec {
    pub fn new(params: CodeParams) -> Result<Self> {
        Ok(Self { params, field: Field::new(params.q())? })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    fn check_generation(&self, gen: &Generation) -> Result<()> {
        let k = self.params.k();
        if gen.packets.len() != k {
            return Err(invalid(format!(
                "generation has {} packets, expected k={k}",
                gen.packets.len()
            )));
        }
        for (i, p) in gen.packets.iter().enumerate() {
            if p.payload.len() != self.params.symbols() {
                return Err(invalid(format!(
                    "packet {i} has {} symbols, expected s={}",
                    p.payload.len(),
                    self.params.symbols()
                )));
            }
            if p.systematic_index != Some(i) {
                return Err(invalid(format!("packet {i} is not systematic packet {i}")));
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Symbol {
        rng.random::<u8>() & self.field.mask()
    }

    /// Systematic block: the `k` source packets then `n - k` combinations
    /// with coefficients drawn from `gen.seed`.
    pub fn encode(&self, gen: &Generation) -> Result<Vec<Packet>> {
        self.check_generation(gen)?;
        let (k, n, s) = (self.params.k(), self.params.n(), self.params.symbols());
        let mut rng = ChaCha8Rng::seed_from_u64(gen.seed);
        let mut out = gen.packets.clone();
        out.reserve(n - k);
        for _ in k..n {
            let coeffs: Vec<Symbol> = (0..k).map(|_| self.draw(&mut rng)).collect();
            let mut payload = vec![0; s];
            for (c, src) in coeffs.iter().zip(&gen.packets) {
                self.field.axpy(&mut payload, *c, &src.payload);
            }
            out.push(Packet { payload, coeffs, systematic_index: None });
        }
        Ok(out)
    }

    /// Gaussian elimination over the received packets.
    ///
    /// Packets whose coefficient vector has a single nonzero entry resolve
    /// that index directly; the rest are reduced against the known columns
    /// and eliminated over the remaining unknowns. An unknown is recovered
    /// when its reduced row has no other unknown left.
    pub fn decode(&self, received: &[Packet]) -> Result<DecodeResult> {
        let (k, s) = (self.params.k(), self.params.symbols());
        let f = &self.field;
        for (i, p) in received.iter().enumerate() {
            if p.coeffs.len() != k || p.payload.len() != s {
                return Err(invalid(format!(
                    "received packet {i} has {} coefficients and {} symbols, expected {k} and {s}",
                    p.coeffs.len(),
                    p.payload.len()
                )));
            }
        }

        let mut known: Vec<Option<Vec<Symbol>>> = vec![None; k];
        let mut coded: Vec<&Packet> = Vec::new();
        for p in received {
            let mut nz = p.coeffs.iter().enumerate().filter(|(_, &c)| c != 0);
            match (nz.next(), nz.next()) {
                (Some((j, &c)), None) => {
                    if known[j].is_none() {
                        let mut payload = p.payload.clone();
                        f.scale(&mut payload, f.inv(c));
                        known[j] = Some(payload);
                    }
                }
                (Some(_), Some(_)) => coded.push(p),
                _ => {}
            }
        }
        let mut rank = known.iter().filter(|x| x.is_some()).count();

        let unknown: Vec<usize> = (0..k).filter(|&j| known[j].is_none()).collect();
        if !unknown.is_empty() && !coded.is_empty() {
            let w = unknown.len();
            // Row layout: w coefficients over the unknown columns, then s payload symbols.
            let mut rows: Vec<Vec<Symbol>> = coded
                .iter()
                .map(|p| {
                    let mut row = Vec::with_capacity(w + s);
                    row.extend(unknown.iter().map(|&j| p.coeffs[j]));
                    let mut payload = p.payload.clone();
                    for (j, &c) in p.coeffs.iter().enumerate() {
                        if c != 0 {
                            if let Some(kp) = &known[j] {
                                f.axpy(&mut payload, c, kp);
                            }
                        }
                    }
                    row.extend(payload);
                    row
                })
                .collect();

            let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, column)
            let mut next = 0;
            for col in 0..w {
                let Some(pr) = (next..rows.len()).find(|&r| rows[r][col] != 0) else {
                    continue;
                };
                rows.swap(next, pr);
                let inv = f.inv(rows[next][col]);
                f.scale(&mut rows[next], inv);
                let pivot_row = rows[next].clone();
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != next && row[col] != 0 {
                        let c = row[col];
                        f.axpy(row, c, &pivot_row);
                    }
                }
                pivots.push((next, col));
                next += 1;
                if next == rows.len() {
                    break;
                }
            }
            rank += pivots.len();

            for &(r, col) in &pivots {
                let row = &rows[r];
                let alone = row[..w].iter().enumerate().all(|(c, &v)| c == col || v == 0);
                if alone {
                    known[unknown[col]] = Some(row[w..].to_vec());
                }
            }
        }

        let full_decode = rank == k;
        Ok(DecodeResult { payloads: known, full_decode, rank })
    }

    /// Relay output after a decode attempt.
    ///
    /// A full decode is re-encoded from scratch. Otherwise the recovered
    /// systematic packets are forwarded together with random combinations
    /// of the recovered set only, padded to `n` packets. Nothing recovered
    /// means nothing sent.
    pub fn reencode(&self, recovered: &DecodeResult, seed: u64) -> Result<Vec<Packet>> {
        let (k, n, s) = (self.params.k(), self.params.n(), self.params.symbols());
        if recovered.payloads.len() != k {
            return Err(invalid(format!(
                "decode result covers {} indices, expected k={k}",
                recovered.payloads.len()
            )));
        }
        if recovered.full_decode {
            let payloads = recovered
                .payloads
                .iter()
                .map(|p| p.clone().expect("full decode recovers every index"))
                .collect();
            return self.encode(&Generation::from_payloads(payloads, seed));
        }
        let support = recovered.recovered_indices();
        if support.is_empty() {
            return Ok(Vec::new());
        }
        let mut out: Vec<Packet> = support
            .iter()
            .map(|&j| Packet::systematic(j, k, recovered.payloads[j].clone().unwrap()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while out.len() < n {
            let mut coeffs = vec![0; k];
            let mut payload = vec![0; s];
            for &j in &support {
                let c = self.draw(&mut rng);
                coeffs[j] = c;
                self.field.axpy(&mut payload, c, recovered.payloads[j].as_ref().unwrap());
            }
            out.push(Packet { payload, coeffs, systematic_index: None });
        }
        Ok(out)
    }
}

/// One-shot encode; see [`Codec::encode`].
pub fn encode(gen: &Generation, params: &CodeParams) -> Result<Vec<Packet>> {
    Codec::new(*params)?.encode(gen)
}

/// One-shot decode; see [`Codec::decode`].
pub fn decode(received: &[Packet], params: &CodeParams) -> Result<DecodeResult> {
    Codec::new(*params)?.decode(received)
}

/// One-shot relay re-encode; see [`Codec::reencode`].
pub fn reencode(recovered: &DecodeResult, params: &CodeParams, seed: u64) -> Result<Vec<Packet>> {
    Codec::new(*params)?.reencode(recovered, seed)
}
