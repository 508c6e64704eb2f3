//! i.i.d. two-point edge capacities, single-edge flips, and the noise coupling
//! `X^t` that resamples each edge independently with probability `t`.

use std::io::{Read, Write};

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{CylinderSpec, EdgeId, LatticeIndex};
use crate::network::Cap;
use crate::rng::{below_ratio, bernoulli, Purpose, Stream};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Law taking value `a` with probability `p_a` and `b` otherwise. The two
/// values are kept as coprime integers so every flow value is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoPointDist {
    pub a: u64,
    pub b: u64,
    pub p_num: u64,
    pub p_den: u64,
}

impl Default for TwoPointDist {
    fn default() -> Self {
        TwoPointDist { a: 1, b: 2, p_num: 1, p_den: 2 }
    }
}

impl TwoPointDist {
    /// Values are divided by their gcd; `p_a = p_num / p_den` may be 0 or 1
    /// for degenerate experiments.
    pub fn new(a: u64, b: u64, p_num: u64, p_den: u64) -> Result<Self> {
        if a == 0 || a >= b {
            return domain(format!("need 0 < a < b, got a={a} b={b}"));
        }
        if p_den == 0 || p_num > p_den {
            return domain(format!("p_a = {p_num}/{p_den} is not a probability"));
        }
        if b > (1 << 40) {
            return domain("capacity values above 2^40 are not supported");
        }
        let g = gcd(a, b);
        let gp = gcd(p_num, p_den).max(1);
        Ok(TwoPointDist {
            a: a / g,
            b: b / g,
            p_num: p_num / gp,
            p_den: p_den / gp,
        })
    }

    pub fn validate(&self) -> Result<()> {
        TwoPointDist::new(self.a, self.b, self.p_num, self.p_den).map(|_| ())
    }

    pub fn low(&self) -> Cap {
        self.a as Cap
    }

    pub fn high(&self) -> Cap {
        self.b as Cap
    }

    pub fn p_a(&self) -> Ratio<u64> {
        Ratio::new(self.p_num, self.p_den)
    }

    pub fn p_a_f64(&self) -> f64 {
        self.p_num as f64 / self.p_den as f64
    }

    pub fn mean(&self) -> f64 {
        let p = self.p_a_f64();
        p * self.a as f64 + (1.0 - p) * self.b as f64
    }

    /// `Var(t_e) = (b-a)^2 p_a (1-p_a)`.
    pub fn variance(&self) -> f64 {
        let p = self.p_a_f64();
        let w = (self.b - self.a) as f64;
        w * w * p * (1.0 - p)
    }

    #[inline]
    pub fn draw(&self, word: u64) -> Cap {
        if bernoulli(word, self.p_num, self.p_den) {
            self.low()
        } else {
            self.high()
        }
    }

    pub fn contains(&self, value: Cap) -> bool {
        value == self.low() || value == self.high()
    }
}

impl std::fmt::Display for TwoPointDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a={} b={} p_a={}/{}", self.a, self.b, self.p_num, self.p_den)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityField {
    pub spec: CylinderSpec,
    pub dist: TwoPointDist,
    pub seed: u64,
    pub sample_index: u64,
    pub values: Vec<Cap>,
}

impl CapacityField {
    /// A field with every edge at `value` (not tied to any seed).
    pub fn constant(lattice: &LatticeIndex, dist: TwoPointDist, value: Cap) -> Self {
        CapacityField {
            spec: lattice.spec(),
            dist,
            seed: 0,
            sample_index: 0,
            values: vec![value; lattice.num_edges()],
        }
    }

    pub fn from_values(lattice: &LatticeIndex, dist: TwoPointDist, values: Vec<Cap>) -> Result<Self> {
        if values.len() != lattice.num_edges() {
            return domain(format!(
                "expected {} capacities, got {}",
                lattice.num_edges(),
                values.len()
            ));
        }
        if let Some(v) = values.iter().find(|&&v| !dist.contains(v)) {
            return domain(format!("capacity {v} is neither a nor b"));
        }
        Ok(CapacityField {
            spec: lattice.spec(),
            dist,
            seed: 0,
            sample_index: 0,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn count_low(&self) -> usize {
        self.values.iter().filter(|&&v| v == self.dist.low()).count()
    }
}

/// The field for `(seed, sample_index)`; edge `e` reads word `e` of its stream.
pub fn sample_field(lattice: &LatticeIndex, dist: TwoPointDist, seed: u64, sample_index: u64) -> CapacityField {
    sample_field_for(lattice, dist, seed, sample_index, Purpose::Capacity)
}

pub(crate) fn sample_field_for(
    lattice: &LatticeIndex,
    dist: TwoPointDist,
    seed: u64,
    sample_index: u64,
    purpose: Purpose,
) -> CapacityField {
    let mut stream = Stream::new(seed, purpose, sample_index);
    let values = (0..lattice.num_edges())
        .map(|_| dist.draw(stream.next_word()))
        .collect();
    CapacityField {
        spec: lattice.spec(),
        dist,
        seed,
        sample_index,
        values,
    }
}

/// Capacity of a single edge of sample `(seed, sample_index)`, without
/// drawing the rest of the field.
pub fn sample_edge(dist: TwoPointDist, seed: u64, sample_index: u64, e: EdgeId) -> Cap {
    dist.draw(Stream::new(seed, Purpose::Capacity, sample_index).word_at(e as u64))
}

/// Copy of `field` with edge `e` set to `value`.
pub fn flip_edge(field: &CapacityField, e: EdgeId, value: Cap) -> Result<CapacityField> {
    if !field.dist.contains(value) {
        return domain(format!("value {value} is neither a={} nor b={}", field.dist.a, field.dist.b));
    }
    if e >= field.values.len() {
        return domain(format!("edge {e} out of range"));
    }
    let mut out = field.clone();
    out.values[e] = value;
    Ok(out)
}

/// A base field, an independent fresh field and uniform thresholds `U_e`.
#[derive(Clone, Debug)]
pub struct NoiseCoupling {
    pub base: CapacityField,
    pub fresh: CapacityField,
    /// `U_e` as a uniform 64-bit word (the point `U_e / 2^64` of `[0,1)`).
    pub thresholds: Vec<u64>,
}

impl NoiseCoupling {
    pub fn new(lattice: &LatticeIndex, dist: TwoPointDist, seed: u64, sample_index: u64) -> Self {
        let base = sample_field(lattice, dist, seed, sample_index);
        let fresh = sample_field_for(lattice, dist, seed, sample_index, Purpose::Fresh);
        let mut stream = Stream::new(seed, Purpose::Threshold, sample_index);
        let thresholds = (0..lattice.num_edges()).map(|_| stream.next_word()).collect();
        NoiseCoupling { base, fresh, thresholds }
    }

    /// Edges whose value is taken from the fresh field at time `t` (`U_e < t`).
    pub fn resampled(&self, t: Ratio<u64>) -> Vec<bool> {
        let (num, den) = (*t.numer(), *t.denom());
        self.thresholds
            .iter()
            .map(|&u| below_ratio(u, num, den))
            .collect()
    }
}

/// `X^t`: the fresh value where `U_e < t`, the base value elsewhere.
pub fn realize_noise(coupling: &NoiseCoupling, t: Ratio<u64>) -> Result<CapacityField> {
    if t > Ratio::one() || t < Ratio::zero() {
        return domain(format!("t = {t} outside [0,1]"));
    }
    let mut out = coupling.base.clone();
    for (e, fresh) in coupling.resampled(t).into_iter().enumerate() {
        if fresh {
            out.values[e] = coupling.fresh.values[e];
        }
    }
    Ok(out)
}

const MAGIC: &[u8; 4] = b"FPPF";
const VERSION: u32 = 1;

/// Binary dump: magic, version, then `d n H a b p_num p_den seed sample count`
/// as little-endian u64, then one little-endian i64 per edge.
pub fn write_field_binary<W: Write>(field: &CapacityField, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let header = [
        field.spec.d as u64,
        field.spec.n as u64,
        field.spec.height as u64,
        field.dist.a,
        field.dist.b,
        field.dist.p_num,
        field.dist.p_den,
        field.seed,
        field.sample_index,
        field.values.len() as u64,
    ];
    for x in header {
        w.write_all(&x.to_le_bytes())?;
    }
    for &v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<CapacityField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a capacity field file".into()));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    if u32::from_le_bytes(buf4) != VERSION {
        return Err(Error::Format("unsupported field file version".into()));
    }
    let mut word = || -> Result<u64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    };
    let h: Vec<u64> = (0..10).map(|_| word()).collect::<Result<_>>()?;
    let spec = CylinderSpec::new(h[0] as usize, h[1] as usize, h[2] as usize)?;
    let dist = TwoPointDist::new(h[3], h[4], h[5], h[6])?;
    let lattice = LatticeIndex::new(spec)?;
    if h[9] as usize != lattice.num_edges() {
        return Err(Error::Format("edge count does not match header".into()));
    }
    let values = (0..h[9]).map(|_| word().map(|x| x as i64)).collect::<Result<Vec<_>>>()?;
    let mut field = CapacityField::from_values(&lattice, dist, values)?;
    field.seed = h[7];
    field.sample_index = h[8];
    Ok(field)
}

/// CSV dump for tiny instances. The first line is a `#` comment carrying the
/// header fields; then `edge,axis,base,capacity` rows.
pub fn field_to_csv(lattice: &LatticeIndex, field: &CapacityField) -> String {
    let mut out = format!(
        "# d={} n={} H={} a={} b={} p_num={} p_den={} seed={} sample={}\nedge,axis,base,capacity\n",
        field.spec.d,
        field.spec.n,
        field.spec.height,
        field.dist.a,
        field.dist.b,
        field.dist.p_num,
        field.dist.p_den,
        field.seed,
        field.sample_index
    );
    for (e, v) in field.values.iter().enumerate() {
        let (base, axis) = lattice.edge_base_axis(e);
        let coords: Vec<String> = lattice.vertex_coords(base).iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("{},{},{},{}\n", e, axis, coords.join(" "), v));
    }
    out
}

pub fn field_from_csv(text: &str) -> Result<CapacityField> {
    let bad = |m: &str| Error::Format(format!("field csv: {m}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    let header = header.strip_prefix("# ").ok_or_else(|| bad("missing header comment"))?;
    let mut kv = std::collections::BTreeMap::new();
    for token in header.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| bad("malformed header"))?;
        let v: u64 = v.parse().map_err(|_| bad("non-numeric header value"))?;
        kv.insert(k, v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
    let spec = CylinderSpec::new(get("d")? as usize, get("n")? as usize, get("H")? as usize)?;
    let dist = TwoPointDist::new(get("a")?, get("b")?, get("p_num")?, get("p_den")?)?;
    let lattice = LatticeIndex::new(spec)?;
    lines.next();
    let mut values = vec![0; lattice.num_edges()];
    let mut seen = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad("expected 4 columns"));
        }
        let e: usize = cols[0].parse().map_err(|_| bad("bad edge id"))?;
        let v: Cap = cols[3].parse().map_err(|_| bad("bad capacity"))?;
        *values.get_mut(e).ok_or_else(|| bad("edge id out of range"))? = v;
        seen += 1;
    }
    if seen != lattice.num_edges() {
        return Err(bad("wrong number of rows"));
    }
    let mut field = CapacityField::from_values(&lattice, dist, values)?;
    field.seed = get("seed")?;
    field.sample_index = get("sample")?;
    Ok(field)
}
