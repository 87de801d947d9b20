//! Binary agent files.
//!
//! All integers are `u32` and all parameters `f64`, little-endian:
//!
//! ```text
//! magic  "MDGAGENT"
//! version
//! algo                 0 = dqn, 1 = ddpg, 2 = rrddpg
//! network count
//! per network:
//!   layer count L
//!   L + 1 layer sizes
//!   L activations      0 = identity, 1 = tanh
//!   per layer: weights (inputs x outputs, row-major), then biases
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::net::{Activation, Dense, Mlp};
use super::{Agent, AgentConfig, Algo};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"MDGAGENT";
const MAX_LAYER: u32 = 1 << 16;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("not an agent file")]
    BadMagic,
    #[error("agent file version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt agent file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn put(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_agent<W: Write>(agent: &Agent, mut w: W) -> Result<(), PersistError> {
    w.write_all(MAGIC)?;
    put(&mut w, FORMAT_VERSION)?;
    put(
        &mut w,
        match agent.algo {
            Algo::Dqn => 0,
            Algo::Ddpg => 1,
            Algo::RrDdpg => 2,
        },
    )?;
    let nets = agent.nets();
    put(&mut w, nets.len() as u32)?;
    for net in nets {
        put(&mut w, net.layers.len() as u32)?;
        for s in net.sizes() {
            put(&mut w, s as u32)?;
        }
        for l in &net.layers {
            put(&mut w, u32::from(l.activation == Activation::Tanh))?;
        }
        for l in &net.layers {
            for v in l.weights.iter().chain(&l.bias) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], PersistError> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => PersistError::Corrupt("truncated".into()),
            _ => PersistError::Io(e),
        })?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_agent<R: Read>(r: R, cfg: &AgentConfig) -> Result<Agent, PersistError> {
    let mut r = Reader { inner: r };
    if &r.bytes::<8>()? != MAGIC {
        return Err(PersistError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(PersistError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let algo = match r.u32()? {
        0 => Algo::Dqn,
        1 => Algo::Ddpg,
        2 => Algo::RrDdpg,
        x => return Err(PersistError::Corrupt(format!("unknown algorithm tag {x}"))),
    };
    let n_nets = r.u32()?;
    if n_nets > 8 {
        return Err(PersistError::Corrupt(format!("{n_nets} networks")));
    }
    let mut nets = Vec::new();
    for _ in 0..n_nets {
        let n_layers = r.u32()?;
        if n_layers == 0 || n_layers > 64 {
            return Err(PersistError::Corrupt(format!("{n_layers} layers")));
        }
        let sizes = (0..=n_layers).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        if sizes.iter().any(|s| *s == 0 || *s > MAX_LAYER) {
            return Err(PersistError::Corrupt(format!("layer sizes {sizes:?}")));
        }
        let acts = (0..n_layers)
            .map(|_| match r.u32()? {
                0 => Ok(Activation::Identity),
                1 => Ok(Activation::Tanh),
                x => Err(PersistError::Corrupt(format!("activation tag {x}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut layers = Vec::new();
        for (w, act) in sizes.windows(2).zip(acts) {
            let mut l = Dense::zeros(w[0] as usize, w[1] as usize, act);
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = r.f64()?;
            }
            layers.push(l);
        }
        nets.push(Mlp { layers });
    }
    if r.inner.read(&mut [0u8; 1])? != 0 {
        return Err(PersistError::Corrupt("trailing bytes".into()));
    }
    Agent::from_nets(algo, nets, cfg).ok_or_else(|| PersistError::Corrupt("network layout does not fit the algorithm".into()))
}

pub fn save_agent(agent: &Agent, path: &Path) -> Result<(), PersistError> {
    let mut buf = Vec::new();
    write_agent(agent, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_agent(path: &Path, cfg: &AgentConfig) -> Result<Agent, PersistError> {
    read_agent(io::Cursor::new(fs::read(path)?), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(a: &Agent) -> Vec<Vec<u64>> {
        a.nets().iter().map(|n| n.params().iter().map(|v| v.to_bits()).collect()).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = AgentConfig { hidden: vec![7, 5], ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for algo in Algo::ALL {
            let agent = Agent::new(algo, 6, 4, &cfg, &mut rng);
            let mut buf = Vec::new();
            write_agent(&agent, &mut buf).unwrap();
            let back = read_agent(io::Cursor::new(&buf), &cfg).unwrap();
            assert_eq!(back.algo, algo);
            assert_eq!(params(&back), params(&agent));
        }
    }

    #[test]
    fn rejects_other_versions_and_garbage() {
        let cfg = AgentConfig { hidden: vec![3], ..Default::default() };
        let agent = Agent::new(Algo::Dqn, 2, 2, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        let mut buf = Vec::new();
        write_agent(&agent, &mut buf).unwrap();
        let mut bumped = buf.clone();
        bumped[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            read_agent(io::Cursor::new(&bumped), &cfg),
            Err(PersistError::VersionMismatch { found: 7, expected: 1 })
        ));
        assert!(matches!(read_agent(io::Cursor::new(b"nonsense"), &cfg), Err(PersistError::BadMagic)));
        assert!(matches!(read_agent(io::Cursor::new(&buf[..buf.len() - 3]), &cfg), Err(PersistError::Corrupt(_))));
    }
}
