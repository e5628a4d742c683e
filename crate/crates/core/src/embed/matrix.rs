use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::NodeIndex;

const MAGIC: &[u8; 4] = b"TEMB";
const ABSENT: u32 = u32::MAX;

/// A `d x |V_t|` static embedding for one snapshot. Columns exist only for
/// nodes present at that step and are stored contiguously per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    timestep: usize,
    nodes: Arc<NodeIndex>,
    columns: Vec<u32>,
    position: Vec<u32>,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    /// `columns` are node ids (strictly increasing) and `values` holds
    /// `dim` entries per column, column after column.
    pub fn new(
        nodes: Arc<NodeIndex>,
        timestep: usize,
        dim: usize,
        columns: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if values.len() != dim * columns.len() {
            return Err(Error::invalid(format!(
                "{} values do not fill {} columns of dimension {dim}",
                values.len(),
                columns.len()
            )));
        }
        if !columns.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "embedding columns must be strictly increasing node ids",
            ));
        }
        if columns.last().is_some_and(|&c| c as usize >= nodes.len()) {
            return Err(Error::invalid("embedding column outside the node index"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("in embedding at step {timestep}, entry {i}"),
            });
        }
        let mut position = vec![ABSENT; nodes.len()];
        for (j, &c) in columns.iter().enumerate() {
            position[c as usize] = j as u32;
        }
        Ok(Self {
            dim,
            timestep,
            nodes,
            columns,
            position,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn timestep(&self) -> usize {
        self.timestep
    }

    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.nodes
    }

    /// Node ids with a column, ascending.
    pub fn columns(&self) -> &[u32] {
        &self.columns
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn contains(&self, node: u32) -> bool {
        self.position
            .get(node as usize)
            .is_some_and(|&p| p != ABSENT)
    }

    pub fn get(&self, node: u32) -> Option<&[f64]> {
        let p = *self.position.get(node as usize)?;
        (p != ABSENT).then(|| self.column_at(p as usize))
    }

    pub fn column_at(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `(row, col)` of the `d x |V_t|` matrix.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.dim + row]
    }

    /// Applies `rotation` (row-major `d x d`) to every column.
    pub fn rotated(&self, rotation: &[f64]) -> EmbeddingMatrix {
        let d = self.dim;
        assert_eq!(rotation.len(), d * d, "rotation must be d x d");
        let mut values = vec![0.0; self.values.len()];
        for (src, dst) in self.values.chunks_exact(d).zip(values.chunks_exact_mut(d)) {
            for (i, out) in dst.iter_mut().enumerate() {
                let row = &rotation[i * d..(i + 1) * d];
                *out = row.iter().zip(src).map(|(a, b)| a * b).sum();
            }
        }
        EmbeddingMatrix {
            values,
            ..self.clone()
        }
    }

    pub fn with_timestep(mut self, timestep: usize) -> Self {
        self.timestep = timestep;
        self
    }

    /// Frobenius distance over the columns both matrices share.
    pub fn shared_distance(&self, other: &EmbeddingMatrix) -> f64 {
        let mut sum = 0.0;
        for &c in &self.columns {
            if let (Some(a), Some(b)) = (self.get(c), other.get(c)) {
                sum += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
            }
        }
        sum.sqrt()
    }

    /// Binary container: `"TEMB"`, then `d`, `|V_t|` and the timestep as
    /// little-endian u32, the matrix as row-major little-endian f64, and one
    /// length-prefixed UTF-8 node id per column.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.dim, self.columns.len(), self.timestep] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        for row in 0..self.dim {
            for col in 0..self.columns.len() {
                w.write_all(&self.entry(row, col).to_le_bytes())?;
            }
        }
        for &c in &self.columns {
            let name = self.nodes.name(c).as_bytes();
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name)?;
        }
        Ok(())
    }

    /// Reads a container written by [`write_binary`](Self::write_binary),
    /// resolving node ids through `nodes`.
    pub fn read_binary<R: Read>(r: R, nodes: &Arc<NodeIndex>) -> Result<Self> {
        let raw = RawEmbedding::read(r)?;
        let mut cols: Vec<(u32, usize)> = Vec::with_capacity(raw.names.len());
        for (j, name) in raw.names.iter().enumerate() {
            let id = nodes
                .get(name)
                .ok_or_else(|| Error::Format(format!("unknown node {name:?} in embedding")))?;
            cols.push((id, j));
        }
        cols.sort_unstable();
        let mut values = Vec::with_capacity(raw.values.len());
        for &(_, j) in &cols {
            values.extend_from_slice(&raw.values[j * raw.dim..(j + 1) * raw.dim]);
        }
        let columns = cols.into_iter().map(|(c, _)| c).collect();
        Self::new(Arc::clone(nodes), raw.timestep, raw.dim, columns, values)
    }

    /// `node<TAB>v1<TAB>...<TAB>vd` per column.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (j, &c) in self.columns.iter().enumerate() {
            write!(w, "{}", self.nodes.name(c))?;
            for v in self.column_at(j) {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// An embedding container decoded without a node index.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEmbedding {
    pub dim: usize,
    pub timestep: usize,
    pub names: Vec<String>,
    /// Column-contiguous values, as in [`EmbeddingMatrix`].
    pub values: Vec<f64>,
}

impl RawEmbedding {
    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let fmt = |m: &str| Error::Format(m.to_owned());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| fmt("truncated header"))?;
        if &magic != MAGIC {
            return Err(fmt("bad magic, not an embedding container"));
        }
        let read_u32 = |r: &mut R| -> Result<usize> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)
                .map_err(|_| fmt("truncated container"))?;
            Ok(u32::from_le_bytes(b) as usize)
        };
        let dim = read_u32(&mut r)?;
        let cols = read_u32(&mut r)?;
        let timestep = read_u32(&mut r)?;
        let mut values = vec![0.0; dim * cols];
        let mut b = [0u8; 8];
        for row in 0..dim {
            for col in 0..cols {
                r.read_exact(&mut b).map_err(|_| fmt("truncated matrix"))?;
                values[col * dim + row] = f64::from_le_bytes(b);
            }
        }
        let mut names = Vec::with_capacity(cols);
        for _ in 0..cols {
            let len = read_u32(&mut r)?;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)
                .map_err(|_| fmt("truncated node table"))?;
            names.push(String::from_utf8(buf).map_err(|_| fmt("node id is not UTF-8"))?);
        }
        Ok(Self {
            dim,
            timestep,
            names,
            values,
        })
    }
}
