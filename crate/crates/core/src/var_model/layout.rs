use std::ops::Range;

use serde::{Deserialize, Serialize};

/// The four component blocks of the state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Block {
    I,
    H,
    X,
    Y,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::I, Block::H, Block::X, Block::Y];

    pub fn name(self) -> &'static str {
        match self {
            Block::I => "I",
            Block::H => "H",
            Block::X => "X",
            Block::Y => "Y",
        }
    }
}

/// Block dimensions of the state `S_t = (I_t, H_t, X_t, Y_t)`, stored in that
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockLayout {
    #[serde(rename = "d_I")]
    pub d_i: usize,
    #[serde(rename = "d_H")]
    pub d_h: usize,
    #[serde(rename = "d_X")]
    pub d_x: usize,
    #[serde(rename = "d_Y")]
    pub d_y: usize,
}

impl BlockLayout {
    pub const fn new(d_i: usize, d_h: usize, d_x: usize, d_y: usize) -> Self {
        Self { d_i, d_h, d_x, d_y }
    }

    /// Layout for a state without instrument structure: everything is `H`.
    pub const fn unstructured(d: usize) -> Self {
        Self::new(0, d, 0, 0)
    }

    pub fn dim(&self) -> usize {
        self.d_i + self.d_h + self.d_x + self.d_y
    }

    pub fn block_dim(&self, b: Block) -> usize {
        match b {
            Block::I => self.d_i,
            Block::H => self.d_h,
            Block::X => self.d_x,
            Block::Y => self.d_y,
        }
    }

    pub fn range(&self, b: Block) -> Range<usize> {
        let start = match b {
            Block::I => 0,
            Block::H => self.d_i,
            Block::X => self.d_i + self.d_h,
            Block::Y => self.d_i + self.d_h + self.d_x,
        };
        start..start + self.block_dim(b)
    }

    pub fn indices(&self, b: Block) -> Vec<usize> {
        self.range(b).collect()
    }

    /// Block containing state coordinate `idx`.
    pub fn block_of(&self, idx: usize) -> Option<Block> {
        Block::ALL.into_iter().find(|&b| self.range(b).contains(&idx))
    }

    /// Column labels `I1, …, H1, …, X1, …, Y1, …`.
    pub fn labels(&self) -> Vec<String> {
        Block::ALL
            .iter()
            .flat_map(|&b| (1..=self.block_dim(b)).map(move |k| format!("{}{}", b.name(), k)))
            .collect()
    }

    /// Label of a single coordinate.
    pub fn label(&self, idx: usize) -> String {
        self.labels().get(idx).cloned().unwrap_or_else(|| format!("S{}", idx + 1))
    }
}
