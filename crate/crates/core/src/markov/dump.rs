use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::kernel::TransitionKernel;
use super::state::StateSpace;
use super::Variant;
use crate::{Error, Result};

/// JSON layout of a dumped kernel:
///
/// ```text
/// {"m":3,"d":2,"g":1,"variant":"lb",
///  "states":[[3,0],[1,2]],
///  "edges":[[src,dst,v,c,p,beta], ...]}
/// ```
///
/// States are padded to `g + 1` entries and listed in index order; edges are
/// listed row by row in event order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDump {
    pub m: usize,
    pub d: usize,
    pub g: usize,
    pub variant: Variant,
    pub states: Vec<Vec<u32>>,
    pub edges: Vec<(u32, u32, u16, u16, f64, f64)>,
}

impl KernelDump {
    pub fn new(space: &StateSpace, kernel: &TransitionKernel) -> Self {
        let p = space.params();
        KernelDump {
            m: p.m(),
            d: p.d(),
            g: p.g(),
            variant: kernel.variant(),
            states: (0..space.len()).map(|i| space.levels(i).to_vec()).collect(),
            edges: kernel
                .rows()
                .enumerate()
                .flat_map(|(i, row)| {
                    row.iter()
                        .map(move |e| (i as u32, e.target, e.level, e.count, e.p, e.beta))
                })
                .collect(),
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        serde_json::from_reader(r).map_err(|e| Error::Config(e.to_string()))
    }
}
