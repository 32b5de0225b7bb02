//! JSON wire format for instances and lotteries. Every number is a
//! rational string (`"a"` or `"a/b"`); lottery masses are indexed
//! `[k][i][j]`.

use serde::{Deserialize, Serialize};

use super::{format_rational, parse_rational, Instance, Lottery, Rational, SquareMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub partitions: Vec<PartitionFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub utilities: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LotteryFile {
    pub p: Vec<String>,
    pub q: Vec<Vec<Vec<String>>>,
}

fn parse_matrix(rows: &[Vec<String>]) -> Result<SquareMatrix> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    SquareMatrix::from_rows(rows)
}

fn format_matrix(m: &SquareMatrix) -> Vec<Vec<String>> {
    m.rows().map(|r| r.iter().map(format_rational).collect()).collect()
}

impl TryFrom<&InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: &InstanceFile) -> Result<Self> {
        let mut utilities = Vec::with_capacity(file.partitions.len());
        let mut labels = Vec::with_capacity(file.partitions.len());
        for (k, part) in file.partitions.iter().enumerate() {
            let u = parse_matrix(&part.utilities)?;
            if u.dim() != file.n {
                return Err(Error::Dimension(format!(
                    "partition {} is {}x{} but n = {}",
                    k + 1,
                    u.dim(),
                    u.dim(),
                    file.n
                )));
            }
            utilities.push(u);
            labels.push(part.labels.clone());
        }
        Instance::with_labels(utilities, labels)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            n: inst.n(),
            partitions: (0..inst.m())
                .map(|k| PartitionFile {
                    utilities: format_matrix(inst.partition(k)),
                    labels: inst.labels(k).map(<[String]>::to_vec),
                })
                .collect(),
        }
    }
}

impl TryFrom<&LotteryFile> for Lottery {
    type Error = Error;

    fn try_from(file: &LotteryFile) -> Result<Self> {
        let p = file
            .p
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<Rational>>>()?;
        let q = file.q.iter().map(|m| parse_matrix(m)).collect::<Result<Vec<_>>>()?;
        Lottery::new(p, q)
    }
}

impl From<&Lottery> for LotteryFile {
    fn from(lot: &Lottery) -> Self {
        LotteryFile {
            p: lot.p().iter().map(format_rational).collect(),
            q: lot.masses().iter().map(format_matrix).collect(),
        }
    }
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Instance::try_from(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }
}

impl Lottery {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: LotteryFile = serde_json::from_str(text)?;
        Lottery::try_from(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LotteryFile::from(self)).expect("lottery serializes")
    }
}
