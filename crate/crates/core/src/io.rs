//! Campaign CSV and sidecar JSON.
//!
//! CSV layout: `cycle_id,slot,is_reference,p1..pM,atom_signal`, one row per
//! run, `is_reference` as `0`/`1`, floats in `{:.16e}` (17 significant digits).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{CampaignConfig, RunRecord, SimPhysics};

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_campaign_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let pulses = records.first().map_or(0, |r| r.pulses.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cycle_id".to_string(), "slot".into(), "is_reference".into()];
    header.extend((1..=pulses).map(|i| format!("p{i}")));
    header.push("atom_signal".into());
    w.write_record(&header)?;
    for r in records {
        if r.pulses.len() != pulses {
            return Err(Error::param("pulses", "all runs must have the same pulse count"));
        }
        let mut row = vec![
            r.cycle_id.to_string(),
            r.slot.to_string(),
            if r.is_reference { "1" } else { "0" }.to_string(),
        ];
        row.extend(r.pulses.iter().map(|&p| format_float(p)));
        row.push(format_float(r.atom_signal));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn campaign_csv_string(records: &[RunRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_campaign_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

/// Reads a campaign CSV. Row numbers in errors count the header as row 1.
pub fn read_campaign_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    let pulse_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('p') && h[1..].parse::<usize>().is_ok())
        .map(|(i, _)| i)
        .collect();
    let col = |name: &str| -> Result<usize> {
        header.iter().position(|h| h == name).ok_or_else(|| Error::MalformedRow {
            row: 1,
            reason: format!("missing column `{name}`"),
        })
    };
    let (c_cycle, c_slot, c_ref, c_atoms) =
        (col("cycle_id")?, col("slot")?, col("is_reference")?, col("atom_signal")?);
    if pulse_cols.is_empty() {
        return Err(Error::MalformedRow {
            row: 1,
            reason: "no pulse columns p1..pN".into(),
        });
    }

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let field = |c: usize| -> Result<&str> {
            rec.get(c).ok_or_else(|| Error::MalformedRow {
                row,
                reason: format!("missing field {}", c + 1),
            })
        };
        let bad = |what: &str, v: &str| Error::MalformedRow {
            row,
            reason: format!("cannot parse {what} from `{v}`"),
        };
        let number = |c: usize, what: &str| -> Result<f64> {
            let v = field(c)?;
            let x: f64 = v.trim().parse().map_err(|_| bad(what, v))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(bad(what, v))
            }
        };
        let cycle_id = field(c_cycle)?.trim().parse().map_err(|_| bad("cycle_id", field(c_cycle).unwrap_or("")))?;
        let slot = field(c_slot)?.trim().parse().map_err(|_| bad("slot", field(c_slot).unwrap_or("")))?;
        let is_reference = match field(c_ref)?.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            v => return Err(bad("is_reference", v)),
        };
        let pulses = pulse_cols
            .iter()
            .map(|&c| number(c, "pulse value"))
            .collect::<Result<Vec<_>>>()?;
        out.push(RunRecord {
            cycle_id,
            slot,
            is_reference,
            pulses,
            atom_signal: number(c_atoms, "atom_signal")?,
        });
    }
    Ok(out)
}

/// Sidecar written next to a campaign CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSidecar {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub campaign: CampaignConfig,
    pub physics: SimPhysics,
}

impl CampaignSidecar {
    pub fn new(campaign: &CampaignConfig, physics: &SimPhysics) -> Self {
        Self {
            tool: "qndsim".into(),
            version: crate::VERSION.into(),
            seed: campaign.seed,
            campaign: campaign.clone(),
            physics: *physics,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunRecord> {
        vec![
            RunRecord {
                cycle_id: 0,
                slot: 0,
                is_reference: false,
                pulses: vec![1.0 / 3.0, -2.5e6],
                atom_signal: 0.123_456_789_012_345_67,
            },
            RunRecord {
                cycle_id: 0,
                slot: 4,
                is_reference: true,
                pulses: vec![0.0, 7.0],
                atom_signal: -1e-9,
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = campaign_csv_string(&sample()).unwrap();
        assert!(s.starts_with("cycle_id,slot,is_reference,p1,p2,atom_signal\n"));
        let back = read_campaign_csv(s.as_bytes()).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn malformed_row_is_reported_with_number() {
        let s = "cycle_id,slot,is_reference,p1,p2,atom_signal\n0,0,0,1,2,3\n0,1,0,1,oops,3\n";
        match read_campaign_csv(s.as_bytes()) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
