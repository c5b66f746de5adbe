use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::classify::SampleRecord;
use super::sweep::{SweepOutput, SweepSummary};
use crate::error::Result;

pub const SUMMARY_HEADER: &str =
    "delta,v_L,lambda_theory,lambda_hat_median,lambda_hat_iqr,frac_droplet,frac_A,frac_B,w1,m_star,chi";

pub fn write_summary_csv<W: Write>(summary: &SweepSummary, mut w: W) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in &summary.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.delta,
            r.v_l,
            r.lambda_theory,
            r.lambda_hat_median,
            r.lambda_hat_iqr,
            r.frac_droplet,
            r.frac_a,
            r.frac_b,
            summary.w1,
            summary.m_star,
            summary.chi
        )?;
    }
    Ok(())
}

pub fn write_records_jsonl<W: Write>(records: &[SampleRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes `summary.csv`, `records.jsonl` and `summary.json` into `dir`.
pub fn write_outputs(out: &SweepOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = BufWriter::new(File::create(dir.join("summary.csv"))?);
    write_summary_csv(&out.summary, &mut csv)?;
    csv.flush()?;
    let mut jl = BufWriter::new(File::create(dir.join("records.jsonl"))?);
    write_records_jsonl(&out.records, &mut jl)?;
    jl.flush()?;
    let mut js = BufWriter::new(File::create(dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut js, &out.summary)?;
    js.write_all(b"\n")?;
    js.flush()?;
    Ok(())
}
