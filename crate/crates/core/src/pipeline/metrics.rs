use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::EpochRecord;
use crate::error::Result;

pub const METRICS_HEADER: &str = "epoch,split,metric,value";

/// `epoch,split,metric,value` rows, six decimals, LF endings.
pub fn metrics_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in history {
        let _ = writeln!(out, "{},train,loss,{:.6}", r.epoch, r.loss);
        if let Some(b) = r.nce_bound {
            let _ = writeln!(out, "{},train,nce_bound,{:.6}", r.epoch, b);
        }
    }
    out
}

pub fn write_metrics_csv(history: &[EpochRecord], path: &Path) -> Result<()> {
    fs::write(path, metrics_csv(history))?;
    Ok(())
}
