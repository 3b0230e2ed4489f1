use std::io::{self, Write};

use super::TrajectoryRow;

/// Writes recorded rows as CSV with header
/// `tau,t,u,v,pu,pv,x,y,regime,h,ell,event`.
///
/// Floats use the shortest representation that round-trips.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], mut out: W) -> io::Result<()> {
    writeln!(out, "tau,t,u,v,pu,pv,x,y,regime,h,ell,event")?;
    for row in rows {
        let s = &row.state;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.tau,
            s.t,
            s.u,
            s.v,
            s.pu,
            s.pv,
            s.x(),
            s.y(),
            row.regime.label(),
            row.h,
            row.ell,
            row.event.unwrap_or("")
        )?;
    }
    Ok(())
}
