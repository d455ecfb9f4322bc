use std::io::Write;

use super::catalog::Event;
use super::engine::Replica;
use super::KineticsError;

/// Runs `steps` steps of `replica`, writing one CSV row per event:
/// `step,time_s,event,source,target`. Electrodes appear as `U<index>`,
/// sites by their index.
pub fn dump_trajectory<W: Write>(replica: &mut Replica<'_>, steps: u64, out: W) -> Result<(), KineticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "time_s", "event", "source", "target"])?;
    let label = |slot: u32, r: &Replica<'_>| format!("U{}", r.system().spec().electrodes[slot as usize].index);
    for _ in 0..steps {
        let step = replica.step()?;
        let (kind, src, dst) = match step.event {
            Event::Hop { from, to } => ("hop", from.to_string(), to.to_string()),
            Event::Inject { electrode, site } => ("inject", label(electrode, replica), site.to_string()),
            Event::Eject { site, electrode } => ("eject", site.to_string(), label(electrode, replica)),
        };
        let st = replica.state();
        w.write_record([st.steps().to_string(), st.simulated_time().to_string(), kind.into(), src, dst])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
