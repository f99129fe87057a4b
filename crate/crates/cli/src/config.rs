use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gaze_drive_core::scenario::{InputModeSetting, Scenario};
use gaze_drive_core::sim::{InputScript, SimConfig};

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Ok(Scenario::load(path)?)
}

pub fn load_script(path: &Path) -> Result<InputScript> {
    let file = File::open(path).with_context(|| format!("{}: cannot open script", path.display()))?;
    InputScript::parse(file).with_context(|| format!("{}", path.display()))
}

/// Reject scripts whose contents contradict the scenario's input mode.
pub fn check_mode(setting: InputModeSetting, script: &InputScript) -> Result<()> {
    match setting {
        InputModeSetting::Auto => {
            if script.has_gaze() && script.has_joystick() {
                bail!("script mixes gaze and joystick records; set sim.input_mode to pick one");
            }
        }
        InputModeSetting::Gaze if script.has_joystick() => {
            bail!("scenario input_mode is gaze but the script contains joystick records")
        }
        InputModeSetting::Joystick if script.has_gaze() => {
            bail!("scenario input_mode is joystick but the script contains gaze records")
        }
        InputModeSetting::Live => bail!("scenario input_mode is live; use `gaze-drive serve`"),
        _ => {}
    }
    Ok(())
}

/// Scenario plus script, with an optional damping override applied.
pub fn prepare(scenario: &Path, script: &Path, damping: Option<f64>) -> Result<(SimConfig, InputScript)> {
    let s = load_scenario(scenario)?;
    let script = load_script(script)?;
    check_mode(s.sim.input_mode, &script)?;
    let mut cfg = s.to_sim_config()?;
    if let Some(d) = damping {
        cfg.params
            .set_damping(d)
            .with_context(|| format!("--damping {d}"))?;
    }
    Ok((cfg, script))
}
