use std::fs;
use std::path::PathBuf;

use clap::Args;

use extrap_core::config::RunConfig;
use extrap_core::map::write_map;
use extrap_core::scene::write_frames;

use crate::error::CliError;
use crate::run::write_file;

pub const MAP_FILE: &str = "map.txt";
pub const TRACKS_FILE: &str = "tracks.csv";
pub const SCENE_CONFIG: &str = "scene.toml";

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Run config with a `[synth]` table.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Materializes the synthetic scene so it can be run like a recorded case.
pub fn synth_scene(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    if cfg.synth.is_none() {
        return Err(CliError::Validation("config field `synth`: required by synth-scene".into()));
    }
    let inputs = cfg.load_inputs::<f64>()?;
    let recorded = inputs.recorded.expect("synthetic scenes carry their recording");
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;

    let map_path = args.out.join(MAP_FILE);
    fs::write(&map_path, write_map(&inputs.map)).map_err(|e| CliError::io(&map_path, e))?;
    let tracks_path = args.out.join(TRACKS_FILE);
    write_file(&tracks_path, |w| Ok(write_frames(w, inputs.seed.case_id, &recorded.frames)?))?;

    let scene = RunConfig {
        map: Some(MAP_FILE.into()),
        tracks: Some(TRACKS_FILE.into()),
        case_id: Some(inputs.seed.case_id),
        current_index: Some(recorded.current_index),
        synth: None,
        roster: None,
        output_dir: "out".into(),
        ..cfg
    };
    let text = toml::to_string(&scene).map_err(|e| CliError::Validation(e.to_string()))?;
    let cfg_path = args.out.join(SCENE_CONFIG);
    fs::write(&cfg_path, text).map_err(|e| CliError::io(&cfg_path, e))?;
    eprintln!("scene written to {}", args.out.display());
    Ok(())
}
