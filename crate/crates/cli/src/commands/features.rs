//! `viserec features`: train and apply linear feature models.

use super::print_resolved;
use clap::{Args, Subcommand};
use std::path::PathBuf;
use viserec::features::{similarity_normalize, LinearModel, ObservationMatrix};
use viserec::frames::FrameSet;
use viserec::Result;

#[derive(Args)]
pub struct FeaturesArgs {
    #[command(subcommand)]
    pub action: FeaturesAction,
}

#[derive(Subcommand)]
pub enum FeaturesAction {
    /// Train a linear model on observation frames.
    Train {
        /// Observation frame file (`#dim N rate R` header).
        #[arg(long)]
        frames: PathBuf,
        /// Retained variance fraction.
        #[arg(long, default_value_t = 0.95)]
        fraction: f64,
        /// Similarity-normalize shape rows (x/y pairs) before training.
        #[arg(long)]
        normalize: bool,
        /// Domain note stored in the model header.
        #[arg(long, default_value = "")]
        note: String,
        /// Output model file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project frames onto a trained model's modes.
    Project {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct frames from parameter vectors.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        /// Parameter frame file (dim = mode count).
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(args: FeaturesArgs) -> Result<()> {
    match args.action {
        FeaturesAction::Train {
            frames,
            fraction,
            normalize,
            note,
            out,
        } => {
            let out = crate::resolve_out(out).join("model.lm");
            print_resolved(&[
                ("frames", frames.display().to_string()),
                ("fraction", fraction.to_string()),
                ("normalize", normalize.to_string()),
                ("out", out.display().to_string()),
            ]);
            let set = FrameSet::read(&frames)?;
            let mut data = ObservationMatrix::from_frames(&set);
            if normalize {
                data = similarity_normalize(&data, 3)?;
            }
            let model = LinearModel::train_with_note(&data, fraction, &note)?;
            model.write(&out)?;
            println!(
                "features train: {} modes of {} dims, explained {:.6}",
                model.mode_count(),
                model.dim(),
                model.explained_fraction()
            );
            Ok(())
        }
        FeaturesAction::Project { model, frames, out } => {
            let out = crate::resolve_out(out).join("params.feat");
            print_resolved(&[
                ("model", model.display().to_string()),
                ("frames", frames.display().to_string()),
                ("out", out.display().to_string()),
            ]);
            let model = LinearModel::read(&model)?;
            let set = FrameSet::read(&frames)?;
            let mut params = FrameSet::new(model.mode_count(), set.rate());
            for frame in set.iter() {
                params.push(&model.project(frame)?)?;
            }
            params.write(&out)?;
            println!("features project: {} frames -> {}", set.len(), out.display());
            Ok(())
        }
        FeaturesAction::Reconstruct { model, params, out } => {
            let out = crate::resolve_out(out).join("recon.feat");
            print_resolved(&[
                ("model", model.display().to_string()),
                ("params", params.display().to_string()),
                ("out", out.display().to_string()),
            ]);
            let model = LinearModel::read(&model)?;
            let set = FrameSet::read(&params)?;
            let mut recon = FrameSet::new(model.dim(), set.rate());
            for p in set.iter() {
                recon.push(&model.reconstruct(p)?)?;
            }
            recon.write(&out)?;
            println!(
                "features reconstruct: {} frames -> {}",
                set.len(),
                out.display()
            );
            Ok(())
        }
    }
}
