//! Flag and config-file schema. Every field is optional on the command line;
//! missing values come from the config file, then from `defaults()`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "mqc", version, about = "Multiple-quantum-coherence spectra of non-Hermitian Hamiltonians")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct CommonArgs {
    /// TOML config file, or a manifest.json from an earlier run
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outdir: Option<PathBuf>,
    /// Worker threads [default: $MQC_WORKERS, else one per core]
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sweep the gain of the two-level model J σx + iΓ σz.
    #[command(after_help = "Writes two_level.csv: gamma, F, I_-1, I_0, I_1, ep_flag")]
    TwoLevel(TwoLevelArgs),
    /// Sweep h_z of the non-Hermitian Ising ring.
    #[command(after_help = "Writes ising_sweep.csv: h_z, F, I_-L..I_L, re_E, im_E, ep_flag\n\
                            and critical_point.csv: h_z_c, peak_F, method, resolution, im_onset")]
    IsingSweep(IsingSweepArgs),
    /// Critical h_z of the Ising ring for several chain lengths.
    #[command(after_help = "Writes scaling.csv: L, inv_L, h_z_c, peak_F, method, status")]
    IsingScaling(IsingScalingArgs),
    /// F(ρ, H2) of the clean Hatano-Nelson ring over boundary hoppings.
    #[command(after_help = "Writes hn_phase.csv: delta_l_ratio, delta_r_ratio, F, re_E, im_E, ep_flag")]
    HnPhase(HnPhaseArgs),
    /// F(ρ, H2) of the open Hatano-Nelson chain against J_L/J_R.
    #[command(after_help = "Writes hn_obc.csv: n, ratio, F, re_E, im_E, ep_flag")]
    HnObc(HnObcArgs),
    /// Disorder-averaged F(ρ, H2) of the Hatano-Nelson ring.
    #[command(after_help = "Writes hn_disorder.csv: W, mean_F, std_F, realizations, excluded")]
    HnDisorder(HnDisorderArgs),
    /// Phase-encoded fidelity signal and its Fourier inversion.
    #[command(after_help = "Writes protocol_signal.csv: k, phi, re_f, im_f\n\
                            and protocol_mqi.csv: m, I_direct, I_retrieved, abs_err, imag_residual")]
    Protocol(ProtocolArgs),
    /// Run every oracle and invariant suite; exit 4 on any failure.
    #[command(after_help = "Writes validation.csv: check, residual, tolerance, applicable, passed\n\
                            and validation_report.txt")]
    Validate(ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TwoLevel(_) => "two-level",
            Command::IsingSweep(_) => "ising-sweep",
            Command::IsingScaling(_) => "ising-scaling",
            Command::HnPhase(_) => "hn-phase",
            Command::HnObc(_) => "hn-obc",
            Command::HnDisorder(_) => "hn-disorder",
            Command::Protocol(_) => "protocol",
            Command::Validate(_) => "validate",
        }
    }
}

pub const SUBCOMMANDS: &[&str] =
    &["two-level", "ising-sweep", "ising-scaling", "hn-phase", "hn-obc", "hn-disorder", "protocol", "validate"];

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SpinRef {
    Sx,
    Sy,
    Sz,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    /// ρ = |R⟩⟨L| / ⟨L|R⟩
    TraceOne,
    /// ρ = |R⟩⟨L| with unit-norm vectors
    UnitVectors,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Selector {
    /// Lowest Re E
    Ground,
    /// Median by Re E
    Mid,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolModel {
    Ising,
    TwoLevel,
}

// Shared serde attributes: kebab-case keys, unknown keys rejected, unset
// fields omitted so they do not shadow lower layers.
macro_rules! config_struct {
    ($(#[$meta:meta])* pub struct $name:ident { $($(#[$fmeta:meta])* pub $field:ident: $ty:ty,)* }) => {
        $(#[$meta])*
        #[derive(Args, Serialize, Deserialize, Default, Clone, Debug, PartialEq)]
        #[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

config_struct! {
    pub struct TwoLevelArgs {
        /// Coupling J [default: 1]
        #[arg(long)]
        pub j: f64,
        /// Gain grid start:stop:step or a comma list (required)
        #[arg(long)]
        pub gamma_grid: String,
        /// Reference spin component [default: sy]
        #[arg(long, value_enum)]
        pub reference: SpinRef,
        /// [default: trace-one]
        #[arg(long, value_enum)]
        pub normalization: Norm,
    }
}

impl TwoLevelArgs {
    pub fn defaults() -> Self {
        Self { j: Some(1.0), gamma_grid: None, reference: Some(SpinRef::Sy), normalization: Some(Norm::TraceOne) }
    }
}

config_struct! {
    pub struct IsingSweepArgs {
        /// Chain length (required)
        #[arg(long)]
        pub l: usize,
        /// Nearest-neighbour coupling [default: 1]
        #[arg(long)]
        pub j: f64,
        /// Next-nearest-neighbour coupling [default: 0]
        #[arg(long)]
        pub j2: f64,
        /// Non-Hermitian transverse coupling [default: 1]
        #[arg(long)]
        pub gamma: f64,
        /// [default: 0]
        #[arg(long)]
        pub hy: f64,
        /// h_z grid (required)
        #[arg(long)]
        pub hz_grid: String,
        /// Collective reference spin [default: sz]
        #[arg(long, value_enum)]
        pub reference: SpinRef,
        /// [default: trace-one]
        #[arg(long, value_enum)]
        pub normalization: Norm,
    }
}

impl IsingSweepArgs {
    pub fn defaults() -> Self {
        Self {
            l: None,
            j: Some(1.0),
            j2: Some(0.0),
            gamma: Some(1.0),
            hy: Some(0.0),
            hz_grid: None,
            reference: Some(SpinRef::Sz),
            normalization: Some(Norm::TraceOne),
        }
    }
}

config_struct! {
    pub struct IsingScalingArgs {
        /// Chain lengths, e.g. 6:10:1 or 5,6,7 (required)
        #[arg(long)]
        pub ls: String,
        /// [default: 1]
        #[arg(long)]
        pub j: f64,
        /// [default: 0]
        #[arg(long)]
        pub j2: f64,
        /// [default: 1]
        #[arg(long)]
        pub gamma: f64,
        /// [default: 0]
        #[arg(long)]
        pub hy: f64,
        /// h_z grid (required)
        #[arg(long)]
        pub hz_grid: String,
        /// [default: trace-one]
        #[arg(long, value_enum)]
        pub normalization: Norm,
    }
}

impl IsingScalingArgs {
    pub fn defaults() -> Self {
        Self {
            ls: None,
            j: Some(1.0),
            j2: Some(0.0),
            gamma: Some(1.0),
            hy: Some(0.0),
            hz_grid: None,
            normalization: Some(Norm::TraceOne),
        }
    }
}

config_struct! {
    pub struct HnPhaseArgs {
        /// Sites [default: 100]
        #[arg(long)]
        pub n: usize,
        /// [default: 1]
        #[arg(long)]
        pub j_l: f64,
        /// [default: 1]
        #[arg(long)]
        pub j_r: f64,
        /// δ_L/J_L grid (required)
        #[arg(long)]
        pub delta_l_grid: String,
        /// δ_R/J_R grid (required)
        #[arg(long)]
        pub delta_r_grid: String,
        /// [default: trace-one]
        #[arg(long, value_enum)]
        pub normalization: Norm,
    }
}

impl HnPhaseArgs {
    pub fn defaults() -> Self {
        Self {
            n: Some(100),
            j_l: Some(1.0),
            j_r: Some(1.0),
            delta_l_grid: None,
            delta_r_grid: None,
            normalization: Some(Norm::TraceOne),
        }
    }
}

config_struct! {
    pub struct HnObcArgs {
        /// Chain lengths [default: 10,20,30]
        #[arg(long)]
        pub ns: String,
        /// J_R, held fixed [default: 1]
        #[arg(long)]
        pub j_r: f64,
        /// J_L/J_R grid (required)
        #[arg(long)]
        pub ratio_grid: String,
        /// [default: trace-one]
        #[arg(long, value_enum)]
        pub normalization: Norm,
    }
}

impl HnObcArgs {
    pub fn defaults() -> Self {
        Self { ns: Some("10,20,30".into()), j_r: Some(1.0), ratio_grid: None, normalization: Some(Norm::TraceOne) }
    }
}

config_struct! {
    pub struct HnDisorderArgs {
        /// Sites [default: 100]
        #[arg(long)]
        pub n: usize,
        /// [default: 1]
        #[arg(long)]
        pub j_l: f64,
        /// [default: 2]
        #[arg(long)]
        pub j_r: f64,
        /// Disorder strengths W (required)
        #[arg(long)]
        pub w_grid: String,
        /// Realizations per W [default: 200]
        #[arg(long)]
        pub realizations: u64,
        /// Master disorder seed [default: 1]
        #[arg(long)]
        pub seed: u64,
        /// [default: mid]
        #[arg(long, value_enum)]
        pub selector: Selector,
        /// [default: trace-one]
        #[arg(long, value_enum)]
        pub normalization: Norm,
    }
}

impl HnDisorderArgs {
    pub fn defaults() -> Self {
        Self {
            n: Some(100),
            j_l: Some(1.0),
            j_r: Some(2.0),
            w_grid: None,
            realizations: Some(200),
            seed: Some(1),
            selector: Some(Selector::Mid),
            normalization: Some(Norm::TraceOne),
        }
    }
}

config_struct! {
    pub struct ProtocolArgs {
        /// [default: ising]
        #[arg(long, value_enum)]
        pub model: ProtocolModel,
        /// Ising chain length [default: 6]
        #[arg(long)]
        pub l: usize,
        /// Coupling (both models) [default: 1]
        #[arg(long)]
        pub j: f64,
        /// [default: 0]
        #[arg(long)]
        pub j2: f64,
        /// Ising transverse coupling, or the two-level gain [default: 1 Ising, 0.5 two-level]
        #[arg(long)]
        pub gamma: f64,
        /// [default: 0]
        #[arg(long)]
        pub hy: f64,
        /// [default: 0.1]
        #[arg(long)]
        pub hz: f64,
        /// [default: sz for Ising, sy for two-level]
        #[arg(long, value_enum)]
        pub reference: SpinRef,
        /// Phase samples M [default: 2 m_max + 1]
        #[arg(long)]
        pub samples: usize,
        /// Shots per sample; omit for the exact signal
        #[arg(long)]
        pub shots: u64,
        /// Shot-noise seed [default: 1]
        #[arg(long)]
        pub seed: u64,
        /// [default: trace-one]
        #[arg(long, value_enum)]
        pub normalization: Norm,
    }
}

impl ProtocolArgs {
    pub fn defaults() -> Self {
        Self {
            model: Some(ProtocolModel::Ising),
            l: Some(6),
            j: Some(1.0),
            j2: Some(0.0),
            gamma: None,
            hy: Some(0.0),
            hz: Some(0.1),
            reference: None,
            samples: None,
            shots: None,
            seed: Some(1),
            normalization: Some(Norm::TraceOne),
        }
    }
}

config_struct! {
    pub struct ValidateArgs {}
}

impl ValidateArgs {
    pub fn defaults() -> Self {
        Self {}
    }
}
