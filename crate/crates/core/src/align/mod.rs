//! Assembly machinery for the recognize-then-resynthesize baseline: DTW
//! alignment, interval mapping, WSOLA time-scaling and insertion.

mod assemble;
mod dtw;
mod wsola;

pub use assemble::{assemble_asr_tts, AsrTtsAssembly, AsrTtsOptions};
pub use dtw::{dtw_align, dtw_align_banded, dtw_with_cost, map_interval, DtwPath};
pub use wsola::{wsola_stretch, WsolaConfig};
