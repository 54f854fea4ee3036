//! IQ synthesis -> STFT -> averaged spectrogram -> per-band event
//! detection, and a round trip through a `.cf32` capture file.
//!
//! cargo run --example receiver_pipeline

use anyhow::Result;
use tdotag::dsp::iqfile::{read_iq, write_iq, IqFormat};
use tdotag::dsp::{detect_events, synthesize_iq, synthesize_spectrogram, Band, ReceiverConfig, Tone};

fn main() -> Result<()> {
    let rx = ReceiverConfig::default();
    let tones = [
        Tone { freq_hz: 580.054e6, power_db: -70.0, start_s: 0.5, end_s: 2.0 },
        Tone { freq_hz: 580.9e6, power_db: -85.0, start_s: 1.0, end_s: 3.0 },
    ];
    let bands = [Band::new("light", 579.5e6, 580.6e6)?, Band::new("slider", 580.6e6, 581.2e6)?];

    let iq = synthesize_iq(&tones, rx.noise_floor_db, 4.0, &rx, 42)?;
    let sp = rx.spectrogram_from_iq(&iq)?;
    println!("{} IQ samples -> {} averaged frames of {} bins", iq.samples.len(), sp.len(), sp.fft_size);

    for e in detect_events(&sp, &bands, &rx.detect)? {
        println!(
            "{:<7} {:.3}-{:.3} s  {:.4} MHz  peak {:.1} dB  detected at {:.3} s",
            e.tag_id,
            e.start_s,
            e.end_s,
            e.mean_freq_hz / 1e6,
            e.peak_snr_db,
            e.detected_at_s
        );
    }

    // The analytic spectrogram skips the FFT and is what long runs use.
    let fast = synthesize_spectrogram(&tones, rx.noise_floor_db, 4.0, &rx)?;
    println!("spectral mode: {} events", detect_events(&fast, &bands, &rx.detect)?.len());

    let dir = tempfile_dir()?;
    let path = dir.join("capture.cf32");
    write_iq(&path, &iq, IqFormat::Cf32)?;
    let back = read_iq(&path, None)?;
    println!("wrote and re-read {} ({} samples)", path.display(), back.samples.len());
    Ok(())
}

fn tempfile_dir() -> Result<std::path::PathBuf> {
    let d = std::env::temp_dir().join("tdotag-example");
    std::fs::create_dir_all(&d)?;
    Ok(d)
}
