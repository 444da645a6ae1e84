use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioBuffer, AudioError};

const FULL_SCALE: f32 = 32768.0;

fn spec_for(sample_rate: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

/// Read a 16-bit mono PCM WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_wav_from(file)
}

pub fn read_wav_from<R: Read>(reader: R) -> Result<AudioBuffer, AudioError> {
    let mut reader = WavReader::new(reader)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::UnsupportedFormat(format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{}-bit {:?}, expected 16-bit PCM",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let expected = reader.len() as usize;
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f32 / FULL_SCALE))
        .collect::<Result<Vec<_>, _>>()?;
    if samples.len() != expected {
        return Err(AudioError::UnsupportedFormat(format!(
            "truncated data chunk: {} of {} samples",
            samples.len(),
            expected
        )));
    }
    AudioBuffer::new(samples, spec.sample_rate)
}

fn quantize(s: f32) -> i16 {
    (s * FULL_SCALE).round().clamp(i16::MIN as f32, i16::MAX as f32) as i16
}

/// Write `buffer` as 16-bit mono PCM. Samples outside [-1, 1) are clamped.
pub fn write_wav(path: impl AsRef<Path>, buffer: &AudioBuffer) -> Result<(), AudioError> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_wav_to(file, buffer)
}

pub fn write_wav_to<W: Write + Seek>(writer: W, buffer: &AudioBuffer) -> Result<(), AudioError> {
    let mut w = WavWriter::new(writer, spec_for(buffer.sample_rate()))?;
    {
        let mut i16_writer = w.get_i16_writer(buffer.len() as u32);
        for &s in buffer.samples() {
            i16_writer.write_sample(quantize(s));
        }
        i16_writer.flush()?;
    }
    w.finalize()?;
    Ok(())
}

/// Encoded WAV file contents.
pub fn wav_bytes(buffer: &AudioBuffer) -> Result<Vec<u8>, AudioError> {
    let mut cursor = Cursor::new(Vec::new());
    write_wav_to(&mut cursor, buffer)?;
    Ok(cursor.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw_wav(channels: u16, bits: u16, frames: &[i16]) -> Vec<u8> {
        let mut cursor = Cursor::new(Vec::new());
        let spec = WavSpec {
            channels,
            sample_rate: 44_100,
            bits_per_sample: bits,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::new(&mut cursor, spec).unwrap();
        for &f in frames {
            if bits == 16 {
                w.write_sample(f).unwrap();
            } else {
                w.write_sample(f as i32).unwrap();
            }
        }
        w.finalize().unwrap();
        cursor.into_inner()
    }

    #[test]
    fn single_sample_scaling() {
        let bytes = raw_wav(1, 16, &[16384]);
        let buf = read_wav_from(Cursor::new(bytes)).unwrap();
        assert_eq!(buf.samples(), &[0.5]);
    }

    #[test]
    fn one_second_file() {
        let buf = AudioBuffer::silence(44_100, 44_100);
        let back = read_wav_from(Cursor::new(wav_bytes(&buf).unwrap())).unwrap();
        assert_eq!(back.duration_seconds(), 1.0);
        assert_eq!(back.sample_rate(), 44_100);
    }

    #[test]
    fn rejects_stereo_and_24_bit() {
        let stereo = raw_wav(2, 16, &[1, 2, 3, 4]);
        assert!(matches!(read_wav_from(Cursor::new(stereo)), Err(AudioError::UnsupportedFormat(_))));
        let deep = raw_wav(1, 24, &[1, 2]);
        assert!(matches!(read_wav_from(Cursor::new(deep)), Err(AudioError::UnsupportedFormat(_))));
    }

    #[test]
    fn rejects_truncated_file() {
        let mut bytes = raw_wav(1, 16, &[100; 64]);
        bytes.truncate(bytes.len() - 21);
        assert!(read_wav_from(Cursor::new(bytes)).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let buf = AudioBuffer::new(vec![0.25, -0.5, 32736.0 / 32768.0], 22_050).unwrap();
        write_wav(&path, &buf).unwrap();
        assert_eq!(read_wav(&path).unwrap(), buf);
    }

    proptest! {
        #[test]
        fn round_trip_within_quantization(v in prop::collection::vec(-1.0f32..1.0, 1..500)) {
            let buf = AudioBuffer::new(v, 44_100).unwrap();
            let back = read_wav_from(Cursor::new(wav_bytes(&buf).unwrap())).unwrap();
            prop_assert_eq!(back.len(), buf.len());
            for (a, b) in back.samples().iter().zip(buf.samples()) {
                prop_assert!((a - b).abs() <= 1.0 / 32768.0);
            }
        }
    }
}
