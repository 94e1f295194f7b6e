use std::fs;
use std::path::Path;

use proptest::prelude::*;
use rppg::ingest::{write_frame, ClipWriter};
use rppg::{load_frame, load_manifest, ClipManifest, Error, Frame, PixelFormat};

fn manifest_for(format: PixelFormat, w: u32, h: u32, n: usize, dir: &Path) -> ClipManifest {
    let source = match format {
        PixelFormat::PpmSequence => "frames/{index}.ppm",
        PixelFormat::RawRgb24 => "clip.rgb",
    };
    ClipManifest::new(w, h, 30.0, n, format, source, dir).unwrap()
}

fn write_clip(manifest: ClipManifest, frames: &[Vec<u8>]) -> ClipManifest {
    let (w, h) = (manifest.width, manifest.height);
    let mut writer = ClipWriter::create(manifest).unwrap();
    for (i, pixels) in frames.iter().enumerate() {
        writer.push(&Frame::new(i, w, h, pixels.clone())).unwrap();
    }
    let manifest = writer.finish().unwrap();
    manifest
        .save(manifest.base_dir.join("manifest.json"))
        .unwrap();
    manifest
}

fn clip_strategy() -> impl Strategy<Value = (u32, u32, Vec<Vec<u8>>)> {
    (1u32..6, 1u32..6, 2usize..5).prop_flat_map(|(w, h, n)| {
        let len = (w * h * 3) as usize;
        (
            Just(w),
            Just(h),
            prop::collection::vec(prop::collection::vec(any::<u8>(), len), n),
        )
    })
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn load_then_write_reproduces_source_bytes((w, h, frames) in clip_strategy(), raw in any::<bool>()) {
        let format = if raw { PixelFormat::RawRgb24 } else { PixelFormat::PpmSequence };
        let tmp = tempfile::tempdir().unwrap();
        let (src_dir, dst_dir) = (tmp.path().join("src"), tmp.path().join("dst"));
        let src = write_clip(manifest_for(format, w, h, frames.len(), &src_dir), &frames);
        let src = load_manifest(src.base_dir.join("manifest.json")).unwrap();

        let dst = manifest_for(format, w, h, frames.len(), &dst_dir);
        // Reverse order exercises in-place raw writes.
        for i in (0..frames.len()).rev() {
            let frame = load_frame(&src, i).unwrap();
            prop_assert_eq!(&frame.pixels, &frames[i]);
            write_frame(&dst, &frame).unwrap();
        }
        dst.save(dst_dir.join("manifest.json")).unwrap();
        prop_assert_eq!(files_under(&src_dir), files_under(&dst_dir));
    }

    #[test]
    fn loading_is_order_independent((w, h, frames) in clip_strategy(), shift in any::<usize>()) {
        let tmp = tempfile::tempdir().unwrap();
        let m = write_clip(manifest_for(PixelFormat::RawRgb24, w, h, frames.len(), tmp.path()), &frames);
        let forward: Vec<Frame> = (0..frames.len()).map(|i| load_frame(&m, i).unwrap()).collect();
        let mut indices: Vec<usize> = (0..frames.len()).collect();
        indices.rotate_left(shift % frames.len());
        let last = indices.len() - 1;
        indices.swap(0, last);
        for i in indices {
            prop_assert_eq!(&load_frame(&m, i).unwrap(), &forward[i]);
        }
    }
}

#[test]
fn concurrent_loads_match_sequential() {
    use rayon::prelude::*;
    let tmp = tempfile::tempdir().unwrap();
    let frames: Vec<Vec<u8>> = (0..40u8)
        .map(|i| (0..8 * 6 * 3).map(|j| (j as u8).wrapping_mul(i)).collect())
        .collect();
    for format in [PixelFormat::PpmSequence, PixelFormat::RawRgb24] {
        let dir = tmp.path().join(format!("{format:?}"));
        let m = write_clip(manifest_for(format, 8, 6, frames.len(), &dir), &frames);
        let parallel: Vec<Frame> = (0..frames.len())
            .into_par_iter()
            .map(|i| load_frame(&m, i).unwrap())
            .collect();
        for (i, frame) in parallel.iter().enumerate() {
            assert_eq!(frame.index, i);
            assert_eq!(frame.pixels, frames[i]);
        }
    }
}

#[test]
fn raw_index_one_reads_bytes_12_to_24() {
    let tmp = tempfile::tempdir().unwrap();
    let bytes: Vec<u8> = (0..24).collect();
    fs::write(tmp.path().join("clip.rgb"), &bytes).unwrap();
    let m = manifest_for(PixelFormat::RawRgb24, 2, 2, 2, tmp.path());
    assert_eq!(load_frame(&m, 1).unwrap().pixels, bytes[12..24]);
    assert!(matches!(
        load_frame(&m, 2),
        Err(Error::FrameOutOfRange { .. })
    ));
}

#[test]
fn truncated_raw_file_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("clip.rgb"), [0u8; 20]).unwrap();
    let m = manifest_for(PixelFormat::RawRgb24, 2, 2, 2, tmp.path());
    assert!(load_frame(&m, 0).is_ok());
    let err = load_frame(&m, 1).unwrap_err();
    assert_eq!(err.code(), "truncated_file");
}

#[test]
fn ppm_with_comments_and_wrong_size() {
    let tmp = tempfile::tempdir().unwrap();
    let frames_dir = tmp.path().join("frames");
    fs::create_dir_all(&frames_dir).unwrap();
    let payload: Vec<u8> = (100..112).collect();
    let mut file = b"P6\n# exported by a test\n2 2\n# maxval next\n255\n".to_vec();
    file.extend_from_slice(&payload);
    fs::write(frames_dir.join("000000.ppm"), &file).unwrap();
    fs::write(frames_dir.join("000001.ppm"), b"P6 3 2 255\n").unwrap();

    let m = manifest_for(PixelFormat::PpmSequence, 2, 2, 2, tmp.path());
    assert_eq!(load_frame(&m, 0).unwrap().pixels, payload);
    let err = load_frame(&m, 1).unwrap_err();
    assert_eq!(err.code(), "bad_ppm");
    assert!(err.to_string().contains("3x2"), "{err}");
}

#[test]
fn manifest_for_a_720p_ten_second_clip() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("manifest.json");
    fs::write(
        &path,
        r#"{"width": 1280, "height": 720, "fps": 30.0, "frame_count": 300,
            "pixel_format": "ppm_sequence", "source": "frames/{index}.ppm"}"#,
    )
    .unwrap();
    let m = load_manifest(&path).unwrap();
    assert_eq!((m.width, m.height, m.frame_count), (1280, 720, 300));
    assert_eq!(m.duration_s(), 10.0);
    assert!(m.frame_path(7).ends_with("frames/000007.ppm"));
}
